#pragma once

#include "model/mrtfdp.h"
#include "signal/stft.h"

namespace gsr {

struct GeneratorConfig {
  int64_t channels = 48;    // C
  int64_t blocks = 4;       // N
  int64_t resolutions = 3;  // R
  StftConfig stft;
  double compression = 0.3;
  int64_t dense_depth = 4;  // dilations 1,2,4,8 over time
  BottleneckMode mode = BottleneckMode::kParallel;
  GlpVariant glp_variant = GlpVariant::kGlp;
  bool dp_from_output = false;
  bool masking_head = false;       // Table-8 ablation: learnable-sigmoid mask
  double mask_beta = 2.0;          // mask upper bound when masking_head
  TimeMambaConfig mamba;
  uint64_t init_seed = 1;

  int64_t f_bins() const { return stft.bins(); }          // F = 201
  int64_t f_prime() const { return stft.bins() / 2; }     // F' = 100

  // Table-7 "SR" ablation: one resolution, naively widened
  static GeneratorConfig single_resolution() {
    GeneratorConfig c;
    c.mode = BottleneckMode::kSingleResolution;
    c.channels = 144;
    return c;
  }
};

// Dilated dense block: depth layers, kernel (3,3), time dilation 2^i, dense
// concatenation of all previous features.
struct DenseBlock {
  std::vector<Conv2dLayer> convs;
  std::vector<InstanceNorm> norms;
  std::vector<PRelu> acts;
  DenseBlock() = default;
  DenseBlock(ParamStore& ps, const std::string& name, int64_t channels, int64_t depth, Rng& rng);
  Var forward(const Var& x) const;
};

// 2-channel (compressed magnitude, phase) input -> (B, C, T, F')
struct Encoder {
  Conv2dLayer in_conv;
  InstanceNorm in_norm;
  PRelu in_act;
  DenseBlock dense;
  Conv2dLayer down;  // (1,3)/(1,2): F -> F'
  InstanceNorm down_norm;
  PRelu down_act;
  Encoder() = default;
  Encoder(ParamStore& ps, const std::string& name, const GeneratorConfig& cfg, Rng& rng);
  Var forward(const Var& x) const;
};

// Mapping head: dense block, transposed conv doubling F' to F, 1-channel conv,
// per-frequency learnable softplus. Output is strictly positive.
struct MagDecoder {
  bool masking = false;
  DenseBlock dense;
  ConvT2dLayer up;
  InstanceNorm up_norm;
  PRelu up_act;
  Conv2dLayer out;
  Var log_beta;    // mapping: beta_f = exp(log_beta_f)
  Var mask_alpha;  // masking: per-frequency sigmoid slope
  double mask_beta = 2.0;
  MagDecoder() = default;
  MagDecoder(ParamStore& ps, const std::string& name, const GeneratorConfig& cfg, Rng& rng);
  // h: (B, C, T, F'), in_cmag: (B, T, F) used by the masking variant
  Var forward(const Var& h, const Var& in_cmag) const;
};

// Parallel pseudo-real/imag heads -> wrapped phase via atan2.
struct PhaseDecoder {
  DenseBlock dense;
  ConvT2dLayer up;
  InstanceNorm up_norm;
  PRelu up_act;
  Conv2dLayer head_r, head_i;
  PhaseDecoder() = default;
  PhaseDecoder(ParamStore& ps, const std::string& name, const GeneratorConfig& cfg, Rng& rng);
  Var forward(const Var& h) const;  // (B, T, F) in (-pi, pi]
};

struct GenForward {
  Var cmag;        // predicted compressed magnitude (B, T, F)
  Var phase;       // predicted phase (B, T, F)
  Var re_c, im_c;  // compressed-domain complex spectrum
  Var wave;        // reconstructed waveform (B, L)
  Var in_cmag;     // input compressed magnitude (for attribution analyses)
};

class Generator {
 public:
  explicit Generator(GeneratorConfig cfg);

  const GeneratorConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  int64_t param_count() const { return params_.total_size(); }

  // full pipeline from a degraded waveform (B, L)
  GenForward forward(const Var& wave, BottleneckTrace* trace = nullptr) const;
  // spectrum-domain stage, exposed for analyses: inputs are compressed
  // magnitude and phase grids (B, T, F)
  GenForward forward_spec(const Var& in_cmag, const Var& in_phase, int64_t out_len,
                          BottleneckTrace* trace = nullptr) const;

  Waveform restore(const Waveform& degraded) const;
  const StftOp& stft_op() const { return stft_; }

 private:
  GeneratorConfig cfg_;
  ParamStore params_;
  StftOp stft_;
  Encoder encoder_;
  Bottleneck bottleneck_;
  MagDecoder mag_dec_;
  PhaseDecoder phase_dec_;
};

}  // namespace gsr
