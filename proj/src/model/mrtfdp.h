#pragma once

#include <array>
#include <optional>

#include "model/glp.h"
#include "model/mamba.h"

namespace gsr {

enum class BottleneckMode {
  kParallel,
  kSequential,
  kSingleResolution,
  kTimeDownsample,
  kTimeFreqDownsample,
  kNoDownsample,
};
BottleneckMode bottleneck_mode_from_string(const std::string& s);
const char* bottleneck_mode_name(BottleneckMode m);

struct MrBlockConfig {
  int64_t channels = 48;     // C
  int64_t resolutions = 3;   // R
  int64_t blocks = 4;        // N
  int64_t f_top = 100;       // F' at the bottleneck input
  BottleneckMode mode = BottleneckMode::kParallel;
  GlpVariant glp_variant = GlpVariant::kGlp;
  bool dp_from_output = false;
  TimeMambaConfig mamba;  // channels filled from this config
};

// Strided conv (3,4)/(1,2) + instance norm + PReLU. Axis-swapped kernels are
// used for the time-downsampling ablations.
struct FreqDown {
  Conv2dLayer conv;
  InstanceNorm norm;
  PRelu act;
  FreqDown() = default;
  FreqDown(ParamStore& ps, const std::string& name, int64_t channels, bool time_axis,
           bool both_axes, Rng& rng);
  Var forward(const Var& x) const;
};

// Transposed conv (3,4)/(1,2) + instance norm + PReLU, center-cropped to the
// partner resolution's extent.
struct FreqUp {
  ConvT2dLayer conv;
  InstanceNorm norm;
  PRelu act;
  bool time_axis = false, both_axes = false;
  FreqUp() = default;
  FreqUp(ParamStore& ps, const std::string& name, int64_t channels, bool time_axis,
         bool both_axes, Rng& rng);
  Var forward(const Var& x, int64_t target_t, int64_t target_f) const;
};

// Time Mamba followed by Frequency GLP; shape preserved.
struct TfdpBranch {
  TimeMambaBlock mamba;
  GlpBlock glp;
  TfdpBranch() = default;
  TfdpBranch(ParamStore& ps, const std::string& name, const MrBlockConfig& cfg,
             int64_t f_eff, Rng& rng);
  Var forward(const Var& x, GlpTaps* taps = nullptr) const;
};

struct BlockTrace {
  std::array<Var, 3> branch_out;  // pre-fusion activations per resolution
  GlpTaps top_glp;                // GP/L module outputs at the top resolution
};

// One multi-resolution block. Parallel mode feeds each branch from the block
// input; sequential mode chains branch outputs downward. Fusion is bottom-up:
// upsample, concat with the partner branch, pointwise conv.
struct MrBlock {
  MrBlockConfig cfg;
  std::vector<TfdpBranch> branches;      // index = resolution r
  std::vector<FreqDown> down;            // r -> r+1
  std::vector<FreqUp> up;                // r+1 -> r
  std::vector<Conv2dLayer> fuse;         // pointwise 2C -> C per fusion stage

  MrBlock() = default;
  MrBlock(ParamStore& ps, const std::string& name, const MrBlockConfig& cfg, Rng& rng);
  Var forward(const Var& x, BlockTrace* trace = nullptr) const;
};

struct BottleneckTrace {
  std::vector<BlockTrace> blocks;
};

// N stacked blocks, independent weights.
struct Bottleneck {
  MrBlockConfig cfg;
  std::vector<MrBlock> blocks;
  Bottleneck() = default;
  Bottleneck(ParamStore& ps, const std::string& name, const MrBlockConfig& cfg, Rng& rng);
  Var forward(const Var& x, BottleneckTrace* trace = nullptr) const;
};

}  // namespace gsr
