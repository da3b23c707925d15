#pragma once

#include "core/nn.h"

namespace gsr {

enum class GlpVariant { kGlp, kNoGp, kSerial, kFanToLinear };
GlpVariant glp_variant_from_string(const std::string& s);
const char* glp_variant_name(GlpVariant v);

struct GlpConfig {
  int64_t channels = 48;  // C
  int64_t f_eff = 100;
  GlpVariant variant = GlpVariant::kGlp;
  // d_p = C/4 by default; the alternative reading ties d_p to each FAN
  // layer's output width instead.
  bool dp_from_output = false;

  int64_t d_p(int64_t out_dim) const {
    return dp_from_output ? out_dim / 4 : channels / 4;
  }
};

// Frequency-axis gated periodic stack: FAN F->2F, FAN 2F->2F, then a
// two-projection gated linear unit back to F. Each (batch, channel, time)
// fiber is treated independently. The FAN->Linear ablation swaps both FAN
// layers for biased linear layers of the same widths.
struct GpModule {
  bool use_fan = true;
  Fan fan1, fan2;
  Linear lin1, lin2;        // fan_to_linear variant
  Linear gate_a, gate_b;    // 2F -> F value and gate projections
  int64_t f_eff = 0;

  GpModule() = default;
  GpModule(ParamStore& ps, const std::string& name, const GlpConfig& cfg, int64_t width,
           bool fan, Rng& rng);
  // x: (..., F) -> (..., F)
  Var forward(const Var& x) const;
};

// Two frequency convolutions (kernel 3, same padding) with GELU between.
struct LModule {
  Conv2dLayer conv1, conv2;
  LModule() = default;
  LModule(ParamStore& ps, const std::string& name, int64_t channels, Rng& rng);
  // x: (B, C, T, F)
  Var forward(const Var& x) const;
};

// Channel feedforward: the GP architecture applied across the channel axis.
struct ChannelFfn {
  GpModule gp;
  ChannelFfn() = default;
  ChannelFfn(ParamStore& ps, const std::string& name, const GlpConfig& cfg, bool fan, Rng& rng);
  // x: (B, C, T, F)
  Var forward(const Var& x) const;
};

struct GlpTaps {
  Var gp_out;  // (B, C, T, F) pre-fusion GP branch output
  Var l_out;   // (B, C, T, F) pre-fusion L branch output
};

// y1 = x + PW([GP(norm x) || L(norm x)]); out = y1 + FFN(norm y1)
struct GlpBlock {
  GlpConfig cfg;
  ChannelLayerNorm norm1, norm2;
  GpModule gp;       // absent in the no_gp variant
  LModule l;
  LModule l2;        // second local module for the no_gp variant
  Conv2dLayer fuse;  // pointwise 2C -> C
  ChannelFfn ffn;

  GlpBlock() = default;
  GlpBlock(ParamStore& ps, const std::string& name, const GlpConfig& cfg, Rng& rng);
  Var forward(const Var& x, GlpTaps* taps = nullptr) const;
};

}  // namespace gsr
