#pragma once

#include "core/nn.h"

namespace gsr {

struct TimeMambaConfig {
  int64_t channels = 48;
  int64_t expand = 2;
  int64_t state = 16;
  int64_t conv_kernel = 4;
  int64_t dt_rank = 0;  // 0 -> ceil(channels / 16)
  double dt_min = 1e-3;
  double dt_max = 1e-1;

  int64_t d_inner() const { return expand * channels; }
  int64_t rank() const { return dt_rank > 0 ? dt_rank : (channels + 15) / 16; }
};

// One scan direction of the selective state-space block.
struct MambaDirection {
  TimeMambaConfig cfg;
  Linear in_proj;       // C -> 2 * d_inner (value and gate streams)
  Var conv_w, conv_b;   // depthwise causal conv over time, (d_inner, K)
  Linear x_proj;        // d_inner -> rank + 2 * state
  Linear dt_proj;       // rank -> d_inner; bias seeds delta via softplus
  Var a_log;            // (d_inner, state); A = -exp(a_log)
  Var d_skip;           // (d_inner)
  Linear out_proj;      // d_inner -> C

  MambaDirection() = default;
  MambaDirection(ParamStore& ps, const std::string& name, const TimeMambaConfig& cfg, Rng& rng);
  // seq: (N, L, C) -> (N, L, C)
  Var forward(const Var& seq) const;
};

// Bidirectional time-axis block over (B, C, T, F): each (batch, frequency)
// fiber is scanned forward and time-reversed, projected outputs summed,
// residual added.
struct TimeMambaBlock {
  TimeMambaConfig cfg;
  ChannelLayerNorm norm;
  MambaDirection fwd, bwd;

  TimeMambaBlock() = default;
  TimeMambaBlock(ParamStore& ps, const std::string& name, const TimeMambaConfig& cfg, Rng& rng);
  Var forward(const Var& x) const;
};

}  // namespace gsr
