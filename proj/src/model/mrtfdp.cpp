#include "model/mrtfdp.h"

#include "core/check.h"

namespace gsr {

BottleneckMode bottleneck_mode_from_string(const std::string& s) {
  if (s == "parallel") return BottleneckMode::kParallel;
  if (s == "sequential") return BottleneckMode::kSequential;
  if (s == "single_resolution") return BottleneckMode::kSingleResolution;
  if (s == "time_downsample") return BottleneckMode::kTimeDownsample;
  if (s == "time_freq_downsample") return BottleneckMode::kTimeFreqDownsample;
  if (s == "no_downsample") return BottleneckMode::kNoDownsample;
  GSR_FAIL("unknown bottleneck mode: " << s);
}

const char* bottleneck_mode_name(BottleneckMode m) {
  switch (m) {
    case BottleneckMode::kParallel: return "parallel";
    case BottleneckMode::kSequential: return "sequential";
    case BottleneckMode::kSingleResolution: return "single_resolution";
    case BottleneckMode::kTimeDownsample: return "time_downsample";
    case BottleneckMode::kTimeFreqDownsample: return "time_freq_downsample";
    case BottleneckMode::kNoDownsample: return "no_downsample";
  }
  return "?";
}

namespace {

// kernel/stride per resampling flavor, dims ordered (T, F)
void resample_geometry(bool time_axis, bool both_axes, int64_t& kh, int64_t& kw,
                       int64_t& sh, int64_t& sw) {
  if (both_axes) {
    kh = 4; kw = 4; sh = 2; sw = 2;
  } else if (time_axis) {
    kh = 4; kw = 3; sh = 2; sw = 1;
  } else {
    kh = 3; kw = 4; sh = 1; sw = 2;
  }
}

}  // namespace

FreqDown::FreqDown(ParamStore& ps, const std::string& name, int64_t channels,
                   bool time_axis, bool both_axes, Rng& rng) {
  int64_t kh, kw, sh, sw;
  resample_geometry(time_axis, both_axes, kh, kw, sh, sw);
  Conv2dSpec spec;
  spec.stride_h = sh;
  spec.stride_w = sw;
  spec.pad_h = 1;
  spec.pad_w = 1;
  conv = Conv2dLayer(ps, name + ".conv", channels, channels, kh, kw, spec, true, rng);
  norm = InstanceNorm(ps, name + ".norm", channels);
  act = PRelu(ps, name + ".act", channels);
}

Var FreqDown::forward(const Var& x) const {
  GSR_CHECK(x.dim(3) >= 4 && x.dim(2) >= 1, "feature map too small to downsample");
  return act.forward(norm.forward(conv.forward(x)));
}

FreqUp::FreqUp(ParamStore& ps, const std::string& name, int64_t channels, bool time_axis_,
               bool both_axes_, Rng& rng)
    : time_axis(time_axis_), both_axes(both_axes_) {
  int64_t kh, kw, sh, sw;
  resample_geometry(time_axis, both_axes, kh, kw, sh, sw);
  conv = ConvT2dLayer(ps, name + ".conv", channels, channels, kh, kw, sh, sw, 1, 1, true, rng);
  norm = InstanceNorm(ps, name + ".norm", channels);
  act = PRelu(ps, name + ".act", channels);
}

Var FreqUp::forward(const Var& x, int64_t target_t, int64_t target_f) const {
  Var y = act.forward(norm.forward(conv.forward(x)));
  // center-crop to the partner extent; odd partner sizes leave the transposed
  // conv one short, padded at the end
  if (y.dim(2) > target_t) y = slice(y, 2, (y.dim(2) - target_t) / 2, target_t);
  if (y.dim(3) > target_f) y = slice(y, 3, (y.dim(3) - target_f) / 2, target_f);
  if (y.dim(2) < target_t) {
    Var yt = permute(y, {0, 1, 3, 2});
    yt = pad_zero_last(yt, 0, target_t - y.dim(2));
    y = permute(yt, {0, 1, 3, 2});
  }
  if (y.dim(3) < target_f) y = pad_zero_last(y, 0, target_f - y.dim(3));
  return y;
}

TfdpBranch::TfdpBranch(ParamStore& ps, const std::string& name, const MrBlockConfig& cfg,
                       int64_t f_eff, Rng& rng) {
  TimeMambaConfig mc = cfg.mamba;
  mc.channels = cfg.channels;
  mamba = TimeMambaBlock(ps, name + ".mamba", mc, rng);
  GlpConfig gc;
  gc.channels = cfg.channels;
  gc.f_eff = f_eff;
  gc.variant = cfg.glp_variant;
  gc.dp_from_output = cfg.dp_from_output;
  glp = GlpBlock(ps, name + ".glp", gc, rng);
}

Var TfdpBranch::forward(const Var& x, GlpTaps* taps) const {
  return glp.forward(mamba.forward(x), taps);
}

MrBlock::MrBlock(ParamStore& ps, const std::string& name, const MrBlockConfig& cfg_, Rng& rng)
    : cfg(cfg_) {
  const bool time_axis = cfg.mode == BottleneckMode::kTimeDownsample;
  const bool both_axes = cfg.mode == BottleneckMode::kTimeFreqDownsample;
  const bool resample = cfg.mode != BottleneckMode::kSingleResolution &&
                        cfg.mode != BottleneckMode::kNoDownsample;
  const int64_t n_res = cfg.mode == BottleneckMode::kSingleResolution ? 1 : cfg.resolutions;

  int64_t f_eff = cfg.f_top;
  for (int64_t r = 0; r < n_res; ++r) {
    branches.emplace_back(ps, name + ".branch" + std::to_string(r), cfg, f_eff, rng);
    // time-only downsampling keeps F_eff per resolution
    if (r + 1 < n_res && resample && !time_axis) f_eff = f_eff / 2;
  }
  for (int64_t r = 0; r + 1 < n_res; ++r) {
    if (resample) {
      down.emplace_back(ps, name + ".down" + std::to_string(r), cfg.channels, time_axis,
                        both_axes, rng);
      up.emplace_back(ps, name + ".up" + std::to_string(r), cfg.channels, time_axis,
                      both_axes, rng);
    }
    fuse.emplace_back(ps, name + ".fuse" + std::to_string(r), 2 * cfg.channels, cfg.channels,
                      1, 1, Conv2dSpec{}, true, rng);
  }
}

Var MrBlock::forward(const Var& x, BlockTrace* trace) const {
  const int64_t n_res = static_cast<int64_t>(branches.size());
  const bool resample = !down.empty();

  // branch inputs
  std::vector<Var> inputs(static_cast<size_t>(n_res));
  std::vector<Var> outputs(static_cast<size_t>(n_res));
  if (cfg.mode == BottleneckMode::kSequential) {
    Var cur = x;
    for (int64_t r = 0; r < n_res; ++r) {
      inputs[static_cast<size_t>(r)] = cur;
      GlpTaps taps;
      outputs[static_cast<size_t>(r)] = branches[static_cast<size_t>(r)].forward(
          cur, (trace && r == 0) ? &taps : nullptr);
      if (trace && r == 0) trace->top_glp = taps;
      if (r + 1 < n_res)
        cur = resample ? down[static_cast<size_t>(r)].forward(outputs[static_cast<size_t>(r)])
                       : outputs[static_cast<size_t>(r)];
    }
  } else {
    Var cur = x;
    for (int64_t r = 0; r < n_res; ++r) {
      inputs[static_cast<size_t>(r)] = cur;
      if (r + 1 < n_res && resample) cur = down[static_cast<size_t>(r)].forward(cur);
    }
    for (int64_t r = 0; r < n_res; ++r) {
      GlpTaps taps;
      outputs[static_cast<size_t>(r)] = branches[static_cast<size_t>(r)].forward(
          inputs[static_cast<size_t>(r)], (trace && r == 0) ? &taps : nullptr);
      if (trace && r == 0) trace->top_glp = taps;
    }
  }
  if (trace)
    for (int64_t r = 0; r < std::min<int64_t>(n_res, 3); ++r)
      trace->branch_out[static_cast<size_t>(r)] = outputs[static_cast<size_t>(r)];

  // bottom-up fusion
  Var fused = outputs[static_cast<size_t>(n_res - 1)];
  for (int64_t r = n_res - 2; r >= 0; --r) {
    const Var& partner = outputs[static_cast<size_t>(r)];
    Var lifted = resample
                     ? up[static_cast<size_t>(r)].forward(fused, partner.dim(2), partner.dim(3))
                     : fused;
    fused = fuse[static_cast<size_t>(r)].forward(concat({lifted, partner}, 1));
  }
  return x + fused;
}

Bottleneck::Bottleneck(ParamStore& ps, const std::string& name, const MrBlockConfig& cfg_,
                       Rng& rng)
    : cfg(cfg_) {
  for (int64_t i = 0; i < cfg.blocks; ++i)
    blocks.emplace_back(ps, name + ".block" + std::to_string(i), cfg, rng);
}

Var Bottleneck::forward(const Var& x, BottleneckTrace* trace) const {
  Var h = x;
  for (const MrBlock& b : blocks) {
    BlockTrace bt;
    h = b.forward(h, trace ? &bt : nullptr);
    if (trace) trace->blocks.push_back(std::move(bt));
  }
  return h;
}

}  // namespace gsr
