#include "model/generator.h"

#include "core/check.h"

namespace gsr {

DenseBlock::DenseBlock(ParamStore& ps, const std::string& name, int64_t channels,
                       int64_t depth, Rng& rng) {
  int64_t dil = 1;
  for (int64_t i = 0; i < depth; ++i) {
    Conv2dSpec spec;
    spec.dil_h = dil;
    spec.pad_h = dil;  // kernel (3,3): same padding with time dilation
    spec.pad_w = 1;
    convs.emplace_back(ps, name + ".conv" + std::to_string(i), channels * (i + 1), channels,
                       3, 3, spec, true, rng);
    norms.emplace_back(ps, name + ".norm" + std::to_string(i), channels);
    acts.emplace_back(ps, name + ".act" + std::to_string(i), channels);
    dil *= 2;
  }
}

Var DenseBlock::forward(const Var& x) const {
  Var stack = x;
  Var out = x;
  for (size_t i = 0; i < convs.size(); ++i) {
    out = acts[i].forward(norms[i].forward(convs[i].forward(stack)));
    if (i + 1 < convs.size()) stack = concat({stack, out}, 1);
  }
  return out;
}

Encoder::Encoder(ParamStore& ps, const std::string& name, const GeneratorConfig& cfg, Rng& rng) {
  const int64_t c = cfg.channels;
  in_conv = Conv2dLayer(ps, name + ".in", 2, c, 1, 1, Conv2dSpec{}, true, rng);
  in_norm = InstanceNorm(ps, name + ".in_norm", c);
  in_act = PRelu(ps, name + ".in_act", c);
  dense = DenseBlock(ps, name + ".dense", c, cfg.dense_depth, rng);
  Conv2dSpec dspec;
  dspec.stride_w = 2;  // (1,3)/(1,2): 201 -> 100
  down = Conv2dLayer(ps, name + ".down", c, c, 1, 3, dspec, true, rng);
  down_norm = InstanceNorm(ps, name + ".down_norm", c);
  down_act = PRelu(ps, name + ".down_act", c);
}

Var Encoder::forward(const Var& x) const {
  Var h = in_act.forward(in_norm.forward(in_conv.forward(x)));
  h = dense.forward(h);
  return down_act.forward(down_norm.forward(down.forward(h)));
}

MagDecoder::MagDecoder(ParamStore& ps, const std::string& name, const GeneratorConfig& cfg,
                       Rng& rng)
    : masking(cfg.masking_head), mask_beta(cfg.mask_beta) {
  const int64_t c = cfg.channels;
  dense = DenseBlock(ps, name + ".dense", c, cfg.dense_depth, rng);
  up = ConvT2dLayer(ps, name + ".up", c, c, 1, 3, 1, 2, 0, 0, true, rng);
  up_norm = InstanceNorm(ps, name + ".up_norm", c);
  up_act = PRelu(ps, name + ".up_act", c);
  out = Conv2dLayer(ps, name + ".out", c, 1, 1, 1, Conv2dSpec{}, true, rng);
  if (masking)
    mask_alpha = ps.add(name + ".mask_alpha", Tensor({cfg.f_bins()}, 1.0));
  else
    log_beta = ps.add(name + ".log_beta", Tensor({cfg.f_bins()}));  // beta = 1 at init
}

Var MagDecoder::forward(const Var& h, const Var& in_cmag) const {
  Var y = dense.forward(h);
  y = up_act.forward(up_norm.forward(up.forward(y)));
  y = out.forward(y);                               // (B, 1, T, F)
  y = reshape(y, {y.dim(0), y.dim(2), y.dim(3)});   // (B, T, F)
  if (masking) {
    // learnable-sigmoid mask in (0, mask_beta), applied to the input magnitude
    Var mask = scale(sigmoid(mul(y, mask_alpha)), mask_beta);
    return mul(mask, in_cmag);
  }
  return learnable_softplus(y, exp_v(log_beta));
}

PhaseDecoder::PhaseDecoder(ParamStore& ps, const std::string& name, const GeneratorConfig& cfg,
                           Rng& rng) {
  const int64_t c = cfg.channels;
  dense = DenseBlock(ps, name + ".dense", c, cfg.dense_depth, rng);
  up = ConvT2dLayer(ps, name + ".up", c, c, 1, 3, 1, 2, 0, 0, true, rng);
  up_norm = InstanceNorm(ps, name + ".up_norm", c);
  up_act = PRelu(ps, name + ".up_act", c);
  head_r = Conv2dLayer(ps, name + ".head_r", c, 1, 1, 1, Conv2dSpec{}, true, rng);
  head_i = Conv2dLayer(ps, name + ".head_i", c, 1, 1, 1, Conv2dSpec{}, true, rng);
}

Var PhaseDecoder::forward(const Var& h) const {
  Var y = dense.forward(h);
  y = up_act.forward(up_norm.forward(up.forward(y)));
  Var r = head_r.forward(y);
  Var i = head_i.forward(y);
  Var phase = atan2v(i, r);  // (B, 1, T, F)
  return reshape(phase, {phase.dim(0), phase.dim(2), phase.dim(3)});
}

Generator::Generator(GeneratorConfig cfg) : cfg_(cfg), stft_(cfg.stft) {
  GSR_CHECK(cfg_.channels % 4 == 0, "channel count must be divisible by 4 (d_p = C/4)");
  Rng rng(cfg_.init_seed);
  encoder_ = Encoder(params_, "encoder", cfg_, rng);
  MrBlockConfig mc;
  mc.channels = cfg_.channels;
  mc.resolutions = cfg_.resolutions;
  mc.blocks = cfg_.blocks;
  mc.f_top = cfg_.f_prime();
  mc.mode = cfg_.mode;
  mc.glp_variant = cfg_.glp_variant;
  mc.dp_from_output = cfg_.dp_from_output;
  mc.mamba = cfg_.mamba;
  bottleneck_ = Bottleneck(params_, "bottleneck", mc, rng);
  mag_dec_ = MagDecoder(params_, "mag_decoder", cfg_, rng);
  phase_dec_ = PhaseDecoder(params_, "phase_decoder", cfg_, rng);
}

GenForward Generator::forward_spec(const Var& in_cmag, const Var& in_phase, int64_t out_len,
                                   BottleneckTrace* trace) const {
  const Shape& s = in_cmag.shape();
  GSR_CHECK(s.size() == 3 && s[2] == cfg_.f_bins(), "expected (B, T, F) compressed magnitude");
  const int64_t B = s[0], T = s[1], F = s[2];

  Var ch_m = reshape(in_cmag, {B, 1, T, F});
  Var ch_p = reshape(in_phase, {B, 1, T, F});
  Var x = concat({ch_m, ch_p}, 1);  // (B, 2, T, F)

  Var h = encoder_.forward(x);
  h = bottleneck_.forward(h, trace);

  GenForward out;
  out.in_cmag = in_cmag;
  out.cmag = mag_dec_.forward(h, in_cmag);
  out.phase = phase_dec_.forward(h);
  out.re_c = mul(out.cmag, cos_v(out.phase));
  out.im_c = mul(out.cmag, sin_v(out.phase));

  Var mag = decompress_magnitude(out.cmag, cfg_.compression);
  SpecVar spec{mul(mag, cos_v(out.phase)), mul(mag, sin_v(out.phase))};
  out.wave = stft_.inverse(spec, out_len);
  return out;
}

GenForward Generator::forward(const Var& wave, BottleneckTrace* trace) const {
  GSR_CHECK(wave.shape().size() == 2, "Generator::forward expects (B, L)");
  const int64_t L = wave.dim(1);
  GSR_CHECK(L >= cfg_.stft.window_length,
            "input of " << L << " samples is shorter than one STFT window");
  SpecVar s = stft_.forward(wave);
  Var mag = complex_abs(s.re, s.im);
  Var in_cmag = compress_magnitude(mag, cfg_.compression);
  Var in_phase = atan2v(s.im, s.re);
  return forward_spec(in_cmag, in_phase, L, trace);
}

Waveform Generator::restore(const Waveform& degraded) const {
  degraded.validate();
  NoGradGuard ng;
  Var wave(Tensor({1, degraded.size()}, degraded.samples));
  GenForward out = forward(wave);
  Waveform y;
  y.samples.assign(out.wave.val().data(), out.wave.val().data() + degraded.size());
  return y;
}

}  // namespace gsr
