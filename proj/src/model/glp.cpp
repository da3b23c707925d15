#include "model/glp.h"

#include "core/check.h"

namespace gsr {

GlpVariant glp_variant_from_string(const std::string& s) {
  if (s == "glp") return GlpVariant::kGlp;
  if (s == "no_gp") return GlpVariant::kNoGp;
  if (s == "serial") return GlpVariant::kSerial;
  if (s == "fan_to_linear") return GlpVariant::kFanToLinear;
  GSR_FAIL("unknown GLP variant: " << s);
}

const char* glp_variant_name(GlpVariant v) {
  switch (v) {
    case GlpVariant::kGlp: return "glp";
    case GlpVariant::kNoGp: return "no_gp";
    case GlpVariant::kSerial: return "serial";
    case GlpVariant::kFanToLinear: return "fan_to_linear";
  }
  return "?";
}

GpModule::GpModule(ParamStore& ps, const std::string& name, const GlpConfig& cfg,
                   int64_t width, bool fan, Rng& rng)
    : use_fan(fan), f_eff(width) {
  const int64_t w2 = 2 * width;
  if (use_fan) {
    const int64_t dp1 = cfg.d_p(w2);
    const int64_t dp2 = cfg.d_p(w2);
    GSR_CHECK(w2 - 2 * dp1 >= 1, "FAN width " << w2 << " too small for d_p " << dp1);
    fan1 = Fan(ps, name + ".fan1", width, dp1, w2 - 2 * dp1, rng);
    fan2 = Fan(ps, name + ".fan2", w2, dp2, w2 - 2 * dp2, rng);
  } else {
    lin1 = Linear(ps, name + ".lin1", width, w2, true, rng);
    lin2 = Linear(ps, name + ".lin2", w2, w2, true, rng);
  }
  gate_a = Linear(ps, name + ".gate_a", w2, width, true, rng);
  gate_b = Linear(ps, name + ".gate_b", w2, width, true, rng);
}

Var GpModule::forward(const Var& x) const {
  GSR_CHECK(x.shape().back() == f_eff,
            "GP module built for F_eff " << f_eff << ", got " << x.shape().back());
  Var h = use_fan ? fan2.forward(fan1.forward(x)) : lin2.forward(lin1.forward(x));
  return mul(gate_a.forward(h), sigmoid(gate_b.forward(h)));
}

LModule::LModule(ParamStore& ps, const std::string& name, int64_t channels, Rng& rng) {
  Conv2dSpec spec;
  spec.pad_w = 1;  // kernel (1,3) along frequency, same padding
  conv1 = Conv2dLayer(ps, name + ".conv1", channels, channels, 1, 3, spec, true, rng);
  conv2 = Conv2dLayer(ps, name + ".conv2", channels, channels, 1, 3, spec, true, rng);
}

Var LModule::forward(const Var& x) const {
  return conv2.forward(gelu(conv1.forward(x)));
}

ChannelFfn::ChannelFfn(ParamStore& ps, const std::string& name, const GlpConfig& cfg,
                       bool fan, Rng& rng) {
  GlpConfig c = cfg;
  gp = GpModule(ps, name, c, cfg.channels, fan, rng);
}

Var ChannelFfn::forward(const Var& x) const {
  // move channels to the last axis so the same fiber code applies
  Var t = permute(x, {0, 2, 3, 1});  // (B, T, F, C)
  Var y = gp.forward(t);
  return permute(y, {0, 3, 1, 2});
}

GlpBlock::GlpBlock(ParamStore& ps, const std::string& name, const GlpConfig& cfg_, Rng& rng)
    : cfg(cfg_) {
  const int64_t c = cfg.channels;
  norm1 = ChannelLayerNorm(ps, name + ".norm1", c);
  norm2 = ChannelLayerNorm(ps, name + ".norm2", c);
  const bool fan = cfg.variant != GlpVariant::kFanToLinear;
  if (cfg.variant == GlpVariant::kNoGp) {
    l2 = LModule(ps, name + ".l2", c, rng);
  } else {
    gp = GpModule(ps, name + ".gp", cfg, cfg.f_eff, fan, rng);
  }
  l = LModule(ps, name + ".l", c, rng);
  fuse = Conv2dLayer(ps, name + ".fuse", 2 * c, c, 1, 1, Conv2dSpec{}, true, rng);
  ffn = ChannelFfn(ps, name + ".ffn", cfg, fan, rng);
}

Var GlpBlock::forward(const Var& x, GlpTaps* taps) const {
  GSR_CHECK(x.shape().size() == 4 && x.dim(1) == cfg.channels && x.dim(3) == cfg.f_eff,
            "GLP block expects (B," << cfg.channels << ",T," << cfg.f_eff << "), got "
                                    << x.val().str());
  Var h = norm1.forward(x);
  Var l_out = l.forward(h);
  Var gp_out;
  switch (cfg.variant) {
    case GlpVariant::kGlp:
    case GlpVariant::kFanToLinear:
      gp_out = gp.forward(h);
      break;
    case GlpVariant::kSerial:
      gp_out = gp.forward(l_out);
      break;
    case GlpVariant::kNoGp:
      gp_out = l2.forward(h);
      break;
  }
  if (taps) {
    taps->gp_out = gp_out;
    taps->l_out = l_out;
  }
  Var y1 = x + fuse.forward(concat({gp_out, l_out}, 1));
  return y1 + ffn.forward(norm2.forward(y1));
}

}  // namespace gsr
