#include <cmath>

#include "core/check.h"
#include "core/ops.h"

namespace gsr {

Var instance_norm2d(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Shape& s = x.shape();
  GSR_CHECK(s.size() == 4, "instance_norm2d expects (B,C,H,W)");
  const int64_t B = s[0], C = s[1], HW = s[2] * s[3];
  GSR_CHECK(gamma.size() == C && beta.size() == C, "instance_norm2d affine size");
  GSR_CHECK(HW > 1, "instance_norm2d needs more than one spatial element");

  Tensor value(s);
  Tensor mean_t({B, C});
  Tensor invstd_t({B, C});
  {
    const double* px = x.val().data();
    double* po = value.data();
    for (int64_t bc = 0; bc < B * C; ++bc) {
      const double* xr = px + bc * HW;
      double m = 0.0;
      for (int64_t i = 0; i < HW; ++i) m += xr[i];
      m /= static_cast<double>(HW);
      double v = 0.0;
      for (int64_t i = 0; i < HW; ++i) {
        const double d = xr[i] - m;
        v += d * d;
      }
      v /= static_cast<double>(HW);
      const double inv = 1.0 / std::sqrt(v + eps);
      mean_t[bc] = m;
      invstd_t[bc] = inv;
      const int64_t c = bc % C;
      const double gmul = gamma.val()[c], badd = beta.val()[c];
      double* yr = po + bc * HW;
      for (int64_t i = 0; i < HW; ++i) yr[i] = (xr[i] - m) * inv * gmul + badd;
    }
  }

  return make_op(std::move(value), {x, gamma, beta},
                 [x, gamma, beta, mean_t, invstd_t, B, C, HW](Node& n) {
                   const double* g = n.grad.data();
                   const double* px = x.val().data();
                   Tensor gx, ggamma, gbeta;
                   if (x.requires_grad()) gx = Tensor(x.shape());
                   if (gamma.requires_grad()) ggamma = Tensor(gamma.shape());
                   if (beta.requires_grad()) gbeta = Tensor(beta.shape());
                   for (int64_t bc = 0; bc < B * C; ++bc) {
                     const int64_t c = bc % C;
                     const double m = mean_t[bc], inv = invstd_t[bc];
                     const double* xr = px + bc * HW;
                     const double* gr = g + bc * HW;
                     double sum_g = 0.0, sum_gx = 0.0;
                     for (int64_t i = 0; i < HW; ++i) {
                       const double xh = (xr[i] - m) * inv;
                       sum_g += gr[i];
                       sum_gx += gr[i] * xh;
                     }
                     if (ggamma.defined()) ggamma[c] += sum_gx;
                     if (gbeta.defined()) gbeta[c] += sum_g;
                     if (gx.defined()) {
                       const double gmul = gamma.val()[c];
                       const double mg = sum_g / static_cast<double>(HW);
                       const double mgx = sum_gx / static_cast<double>(HW);
                       double* dr = gx.data() + bc * HW;
                       for (int64_t i = 0; i < HW; ++i) {
                         const double xh = (xr[i] - m) * inv;
                         dr[i] = gmul * inv * (gr[i] - mg - xh * mgx);
                       }
                     }
                   }
                   if (gx.defined()) n.parents[0]->accumulate(gx);
                   if (ggamma.defined()) n.parents[1]->accumulate(ggamma);
                   if (gbeta.defined()) n.parents[2]->accumulate(gbeta);
                 });
}

Var layer_norm_channel(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Shape& s = x.shape();
  GSR_CHECK(s.size() >= 2, "layer_norm_channel expects (B,C,...)");
  const int64_t B = s[0], C = s[1];
  GSR_CHECK(gamma.size() == C && beta.size() == C, "layer_norm_channel affine size");
  int64_t S = 1;
  for (size_t i = 2; i < s.size(); ++i) S *= s[i];

  Tensor value(s);
  Tensor mean_t({B, S});
  Tensor invstd_t({B, S});
  {
    const double* px = x.val().data();
    double* po = value.data();
    const double* pg = gamma.val().data();
    const double* pb = beta.val().data();
    for (int64_t b = 0; b < B; ++b) {
      const double* xb = px + b * C * S;
      double* yb = po + b * C * S;
      for (int64_t j = 0; j < S; ++j) {
        double m = 0.0;
        for (int64_t c = 0; c < C; ++c) m += xb[c * S + j];
        m /= static_cast<double>(C);
        double v = 0.0;
        for (int64_t c = 0; c < C; ++c) {
          const double d = xb[c * S + j] - m;
          v += d * d;
        }
        v /= static_cast<double>(C);
        const double inv = 1.0 / std::sqrt(v + eps);
        mean_t[b * S + j] = m;
        invstd_t[b * S + j] = inv;
        for (int64_t c = 0; c < C; ++c)
          yb[c * S + j] = (xb[c * S + j] - m) * inv * pg[c] + pb[c];
      }
    }
  }

  return make_op(std::move(value), {x, gamma, beta},
                 [x, gamma, beta, mean_t, invstd_t, B, C, S](Node& n) {
                   const double* g = n.grad.data();
                   const double* px = x.val().data();
                   const double* pg = gamma.val().data();
                   Tensor gx, ggamma, gbeta;
                   if (x.requires_grad()) gx = Tensor(x.shape());
                   if (gamma.requires_grad()) ggamma = Tensor(gamma.shape());
                   if (beta.requires_grad()) gbeta = Tensor(beta.shape());
                   for (int64_t b = 0; b < B; ++b) {
                     const double* xb = px + b * C * S;
                     const double* gb_ = g + b * C * S;
                     for (int64_t j = 0; j < S; ++j) {
                       const double m = mean_t[b * S + j], inv = invstd_t[b * S + j];
                       double sum_h = 0.0, sum_hx = 0.0;
                       for (int64_t c = 0; c < C; ++c) {
                         const double xh = (xb[c * S + j] - m) * inv;
                         const double gc = gb_[c * S + j];
                         if (ggamma.defined()) ggamma[c] += gc * xh;
                         if (gbeta.defined()) gbeta[c] += gc;
                         sum_h += gc * pg[c];
                         sum_hx += gc * pg[c] * xh;
                       }
                       if (gx.defined()) {
                         const double mh = sum_h / static_cast<double>(C);
                         const double mhx = sum_hx / static_cast<double>(C);
                         double* dxb = gx.data() + b * C * S;
                         for (int64_t c = 0; c < C; ++c) {
                           const double xh = (xb[c * S + j] - m) * inv;
                           dxb[c * S + j] = inv * (gb_[c * S + j] * pg[c] - mh - xh * mhx);
                         }
                       }
                     }
                   }
                   if (gx.defined()) n.parents[0]->accumulate(gx);
                   if (ggamma.defined()) n.parents[1]->accumulate(ggamma);
                   if (gbeta.defined()) n.parents[2]->accumulate(gbeta);
                 });
}

Var prelu(const Var& x, const Var& alpha) {
  const Shape& s = x.shape();
  const bool scalar_alpha = alpha.size() == 1;
  int64_t C = 1, S = 1, B = 1;
  if (!scalar_alpha) {
    GSR_CHECK(s.size() >= 2 && alpha.size() == s[1], "prelu alpha must match channels");
    B = s[0];
    C = s[1];
    for (size_t i = 2; i < s.size(); ++i) S *= s[i];
  } else {
    B = 1;
    C = 1;
    S = x.size();
  }

  Tensor value(s);
  {
    const double* px = x.val().data();
    const double* pa = alpha.val().data();
    double* po = value.data();
    for (int64_t b = 0; b < B; ++b)
      for (int64_t c = 0; c < C; ++c) {
        const double a = scalar_alpha ? pa[0] : pa[c];
        const double* xr = px + (b * C + c) * S;
        double* yr = po + (b * C + c) * S;
        for (int64_t i = 0; i < S; ++i) yr[i] = xr[i] > 0 ? xr[i] : a * xr[i];
      }
  }

  return make_op(std::move(value), {x, alpha}, [x, alpha, scalar_alpha, B, C, S](Node& n) {
    const double* g = n.grad.data();
    const double* px = x.val().data();
    const double* pa = alpha.val().data();
    Tensor gx, ga;
    if (x.requires_grad()) gx = Tensor(x.shape());
    if (alpha.requires_grad()) ga = Tensor(alpha.shape());
    for (int64_t b = 0; b < B; ++b)
      for (int64_t c = 0; c < C; ++c) {
        const double a = scalar_alpha ? pa[0] : pa[c];
        const int64_t off = (b * C + c) * S;
        double acc = 0.0;
        for (int64_t i = 0; i < S; ++i) {
          const double xv = px[off + i], gv = g[off + i];
          if (gx.defined()) gx[off + i] = xv > 0 ? gv : a * gv;
          if (xv <= 0) acc += gv * xv;
        }
        if (ga.defined()) ga[scalar_alpha ? 0 : c] += acc;
      }
    if (gx.defined()) n.parents[0]->accumulate(gx);
    if (ga.defined()) n.parents[1]->accumulate(ga);
  });
}

}  // namespace gsr
