#include <cmath>

#include "core/check.h"
#include "core/ops.h"

namespace gsr {

Var constant(Tensor t) { return Var(std::move(t), false); }

Var detach(const Var& x) { return Var(x.val(), false); }

// ---------------------------------------------------------------------------
// broadcasting
// ---------------------------------------------------------------------------

namespace {

struct Bcast {
  Shape out;            // broadcast shape
  Shape sa, sb;         // strides into a and b (0 on broadcast axes)
  bool same = false;    // fast path: identical shapes
  bool b_scalar = false;
};

Bcast plan_broadcast(const Shape& a, const Shape& b) {
  Bcast p;
  if (a == b) {
    p.out = a;
    p.same = true;
    return p;
  }
  if (numel(b) == 1) {
    p.out = a;
    p.b_scalar = true;
    return p;
  }
  size_t ra = a.size(), rb = b.size();
  size_t r = std::max(ra, rb);
  Shape ea(r, 1), eb(r, 1);
  for (size_t i = 0; i < ra; ++i) ea[r - ra + i] = a[i];
  for (size_t i = 0; i < rb; ++i) eb[r - rb + i] = b[i];
  p.out.resize(r);
  for (size_t i = 0; i < r; ++i) {
    GSR_CHECK(ea[i] == eb[i] || ea[i] == 1 || eb[i] == 1,
              "cannot broadcast " << shape_str(a) << " with " << shape_str(b));
    p.out[i] = std::max(ea[i], eb[i]);
  }
  Shape fa = strides_of(ea), fb = strides_of(eb);
  p.sa.resize(r);
  p.sb.resize(r);
  for (size_t i = 0; i < r; ++i) {
    p.sa[i] = (ea[i] == 1 && p.out[i] > 1) ? 0 : fa[i];
    p.sb[i] = (eb[i] == 1 && p.out[i] > 1) ? 0 : fb[i];
  }
  return p;
}

// Sum g down to `target` shape (inverse of broadcasting).
Tensor reduce_to(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  size_t r = g.shape().size(), rt = target.size();
  Shape et(r, 1);
  for (size_t i = 0; i < rt; ++i) et[r - rt + i] = target[i];
  Tensor out(target);
  Shape gs = strides_of(g.shape());
  Shape ts = strides_of(et);
  Shape idx(r, 0);
  const Shape& gsh = g.shape();
  const double* gp = g.data();
  double* op = out.data();
  for (int64_t flat = 0; flat < g.size(); ++flat) {
    int64_t tflat = 0;
    for (size_t i = 0; i < r; ++i)
      if (et[i] != 1) tflat += idx[i] * ts[i];
    op[tflat] += gp[flat];
    for (int i = static_cast<int>(r) - 1; i >= 0; --i) {
      if (++idx[i] < gsh[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

template <typename F>
Tensor binary_eval(const Tensor& a, const Tensor& b, const Bcast& p, F f) {
  Tensor out(p.out);
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  const int64_t n = out.size();
  if (p.same) {
    for (int64_t i = 0; i < n; ++i) po[i] = f(pa[i], pb[i]);
  } else if (p.b_scalar) {
    const double bv = pb[0];
    for (int64_t i = 0; i < n; ++i) po[i] = f(pa[i], bv);
  } else {
    size_t r = p.out.size();
    Shape idx(r, 0);
    int64_t ia = 0, ib = 0;
    for (int64_t i = 0; i < n; ++i) {
      po[i] = f(pa[ia], pb[ib]);
      for (int d = static_cast<int>(r) - 1; d >= 0; --d) {
        ++idx[d];
        ia += p.sa[d];
        ib += p.sb[d];
        if (idx[d] < p.out[d]) break;
        idx[d] = 0;
        ia -= p.sa[d] * p.out[d];
        ib -= p.sb[d] * p.out[d];
      }
    }
  }
  return out;
}

// dfa(a, b, g) and dfb(a, b, g) give elementwise partials times g.
template <typename F, typename DFA, typename DFB>
Var binary_op(const Var& a, const Var& b, F f, DFA dfa, DFB dfb) {
  Bcast p = plan_broadcast(a.shape(), b.shape());
  Tensor value = binary_eval(a.val(), b.val(), p, f);
  return make_op(std::move(value), {a, b}, [a, b, p, dfa, dfb](Node& n) {
    const Tensor& g = n.grad;
    if (a.requires_grad()) {
      Tensor ga(p.out);
      const double* pa = a.val().data();
      const double* pb = b.val().data();
      const double* pg = g.data();
      double* po = ga.data();
      const int64_t nels = g.size();
      if (p.same) {
        for (int64_t i = 0; i < nels; ++i) po[i] = dfa(pa[i], pb[i], pg[i]);
      } else if (p.b_scalar) {
        const double bv = pb[0];
        for (int64_t i = 0; i < nels; ++i) po[i] = dfa(pa[i], bv, pg[i]);
      } else {
        size_t r = p.out.size();
        Shape idx(r, 0);
        int64_t ia = 0, ib = 0;
        for (int64_t i = 0; i < nels; ++i) {
          po[i] = dfa(pa[ia], pb[ib], pg[i]);
          for (int d = static_cast<int>(r) - 1; d >= 0; --d) {
            ++idx[d];
            ia += p.sa[d];
            ib += p.sb[d];
            if (idx[d] < p.out[d]) break;
            idx[d] = 0;
            ia -= p.sa[d] * p.out[d];
            ib -= p.sb[d] * p.out[d];
          }
        }
      }
      n.parents[0]->accumulate(reduce_to(ga, a.shape()));
    }
    if (b.requires_grad()) {
      Tensor gb(p.out);
      const double* pa = a.val().data();
      const double* pb = b.val().data();
      const double* pg = g.data();
      double* po = gb.data();
      const int64_t nels = g.size();
      if (p.same) {
        for (int64_t i = 0; i < nels; ++i) po[i] = dfb(pa[i], pb[i], pg[i]);
      } else if (p.b_scalar) {
        const double bv = pb[0];
        for (int64_t i = 0; i < nels; ++i) po[i] = dfb(pa[i], bv, pg[i]);
      } else {
        size_t r = p.out.size();
        Shape idx(r, 0);
        int64_t ia = 0, ib = 0;
        for (int64_t i = 0; i < nels; ++i) {
          po[i] = dfb(pa[ia], pb[ib], pg[i]);
          for (int d = static_cast<int>(r) - 1; d >= 0; --d) {
            ++idx[d];
            ia += p.sa[d];
            ib += p.sb[d];
            if (idx[d] < p.out[d]) break;
            idx[d] = 0;
            ia -= p.sa[d] * p.out[d];
            ib -= p.sb[d] * p.out[d];
          }
        }
      }
      n.parents[1]->accumulate(reduce_to(gb, b.shape()));
    }
  });
}

template <typename F, typename DF>
Var unary_op(const Var& x, F f, DF df) {
  Tensor value(x.shape());
  const double* px = x.val().data();
  double* po = value.data();
  const int64_t n = value.size();
  for (int64_t i = 0; i < n; ++i) po[i] = f(px[i]);
  return make_op(std::move(value), {x}, [x, df](Node& node) {
    if (!x.requires_grad()) return;
    Tensor gx(x.shape());
    const double* px = x.val().data();
    const double* py = node.value.data();
    const double* pg = node.grad.data();
    double* po = gx.data();
    const int64_t n = gx.size();
    for (int64_t i = 0; i < n; ++i) po[i] = df(px[i], py[i], pg[i]);
    node.parents[0]->accumulate(gx);
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// binary ops
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](double x, double y) { return x + y; },
      [](double, double, double g) { return g; },
      [](double, double, double g) { return g; });
}

Var sub(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](double x, double y) { return x - y; },
      [](double, double, double g) { return g; },
      [](double, double, double g) { return -g; });
}

Var mul(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](double x, double y) { return x * y; },
      [](double, double y, double g) { return g * y; },
      [](double x, double, double g) { return g * x; });
}

Var divide(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](double x, double y) { return x / y; },
      [](double, double y, double g) { return g / y; },
      [](double x, double y, double g) { return -g * x / (y * y); });
}

Var atan2v(const Var& y, const Var& x) {
  return binary_op(
      y, x, [](double yy, double xx) { return std::atan2(yy, xx); },
      [](double yy, double xx, double g) {
        double r2 = yy * yy + xx * xx;
        return r2 > 0 ? g * xx / r2 : 0.0;
      },
      [](double yy, double xx, double g) {
        double r2 = yy * yy + xx * xx;
        return r2 > 0 ? -g * yy / r2 : 0.0;
      });
}

Var complex_abs(const Var& re, const Var& im) {
  return binary_op(
      re, im, [](double r, double i) { return std::sqrt(r * r + i * i); },
      [](double r, double i, double g) {
        double m = std::sqrt(r * r + i * i);
        return m > 0 ? g * r / m : 0.0;
      },
      [](double r, double i, double g) {
        double m = std::sqrt(r * r + i * i);
        return m > 0 ? g * i / m : 0.0;
      });
}

// ---------------------------------------------------------------------------
// unary ops
// ---------------------------------------------------------------------------

Var neg(const Var& x) {
  return unary_op(x, [](double v) { return -v; },
                  [](double, double, double g) { return -g; });
}

Var exp_v(const Var& x) {
  return unary_op(x, [](double v) { return std::exp(v); },
                  [](double, double y, double g) { return g * y; });
}

Var log_v(const Var& x) {
  return unary_op(x, [](double v) { return std::log(v); },
                  [](double v, double, double g) { return g / v; });
}

Var sqrt_v(const Var& x) {
  return unary_op(x, [](double v) { return std::sqrt(v); },
                  [](double, double y, double g) { return y > 0 ? g * 0.5 / y : 0.0; });
}

Var abs_v(const Var& x) {
  return unary_op(x, [](double v) { return std::fabs(v); },
                  [](double v, double, double g) { return v > 0 ? g : (v < 0 ? -g : 0.0); });
}

Var sin_v(const Var& x) {
  return unary_op(x, [](double v) { return std::sin(v); },
                  [](double v, double, double g) { return g * std::cos(v); });
}

Var cos_v(const Var& x) {
  return unary_op(x, [](double v) { return std::cos(v); },
                  [](double v, double, double g) { return -g * std::sin(v); });
}

Var tanh_v(const Var& x) {
  return unary_op(x, [](double v) { return std::tanh(v); },
                  [](double, double y, double g) { return g * (1.0 - y * y); });
}

Var sigmoid(const Var& x) {
  return unary_op(x,
                  [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                  [](double, double y, double g) { return g * y * (1.0 - y); });
}

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Var gelu(const Var& x) {
  return unary_op(x,
                  [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
                  [](double v, double, double g) {
                    double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
                    double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
                    return g * (cdf + v * pdf);
                  });
}

Var relu(const Var& x) {
  return unary_op(x, [](double v) { return v > 0 ? v : 0.0; },
                  [](double v, double, double g) { return v > 0 ? g : 0.0; });
}

Var leaky_relu(const Var& x, double slope) {
  return unary_op(x, [slope](double v) { return v > 0 ? v : slope * v; },
                  [slope](double v, double, double g) { return v > 0 ? g : slope * g; });
}

Var square(const Var& x) {
  return unary_op(x, [](double v) { return v * v; },
                  [](double v, double, double g) { return 2.0 * g * v; });
}

Var pow_scalar(const Var& x, double p) {
  return unary_op(x,
                  [p](double v) { return std::pow(v, p); },
                  [p](double v, double, double g) {
                    if (v == 0.0) return 0.0;  // subgradient choice at the origin
                    return g * p * std::pow(v, p - 1.0);
                  });
}

Var clamp_min(const Var& x, double c) {
  return unary_op(x, [c](double v) { return v > c ? v : c; },
                  [c](double v, double, double g) { return v > c ? g : 0.0; });
}

Var scale(const Var& x, double s) {
  return unary_op(x, [s](double v) { return s * v; },
                  [s](double, double, double g) { return s * g; });
}

Var add_scalar(const Var& x, double s) {
  return unary_op(x, [s](double v) { return v + s; },
                  [](double, double, double g) { return g; });
}

Var wrap_principal(const Var& x) {
  constexpr double kTwoPi = 2.0 * M_PI;
  return unary_op(x,
                  [](double v) { return v - kTwoPi * std::round(v / kTwoPi); },
                  [](double, double, double g) { return g; });
}

namespace {
// softplus(z) evaluated without overflow
inline double softplus_stable(double z) {
  if (z > 30.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}
}  // namespace

Var learnable_softplus(const Var& x, const Var& beta) {
  const Shape& xs = x.shape();
  GSR_CHECK(!xs.empty(), "learnable_softplus needs rank >= 1 input");
  const int64_t f = xs.back();
  GSR_CHECK(beta.size() == f,
            "beta size " << beta.size() << " must match last axis " << f);
  const int64_t rows = x.size() / f;
  Tensor value(xs);
  {
    const double* px = x.val().data();
    const double* pb = beta.val().data();
    double* po = value.data();
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t j = 0; j < f; ++j) {
        double b = pb[j];
        po[r * f + j] = softplus_stable(b * px[r * f + j]) / b;
      }
  }
  return make_op(std::move(value), {x, beta}, [x, beta, rows, f](Node& n) {
    const double* px = x.val().data();
    const double* pb = beta.val().data();
    const double* py = n.value.data();
    const double* pg = n.grad.data();
    if (x.requires_grad()) {
      Tensor gx(x.shape());
      double* po = gx.data();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < f; ++j) {
          int64_t i = r * f + j;
          double s = 1.0 / (1.0 + std::exp(-pb[j] * px[i]));
          po[i] = pg[i] * s;
        }
      n.parents[0]->accumulate(gx);
    }
    if (beta.requires_grad()) {
      Tensor gb(beta.shape());
      double* po = gb.data();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < f; ++j) {
          int64_t i = r * f + j;
          double b = pb[j];
          double s = 1.0 / (1.0 + std::exp(-b * px[i]));
          po[j] += pg[i] * (px[i] * s - py[i]) / b;
        }
      n.parents[1]->accumulate(gb);
    }
  });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Var sum(const Var& x) {
  double acc = 0.0;
  const double* px = x.val().data();
  for (int64_t i = 0; i < x.size(); ++i) acc += px[i];
  return make_op(Tensor::scalar(acc), {x}, [x](Node& n) {
    if (!x.requires_grad()) return;
    Tensor gx(x.shape(), n.grad[0]);
    n.parents[0]->accumulate(gx);
  });
}

Var mean(const Var& x) {
  GSR_CHECK(x.size() > 0, "mean of empty tensor");
  double acc = 0.0;
  const double* px = x.val().data();
  for (int64_t i = 0; i < x.size(); ++i) acc += px[i];
  const double inv = 1.0 / static_cast<double>(x.size());
  return make_op(Tensor::scalar(acc * inv), {x}, [x, inv](Node& n) {
    if (!x.requires_grad()) return;
    Tensor gx(x.shape(), n.grad[0] * inv);
    n.parents[0]->accumulate(gx);
  });
}

}  // namespace gsr
