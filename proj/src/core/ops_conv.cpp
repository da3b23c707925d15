#include <algorithm>
#include <vector>

#include "core/check.h"
#include "core/gemm.h"
#include "core/ops.h"

namespace gsr {

namespace {

struct ConvGeom {
  int64_t B, Ci, H, W;       // input
  int64_t Co, KH, KW;        // kernel
  int64_t OH, OW;            // output
  int64_t sh, sw, ph, pw, dh, dw;
};

int64_t conv_out_size(int64_t in, int64_t k, int64_t stride, int64_t pad, int64_t dil) {
  const int64_t eff = dil * (k - 1) + 1;
  return (in + 2 * pad - eff) / stride + 1;
}

ConvGeom make_geom(const Shape& xs, const Shape& ws, const Conv2dSpec& sp) {
  GSR_CHECK(xs.size() == 4 && ws.size() == 4, "conv2d expects 4-D input and weight");
  ConvGeom g;
  g.B = xs[0];
  g.Ci = xs[1];
  g.H = xs[2];
  g.W = xs[3];
  g.Co = ws[0];
  GSR_CHECK(ws[1] == g.Ci, "conv2d channel mismatch: x has " << g.Ci << ", w wants " << ws[1]);
  g.KH = ws[2];
  g.KW = ws[3];
  g.sh = sp.stride_h;
  g.sw = sp.stride_w;
  g.ph = sp.pad_h;
  g.pw = sp.pad_w;
  g.dh = sp.dil_h;
  g.dw = sp.dil_w;
  g.OH = conv_out_size(g.H, g.KH, g.sh, g.ph, g.dh);
  g.OW = conv_out_size(g.W, g.KW, g.sw, g.pw, g.dw);
  GSR_CHECK(g.OH > 0 && g.OW > 0, "conv2d output would be empty");
  return g;
}

bool is_pointwise(const ConvGeom& g) {
  return g.KH == 1 && g.KW == 1 && g.sh == 1 && g.sw == 1 && g.ph == 0 && g.pw == 0;
}

// im2col over output rows [r0, r1); cols is (Ci*KH*KW) x ((r1-r0)*OW).
void im2col_rows(const double* xb, const ConvGeom& g, int64_t r0, int64_t r1, double* cols) {
  const int64_t bs = (r1 - r0) * g.OW;
  for (int64_t ci = 0; ci < g.Ci; ++ci) {
    const double* xc = xb + ci * g.H * g.W;
    for (int64_t kh = 0; kh < g.KH; ++kh) {
      for (int64_t kw = 0; kw < g.KW; ++kw) {
        double* row = cols + ((ci * g.KH + kh) * g.KW + kw) * bs;
        for (int64_t oh = r0; oh < r1; ++oh) {
          double* dst = row + (oh - r0) * g.OW;
          const int64_t ih = oh * g.sh - g.ph + kh * g.dh;
          if (ih < 0 || ih >= g.H) {
            std::fill(dst, dst + g.OW, 0.0);
            continue;
          }
          const double* src = xc + ih * g.W;
          const int64_t base = kw * g.dw - g.pw;
          if (g.sw == 1) {
            const int64_t lo = std::max<int64_t>(0, -base);
            const int64_t hi = std::min<int64_t>(g.OW, g.W - base);
            if (lo > 0) std::fill(dst, dst + std::min(lo, g.OW), 0.0);
            if (hi > lo) std::copy(src + base + lo, src + base + hi, dst + lo);
            if (hi < g.OW) std::fill(dst + std::max<int64_t>(hi, 0), dst + g.OW, 0.0);
          } else {
            for (int64_t ow = 0; ow < g.OW; ++ow) {
              const int64_t iw = ow * g.sw + base;
              dst[ow] = (iw >= 0 && iw < g.W) ? src[iw] : 0.0;
            }
          }
        }
      }
    }
  }
}

void col2im_rows(const double* cols, const ConvGeom& g, int64_t r0, int64_t r1, double* xb) {
  const int64_t bs = (r1 - r0) * g.OW;
  for (int64_t ci = 0; ci < g.Ci; ++ci) {
    double* xc = xb + ci * g.H * g.W;
    for (int64_t kh = 0; kh < g.KH; ++kh) {
      for (int64_t kw = 0; kw < g.KW; ++kw) {
        const double* row = cols + ((ci * g.KH + kh) * g.KW + kw) * bs;
        for (int64_t oh = r0; oh < r1; ++oh) {
          const double* src = row + (oh - r0) * g.OW;
          const int64_t ih = oh * g.sh - g.ph + kh * g.dh;
          if (ih < 0 || ih >= g.H) continue;
          double* dst = xc + ih * g.W;
          const int64_t base = kw * g.dw - g.pw;
          if (g.sw == 1) {
            const int64_t lo = std::max<int64_t>(0, -base);
            const int64_t hi = std::min<int64_t>(g.OW, g.W - base);
            for (int64_t ow = lo; ow < hi; ++ow) dst[base + ow] += src[ow];
          } else {
            for (int64_t ow = 0; ow < g.OW; ++ow) {
              const int64_t iw = ow * g.sw + base;
              if (iw >= 0 && iw < g.W) dst[iw] += src[ow];
            }
          }
        }
      }
    }
  }
}

// rows of the output processed per GEMM so the column buffer stays small
int64_t row_block(const ConvGeom& g) {
  const int64_t rows = g.Ci * g.KH * g.KW;
  const int64_t target = (1 << 22) / std::max<int64_t>(1, rows * 8);  // ~4 MB
  return std::max<int64_t>(1, std::min(g.OH, std::max<int64_t>(1, target / std::max<int64_t>(1, g.OW))));
}

// y[b] = W * im2col(x[b]) (+ bias)
void conv_forward_core(const Tensor& x, const Tensor& w, const Tensor* bias, Tensor& y,
                       const ConvGeom& g) {
  const int64_t ncols = g.OH * g.OW;
  if (is_pointwise(g)) {
    for (int64_t b = 0; b < g.B; ++b)
      gemm(false, false, g.Co, ncols, g.Ci, 1.0, w.data(), x.data() + b * g.Ci * ncols, 0.0,
           y.data() + b * g.Co * ncols);
  } else {
    const int64_t rows = g.Ci * g.KH * g.KW;
    const int64_t rb = row_block(g);
    std::vector<double> cols(static_cast<size_t>(rows * rb * g.OW));
    for (int64_t b = 0; b < g.B; ++b) {
      const double* xb = x.data() + b * g.Ci * g.H * g.W;
      double* yb = y.data() + b * g.Co * ncols;
      for (int64_t r0 = 0; r0 < g.OH; r0 += rb) {
        const int64_t r1 = std::min(g.OH, r0 + rb);
        const int64_t bs = (r1 - r0) * g.OW;
        im2col_rows(xb, g, r0, r1, cols.data());
        if (bs == ncols) {
          gemm(false, false, g.Co, bs, rows, 1.0, w.data(), cols.data(), 0.0, yb);
        } else {
          std::vector<double> yblk(static_cast<size_t>(g.Co * bs));
          gemm(false, false, g.Co, bs, rows, 1.0, w.data(), cols.data(), 0.0, yblk.data());
          for (int64_t co = 0; co < g.Co; ++co)
            std::copy_n(yblk.data() + co * bs, bs, yb + co * ncols + r0 * g.OW);
        }
      }
    }
  }
  if (bias) {
    for (int64_t b = 0; b < g.B; ++b)
      for (int64_t co = 0; co < g.Co; ++co) {
        const double bv = (*bias)[co];
        double* row = y.data() + (b * g.Co + co) * ncols;
        for (int64_t i = 0; i < ncols; ++i) row[i] += bv;
      }
  }
}

// gx[b] += col2im(W^T * gy[b])
void conv_input_grad_core(const Tensor& gy, const Tensor& w, Tensor& gx, const ConvGeom& g) {
  const int64_t ncols = g.OH * g.OW;
  if (is_pointwise(g)) {
    for (int64_t b = 0; b < g.B; ++b)
      gemm(true, false, g.Ci, ncols, g.Co, 1.0, w.data(), gy.data() + b * g.Co * ncols, 1.0,
           gx.data() + b * g.Ci * ncols);
    return;
  }
  const int64_t rows = g.Ci * g.KH * g.KW;
  const int64_t rb = row_block(g);
  std::vector<double> cols(static_cast<size_t>(rows * rb * g.OW));
  std::vector<double> gblk;
  for (int64_t b = 0; b < g.B; ++b) {
    const double* gyb = gy.data() + b * g.Co * ncols;
    double* gxb = gx.data() + b * g.Ci * g.H * g.W;
    for (int64_t r0 = 0; r0 < g.OH; r0 += rb) {
      const int64_t r1 = std::min(g.OH, r0 + rb);
      const int64_t bs = (r1 - r0) * g.OW;
      const double* gy_block = gyb;
      if (bs != ncols) {
        gblk.resize(static_cast<size_t>(g.Co * bs));
        for (int64_t co = 0; co < g.Co; ++co)
          std::copy_n(gyb + co * ncols + r0 * g.OW, bs, gblk.data() + co * bs);
        gy_block = gblk.data();
      }
      gemm(true, false, rows, bs, g.Co, 1.0, w.data(), gy_block, 0.0, cols.data());
      col2im_rows(cols.data(), g, r0, r1, gxb);
    }
  }
}

// gw += gy[b] * im2col(x[b])^T summed over b
void conv_weight_grad_core(const Tensor& x, const Tensor& gy, Tensor& gw, const ConvGeom& g) {
  const int64_t ncols = g.OH * g.OW;
  if (is_pointwise(g)) {
    for (int64_t b = 0; b < g.B; ++b)
      gemm(false, true, g.Co, g.Ci, ncols, 1.0, gy.data() + b * g.Co * ncols,
           x.data() + b * g.Ci * ncols, 1.0, gw.data());
    return;
  }
  const int64_t rows = g.Ci * g.KH * g.KW;
  const int64_t rb = row_block(g);
  std::vector<double> cols(static_cast<size_t>(rows * rb * g.OW));
  std::vector<double> gblk;
  for (int64_t b = 0; b < g.B; ++b) {
    const double* xb = x.data() + b * g.Ci * g.H * g.W;
    const double* gyb = gy.data() + b * g.Co * ncols;
    for (int64_t r0 = 0; r0 < g.OH; r0 += rb) {
      const int64_t r1 = std::min(g.OH, r0 + rb);
      const int64_t bs = (r1 - r0) * g.OW;
      im2col_rows(xb, g, r0, r1, cols.data());
      const double* gy_block = gyb;
      if (bs != ncols) {
        gblk.resize(static_cast<size_t>(g.Co * bs));
        for (int64_t co = 0; co < g.Co; ++co)
          std::copy_n(gyb + co * ncols + r0 * g.OW, bs, gblk.data() + co * bs);
        gy_block = gblk.data();
      }
      gemm(false, true, g.Co, rows, bs, 1.0, gy_block, cols.data(), 1.0, gw.data());
    }
  }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& bias, const Conv2dSpec& spec) {
  ConvGeom g = make_geom(x.shape(), w.shape(), spec);
  if (bias.defined()) GSR_CHECK(bias.size() == g.Co, "conv2d bias size");
  Tensor value({g.B, g.Co, g.OH, g.OW});
  conv_forward_core(x.val(), w.val(), bias.defined() ? &bias.val() : nullptr, value, g);

  std::vector<Var> parents = {x, w};
  if (bias.defined()) parents.push_back(bias);
  return make_op(std::move(value), parents, [x, w, bias, g](Node& n) {
    const Tensor& gy = n.grad;
    if (x.requires_grad()) {
      Tensor gx(x.shape());
      conv_input_grad_core(gy, w.val(), gx, g);
      n.parents[0]->accumulate(gx);
    }
    if (w.requires_grad()) {
      Tensor gw(w.shape());
      conv_weight_grad_core(x.val(), gy, gw, g);
      n.parents[1]->accumulate(gw);
    }
    if (bias.defined() && bias.requires_grad()) {
      Tensor gb(bias.shape());
      const int64_t ncols = g.OH * g.OW;
      for (int64_t b = 0; b < g.B; ++b)
        for (int64_t co = 0; co < g.Co; ++co) {
          const double* row = gy.data() + (b * g.Co + co) * ncols;
          double acc = 0.0;
          for (int64_t i = 0; i < ncols; ++i) acc += row[i];
          gb[co] += acc;
        }
      n.parents[2]->accumulate(gb);
    }
  });
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& bias,
                     int64_t stride_h, int64_t stride_w, int64_t pad_h, int64_t pad_w) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  GSR_CHECK(xs.size() == 4 && ws.size() == 4, "conv_transpose2d expects 4-D tensors");
  GSR_CHECK(ws[0] == xs[1], "conv_transpose2d channel mismatch");
  const int64_t B = xs[0], Cx = xs[1], IH = xs[2], IW = xs[3];
  const int64_t Cy = ws[1], KH = ws[2], KW = ws[3];
  const int64_t OH = (IH - 1) * stride_h - 2 * pad_h + KH;
  const int64_t OW = (IW - 1) * stride_w - 2 * pad_w + KW;
  GSR_CHECK(OH > 0 && OW > 0, "conv_transpose2d output would be empty");

  // The transposed conv is the input-gradient of a conv mapping y -> x with
  // weight viewed as (Cx, Cy, KH, KW).
  ConvGeom g;
  g.B = B;
  g.Ci = Cy;
  g.H = OH;
  g.W = OW;
  g.Co = Cx;
  g.KH = KH;
  g.KW = KW;
  g.OH = IH;
  g.OW = IW;
  g.sh = stride_h;
  g.sw = stride_w;
  g.ph = pad_h;
  g.pw = pad_w;
  g.dh = 1;
  g.dw = 1;

  Tensor value({B, Cy, OH, OW});
  conv_input_grad_core(x.val(), w.val(), value, g);
  if (bias.defined()) {
    GSR_CHECK(bias.size() == Cy, "conv_transpose2d bias size");
    double* vp = value.data();
    const int64_t plane = OH * OW;
    for (int64_t b = 0; b < B; ++b)
      for (int64_t c = 0; c < Cy; ++c) {
        const double bv = bias.val()[c];
        double* row = vp + (b * Cy + c) * plane;
        for (int64_t i = 0; i < plane; ++i) row[i] += bv;
      }
  }

  std::vector<Var> parents = {x, w};
  if (bias.defined()) parents.push_back(bias);
  return make_op(std::move(value), parents, [x, w, bias, g, B, Cy, OH, OW](Node& n) {
    const Tensor& gy = n.grad;  // (B, Cy, OH, OW), plays the conv "input" role
    if (x.requires_grad()) {
      Tensor gx(x.shape());
      conv_forward_core(gy, w.val(), nullptr, gx, g);
      n.parents[0]->accumulate(gx);
    }
    if (w.requires_grad()) {
      Tensor gw(w.shape());
      conv_weight_grad_core(gy, x.val(), gw, g);
      n.parents[1]->accumulate(gw);
    }
    if (bias.defined() && bias.requires_grad()) {
      Tensor gb(bias.shape());
      const int64_t plane = OH * OW;
      for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < Cy; ++c) {
          const double* row = gy.data() + (b * Cy + c) * plane;
          double acc = 0.0;
          for (int64_t i = 0; i < plane; ++i) acc += row[i];
          gb[c] += acc;
        }
      n.parents[2]->accumulate(gb);
    }
  });
}

Var depthwise_conv1d_causal(const Var& x, const Var& w, const Var& bias) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  GSR_CHECK(xs.size() == 3 && ws.size() == 2, "depthwise_conv1d expects (N,D,L), (D,K)");
  const int64_t N = xs[0], D = xs[1], L = xs[2], K = ws[1];
  GSR_CHECK(ws[0] == D, "depthwise_conv1d channel mismatch");
  Tensor value(xs);
  {
    const double* px = x.val().data();
    const double* pw = w.val().data();
    double* po = value.data();
    for (int64_t nd = 0; nd < N * D; ++nd) {
      const int64_t d = nd % D;
      const double* xr = px + nd * L;
      const double* wr = pw + d * K;
      double* yr = po + nd * L;
      const double bv = bias.defined() ? bias.val()[d] : 0.0;
      for (int64_t l = 0; l < L; ++l) {
        double acc = bv;
        const int64_t k0 = std::max<int64_t>(0, K - 1 - l);
        for (int64_t k = k0; k < K; ++k) acc += wr[k] * xr[l - (K - 1) + k];
        yr[l] = acc;
      }
    }
  }
  std::vector<Var> parents = {x, w};
  if (bias.defined()) parents.push_back(bias);
  return make_op(std::move(value), parents, [x, w, bias, N, D, L, K](Node& n) {
    const double* g = n.grad.data();
    if (x.requires_grad()) {
      Tensor gx(x.shape());
      double* d_ = gx.data();
      const double* pw = w.val().data();
      for (int64_t nd = 0; nd < N * D; ++nd) {
        const int64_t d = nd % D;
        const double* wr = pw + d * K;
        const double* gr = g + nd * L;
        double* xr = d_ + nd * L;
        for (int64_t l = 0; l < L; ++l) {
          const int64_t k0 = std::max<int64_t>(0, K - 1 - l);
          for (int64_t k = k0; k < K; ++k) xr[l - (K - 1) + k] += wr[k] * gr[l];
        }
      }
      n.parents[0]->accumulate(gx);
    }
    if (w.requires_grad()) {
      Tensor gw(w.shape());
      double* d_ = gw.data();
      const double* px = x.val().data();
      for (int64_t nd = 0; nd < N * D; ++nd) {
        const int64_t d = nd % D;
        const double* xr = px + nd * L;
        const double* gr = g + nd * L;
        double* wr = d_ + d * K;
        for (int64_t l = 0; l < L; ++l) {
          const int64_t k0 = std::max<int64_t>(0, K - 1 - l);
          for (int64_t k = k0; k < K; ++k) wr[k] += xr[l - (K - 1) + k] * gr[l];
        }
      }
      n.parents[1]->accumulate(gw);
    }
    if (bias.defined() && bias.requires_grad()) {
      Tensor gb(bias.shape());
      for (int64_t nd = 0; nd < N * D; ++nd) {
        const double* gr = g + nd * L;
        double acc = 0.0;
        for (int64_t l = 0; l < L; ++l) acc += gr[l];
        gb[nd % D] += acc;
      }
      n.parents[2]->accumulate(gb);
    }
  });
}

}  // namespace gsr
