#pragma once

#include <vector>

#include "core/autodiff.h"

namespace gsr {

// ---------- leaves ----------
Var constant(Tensor t);  // no-grad leaf
Var detach(const Var& x);

// ---------- shape ----------
Var reshape(const Var& x, Shape shape);
Var permute(const Var& x, const std::vector<int>& axes);
Var slice(const Var& x, int axis, int64_t start, int64_t len);
Var concat(const std::vector<Var>& xs, int axis);
Var flip(const Var& x, int axis);
Var pad_reflect_last(const Var& x, int64_t left, int64_t right);
Var pad_zero_last(const Var& x, int64_t left, int64_t right);
// (..., L) -> (..., T, frame) with T = (L - frame) / hop + 1
Var frame_last(const Var& x, int64_t frame, int64_t hop);
// (..., T, frame) -> (..., out_len), scatter-add at t*hop + j
Var overlap_add_last(const Var& x, int64_t hop, int64_t out_len);

// ---------- binary elementwise (numpy broadcasting) ----------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var divide(const Var& a, const Var& b);
Var atan2v(const Var& y, const Var& x);
Var complex_abs(const Var& re, const Var& im);  // sqrt(re^2+im^2), guarded at 0

// ---------- unary elementwise ----------
Var neg(const Var& x);
Var exp_v(const Var& x);
Var log_v(const Var& x);
Var sqrt_v(const Var& x);
Var abs_v(const Var& x);
Var sin_v(const Var& x);
Var cos_v(const Var& x);
Var tanh_v(const Var& x);
Var sigmoid(const Var& x);
Var gelu(const Var& x);  // exact erf form
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var square(const Var& x);
Var pow_scalar(const Var& x, double p);  // x >= 0; subgradient 0 at x == 0 when p < 1
Var clamp_min(const Var& x, double c);
Var scale(const Var& x, double s);
Var add_scalar(const Var& x, double s);
// t - 2*pi*round(t / 2*pi); gradient 1 a.e.
Var wrap_principal(const Var& x);
// y = softplus(beta * x) / beta elementwise; beta broadcast over the last axis of x.
Var learnable_softplus(const Var& x, const Var& beta);

// ---------- reductions ----------
Var sum(const Var& x);
Var mean(const Var& x);

// ---------- matmul ----------
// a: (..., K), b: (K, N) -> (..., N). Leading axes of a are folded.
Var matmul(const Var& a, const Var& b);

// ---------- convolution ----------
struct Conv2dSpec {
  int64_t stride_h = 1, stride_w = 1;
  int64_t pad_h = 0, pad_w = 0;
  int64_t dil_h = 1, dil_w = 1;
};
// x: (B, Ci, H, W), w: (Co, Ci, KH, KW), bias: (Co) or undefined
Var conv2d(const Var& x, const Var& w, const Var& bias, const Conv2dSpec& spec);
// x: (B, Ci, H, W), w: (Ci, Co, KH, KW); out spatial = (in-1)*stride - 2*pad + K
Var conv_transpose2d(const Var& x, const Var& w, const Var& bias,
                     int64_t stride_h, int64_t stride_w, int64_t pad_h, int64_t pad_w);
// x: (N, D, L), w: (D, K), bias: (D) or undefined; causal left zero pad of K-1
Var depthwise_conv1d_causal(const Var& x, const Var& w, const Var& bias);

// ---------- normalization / activations with parameters ----------
// x: (B, C, H, W); gamma, beta: (C); statistics per (b, c) over (H, W)
Var instance_norm2d(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
// x: (B, C, ...); gamma, beta: (C); statistics over the channel axis at each position
Var layer_norm_channel(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
// alpha: (C) matching axis 1 of x, or scalar shape ()
Var prelu(const Var& x, const Var& alpha);

// ---------- selective state-space scan ----------
// u, delta: (N, L, D); A: (D, S); B, C: (N, L, S); D_skip: (D)
// h_t = exp(delta_t A) h_{t-1} + delta_t u_t B_t ; y_t = <h_t, C_t> + D u_t
Var selective_scan(const Var& u, const Var& delta, const Var& A, const Var& B,
                   const Var& C, const Var& D_skip);

// ---------- operators ----------
inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return divide(a, b); }
inline Var operator+(const Var& a, double s) { return add_scalar(a, s); }
inline Var operator-(const Var& a, double s) { return add_scalar(a, -s); }
inline Var operator*(const Var& a, double s) { return scale(a, s); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }
inline Var operator-(const Var& a) { return neg(a); }

}  // namespace gsr
