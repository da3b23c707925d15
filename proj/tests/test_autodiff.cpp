#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/nn.h"
#include "core/ops.h"
#include "core/random.h"
#include "fd_check.h"

using namespace gsr;
using gsr::test::fd_max_rel_error;

namespace {

Var leaf(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  return Var(rng.uniform_tensor(std::move(shape), lo, hi), true);
}

}  // namespace

TEST_CASE("broadcast add/mul values") {
  Var a(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  Var b(Tensor({3}, {10, 20, 30}));
  Var c = add(a, b);
  CHECK(c.val()[0] == 11);
  CHECK(c.val()[5] == 36);
  Var d = mul(a, Var(Tensor::scalar(2.0)));
  CHECK(d.val()[3] == 8);
}

TEST_CASE("binary op gradients incl. broadcasting") {
  Rng rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<Var> ins = {leaf(rng, {2, 3, 4}), leaf(rng, {3, 1}, 0.5, 1.5)};
    auto fn = [](std::vector<Var>& v) { return sum(mul(v[0], v[1])); };
    CHECK(fd_max_rel_error(fn, ins) < 1e-6);

    auto fn2 = [](std::vector<Var>& v) { return sum(divide(v[0], v[1])); };
    CHECK(fd_max_rel_error(fn2, ins) < 1e-6);

    auto fn3 = [](std::vector<Var>& v) { return mean(sub(v[0], v[1])); };
    CHECK(fd_max_rel_error(fn3, ins) < 1e-6);
  }
}

TEST_CASE("atan2 and complex_abs gradients") {
  Rng rng(11);
  std::vector<Var> ins = {leaf(rng, {5}, 0.2, 1.0), leaf(rng, {5}, 0.2, 1.0)};
  auto fn = [](std::vector<Var>& v) { return sum(atan2v(v[0], v[1])); };
  CHECK(fd_max_rel_error(fn, ins) < 1e-6);
  auto fn2 = [](std::vector<Var>& v) { return sum(complex_abs(v[0], v[1])); };
  CHECK(fd_max_rel_error(fn2, ins) < 1e-6);
}

TEST_CASE("unary op gradients") {
  Rng rng(13);
  std::vector<Var> pos = {leaf(rng, {6}, 0.3, 2.0)};
  std::vector<Var> any = {leaf(rng, {6}, -2.0, 2.0)};

  auto mk = [](Var (*op)(const Var&)) {
    return [op](std::vector<Var>& v) { return sum(op(v[0])); };
  };
  CHECK(fd_max_rel_error(mk(&exp_v), any) < 1e-6);
  CHECK(fd_max_rel_error(mk(&log_v), pos) < 1e-6);
  CHECK(fd_max_rel_error(mk(&sqrt_v), pos) < 1e-6);
  CHECK(fd_max_rel_error(mk(&sin_v), any) < 1e-6);
  CHECK(fd_max_rel_error(mk(&cos_v), any) < 1e-6);
  CHECK(fd_max_rel_error(mk(&tanh_v), any) < 1e-6);
  CHECK(fd_max_rel_error(mk(&sigmoid), any) < 1e-6);
  CHECK(fd_max_rel_error(mk(&gelu), any) < 1e-6);
  CHECK(fd_max_rel_error(mk(&square), any) < 1e-6);

  auto fn_pow = [](std::vector<Var>& v) { return sum(pow_scalar(v[0], 0.3)); };
  CHECK(fd_max_rel_error(fn_pow, pos) < 1e-6);
  auto fn_lrelu = [](std::vector<Var>& v) { return sum(leaky_relu(v[0], 0.1)); };
  CHECK(fd_max_rel_error(fn_lrelu, any) < 1e-5);
}

TEST_CASE("learnable softplus forward and gradients") {
  // beta = 1, x = 0 -> ln 2
  Var x0(Tensor({1, 1}, {0.0}));
  Var b1(Tensor({1}, {1.0}));
  CHECK(learnable_softplus(x0, b1).val()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Rng rng(17);
  std::vector<Var> ins = {leaf(rng, {3, 4}, -2.0, 2.0), leaf(rng, {4}, 0.5, 3.0)};
  auto fn = [](std::vector<Var>& v) { return sum(learnable_softplus(v[0], v[1])); };
  CHECK(fd_max_rel_error(fn, ins) < 1e-6);

  // large beta*x stays stable
  Var xb(Tensor({1, 2}, {50.0, -50.0}));
  Var bb(Tensor({2}, {30.0, 30.0}));
  Tensor y = learnable_softplus(xb, bb).val();
  CHECK(y[0] == doctest::Approx(50.0).epsilon(1e-10));
  CHECK(y[1] == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("matmul gradients incl. folded batch dims") {
  Rng rng(19);
  std::vector<Var> ins = {leaf(rng, {2, 3, 4}), leaf(rng, {4, 5})};
  auto fn = [](std::vector<Var>& v) { return sum(matmul(v[0], v[1])); };
  CHECK(fd_max_rel_error(fn, ins) < 1e-6);
  // weighted sum so the gradient is non-uniform
  Rng rng2(23);
  Tensor wgt = rng2.uniform_tensor({2, 3, 5}, -1, 1);
  auto fn2 = [&wgt](std::vector<Var>& v) {
    return sum(mul(matmul(v[0], v[1]), constant(wgt)));
  };
  CHECK(fd_max_rel_error(fn2, ins) < 1e-6);
}

TEST_CASE("shape op gradients") {
  Rng rng(29);
  Tensor wgt = rng.uniform_tensor({24}, -1, 1);
  auto weigh = [&wgt](Var v) { return sum(mul(reshape(v, {-1}), constant(wgt))); };

  std::vector<Var> ins = {leaf(rng, {2, 3, 4})};
  auto fn_perm = [&](std::vector<Var>& v) { return weigh(permute(v[0], {2, 0, 1})); };
  CHECK(fd_max_rel_error(fn_perm, ins) < 1e-6);
  auto fn_flip = [&](std::vector<Var>& v) { return weigh(flip(v[0], 1)); };
  CHECK(fd_max_rel_error(fn_flip, ins) < 1e-6);

  Tensor w2 = rng.uniform_tensor({2 * 2 * 4}, -1, 1);
  auto fn_slice = [&](std::vector<Var>& v) {
    return sum(mul(reshape(slice(v[0], 1, 1, 2), {-1}), constant(w2)));
  };
  CHECK(fd_max_rel_error(fn_slice, ins) < 1e-6);

  std::vector<Var> two = {leaf(rng, {2, 3}), leaf(rng, {2, 2})};
  Tensor w3 = rng.uniform_tensor({2 * 5}, -1, 1);
  auto fn_cat = [&](std::vector<Var>& v) {
    return sum(mul(reshape(concat({v[0], v[1]}, 1), {-1}), constant(w3)));
  };
  CHECK(fd_max_rel_error(fn_cat, two) < 1e-6);

  std::vector<Var> sig = {leaf(rng, {2, 10})};
  Tensor w4 = rng.uniform_tensor({2 * 16}, -1, 1);
  auto fn_pad = [&](std::vector<Var>& v) {
    return sum(mul(reshape(pad_reflect_last(v[0], 3, 3), {-1}), constant(w4)));
  };
  CHECK(fd_max_rel_error(fn_pad, sig) < 1e-6);

  Tensor w5 = rng.uniform_tensor({2 * 3 * 4}, -1, 1);
  auto fn_frame = [&](std::vector<Var>& v) {
    return sum(mul(reshape(frame_last(v[0], 4, 3), {-1}), constant(w5)));
  };
  CHECK(fd_max_rel_error(fn_frame, sig) < 1e-6);

  std::vector<Var> frames = {leaf(rng, {2, 3, 4})};
  Tensor w6 = rng.uniform_tensor({2 * 10}, -1, 1);
  auto fn_ola = [&](std::vector<Var>& v) {
    return sum(mul(reshape(overlap_add_last(v[0], 3, 10), {-1}), constant(w6)));
  };
  CHECK(fd_max_rel_error(fn_ola, frames) < 1e-6);
}

TEST_CASE("pad reflect matches manual indexing") {
  Var x(Tensor({4}, {1, 2, 3, 4}));
  Tensor y = pad_reflect_last(x, 2, 2).val();
  // reflect without edge repeat: [3,2,1,2,3,4,3,2]
  const double expect[8] = {3, 2, 1, 2, 3, 4, 3, 2};
  for (int i = 0; i < 8; ++i) CHECK(y[i] == expect[i]);
}

TEST_CASE("conv2d matches brute force and gradients pass") {
  Rng rng(31);
  // brute-force oracle
  auto oracle = [](const Tensor& x, const Tensor& w, const Tensor& b, Conv2dSpec sp) {
    const int64_t B = x.shape()[0], Ci = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    const int64_t Co = w.shape()[0], KH = w.shape()[2], KW = w.shape()[3];
    const int64_t OH = (H + 2 * sp.pad_h - sp.dil_h * (KH - 1) - 1) / sp.stride_h + 1;
    const int64_t OW = (W + 2 * sp.pad_w - sp.dil_w * (KW - 1) - 1) / sp.stride_w + 1;
    Tensor y({B, Co, OH, OW});
    for (int64_t b_ = 0; b_ < B; ++b_)
      for (int64_t co = 0; co < Co; ++co)
        for (int64_t oh = 0; oh < OH; ++oh)
          for (int64_t ow = 0; ow < OW; ++ow) {
            double acc = b.defined() ? b[co] : 0.0;
            for (int64_t ci = 0; ci < Ci; ++ci)
              for (int64_t kh = 0; kh < KH; ++kh)
                for (int64_t kw = 0; kw < KW; ++kw) {
                  int64_t ih = oh * sp.stride_h - sp.pad_h + kh * sp.dil_h;
                  int64_t iw = ow * sp.stride_w - sp.pad_w + kw * sp.dil_w;
                  if (ih >= 0 && ih < H && iw >= 0 && iw < W)
                    acc += w[((co * Ci + ci) * KH + kh) * KW + kw] *
                           x[((b_ * Ci + ci) * H + ih) * W + iw];
                }
            y[((b_ * Co + co) * OH + oh) * OW + ow] = acc;
          }
    return y;
  };

  for (Conv2dSpec sp : {Conv2dSpec{1, 1, 0, 0, 1, 1}, Conv2dSpec{1, 2, 1, 1, 1, 1},
                        Conv2dSpec{2, 2, 1, 2, 1, 1}, Conv2dSpec{1, 1, 2, 1, 2, 1}}) {
    std::vector<Var> ins = {leaf(rng, {2, 3, 5, 6}), leaf(rng, {4, 3, 3, 3}), leaf(rng, {4})};
    Tensor want = oracle(ins[0].val(), ins[1].val(), ins[2].val(), sp);
    Tensor got = conv2d(ins[0], ins[1], ins[2], sp).val();
    REQUIRE(got.same_shape(want));
    for (int64_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

    Rng rw(41);
    Tensor wgt = rw.uniform_tensor({got.size()}, -1, 1);
    auto fn = [&](std::vector<Var>& v) {
      return sum(mul(reshape(conv2d(v[0], v[1], v[2], sp), {-1}), constant(wgt)));
    };
    CHECK(fd_max_rel_error(fn, ins) < 1e-6);
  }
}

TEST_CASE("conv_transpose2d shape and gradients") {
  Rng rng(37);
  std::vector<Var> ins = {leaf(rng, {2, 3, 4, 5}), leaf(rng, {3, 2, 3, 4}), leaf(rng, {2})};
  Var y = conv_transpose2d(ins[0], ins[1], ins[2], 1, 2, 1, 1);
  CHECK(y.shape() == Shape{2, 2, 4, 10});  // (4-1)*1-2+3=4, (5-1)*2-2+4=10

  Rng rw(43);
  Tensor wgt = rw.uniform_tensor({y.size()}, -1, 1);
  auto fn = [&](std::vector<Var>& v) {
    return sum(mul(reshape(conv_transpose2d(v[0], v[1], v[2], 1, 2, 1, 1), {-1}), constant(wgt)));
  };
  CHECK(fd_max_rel_error(fn, ins) < 1e-6);
}

TEST_CASE("conv_transpose2d inverts stride arithmetic of conv2d") {
  // stride (1,2), kernel (3,4), pad (1,1): 25 -> 50 -> 100 round trip of shapes
  Rng rng(47);
  Var x = leaf(rng, {1, 2, 3, 25});
  Var w = leaf(rng, {2, 2, 3, 4});
  Var up = conv_transpose2d(x, w, Var(), 1, 2, 1, 1);
  CHECK(up.shape() == Shape{1, 2, 3, 50});
  Var w2(rng.uniform_tensor({2, 2, 3, 4}, -1, 1), true);
  Conv2dSpec down{1, 2, 1, 1, 1, 1};
  Var back = conv2d(up, w2, Var(), down);
  CHECK(back.shape() == Shape{1, 2, 3, 25});
}

TEST_CASE("depthwise causal conv1d: causality and gradients") {
  Rng rng(53);
  std::vector<Var> ins = {leaf(rng, {2, 3, 7}), leaf(rng, {3, 4}), leaf(rng, {3})};
  Var y = depthwise_conv1d_causal(ins[0], ins[1], ins[2]);
  CHECK(y.shape() == ins[0].shape());

  // causality: output at l must not depend on inputs after l
  Tensor x2 = ins[0].val();
  x2[6] += 10.0;  // last sample of first fiber
  Var xa(x2);
  Tensor y2 = depthwise_conv1d_causal(xa, Var(ins[1].val()), Var(ins[2].val())).val();
  for (int64_t l = 0; l < 6; ++l) CHECK(y2[l] == doctest::Approx(y.val()[l]).epsilon(1e-12));
  CHECK(y2[6] != doctest::Approx(y.val()[6]));

  Rng rw(59);
  Tensor wgt = rw.uniform_tensor({y.size()}, -1, 1);
  auto fn = [&](std::vector<Var>& v) {
    return sum(mul(reshape(depthwise_conv1d_causal(v[0], v[1], v[2]), {-1}), constant(wgt)));
  };
  CHECK(fd_max_rel_error(fn, ins) < 1e-6);
}

TEST_CASE("instance_norm2d normalizes and gradients pass") {
  Rng rng(61);
  std::vector<Var> ins = {leaf(rng, {2, 3, 4, 5}), leaf(rng, {3}, 0.5, 1.5), leaf(rng, {3})};
  Var y = instance_norm2d(ins[0], ins[1], ins[2]);
  // per (b,c) mean of (y - beta)/gamma should be ~0
  const Tensor& yv = y.val();
  double m = 0.0;
  for (int64_t i = 0; i < 20; ++i) m += (yv[i] - ins[2].val()[0]) / ins[1].val()[0];
  CHECK(std::fabs(m / 20.0) < 1e-10);

  Rng rw(67);
  Tensor wgt = rw.uniform_tensor({y.size()}, -1, 1);
  auto fn = [&](std::vector<Var>& v) {
    return sum(mul(reshape(instance_norm2d(v[0], v[1], v[2]), {-1}), constant(wgt)));
  };
  CHECK(fd_max_rel_error(fn, ins, 1e-6) < 1e-5);
}

TEST_CASE("layer_norm_channel gradients") {
  Rng rng(71);
  std::vector<Var> ins = {leaf(rng, {2, 4, 3, 2}), leaf(rng, {4}, 0.5, 1.5), leaf(rng, {4})};
  Var y = layer_norm_channel(ins[0], ins[1], ins[2]);
  CHECK(y.shape() == ins[0].shape());
  Rng rw(73);
  Tensor wgt = rw.uniform_tensor({y.size()}, -1, 1);
  auto fn = [&](std::vector<Var>& v) {
    return sum(mul(reshape(layer_norm_channel(v[0], v[1], v[2]), {-1}), constant(wgt)));
  };
  CHECK(fd_max_rel_error(fn, ins, 1e-6) < 1e-5);
}

TEST_CASE("prelu gradients") {
  Rng rng(79);
  std::vector<Var> ins = {leaf(rng, {2, 3, 4}), leaf(rng, {3}, 0.1, 0.4)};
  Rng rw(83);
  Tensor wgt = rw.uniform_tensor({24}, -1, 1);
  auto fn = [&](std::vector<Var>& v) {
    return sum(mul(reshape(prelu(v[0], v[1]), {-1}), constant(wgt)));
  };
  CHECK(fd_max_rel_error(fn, ins) < 1e-5);
}

TEST_CASE("selective_scan matches brute-force recurrence") {
  Rng rng(89);
  const int64_t N = 2, L = 7, D = 3, S = 4;
  Tensor u = rng.uniform_tensor({N, L, D}, -1, 1);
  Tensor delta = rng.uniform_tensor({N, L, D}, 0.01, 0.2);
  Tensor A = rng.uniform_tensor({D, S}, -1.5, -0.1);
  Tensor B = rng.uniform_tensor({N, L, S}, -1, 1);
  Tensor C = rng.uniform_tensor({N, L, S}, -1, 1);
  Tensor Dt = rng.uniform_tensor({D}, -1, 1);

  Tensor want({N, L, D});
  for (int64_t n = 0; n < N; ++n) {
    std::vector<double> h(D * S, 0.0);
    for (int64_t t = 0; t < L; ++t)
      for (int64_t d = 0; d < D; ++d) {
        double acc = 0.0;
        for (int64_t s = 0; s < S; ++s) {
          double da = std::exp(delta[(n * L + t) * D + d] * A[d * S + s]);
          h[d * S + s] = da * h[d * S + s] +
                         delta[(n * L + t) * D + d] * u[(n * L + t) * D + d] * B[(n * L + t) * S + s];
          acc += h[d * S + s] * C[(n * L + t) * S + s];
        }
        want[(n * L + t) * D + d] = acc + Dt[d] * u[(n * L + t) * D + d];
      }
  }

  Var got = selective_scan(Var(u), Var(delta), Var(A), Var(B), Var(C), Var(Dt));
  for (int64_t i = 0; i < want.size(); ++i)
    CHECK(got.val()[i] == doctest::Approx(want[i]).epsilon(1e-10));
}

TEST_CASE("selective_scan prefix-sum limit") {
  // scalar state, decay ~1 (A ~ 0), delta*B = 1, C = 1, D = 0 -> y = prefix sum
  const int64_t L = 6;
  Tensor u({1, L, 1}, {1, 2, 3, 4, 5, 6});
  Tensor delta({1, L, 1}, 1.0);
  Tensor A({1, 1}, {-1e-14});
  Tensor B({1, L, 1}, 1.0);
  Tensor C({1, L, 1}, 1.0);
  Tensor D({1});
  Tensor y = selective_scan(Var(u), Var(delta), Var(A), Var(B), Var(C), Var(D)).val();
  double run = 0.0;
  for (int64_t t = 0; t < L; ++t) {
    run += u[t];
    CHECK(y[t] == doctest::Approx(run).epsilon(1e-9));
  }
}

TEST_CASE("selective_scan gradients vs finite differences") {
  Rng rng(97);
  const int64_t N = 1, L = 5, D = 2, S = 3;
  std::vector<Var> ins = {
      leaf(rng, {N, L, D}),                                 // u
      Var(rng.uniform_tensor({N, L, D}, 0.05, 0.3), true),  // delta > 0
      Var(rng.uniform_tensor({D, S}, -1.2, -0.2), true),    // A
      leaf(rng, {N, L, S}),                                 // B
      leaf(rng, {N, L, S}),                                 // C
      leaf(rng, {D}),                                       // D skip
  };
  Rng rw(101);
  Tensor wgt = rw.uniform_tensor({N * L * D}, -1, 1);
  auto fn = [&](std::vector<Var>& v) {
    return sum(mul(reshape(selective_scan(v[0], v[1], v[2], v[3], v[4], v[5]), {-1}),
                   constant(wgt)));
  };
  CHECK(fd_max_rel_error(fn, ins, 1e-6) < 1e-5);
}

TEST_CASE("selective_scan rejects nonpositive delta") {
  Tensor u({1, 2, 1}, 1.0);
  Tensor delta({1, 2, 1}, 0.0);
  CHECK_THROWS(selective_scan(Var(u), Var(delta), Var(Tensor({1, 1}, -1.0)),
                              Var(Tensor({1, 2, 1}, 1.0)), Var(Tensor({1, 2, 1}, 1.0)),
                              Var(Tensor({1}))));
}

TEST_CASE("weight-normalized conv keeps init weight and backprops") {
  Rng rng(103);
  ParamStore ps;
  WnConv2d wn(ps, "d", 2, 3, 3, 3, Conv2dSpec{1, 1, 1, 1, 1, 1}, rng);
  Var x = leaf(rng, {1, 2, 4, 4});
  Var y = wn.forward(x);
  CHECK(y.shape() == Shape{1, 3, 4, 4});
  // effective weight at init equals v
  Var y2 = conv2d(x, Var(wn.v.val()), Var(wn.b.val()), wn.spec);
  for (int64_t i = 0; i < y.size(); ++i)
    CHECK(y.val()[i] == doctest::Approx(y2.val()[i]).epsilon(1e-10));

  backward(sum(y));
  CHECK(wn.v.grad().all_finite());
  CHECK(wn.g.grad().all_finite());
  double gnorm = 0.0;
  for (int64_t i = 0; i < wn.g.grad().size(); ++i) gnorm += std::fabs(wn.g.grad()[i]);
  CHECK(gnorm > 0.0);
}

TEST_CASE("no-grad mode records nothing") {
  Rng rng(107);
  Var x = leaf(rng, {4});
  {
    NoGradGuard ng;
    Var y = mul(x, x);
    CHECK_FALSE(y.requires_grad());
  }
  Var y = mul(x, x);
  CHECK(y.requires_grad());
}

TEST_CASE("detach blocks gradient flow") {
  Rng rng(109);
  Var x = leaf(rng, {4});
  Var y = sum(mul(detach(x), x));
  backward(y);
  // d/dx (c * x) = c = detached value
  for (int64_t i = 0; i < 4; ++i)
    CHECK(x.grad()[i] == doctest::Approx(x.val()[i]).epsilon(1e-12));
}

TEST_CASE("grad accumulates across shared subexpressions") {
  Var x(Tensor({1}, {3.0}), true);
  Var y = add(mul(x, x), mul(x, x));  // 2x^2, dy/dx = 4x = 12
  backward(sum(y));
  CHECK(x.grad()[0] == doctest::Approx(12.0).epsilon(1e-12));
}
