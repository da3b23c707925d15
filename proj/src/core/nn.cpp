#include "core/nn.h"

#include <cmath>

#include "core/check.h"

namespace gsr {

Var ParamStore::add(const std::string& name, Tensor init) {
  GSR_CHECK(!index_.count(name), "duplicate parameter " << name);
  Var v(std::move(init), true);
  index_[name] = entries_.size();
  entries_.emplace_back(name, v);
  return v;
}

Var ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  GSR_CHECK(it != index_.end(), "unknown parameter " << name);
  return entries_[it->second].second;
}

int64_t ParamStore::total_size() const {
  int64_t n = 0;
  for (const auto& [name, v] : entries_) n += v.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, v] : entries_) const_cast<Var&>(v).zero_grad();
}

Tensor init_fan_in_uniform(Rng& rng, Shape shape, int64_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return rng.uniform_tensor(std::move(shape), -bound, bound);
}

Linear::Linear(ParamStore& ps, const std::string& name, int64_t in, int64_t out,
               bool bias, Rng& rng) {
  w = ps.add(name + ".w", init_fan_in_uniform(rng, {in, out}, in));
  if (bias) b = ps.add(name + ".b", init_fan_in_uniform(rng, {out}, in));
}

Var Linear::forward(const Var& x) const {
  Var y = matmul(x, w);
  if (b.defined()) y = y + b;
  return y;
}

Fan::Fan(ParamStore& ps, const std::string& name, int64_t in, int64_t d_p,
         int64_t d_pbar, Rng& rng) {
  w_p = ps.add(name + ".w_p", init_fan_in_uniform(rng, {in, d_p}, in));
  w_pbar = ps.add(name + ".w_pbar", init_fan_in_uniform(rng, {in, d_pbar}, in));
  b_pbar = ps.add(name + ".b_pbar", Tensor({d_pbar}));
}

Var Fan::forward(const Var& x) const {
  Var p = matmul(x, w_p);
  Var q = matmul(x, w_pbar) + b_pbar;
  return concat({cos_v(p), sin_v(p), gelu(q)}, -1);
}

Conv2dLayer::Conv2dLayer(ParamStore& ps, const std::string& name, int64_t ci, int64_t co,
                         int64_t kh, int64_t kw, Conv2dSpec spec_, bool bias, Rng& rng)
    : spec(spec_) {
  const int64_t fan_in = ci * kh * kw;
  w = ps.add(name + ".w", init_fan_in_uniform(rng, {co, ci, kh, kw}, fan_in));
  if (bias) b = ps.add(name + ".b", init_fan_in_uniform(rng, {co}, fan_in));
}

ConvT2dLayer::ConvT2dLayer(ParamStore& ps, const std::string& name, int64_t ci, int64_t co,
                           int64_t kh, int64_t kw, int64_t sh, int64_t sw,
                           int64_t ph, int64_t pw, bool bias, Rng& rng)
    : stride_h(sh), stride_w(sw), pad_h(ph), pad_w(pw) {
  const int64_t fan_in = ci * kh * kw;
  w = ps.add(name + ".w", init_fan_in_uniform(rng, {ci, co, kh, kw}, fan_in));
  if (bias) b = ps.add(name + ".b", init_fan_in_uniform(rng, {co}, fan_in));
}

WnConv2d::WnConv2d(ParamStore& ps, const std::string& name, int64_t ci, int64_t co,
                   int64_t kh, int64_t kw, Conv2dSpec spec_, Rng& rng)
    : spec(spec_) {
  const int64_t fan_in = ci * kh * kw;
  Tensor v0 = init_fan_in_uniform(rng, {co, ci, kh, kw}, fan_in);
  // g starts at ||v|| per row so the effective weight equals v at init
  Tensor g0({co});
  const int64_t k = ci * kh * kw;
  for (int64_t r = 0; r < co; ++r) {
    double ss = 0.0;
    for (int64_t i = 0; i < k; ++i) ss += v0[r * k + i] * v0[r * k + i];
    g0[r] = std::sqrt(ss);
  }
  v = ps.add(name + ".v", std::move(v0));
  g = ps.add(name + ".g", std::move(g0));
  b = ps.add(name + ".b", Tensor({co}));
}

Var WnConv2d::forward(const Var& x) const {
  const int64_t co = v.dim(0);
  const int64_t k = v.size() / co;
  Var v2 = reshape(square(v), {co, k});
  Var norm = sqrt_v(matmul(v2, constant(Tensor({k, 1}, 1.0))));  // (co, 1)
  Var scale_vec = reshape(divide(reshape(g, {co, 1}), norm), {co, 1, 1, 1});
  Var w_eff = mul(v, scale_vec);
  return conv2d(x, w_eff, b, spec);
}

InstanceNorm::InstanceNorm(ParamStore& ps, const std::string& name, int64_t c) {
  gamma = ps.add(name + ".gamma", Tensor({c}, 1.0));
  beta = ps.add(name + ".beta", Tensor({c}));
}

ChannelLayerNorm::ChannelLayerNorm(ParamStore& ps, const std::string& name, int64_t c) {
  gamma = ps.add(name + ".gamma", Tensor({c}, 1.0));
  beta = ps.add(name + ".beta", Tensor({c}));
}

PRelu::PRelu(ParamStore& ps, const std::string& name, int64_t c, double init) {
  alpha = ps.add(name + ".alpha", Tensor({c}, init));
}

}  // namespace gsr
