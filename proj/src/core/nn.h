#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/ops.h"
#include "core/random.h"

namespace gsr {

// Flat registry of named trainable parameters. Modules register at
// construction; optimizer and checkpoints iterate entries in creation order.
class ParamStore {
 public:
  Var add(const std::string& name, Tensor init);
  Var get(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  int64_t total_size() const;
  void zero_grads();

 private:
  std::vector<std::pair<std::string, Var>> entries_;
  std::unordered_map<std::string, size_t> index_;
};

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
Tensor init_fan_in_uniform(Rng& rng, Shape shape, int64_t fan_in);

struct Linear {
  Var w;  // (in, out)
  Var b;  // (out), undefined when bias-free
  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, int64_t in, int64_t out, bool bias, Rng& rng);
  Var forward(const Var& x) const;  // (..., in) -> (..., out)
};

// Fourier analysis layer: [cos(x W_p) || sin(x W_p) || gelu(B + x W_pbar)].
// The periodic branch shares W_p between sine and cosine and carries no bias.
struct Fan {
  Var w_p;     // (in, d_p)
  Var w_pbar;  // (in, d_pbar)
  Var b_pbar;  // (d_pbar)
  Fan() = default;
  Fan(ParamStore& ps, const std::string& name, int64_t in, int64_t d_p, int64_t d_pbar, Rng& rng);
  int64_t out_dim() const { return 2 * w_p.dim(1) + w_pbar.dim(1); }
  Var forward(const Var& x) const;
  static int64_t param_count(int64_t in, int64_t d_p, int64_t d_pbar) {
    return in * d_p + in * d_pbar + d_pbar;
  }
};

struct Conv2dLayer {
  Var w, b;
  Conv2dSpec spec;
  Conv2dLayer() = default;
  Conv2dLayer(ParamStore& ps, const std::string& name, int64_t ci, int64_t co,
              int64_t kh, int64_t kw, Conv2dSpec spec, bool bias, Rng& rng);
  Var forward(const Var& x) const { return conv2d(x, w, b, spec); }
};

struct ConvT2dLayer {
  Var w, b;
  int64_t stride_h = 1, stride_w = 1, pad_h = 0, pad_w = 0;
  ConvT2dLayer() = default;
  ConvT2dLayer(ParamStore& ps, const std::string& name, int64_t ci, int64_t co,
               int64_t kh, int64_t kw, int64_t sh, int64_t sw, int64_t ph, int64_t pw,
               bool bias, Rng& rng);
  Var forward(const Var& x) const {
    return conv_transpose2d(x, w, b, stride_h, stride_w, pad_h, pad_w);
  }
};

// Weight-normalized conv: w = g * v / ||v||, norm per output channel.
struct WnConv2d {
  Var v, g, b;
  Conv2dSpec spec;
  WnConv2d() = default;
  WnConv2d(ParamStore& ps, const std::string& name, int64_t ci, int64_t co,
           int64_t kh, int64_t kw, Conv2dSpec spec, Rng& rng);
  Var forward(const Var& x) const;
};

struct InstanceNorm {
  Var gamma, beta;
  InstanceNorm() = default;
  InstanceNorm(ParamStore& ps, const std::string& name, int64_t c);
  Var forward(const Var& x) const { return instance_norm2d(x, gamma, beta); }
};

struct ChannelLayerNorm {
  Var gamma, beta;
  ChannelLayerNorm() = default;
  ChannelLayerNorm(ParamStore& ps, const std::string& name, int64_t c);
  Var forward(const Var& x) const { return layer_norm_channel(x, gamma, beta); }
};

struct PRelu {
  Var alpha;
  PRelu() = default;
  PRelu(ParamStore& ps, const std::string& name, int64_t c, double init = 0.25);
  Var forward(const Var& x) const { return prelu(x, alpha); }
};

}  // namespace gsr
