#include <algorithm>
#include <cstring>

#include "core/check.h"
#include "core/ops.h"

namespace gsr {

Var reshape(const Var& x, Shape shape) {
  // allow one -1 wildcard
  int64_t known = 1;
  int wild = -1;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      GSR_CHECK(wild < 0, "multiple -1 in reshape");
      wild = static_cast<int>(i);
    } else {
      known *= shape[i];
    }
  }
  if (wild >= 0) {
    GSR_CHECK(known > 0 && x.size() % known == 0, "bad reshape " << shape_str(shape));
    shape[static_cast<size_t>(wild)] = x.size() / known;
  }
  Tensor value = x.val().reshaped(shape);
  Shape orig = x.shape();
  return make_op(std::move(value), {x}, [x, orig](Node& n) {
    if (!x.requires_grad()) return;
    n.parents[0]->accumulate(n.grad.reshaped(orig));
  });
}

namespace {

Tensor permute_tensor(const Tensor& t, const std::vector<int>& axes) {
  const size_t r = t.shape().size();
  GSR_CHECK(axes.size() == r, "permute rank mismatch");
  Shape os(r);
  for (size_t i = 0; i < r; ++i) os[i] = t.shape()[static_cast<size_t>(axes[i])];
  Tensor out(os);
  if (r == 0) return t;
  Shape in_str = strides_of(t.shape());
  Shape src_stride(r);  // stride in source for each output axis
  for (size_t i = 0; i < r; ++i) src_stride[i] = in_str[static_cast<size_t>(axes[i])];

  const double* src = t.data();
  double* dst = out.data();
  const int64_t n = t.size();
  const int64_t inner = os.back();
  const int64_t inner_stride = src_stride.back();
  Shape idx(r, 0);
  int64_t soff = 0;
  for (int64_t o = 0; o < n; o += inner) {
    if (inner_stride == 1) {
      std::memcpy(dst + o, src + soff, static_cast<size_t>(inner) * sizeof(double));
    } else {
      int64_t s = soff;
      for (int64_t j = 0; j < inner; ++j, s += inner_stride) dst[o + j] = src[s];
    }
    for (int d = static_cast<int>(r) - 2; d >= 0; --d) {
      ++idx[static_cast<size_t>(d)];
      soff += src_stride[static_cast<size_t>(d)];
      if (idx[static_cast<size_t>(d)] < os[static_cast<size_t>(d)]) break;
      idx[static_cast<size_t>(d)] = 0;
      soff -= src_stride[static_cast<size_t>(d)] * os[static_cast<size_t>(d)];
    }
  }
  return out;
}

std::vector<int> inverse_axes(const std::vector<int>& axes) {
  std::vector<int> inv(axes.size());
  for (size_t i = 0; i < axes.size(); ++i) inv[static_cast<size_t>(axes[i])] = static_cast<int>(i);
  return inv;
}

}  // namespace

Var permute(const Var& x, const std::vector<int>& axes) {
  Tensor value = permute_tensor(x.val(), axes);
  return make_op(std::move(value), {x}, [x, axes](Node& n) {
    if (!x.requires_grad()) return;
    n.parents[0]->accumulate(permute_tensor(n.grad, inverse_axes(axes)));
  });
}

Var slice(const Var& x, int axis, int64_t start, int64_t len) {
  const Shape& s = x.shape();
  int r = static_cast<int>(s.size());
  if (axis < 0) axis += r;
  GSR_CHECK(axis >= 0 && axis < r, "slice axis out of range");
  GSR_CHECK(start >= 0 && len >= 0 && start + len <= s[static_cast<size_t>(axis)],
            "slice [" << start << "," << start + len << ") out of bounds for " << x.val().str());
  Shape os = s;
  os[static_cast<size_t>(axis)] = len;
  Shape str = strides_of(s);
  int64_t outer = 1;
  for (int i = 0; i < axis; ++i) outer *= s[static_cast<size_t>(i)];
  const int64_t block = str[static_cast<size_t>(axis)];  // elements per index step on axis
  const int64_t in_axis = s[static_cast<size_t>(axis)];

  Tensor value(os);
  const double* src = x.val().data();
  double* dst = value.data();
  for (int64_t o = 0; o < outer; ++o)
    std::memcpy(dst + o * len * block, src + (o * in_axis + start) * block,
                static_cast<size_t>(len * block) * sizeof(double));

  return make_op(std::move(value), {x},
                 [x, outer, block, in_axis, start, len](Node& n) {
                   if (!x.requires_grad()) return;
                   Tensor gx(x.shape());
                   const double* g = n.grad.data();
                   double* d = gx.data();
                   for (int64_t o = 0; o < outer; ++o)
                     std::memcpy(d + (o * in_axis + start) * block, g + o * len * block,
                                 static_cast<size_t>(len * block) * sizeof(double));
                   n.parents[0]->accumulate(gx);
                 });
}

Var concat(const std::vector<Var>& xs, int axis) {
  GSR_CHECK(!xs.empty(), "concat of nothing");
  const Shape& s0 = xs[0].shape();
  int r = static_cast<int>(s0.size());
  if (axis < 0) axis += r;
  GSR_CHECK(axis >= 0 && axis < r, "concat axis out of range");
  int64_t total_axis = 0;
  for (const Var& v : xs) {
    GSR_CHECK(static_cast<int>(v.shape().size()) == r, "concat rank mismatch");
    for (int i = 0; i < r; ++i)
      if (i != axis)
        GSR_CHECK(v.shape()[static_cast<size_t>(i)] == s0[static_cast<size_t>(i)],
                  "concat shape mismatch " << v.val().str() << " vs " << xs[0].val().str());
    total_axis += v.dim(axis);
  }
  Shape os = s0;
  os[static_cast<size_t>(axis)] = total_axis;
  int64_t outer = 1;
  for (int i = 0; i < axis; ++i) outer *= s0[static_cast<size_t>(i)];
  int64_t block = 1;
  for (int i = axis + 1; i < r; ++i) block *= s0[static_cast<size_t>(i)];

  Tensor value(os);
  double* dst = value.data();
  std::vector<int64_t> lens;
  for (const Var& v : xs) lens.push_back(v.dim(axis));
  for (int64_t o = 0; o < outer; ++o) {
    int64_t off = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
      const double* src = xs[k].val().data();
      std::memcpy(dst + (o * total_axis + off) * block, src + o * lens[k] * block,
                  static_cast<size_t>(lens[k] * block) * sizeof(double));
      off += lens[k];
    }
  }

  std::vector<Var> parents = xs;
  return make_op(std::move(value), parents,
                 [parents, outer, block, total_axis, lens](Node& n) {
                   const double* g = n.grad.data();
                   int64_t off = 0;
                   for (size_t k = 0; k < parents.size(); ++k) {
                     if (parents[k].requires_grad()) {
                       Tensor gk(parents[k].shape());
                       double* d = gk.data();
                       for (int64_t o = 0; o < outer; ++o)
                         std::memcpy(d + o * lens[k] * block,
                                     g + (o * total_axis + off) * block,
                                     static_cast<size_t>(lens[k] * block) * sizeof(double));
                       n.parents[k]->accumulate(gk);
                     }
                     off += lens[k];
                   }
                 });
}

namespace {

Tensor flip_tensor(const Tensor& t, int axis) {
  const Shape& s = t.shape();
  Shape str = strides_of(s);
  int64_t outer = 1;
  for (int i = 0; i < axis; ++i) outer *= s[static_cast<size_t>(i)];
  const int64_t n_axis = s[static_cast<size_t>(axis)];
  const int64_t block = str[static_cast<size_t>(axis)];
  Tensor out(s);
  const double* src = t.data();
  double* dst = out.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t i = 0; i < n_axis; ++i)
      std::memcpy(dst + (o * n_axis + i) * block,
                  src + (o * n_axis + (n_axis - 1 - i)) * block,
                  static_cast<size_t>(block) * sizeof(double));
  return out;
}

}  // namespace

Var flip(const Var& x, int axis) {
  int r = static_cast<int>(x.shape().size());
  if (axis < 0) axis += r;
  GSR_CHECK(axis >= 0 && axis < r, "flip axis out of range");
  Tensor value = flip_tensor(x.val(), axis);
  return make_op(std::move(value), {x}, [x, axis](Node& n) {
    if (!x.requires_grad()) return;
    n.parents[0]->accumulate(flip_tensor(n.grad, axis));
  });
}

namespace {

// reflect index into [0, L) without repeating the edge sample
int64_t reflect_index(int64_t i, int64_t L) {
  if (L == 1) return 0;
  const int64_t period = 2 * (L - 1);
  i = ((i % period) + period) % period;
  return i < L ? i : period - i;
}

}  // namespace

Var pad_reflect_last(const Var& x, int64_t left, int64_t right) {
  const Shape& s = x.shape();
  GSR_CHECK(!s.empty(), "pad on scalar");
  const int64_t L = s.back();
  GSR_CHECK(L >= 2 || (left == 0 && right == 0), "reflect pad needs length >= 2");
  Shape os = s;
  os.back() = L + left + right;
  const int64_t rows = x.size() / L;
  Tensor value(os);
  const double* src = x.val().data();
  double* dst = value.data();
  const int64_t OL = os.back();
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t i = 0; i < OL; ++i)
      dst[r * OL + i] = src[r * L + reflect_index(i - left, L)];

  return make_op(std::move(value), {x}, [x, rows, L, left, OL](Node& n) {
    if (!x.requires_grad()) return;
    Tensor gx(x.shape());
    const double* g = n.grad.data();
    double* d = gx.data();
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t i = 0; i < OL; ++i)
        d[r * L + reflect_index(i - left, L)] += g[r * OL + i];
    n.parents[0]->accumulate(gx);
  });
}

Var pad_zero_last(const Var& x, int64_t left, int64_t right) {
  const Shape& s = x.shape();
  GSR_CHECK(!s.empty(), "pad on scalar");
  const int64_t L = s.back();
  Shape os = s;
  os.back() = L + left + right;
  const int64_t rows = x.size() / L;
  Tensor value(os);
  const double* src = x.val().data();
  double* dst = value.data();
  const int64_t OL = os.back();
  for (int64_t r = 0; r < rows; ++r)
    std::memcpy(dst + r * OL + left, src + r * L, static_cast<size_t>(L) * sizeof(double));

  return make_op(std::move(value), {x}, [x, rows, L, left, OL](Node& n) {
    if (!x.requires_grad()) return;
    Tensor gx(x.shape());
    const double* g = n.grad.data();
    double* d = gx.data();
    for (int64_t r = 0; r < rows; ++r)
      std::memcpy(d + r * L, g + r * OL + left, static_cast<size_t>(L) * sizeof(double));
    n.parents[0]->accumulate(gx);
  });
}

Var frame_last(const Var& x, int64_t frame, int64_t hop) {
  const Shape& s = x.shape();
  GSR_CHECK(!s.empty(), "frame on scalar");
  const int64_t L = s.back();
  GSR_CHECK(frame > 0 && hop > 0 && L >= frame,
            "cannot frame length " << L << " with window " << frame);
  const int64_t T = (L - frame) / hop + 1;
  Shape os = s;
  os.back() = T;
  os.push_back(frame);
  const int64_t rows = x.size() / L;
  Tensor value(os);
  const double* src = x.val().data();
  double* dst = value.data();
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t t = 0; t < T; ++t)
      std::memcpy(dst + (r * T + t) * frame, src + r * L + t * hop,
                  static_cast<size_t>(frame) * sizeof(double));

  return make_op(std::move(value), {x}, [x, rows, L, T, frame, hop](Node& n) {
    if (!x.requires_grad()) return;
    Tensor gx(x.shape());
    const double* g = n.grad.data();
    double* d = gx.data();
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t t = 0; t < T; ++t) {
        const double* gs = g + (r * T + t) * frame;
        double* ds = d + r * L + t * hop;
        for (int64_t j = 0; j < frame; ++j) ds[j] += gs[j];
      }
    n.parents[0]->accumulate(gx);
  });
}

Var overlap_add_last(const Var& x, int64_t hop, int64_t out_len) {
  const Shape& s = x.shape();
  GSR_CHECK(s.size() >= 2, "overlap_add needs (..., T, frame)");
  const int64_t frame = s.back();
  const int64_t T = s[s.size() - 2];
  Shape os(s.begin(), s.end() - 2);
  os.push_back(out_len);
  const int64_t rows = x.size() / (T * frame);
  Tensor value(os);
  const double* src = x.val().data();
  double* dst = value.data();
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t t = 0; t < T; ++t) {
      const int64_t base = t * hop;
      const double* ss = src + (r * T + t) * frame;
      double* ds = dst + r * out_len;
      const int64_t jmax = std::min(frame, out_len - base);
      for (int64_t j = 0; j < jmax; ++j) ds[base + j] += ss[j];
    }

  return make_op(std::move(value), {x}, [x, rows, T, frame, hop, out_len](Node& n) {
    if (!x.requires_grad()) return;
    Tensor gx(x.shape());
    const double* g = n.grad.data();
    double* d = gx.data();
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t t = 0; t < T; ++t) {
        const int64_t base = t * hop;
        double* ds = d + (r * T + t) * frame;
        const double* gs = g + r * out_len;
        const int64_t jmax = std::min(frame, out_len - base);
        for (int64_t j = 0; j < jmax; ++j) ds[j] = gs[base + j];
      }
    n.parents[0]->accumulate(gx);
  });
}

}  // namespace gsr
