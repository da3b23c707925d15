#include "core/tensor.h"

#include <cmath>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "core/check.h"

namespace gsr {

namespace {
// Tensor buffers are large and short-lived; keep them on the heap free lists
// instead of round-tripping through mmap on every op.
struct MallocTuning {
  MallocTuning() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  }
};
const MallocTuning g_malloc_tuning;
}  // namespace

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream oss;
  oss << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) oss << ",";
    oss << shape[i];
  }
  oss << ")";
  return oss.str();
}

Shape strides_of(const Shape& shape) {
  Shape s(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i)
    s[i] = s[i + 1] * shape[i + 1];
  return s;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  for (int64_t d : shape_) GSR_CHECK(d >= 0, "negative dim in " << shape_str(shape_));
  data_.assign(static_cast<size_t>(numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, double fill) : Tensor(std::move(shape)) {
  if (fill != 0.0) data_.assign(data_.size(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  GSR_CHECK(numel(shape_) == static_cast<int64_t>(data_.size()),
            "data size " << data_.size() << " does not match shape " << shape_str(shape_));
}

int64_t Tensor::dim(int i) const {
  int n = ndim();
  if (i < 0) i += n;
  GSR_CHECK(i >= 0 && i < n, "dim index " << i << " out of range for " << str());
  return shape_[static_cast<size_t>(i)];
}

Tensor Tensor::reshaped(Shape shape) const {
  GSR_CHECK(numel(shape) == size(),
            "reshape " << str() << " -> " << shape_str(shape) << " changes element count");
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

void Tensor::fill(double v) { data_.assign(data_.size(), v); }

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::item() const {
  GSR_CHECK(size() == 1, "item() on tensor of shape " << str());
  return data_[0];
}

}  // namespace gsr
