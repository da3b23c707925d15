#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gsr {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);
Shape strides_of(const Shape& shape);  // row-major, in elements

// Dense row-major double tensor with value semantics.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, double fill);
  Tensor(Shape shape, std::vector<double> data);
  static Tensor scalar(double v) { return Tensor({}, std::vector<double>{v}); }

  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  const Shape& shape() const { return shape_; }
  int64_t dim(int i) const;  // negative index counts from the back

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool defined() const { return !shape_.empty() || !data_.empty(); }

  Tensor reshaped(Shape shape) const;
  void fill(double v);
  bool all_finite() const;
  double item() const;  // requires size() == 1

  std::string str() const { return shape_str(shape_); }

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace gsr
