#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "core/tensor.h"

namespace gsr {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the reverse-mode tape. backward_fn reads this node's grad and
// accumulates into the parents' grads.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulate
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad() {
    if (grad.size() != value.size() || !grad.same_shape(value)) grad = Tensor(value.shape());
    return grad;
  }
  void accumulate(const Tensor& g);
};

// Thin handle to a Node; all ops are free functions returning Var.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(NodePtr n) : node_(std::move(n)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor& val() const { return node_->value; }
  Tensor& mutable_val() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  Tensor& grad() { return node_->ensure_grad(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void zero_grad() { if (node_) node_->grad = Tensor(); }

  const Shape& shape() const { return val().shape(); }
  int64_t dim(int i) const { return val().dim(i); }
  int64_t size() const { return val().size(); }

  NodePtr node() const { return node_; }

 private:
  NodePtr node_;
};

bool grad_enabled();

// RAII switch that disables tape recording in its scope.
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  bool prev;
};

// Creates the result node of an op: records parents/backward only when the
// tape is enabled and some parent needs gradients.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

// Reverse-mode sweep from a scalar root (seed 1) or with an explicit seed.
void backward(const Var& root);
void backward(const Var& root, Tensor seed);

}  // namespace gsr
