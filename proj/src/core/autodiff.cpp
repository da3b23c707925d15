#include "core/autodiff.h"

#include <unordered_set>

#include "core/check.h"

namespace gsr {

void Node::accumulate(const Tensor& g) {
  GSR_CHECK(g.same_shape(value), "grad shape " << g.str() << " vs value " << value.str());
  Tensor& dst = ensure_grad();
  const double* src = g.data();
  double* d = dst.data();
  const int64_t n = g.size();
  for (int64_t i = 0; i < n; ++i) d[i] += src[i];
}

Var::Var(Tensor value, bool requires_grad) {
  node_ = std::make_shared<Node>();
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    bool need = false;
    for (const Var& p : parents)
      if (p.defined() && p.requires_grad()) need = true;
    if (need) {
      n->requires_grad = true;
      n->parents.reserve(parents.size());
      for (const Var& p : parents) n->parents.push_back(p.node());
      n->backward_fn = std::move(backward_fn);
    }
  }
  return Var(n);
}

namespace {

void topo_visit(const NodePtr& n, std::unordered_set<Node*>& seen, std::vector<Node*>& order) {
  // Iterative DFS; graphs here can be thousands of nodes deep.
  struct Frame {
    Node* node;
    size_t next_parent;
  };
  if (!n || !n->requires_grad || seen.count(n.get())) return;
  std::vector<Frame> stack;
  stack.push_back({n.get(), 0});
  seen.insert(n.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Node* p = f.node->parents[f.next_parent++].get();
      if (p && p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
}

}  // namespace

void backward(const Var& root, Tensor seed) {
  GSR_CHECK(root.defined(), "backward on undefined Var");
  GSR_CHECK(root.requires_grad(), "backward on a Var with no gradient path");
  GSR_CHECK(seed.same_shape(root.val()), "seed shape mismatch");

  std::unordered_set<Node*> seen;
  std::vector<Node*> order;  // post-order: parents before children
  topo_visit(root.node(), seen, order);

  root.node()->accumulate(seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.defined()) n->backward_fn(*n);
  }
}

void backward(const Var& root) {
  GSR_CHECK(root.size() == 1, "implicit backward requires a scalar root, got " << root.val().str());
  backward(root, Tensor(root.val().shape(), 1.0));
}

}  // namespace gsr
