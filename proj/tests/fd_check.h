#pragma once

// Test-only helpers: central finite-difference gradient checking.

#include <cmath>
#include <functional>
#include <vector>

#include "core/ops.h"

namespace gsr::test {

// Max relative error between analytic gradient and central differences,
// checking every coordinate of every input. fn must rebuild the graph from
// the current leaf values on each call.
inline double fd_max_rel_error(const std::function<Var(std::vector<Var>&)>& fn,
                               std::vector<Var>& inputs, double eps = 1e-5) {
  Var out = fn(inputs);
  backward(out);
  std::vector<Tensor> analytic;
  for (Var& in : inputs) analytic.push_back(in.grad());

  double worst = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    Tensor& x = inputs[k].mutable_val();
    for (int64_t i = 0; i < x.size(); ++i) {
      const double orig = x[i];
      x[i] = orig + eps;
      const double fp = fn(inputs).val().item();
      x[i] = orig - eps;
      const double fm = fn(inputs).val().item();
      x[i] = orig;
      const double num = (fp - fm) / (2.0 * eps);
      const double ana = analytic[k][i];
      const double denom = std::max({std::fabs(num), std::fabs(ana), 1e-8});
      worst = std::max(worst, std::fabs(num - ana) / denom);
    }
  }
  for (Var& in : inputs) in.zero_grad();
  return worst;
}

}  // namespace gsr::test
