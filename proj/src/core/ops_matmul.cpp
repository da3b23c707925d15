#include "core/check.h"
#include "core/gemm.h"
#include "core/ops.h"

namespace gsr {

Var matmul(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  GSR_CHECK(sa.size() >= 2 && sb.size() == 2, "matmul expects (..., K) x (K, N)");
  const int64_t k = sa.back();
  GSR_CHECK(k == sb[0], "matmul inner dim " << k << " vs " << sb[0]);
  const int64_t n = sb[1];
  const int64_t m = a.size() / k;

  Shape os(sa.begin(), sa.end() - 1);
  os.push_back(n);
  Tensor value(os);
  gemm(false, false, m, n, k, 1.0, a.val().data(), b.val().data(), 0.0, value.data());

  return make_op(std::move(value), {a, b}, [a, b, m, n, k](Node& node) {
    const double* g = node.grad.data();
    if (a.requires_grad()) {
      Tensor ga(a.shape());
      gemm(false, true, m, k, n, 1.0, g, b.val().data(), 0.0, ga.data());
      node.parents[0]->accumulate(ga);
    }
    if (b.requires_grad()) {
      Tensor gb(b.shape());
      gemm(true, false, k, n, m, 1.0, a.val().data(), g, 0.0, gb.data());
      node.parents[1]->accumulate(gb);
    }
  });
}

}  // namespace gsr
