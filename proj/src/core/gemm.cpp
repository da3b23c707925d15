#include "core/gemm.h"

#include <Eigen/Core>

namespace gsr {

using MatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MutMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          double alpha, const double* a, const double* b, double beta, double* c) {
  MatMap ma(a, trans_a ? k : m, trans_a ? m : k);
  MatMap mb(b, trans_b ? n : k, trans_b ? k : n);
  MutMap mc(c, m, n);
  if (beta == 0.0)
    mc.setZero();
  else if (beta != 1.0)
    mc *= beta;
  if (trans_a) {
    if (trans_b)
      mc.noalias() += alpha * (ma.transpose() * mb.transpose());
    else
      mc.noalias() += alpha * (ma.transpose() * mb);
  } else {
    if (trans_b)
      mc.noalias() += alpha * (ma * mb.transpose());
    else
      mc.noalias() += alpha * (ma * mb);
  }
}

}  // namespace gsr
