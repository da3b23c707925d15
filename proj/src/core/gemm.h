#pragma once

#include <cstdint>

namespace gsr {

// C[M x N] = alpha * op(A) * op(B) + beta * C, row-major buffers.
// op(A) is A [M x K] or A^T with A stored [K x M] when trans_a.
void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          double alpha, const double* a, const double* b, double beta, double* c);

}  // namespace gsr
