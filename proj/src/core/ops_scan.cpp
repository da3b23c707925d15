#include <algorithm>
#include <cmath>
#include <vector>

#include "core/check.h"
#include "core/ops.h"

namespace gsr {

// h_t = exp(delta_t A) h_{t-1} + (delta_t u_t) B_t,  y_t = <h_t, C_t> + D u_t
// Explicit sequential recurrence; the state trajectory is kept for backward.
Var selective_scan(const Var& u, const Var& delta, const Var& A, const Var& B,
                   const Var& C, const Var& D_skip) {
  const Shape& us = u.shape();
  GSR_CHECK(us.size() == 3, "selective_scan expects u (N,L,D)");
  const int64_t N = us[0], L = us[1], D = us[2];
  GSR_CHECK(delta.shape() == us, "delta shape mismatch");
  GSR_CHECK(A.shape().size() == 2 && A.dim(0) == D, "A must be (D,S)");
  const int64_t S = A.dim(1);
  Shape bs = {N, L, S};
  GSR_CHECK(B.shape() == bs && C.shape() == bs, "B, C must be (N,L,S)");
  GSR_CHECK(D_skip.size() == D, "D_skip must be (D)");
  {
    const double* pd = delta.val().data();
    for (int64_t i = 0; i < delta.size(); ++i)
      GSR_CHECK(pd[i] > 0.0, "selective_scan requires delta > 0");
  }

  Tensor value({N, L, D});
  Tensor H({N, L, D, S});  // post-update states
  {
    const double* pu = u.val().data();
    const double* pdel = delta.val().data();
    const double* pA = A.val().data();
    const double* pB = B.val().data();
    const double* pC = C.val().data();
    const double* pD = D_skip.val().data();
    double* py = value.data();
    double* pH = H.data();
    std::vector<double> h(static_cast<size_t>(D * S));
    for (int64_t n = 0; n < N; ++n) {
      std::fill(h.begin(), h.end(), 0.0);
      for (int64_t t = 0; t < L; ++t) {
        const int64_t td = (n * L + t) * D;
        const int64_t ts = (n * L + t) * S;
        double* Ht = pH + td * S;
        for (int64_t d = 0; d < D; ++d) {
          const double dt = pdel[td + d];
          const double du = dt * pu[td + d];
          const double* Ad = pA + d * S;
          double* hd = h.data() + d * S;
          double acc = 0.0;
          for (int64_t s = 0; s < S; ++s) {
            const double da = std::exp(dt * Ad[s]);
            hd[s] = da * hd[s] + du * pB[ts + s];
            acc += hd[s] * pC[ts + s];
            Ht[d * S + s] = hd[s];
          }
          py[td + d] = acc + pD[d] * pu[td + d];
        }
      }
    }
  }

  return make_op(std::move(value), {u, delta, A, B, C, D_skip},
                 [u, delta, A, B, C, D_skip, H, N, L, D, S](Node& n) {
                   const double* g = n.grad.data();
                   const double* pu = u.val().data();
                   const double* pdel = delta.val().data();
                   const double* pA = A.val().data();
                   const double* pB = B.val().data();
                   const double* pC = C.val().data();
                   const double* pD = D_skip.val().data();
                   const double* pH = H.data();

                   Tensor gu(u.shape()), gdelta(delta.shape()), gA(A.shape());
                   Tensor gB(B.shape()), gC(C.shape()), gD(D_skip.shape());
                   std::vector<double> gh(static_cast<size_t>(D * S));

                   for (int64_t nn = 0; nn < N; ++nn) {
                     std::fill(gh.begin(), gh.end(), 0.0);
                     for (int64_t t = L - 1; t >= 0; --t) {
                       const int64_t td = (nn * L + t) * D;
                       const int64_t ts = (nn * L + t) * S;
                       const double* Ht = pH + td * S;
                       const double* Hprev = t > 0 ? pH + ((nn * L + t - 1) * D) * S : nullptr;
                       for (int64_t d = 0; d < D; ++d) {
                         const double gy = g[td + d];
                         const double dt = pdel[td + d];
                         const double uv = pu[td + d];
                         const double* Ad = pA + d * S;
                         double* ghd = gh.data() + d * S;
                         gD[d] += gy * uv;
                         double gu_acc = gy * pD[d];
                         double gdel_acc = 0.0;
                         for (int64_t s = 0; s < S; ++s) {
                           const double hs = Ht[d * S + s];
                           gC[ts + s] += gy * hs;
                           double ghs = ghd[s] + gy * pC[ts + s];
                           const double hp = Hprev ? Hprev[d * S + s] : 0.0;
                           const double da = std::exp(dt * Ad[s]);
                           gdel_acc += ghs * (hp * da * Ad[s] + uv * pB[ts + s]);
                           gA[d * S + s] += ghs * hp * da * dt;
                           gB[ts + s] += ghs * dt * uv;
                           gu_acc += ghs * dt * pB[ts + s];
                           ghd[s] = ghs * da;
                         }
                         gu[td + d] += gu_acc;
                         gdelta[td + d] += gdel_acc;
                       }
                     }
                   }
                   if (u.requires_grad()) n.parents[0]->accumulate(gu);
                   if (delta.requires_grad()) n.parents[1]->accumulate(gdelta);
                   if (A.requires_grad()) n.parents[2]->accumulate(gA);
                   if (B.requires_grad()) n.parents[3]->accumulate(gB);
                   if (C.requires_grad()) n.parents[4]->accumulate(gC);
                   if (D_skip.requires_grad()) n.parents[5]->accumulate(gD);
                 });
}

}  // namespace gsr
