#pragma once

#include <cstdint>
#include <functional>

#include "fmk/interval.hpp"
#include "fmk/measure.hpp"

namespace fmk {

// A pair of jointly Gaussian random measures (M1 on d1, M2 on d2) described
// entirely by second-order data: the factor covariance measures and the
// cross-covariance measure on d1 x d2.
struct TensorProductModel {
  Measure2D cov_m1;
  Measure2D cov_m2;
  Measure2D cov_m12;
  Interval d1{0.0, 1.0};
  Interval d2{0.0, 1.0};
  // M2 is literally M1 (same white noise): samplers reuse the masses
  // instead of drawing a second coordinate block.
  bool same_measure = false;
};

// White noise pair on [0,1]: same = one measure used twice (cross = the
// diagonal measure); otherwise two independent copies (cross = 0).
TensorProductModel wn_pair_model(bool same);

// Integrand psi(x, y) for the tensor quadratures. Either a plain function
// or the diagonal indicator 1_{y <= x} (closed) / 1_{y < x} (open), which
// quadratures resolve by classifying each cell pair against the diagonal
// instead of sampling psi pointwise -- the diagonal is exactly where the
// interesting mass sits and where pointwise evaluation is ill-posed.
struct PsiSpec {
  std::function<double(double, double)> fn;
  bool diagonal_indicator = false;
  bool closed = true;

  static PsiSpec function(std::function<double(double, double)> f) {
    PsiSpec p;
    p.fn = std::move(f);
    return p;
  }
  static PsiSpec indicator(bool closed_diag) {
    PsiSpec p;
    p.diagonal_indicator = true;
    p.closed = closed_diag;
    return p;
  }
};

// E[ iint psi d(M1 (x) M2) ] = iint psi dC_M12, as an n x n box quadrature
// with midpoint tags (indicators: box classification).
double tensor_mean(const TensorProductModel& model, const PsiSpec& psi, int n);

// Cov( iint psi1, iint psi2 ) via the two cross-pattern product measures:
// boxes A1 x B1 x A2 x B2 weighted by C_M1(A1 x A2) C_M2(B1 x B2) and by
// C_M12(A1 x B2) C_M12(A2 x B1). Never materializes the 4-D measures.
double tensor_cov(const TensorProductModel& model, const PsiSpec& psi1, const PsiSpec& psi2,
                  int n);

struct FubiniResult {
  double order_a = 0.0;  // x integrated at left tags, y at midpoints
  double order_b = 0.0;  // x at midpoints, y at left tags
  double se = 0.0;       // paired standard error of order_a - order_b
  double analytic = 0.0; // tensor_mean at the same level
};

// Monte Carlo iterated integrals of psi against jointly sampled cell
// masses, in both orders. For continuous psi the orders agree within
// 3 se + quadrature slack; for the diagonal indicator order_a includes the
// straddling cells and order_b excludes them, so on a same-measure model
// their gap reproduces the diagonal mass nu(D).
FubiniResult fubini_mc_check(const TensorProductModel& model, const PsiSpec& psi, int n,
                             int samples, std::uint64_t seed);

}  // namespace fmk
