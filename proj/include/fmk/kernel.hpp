#pragma once
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fmk/interval.hpp"
#include "fmk/measure.hpp"

namespace fmk {

// A function-measure kernel K(x, A): jointly, a function of a point x in the
// domain and a finite signed measure in the set argument A (subintervals of
// the domain). eval throws std::invalid_argument when x or A leaves the
// domain. Kernels built from a second-order structure carry their witness
// pair: a covariance function cov_z for the point argument and a plane
// measure cov_m for the set argument, tied by cross positive-definiteness.
struct KernelHandle {
  std::string name;
  Interval domain;
  std::function<double(double, const Interval&)> eval;
  std::map<std::string, double> params;

  std::function<double(double, double)> cov_z;  // C_Z(x, y); empty if none
  std::shared_ptr<const Measure2D> cov_m;       // C_M on domain^2; null if none

  bool has_attached_pair() const { return static_cast<bool>(cov_z) && cov_m != nullptr; }

  double operator()(double x, const Interval& A) const { return eval(x, A); }
};

// f(x) * mu(A)
KernelHandle tensor_kernel(std::function<double(double)> f, Measure1D mu, Interval domain,
                           std::string label = "tensor");

// lebesgue(A ∩ [0, x]) on [0,1]; white-noise integrand pair (min, diagonal)
KernelHandle brownian_wn_kernel();

// rectangle increments of the fractional covariance surface, hurst in (1/2, 1):
// K(t, [a,b]) = (b^{2H} - a^{2H} + |t-a|^{2H} - |t-b|^{2H}) / 2 on [0,1]
KernelHandle fbm_kernel(double hurst);

// nu([0, t] ∩ A) on [0,1] for a finite measure nu
KernelHandle orthogonal_kernel(Measure1D nu, std::string label = "orthogonal");

// (8/7) * (g(b - x) - g(a - x)) with g(u) = sgn(u) |u|^{7/8} on [-1,1];
// the kernel measure has density |u - x|^{-1/8}, integrable but with
// unbounded density near the diagonal
KernelHandle singular_kernel();

// K'(y, A) = ∫ psi(x, y) K_base(x, A) mu(dx), computed with a fixed number
// of midpoint panels over mu_domain (atomless mu intended)
KernelHandle psi_mu_kernel(std::function<double(double, double)> psi, Measure1D mu,
                           Interval mu_domain, KernelHandle base, int panels = 512);

// Second-order (quasi) view of a kernel on a product of intervals:
// eval((x, y), A x B) = K(y, A) * K(x, B), with x the tag of A and y of B.
struct SecondOrderKernel {
  KernelHandle base;
};
double eval_second_order(const SecondOrderKernel& k2, double x, double y, const Interval& A,
                         const Interval& B);

// K(x, A) - K(y, A); identically zero at x == y by construction
struct IncrementKernel {
  KernelHandle base;
};
double eval_increment(const IncrementKernel& k, double x, double y, const Interval& A);

// Riemann-sum both iterated orders of ∫∫ psi(x, y) K(x, dy) mu(dx) with
// midpoint tags at level n: first = sum over the kernel partition of the
// psi-mu composed kernel (mu integrated innermost); second = mu-panel sum
// of weighted kernel sums (kernel integrated innermost).
std::pair<double, double> iterated_integral_both_orders(
    const KernelHandle& K, const Measure1D& mu, const std::function<double(double, double)>& psi,
    const Interval& D_mu, const Interval& D_kernel, int n);

struct CauchySchwarzResult {
  double lhs = 0.0;
  double rhs = 0.0;
};
// |sum_{j,k} alpha_j beta_k K(x_j, E_k)|  vs
// sqrt(sum alpha_j alpha_k C_Z(x_j, x_k)) * sqrt(sum beta_j beta_k C_M(E_j x E_k));
// requires an attached pair.
CauchySchwarzResult cauchy_schwarz_check(const KernelHandle& K, const std::vector<double>& points,
                                         const std::vector<Interval>& sets,
                                         const std::vector<double>& alpha,
                                         const std::vector<double>& beta);

// Variation of the measure K(x, ·) over B at dyadic resolution `depth`.
double kernel_tv_estimate(const KernelHandle& K, double x, const Interval& B, int depth);

// max over a grid of grid_n points x in D of kernel_tv_estimate(K, x, B, depth)
double local_bound_probe(const KernelHandle& K, const Interval& D, const Interval& B, int grid_n,
                         int depth);

// Certified-style companion bound from the attached pair:
// max over the same grid of sqrt(C_Z(x,x)) * sqrt(|C_M|(B x B) estimate).
double attached_pair_bound(const KernelHandle& K, const Interval& D, const Interval& B, int grid_n,
                           int depth);

}  // namespace fmk
