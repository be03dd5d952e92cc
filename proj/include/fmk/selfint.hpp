#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fmk/kernel.hpp"
#include "fmk/riemann.hpp"

namespace fmk {

enum class Verdict { Converged, TagDependent, Unbounded };
std::string to_string(Verdict v);

struct SystemTrace {
  std::string label;
  std::vector<std::pair<int, double>> points;  // (n, sum)
  double final_sum = 0.0;
  double extrapolated = 0.0;
  bool cauchy = false;             // |s(n_max) - s(n_max/2)| <= tol
  bool flagged_unbounded = false;  // growing and past the bound
};

struct SelfIntegralReport {
  std::string kernel_name;
  Interval domain;
  std::optional<Interval> domain_b;  // second factor for quasi estimates
  Verdict verdict = Verdict::TagDependent;
  std::optional<double> value;  // set when Converged (median extrapolation)
  std::map<std::string, double> system_values;  // label -> final sum
  std::vector<SystemTrace> traces;
  double tol = 0.0;
  int n_max = 0;
  double bound = 0.0;  // threshold used by the unbounded flag
};

// 4, 8, ..., by doubling while <= n_max. Requires n_max >= 8.
std::vector<int> doubling_levels(int n_max);

// Aitken delta-squared applied to the tail of a trace, with a guard that
// rejects extrapolations jumping more than 6x the last increment.
double aitken_extrapolate(const std::vector<double>& s);

// 12 systems: {uniform, dyadic, random} x {left, right, midpoint, random}.
std::vector<RiemannSystem> default_ensemble(const Interval& domain, std::uint64_t seed);

// 3 systems for product estimates: uniform/left, uniform/midpoint, random/random.
std::vector<RiemannSystem> default_quasi_ensemble(const Interval& domain, std::uint64_t seed);

// Estimate ∫_D K(x, dx) over every system in the ensemble at doubling
// levels up to n_max. Verdicts:
//   Unbounded    some trace has |sum| strictly increasing over its last
//                five levels and ends past bound_factor * probe, where
//                probe = local_bound_probe(K, D, D, 33, 6)
//   Converged    every trace is Cauchy at tol and the finals agree within
//                tol; value = median of the extrapolated finals
//   TagDependent otherwise; per-system finals are in system_values
SelfIntegralReport estimate_self_integral(const KernelHandle& K, const Interval& D,
                                          const std::vector<RiemannSystem>& ensemble, int n_max,
                                          double tol, double bound_factor = 3.0);

// Same protocol for the quasi (second-order) integral over A x B: every
// pair from the two ensembles is run with matched levels n = m.
SelfIntegralReport estimate_quasi_self_integral(const SecondOrderKernel& K2, const Interval& A,
                                                const Interval& B,
                                                const std::vector<RiemannSystem>& ensemble_a,
                                                const std::vector<RiemannSystem>& ensemble_b,
                                                int n_max, double tol, double bound_factor = 3.0);

struct AdditivityResult {
  double left = 0.0;
  double right = 0.0;
  double whole = 0.0;
};

// Split D at c and estimate the self-integral over the parts and the whole
// (default ensembles). Throws std::logic_error unless all three converge.
AdditivityResult additivity_check(const KernelHandle& K, const Interval& D, double c,
                                  int n_max = 4096, double tol = 0.02, std::uint64_t seed = 17);

}  // namespace fmk
