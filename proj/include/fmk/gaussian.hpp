#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmk/interval.hpp"
#include "fmk/measure.hpp"
#include "fmk/selfint.hpp"

namespace fmk {

// Thrown when no jitter level makes the latent covariance factorizable.
struct FactorizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Jointly Gaussian discretization of an integrand/integrator pair (Z, M):
// Z is observed at `grid` points, M as masses of the partition `cells`.
// Families:
//   brownian_wn     Z = Brownian motion, M = its white-noise increments
//                   (same path; exact cumulative construction)
//   fbm             Z = fractional Brownian motion (hurst in (1/2,1)),
//                   M = its increment measure (same path)
//   independent     Z Brownian, M white noise of an independent Brownian
//   abs_continuous  M has a density; cross covariance selected by `cross`
//                   from {"zero","product","min"}
struct ModelSpec {
  std::string family;
  std::vector<Interval> cells;  // contiguous partition of the domain
  std::vector<double> grid;     // strictly increasing observation points
  double hurst = 0.75;          // fbm only
  std::string cross = "min";    // abs_continuous only
  int quad_per_cell = 8;        // abs_continuous density panels per cell
};

struct GaussianGridModel {
  std::string family;
  std::string cross;  // abs_continuous only
  std::map<std::string, double> params;
  Interval domain{0.0, 1.0};
  std::vector<double> grid;
  std::vector<Interval> cells;

  // Second-order data (exact, from closed forms or the panel rule the
  // sampler itself uses -- empirical moments must match these).
  Eigen::MatrixXd cov_zz;  // grid x grid
  Eigen::MatrixXd cov_mm;  // cells x cells
  Eigen::MatrixXd cov_zm;  // grid x cells, E[Z(g_i) M(I_k)]
  std::function<double(double, double)> cov_z_fn;
  std::function<double(double, const Interval&)> kernel_eval;  // E[Z(x)M(A)]
  std::shared_ptr<const Measure2D> cov_m_measure;
  double jitter = 0.0;  // diagonal boost that made the factorization pass

  // Sampling machinery. Cumulative families draw refined-cell masses and
  // fold them so Z at a cell boundary is bit-identical to the prefix sum
  // of the cell masses. Generic families draw latent values and apply
  // linear maps.
  bool cumulative = false;
  Eigen::MatrixXd chol;        // lower factor of the latent covariance
  Eigen::VectorXd diag_scale;  // set instead of chol when latent is diagonal
  std::vector<std::size_t> cell_split;  // cell k = refined [split[k], split[k+1])
  std::vector<std::size_t> grid_pos;    // grid i ends at refined boundary grid_pos[i]
  Eigen::MatrixXd map_z;  // grid x latent   (generic path)
  Eigen::MatrixXd map_m;  // cells x latent  (generic path)
};

struct SampleBatch {
  Eigen::MatrixXd z;  // samples x grid
  Eigen::MatrixXd m;  // samples x cells
};

GaussianGridModel make_model(const ModelSpec& spec);

// Lower Cholesky factor of a symmetric PSD matrix, retrying with diagonal
// boosts 1e-12, 1e-10, 1e-8 before giving up with FactorizationError.
// Returns the factor and the boost that made it pass.
std::pair<Eigen::MatrixXd, double> cholesky_with_jitter(const Eigen::MatrixXd& cov);

// Convenience: model for a uniform n-cell partition of [0,1] with the grid
// holding every cell's left endpoint and midpoint (the tags the estimators
// use), plus the right domain endpoint.
GaussianGridModel make_uniform_model(const std::string& family, int n,
                                     double hurst = 0.75,
                                     const std::string& cross = "min");

// count paths; normals drawn in fixed blocks of 8192 with per-block
// derived seeds, so results depend only on (count, seed).
SampleBatch sample(const GaussianGridModel& model, int count,
                   std::uint64_t seed);

// Per-sample sums  sum_j Z(tag_j) M(I_j).  Every tag must be a grid point
// (exact match; throws std::invalid_argument otherwise).
std::vector<double> mc_stochastic_sums(const GaussianGridModel& model,
                                       const SampleBatch& batch,
                                       const std::vector<double>& tags);

struct L2GapResult {
  double gap = 0.0;  // mean of (a_i - b_i)^2
  double se = 0.0;   // standard error of that mean
};
L2GapResult l2_gap(const std::vector<double>& sums_a,
                   const std::vector<double>& sums_b);

struct MomentDiagnostics {
  double mean = 0.0, se_mean = 0.0;
  double var = 0.0, se_var = 0.0;
  double target_mean = 0.0;   // self-integral value (limit)
  double target_var = 0.0;    // quadrature(C_Z dC_M) + quasi value
  double discrete_mean = 0.0; // exact E of the level-n sum
  double discrete_var = 0.0;  // exact Var of the level-n sum
  double czcm_quad = 0.0;     // level-n quadrature of C_Z against C_M
  double richardson_slack = 0.0;
  double isserlis_max_z = 0.0;
  bool mean_ok = false, var_ok = false, isserlis_ok = false;
  bool all_ok() const { return mean_ok && var_ok && isserlis_ok; }
};

// Compares batch moments of the tag sums against the limits reported by
// selfint (mean) and the variance decomposition (quadrature + quasi term).
// Both reports must carry Verdict::Converged; throws std::logic_error
// otherwise -- without a unique limit there is no target to test.
MomentDiagnostics moment_checks(const GaussianGridModel& model,
                                const SampleBatch& batch,
                                const std::vector<double>& tags,
                                const SelfIntegralReport& si_report,
                                const SelfIntegralReport& quasi_report,
                                std::uint64_t tuple_seed = 99);

// Integral of the cross covariance along the diagonal over D: the limit of
// the tag sums when the cross covariance is absolutely continuous.
double abs_continuous_reference(const GaussianGridModel& model,
                                const Interval& D);

// Kernel handle whose eval is the model's E[Z(x)M(.)], with the covariance
// pair attached; lets the selfint machinery run on model-backed kernels.
KernelHandle model_kernel(const GaussianGridModel& model);

}  // namespace fmk
