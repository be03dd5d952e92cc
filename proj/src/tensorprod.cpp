#include "fmk/tensorprod.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fmk/gaussian.hpp"
#include "fmk/riemann.hpp"
#include "fmk/rng.hpp"

namespace fmk {

namespace {

enum class Straddle { PerFlag, Include, Exclude };

Level uniform_level(const Interval& D, int n) {
  auto sys = make_system(D, SchemeKind::Uniform, TagKind::Midpoint);
  return build_level(sys, n);
}

// psi values per cell pair: functions at (x_tag, y_tag); the diagonal
// indicator by box position, with straddling boxes resolved by `mode`.
Eigen::MatrixXd psi_matrix(const PsiSpec& psi, const Level& lx, const std::vector<double>& xtags,
                           const Level& ly, const std::vector<double>& ytags, Straddle mode) {
  const Eigen::Index nx = static_cast<Eigen::Index>(lx.cells.size());
  const Eigen::Index ny = static_cast<Eigen::Index>(ly.cells.size());
  Eigen::MatrixXd P(nx, ny);
  if (psi.diagonal_indicator) {
    const bool straddle_value = mode == Straddle::PerFlag ? psi.closed : mode == Straddle::Include;
    for (Eigen::Index j = 0; j < nx; ++j)
      for (Eigen::Index k = 0; k < ny; ++k) {
        const Interval& A = lx.cells[static_cast<std::size_t>(j)];
        const Interval& B = ly.cells[static_cast<std::size_t>(k)];
        double v;
        if (B.hi <= A.lo)
          v = 1.0;  // every y below every x
        else if (B.lo >= A.hi)
          v = 0.0;
        else
          v = straddle_value ? 1.0 : 0.0;
        P(j, k) = v;
      }
    return P;
  }
  if (!psi.fn) throw std::invalid_argument("psi: function form requires a callable");
  for (Eigen::Index j = 0; j < nx; ++j)
    for (Eigen::Index k = 0; k < ny; ++k)
      P(j, k) = psi.fn(xtags[static_cast<std::size_t>(j)], ytags[static_cast<std::size_t>(k)]);
  return P;
}

Eigen::MatrixXd mass_matrix(const Measure2D& m, const std::vector<Interval>& rows,
                            const std::vector<Interval>& cols) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mass2d(m, rows[i], cols[j]);
  return M;
}

}  // namespace

TensorProductModel wn_pair_model(bool same) {
  Measure2D diag = Measure2D::diagonal(Measure1D::lebesgue());
  Measure2D cross =
      same ? diag : Measure2D::surface_increment([](double, double) { return 0.0; });
  return TensorProductModel{diag, diag, cross, Interval{0.0, 1.0}, Interval{0.0, 1.0}, same};
}

double tensor_mean(const TensorProductModel& model, const PsiSpec& psi, int n) {
  if (n < 1) throw std::invalid_argument("tensor_mean: n must be >= 1");
  Level lx = uniform_level(model.d1, n);
  Level ly = uniform_level(model.d2, n);
  Eigen::MatrixXd P = psi_matrix(psi, lx, lx.tags, ly, ly.tags, Straddle::PerFlag);
  double acc = 0.0;
  for (std::size_t j = 0; j < lx.cells.size(); ++j) {
    double row = 0.0;
    for (std::size_t k = 0; k < ly.cells.size(); ++k) {
      double p = P(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
      if (p != 0.0) row += p * mass2d(model.cov_m12, lx.cells[j], ly.cells[k]);
    }
    acc += row;
  }
  return acc;
}

double tensor_cov(const TensorProductModel& model, const PsiSpec& psi1, const PsiSpec& psi2,
                  int n) {
  if (n < 1) throw std::invalid_argument("tensor_cov: n must be >= 1");
  Level lx = uniform_level(model.d1, n);
  Level ly = uniform_level(model.d2, n);
  Eigen::MatrixXd P1 = psi_matrix(psi1, lx, lx.tags, ly, ly.tags, Straddle::PerFlag);
  Eigen::MatrixXd P2 = psi_matrix(psi2, lx, lx.tags, ly, ly.tags, Straddle::PerFlag);

  Eigen::MatrixXd C1 = mass_matrix(model.cov_m1, lx.cells, lx.cells);
  Eigen::MatrixXd C2 = mass_matrix(model.cov_m2, ly.cells, ly.cells);
  Eigen::MatrixXd CX = mass_matrix(model.cov_m12, lx.cells, ly.cells);

  // sum over A1 x B1 x A2 x B2 of psi1 psi2 C_M1(A1 x A2) C_M2(B1 x B2)
  Eigen::MatrixXd G = P1 * C2 * P2.transpose();
  double term1 = C1.cwiseProduct(G).sum();
  // and of psi1 psi2 C_M12(A1 x B2) C_M12(A2 x B1)
  Eigen::MatrixXd H = P1 * CX.transpose() * P2;
  double term2 = CX.cwiseProduct(H).sum();
  return term1 + term2;
}

FubiniResult fubini_mc_check(const TensorProductModel& model, const PsiSpec& psi, int n,
                             int samples, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("fubini_mc_check: n must be >= 1");
  if (samples < 2) throw std::invalid_argument("fubini_mc_check: need at least 2 samples");
  Level lx = uniform_level(model.d1, n);
  Level ly = uniform_level(model.d2, n);
  std::vector<double> xleft, yleft;
  for (const auto& c : lx.cells) xleft.push_back(c.lo);
  for (const auto& c : ly.cells) yleft.push_back(c.lo);

  // Order A integrates y innermost (y resolved at midpoints, x held at its
  // left tag); order B the reverse. Indicators: include vs exclude the
  // diagonal straddling cells -- the two resolutions of 1_{[0,t]} vs
  // 1_{[0,t)} against the partition.
  Eigen::MatrixXd PA = psi.diagonal_indicator
                           ? psi_matrix(psi, lx, xleft, ly, ly.tags, Straddle::Include)
                           : psi_matrix(psi, lx, xleft, ly, ly.tags, Straddle::PerFlag);
  Eigen::MatrixXd PB = psi.diagonal_indicator
                           ? psi_matrix(psi, lx, xleft, ly, ly.tags, Straddle::Exclude)
                           : psi_matrix(psi, lx, lx.tags, ly, yleft, Straddle::PerFlag);

  const Eigen::Index n1 = static_cast<Eigen::Index>(lx.cells.size());
  const Eigen::Index n2 = static_cast<Eigen::Index>(ly.cells.size());

  // Jointly Gaussian cell masses from the stacked covariance (or a single
  // block reused when M2 is M1).
  Eigen::MatrixXd chol;
  if (model.same_measure) {
    Eigen::MatrixXd C1 = mass_matrix(model.cov_m1, lx.cells, lx.cells);
    chol = cholesky_with_jitter(C1).first;
  } else {
    Eigen::MatrixXd S(n1 + n2, n1 + n2);
    S.topLeftCorner(n1, n1) = mass_matrix(model.cov_m1, lx.cells, lx.cells);
    S.bottomRightCorner(n2, n2) = mass_matrix(model.cov_m2, ly.cells, ly.cells);
    S.topRightCorner(n1, n2) = mass_matrix(model.cov_m12, lx.cells, ly.cells);
    S.bottomLeftCorner(n2, n1) = S.topRightCorner(n1, n2).transpose();
    chol = cholesky_with_jitter(S).first;
  }

  std::mt19937_64 rng(derive_seed(seed, 0x7e50u));
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index latent = chol.rows();
  Eigen::VectorXd xi(latent);

  double mean_a = 0.0, mean_b = 0.0, mean_d = 0.0, ssd = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index r = 0; r < latent; ++r) xi(r) = normal(rng);
    Eigen::VectorXd v = chol * xi;
    Eigen::VectorXd m1 = model.same_measure ? v : v.head(n1);
    Eigen::VectorXd m2 = model.same_measure ? v : v.tail(n2);
    double a = m1.dot(PA * m2);
    double b = m1.dot(PB * m2);
    mean_a += a;
    mean_b += b;
    double d = a - b;
    // Welford on the paired difference
    double delta = d - mean_d;
    mean_d += delta / (s + 1);
    ssd += delta * (d - mean_d);
  }
  const double N = static_cast<double>(samples);
  FubiniResult r;
  r.order_a = mean_a / N;
  r.order_b = mean_b / N;
  r.se = std::sqrt(ssd / (N - 1.0) / N);
  r.analytic = tensor_mean(model, psi, n);
  return r;
}

}  // namespace fmk
