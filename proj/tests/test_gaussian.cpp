#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fmk/gaussian.hpp"
#include "fmk/kernel.hpp"
#include "fmk/quadrature.hpp"
#include "fmk/riemann.hpp"
#include "fmk/selfint.hpp"

using namespace fmk;

namespace {

double emp_second_moment(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b,
                         Eigen::Index j) {
  return (a.col(i).array() * b.col(j).array()).mean();
}

std::vector<double> left_tags(const GaussianGridModel& m) {
  std::vector<double> t;
  for (const auto& c : m.cells) t.push_back(c.lo);
  return t;
}

std::vector<double> mid_tags(const GaussianGridModel& m) {
  std::vector<double> t;
  for (const auto& c : m.cells) t.push_back(c.midpoint());
  return t;
}

}  // namespace

TEST_CASE("uniform model layout and exact covariance blocks") {
  auto m = make_uniform_model("brownian_wn", 8);
  CHECK(m.cells.size() == 8);
  CHECK(m.grid.size() == 17);  // 8 lefts + 8 midpoints + right endpoint
  CHECK(m.grid.front() == 0.0);
  CHECK(m.grid.back() == 1.0);
  CHECK(m.jitter == 0.0);

  // C_Z = min, C_M diagonal, E[Z(x) M(A)] = |A ∩ [0, x]|
  for (std::size_t i = 0; i < m.grid.size(); i += 3)
    for (std::size_t j = 0; j < m.grid.size(); j += 3)
      CHECK(m.cov_zz(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
            std::min(m.grid[i], m.grid[j]));
  for (int k = 0; k < 8; ++k)
    for (int l = 0; l < 8; ++l)
      CHECK(m.cov_mm(k, l) == (k == l ? doctest::Approx(0.125).epsilon(1e-15)
                                      : doctest::Approx(0.0)));
  // grid point 0.25 is the right end of cell 1 and left end of cell 2
  auto g = std::find(m.grid.begin(), m.grid.end(), 0.25);
  REQUIRE(g != m.grid.end());
  Eigen::Index gi = static_cast<Eigen::Index>(g - m.grid.begin());
  CHECK(m.cov_zm(gi, 0) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(m.cov_zm(gi, 1) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(m.cov_zm(gi, 2) == 0.0);
}

TEST_CASE("model spec validation") {
  ModelSpec s;
  s.family = "brownian_wn";
  s.cells = {Interval{0.0, 0.5}, Interval{0.5, 1.0}};
  s.grid = {0.0, 0.5, 1.0};
  CHECK_NOTHROW(make_model(s));

  auto bad = s;
  bad.cells = {Interval{0.0, 0.4}, Interval{0.5, 1.0}};
  CHECK_THROWS_AS(make_model(bad), std::invalid_argument);
  bad = s;
  bad.cells = {Interval{0.0, 0.5}, Interval{0.5, 0.9}};
  CHECK_THROWS_AS(make_model(bad), std::invalid_argument);
  bad = s;
  bad.grid = {0.0, 1.5};
  CHECK_THROWS_AS(make_model(bad), std::invalid_argument);
  bad = s;
  bad.grid = {0.5, 0.5};
  CHECK_THROWS_AS(make_model(bad), std::invalid_argument);
  bad = s;
  bad.family = "poisson";
  CHECK_THROWS_AS(make_model(bad), std::invalid_argument);
  bad = s;
  bad.family = "fbm";
  bad.hurst = 0.5;
  CHECK_THROWS_AS(make_model(bad), std::invalid_argument);
  bad = s;
  bad.family = "abs_continuous";
  bad.cross = "max";
  CHECK_THROWS_AS(make_model(bad), std::invalid_argument);

  CHECK_THROWS_AS(make_uniform_model("brownian_wn", 0), std::invalid_argument);
  auto m = make_model(s);
  CHECK_THROWS_AS(sample(m, 0, 1), std::invalid_argument);
}

TEST_CASE("cumulative paths: grid values are exact folds of cell masses") {
  for (const char* family : {"brownian_wn", "fbm"}) {
    auto m = make_uniform_model(family, 6, 0.75);
    auto batch = sample(m, 32, 2024);
    for (int s = 0; s < 32; ++s) {
      double fold = 0.0;
      std::size_t k = 0;
      for (std::size_t i = 0; i < m.grid.size(); ++i) {
        // advance the fold across cells that end at or before grid[i]
        while (k < m.cells.size() && m.cells[k].hi <= m.grid[i]) {
          fold += batch.m(s, static_cast<Eigen::Index>(k));
          ++k;
        }
        if (m.grid[i] == (k == 0 ? m.domain.lo : m.cells[k - 1].hi)) {
          // grid point sits on a cell boundary: value must be the exact fold
          CHECK(batch.z(s, static_cast<Eigen::Index>(i)) == fold);
        }
      }
      // right endpoint = fold of everything
      CHECK(batch.z(s, static_cast<Eigen::Index>(m.grid.size() - 1)) == fold);
    }
  }
}

TEST_CASE("sampling is deterministic per (count, seed) and blocked") {
  auto m = make_uniform_model("brownian_wn", 4);
  auto a = sample(m, 100, 42);
  auto b = sample(m, 100, 42);
  CHECK(a.z == b.z);
  CHECK(a.m == b.m);
  auto c = sample(m, 100, 43);
  CHECK(a.z != c.z);

  // rows of a long run are block-aligned: the first 8192 depend only on
  // the block-0 stream
  auto big = sample(m, 8192 + 100, 7);
  auto first = sample(m, 8192, 7);
  CHECK(big.z.topRows(8192) == first.z);
  CHECK(big.m.topRows(8192) == first.m);
}

TEST_CASE("empirical second moments match the covariance blocks") {
  const int N = 40000;
  // 5 sigma on products of unit-scale Gaussians at N = 4e4
  const double tol = 0.04;
  for (const char* family : {"brownian_wn", "fbm", "independent", "abs_continuous"}) {
    auto m = make_uniform_model(family, 6, 0.8, "min");
    auto batch = sample(m, N, 515);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < batch.z.cols(); i += 2) {
      for (Eigen::Index j = 0; j < batch.z.cols(); j += 2)
        worst = std::max(worst,
                         std::abs(emp_second_moment(batch.z, i, batch.z, j) - m.cov_zz(i, j)));
      for (Eigen::Index k = 0; k < batch.m.cols(); ++k)
        worst = std::max(worst,
                         std::abs(emp_second_moment(batch.z, i, batch.m, k) - m.cov_zm(i, k)));
    }
    for (Eigen::Index k = 0; k < batch.m.cols(); ++k)
      for (Eigen::Index l = 0; l < batch.m.cols(); ++l)
        worst = std::max(worst,
                         std::abs(emp_second_moment(batch.m, k, batch.m, l) - m.cov_mm(k, l)));
    INFO(family);
    CHECK(worst < tol);
  }
}

TEST_CASE("mc sums: exact per-sample identity for left-tag white noise sums") {
  // sum_j Z(a_j) (Z(b_j) - Z(a_j)) == (Z(1)^2 - sum_j M_j^2) / 2 as algebra
  // on the exact folds; float error only from reassociation.
  auto m = make_uniform_model("brownian_wn", 16);
  auto batch = sample(m, 500, 99);
  auto sums = mc_stochastic_sums(m, batch, left_tags(m));
  Eigen::Index last = static_cast<Eigen::Index>(m.grid.size()) - 1;
  for (int s = 0; s < 500; ++s) {
    double total = batch.z(s, last);
    double sq = 0.0;
    for (int k = 0; k < 16; ++k) sq += batch.m(s, k) * batch.m(s, k);
    double oracle = 0.5 * (total * total - sq);
    CHECK(sums[static_cast<std::size_t>(s)] ==
          doctest::Approx(oracle).epsilon(0.0).scale(0.0).epsilon(1e-12));
  }

  CHECK_THROWS_AS(mc_stochastic_sums(m, batch, std::vector<double>(16, 0.3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(mc_stochastic_sums(m, batch, {0.0}), std::invalid_argument);
}

TEST_CASE("level tags resolve against the uniform model grid") {
  auto m = make_uniform_model("fbm", 8, 0.75);
  auto batch = sample(m, 10, 1);
  for (TagKind tk : {TagKind::Left, TagKind::Midpoint}) {
    auto sys = make_system(Interval{0.0, 1.0}, SchemeKind::Uniform, tk);
    auto level = build_level(sys, 8);
    CHECK_NOTHROW(mc_stochastic_sums(m, batch, level.tags));
  }
  auto nr = make_system(Interval{0.0, 1.0}, SchemeKind::Uniform, TagKind::NearRight);
  CHECK_THROWS_AS(mc_stochastic_sums(m, batch, build_level(nr, 8).tags), std::invalid_argument);
}

TEST_CASE("l2 gap on fixed vectors") {
  auto r = l2_gap({1.0, 2.0, 3.0}, {1.0, 1.0, 1.0});
  CHECK(r.gap == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(r.se == doctest::Approx(std::sqrt(13.0) / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(l2_gap({1.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(l2_gap({}, {}), std::invalid_argument);
}

TEST_CASE("moment checks refuse tag-dependent reports") {
  auto K = brownian_wn_kernel();
  Interval D{0.0, 1.0};
  auto si = estimate_self_integral(K, D, default_ensemble(D, 5), 512, 1e-3);
  REQUIRE(si.verdict == Verdict::TagDependent);
  SecondOrderKernel K2{K};
  auto quasi = estimate_quasi_self_integral(K2, D, D, default_quasi_ensemble(D, 5),
                                            default_quasi_ensemble(D, 6), 128, 0.02);
  auto m = make_uniform_model("brownian_wn", 8);
  auto batch = sample(m, 200, 1);
  CHECK_THROWS_AS(moment_checks(m, batch, left_tags(m), si, quasi, 3), std::logic_error);
}

TEST_CASE("moment checks pass on the fractional model") {
  auto K = fbm_kernel(0.75);
  Interval D{0.0, 1.0};
  auto si = estimate_self_integral(K, D, default_ensemble(D, 11), 4096, 0.02);
  REQUIRE(si.verdict == Verdict::Converged);
  SecondOrderKernel K2{K};
  auto quasi = estimate_quasi_self_integral(K2, D, D, default_quasi_ensemble(D, 11),
                                            default_quasi_ensemble(D, 12), 256, 0.03);
  REQUIRE(quasi.verdict == Verdict::Converged);

  auto m = make_uniform_model("fbm", 16, 0.75);
  auto batch = sample(m, 30000, 777);
  auto diag = moment_checks(m, batch, mid_tags(m), si, quasi, 5);
  CHECK(diag.target_mean == doctest::Approx(0.5).epsilon(2e-3));
  // midpoint tags keep the discrete mean at 1/2 exactly
  CHECK(diag.discrete_mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(diag.mean == doctest::Approx(0.5).epsilon(0.05));
  CHECK(diag.var == doctest::Approx(diag.target_var).epsilon(0.12));
  CHECK(diag.richardson_slack > 0.0);
  CHECK(diag.mean_ok);
  CHECK(diag.var_ok);
  CHECK(diag.isserlis_ok);
  CHECK(diag.all_ok());

  CHECK_THROWS_AS(moment_checks(m, batch, std::vector<double>{0.0}, si, quasi, 5),
                  std::invalid_argument);
}

TEST_CASE("absolutely continuous cross models") {
  // closed-form kernel evals against an adaptive quadrature oracle
  auto mmin = make_uniform_model("abs_continuous", 8, 0.75, "min");
  auto mprod = make_uniform_model("abs_continuous", 8, 0.75, "product");
  auto mzero = make_uniform_model("abs_continuous", 8, 0.75, "zero");
  struct Probe {
    double x;
    Interval A;
  } probes[] = {{0.3, Interval{0.1, 0.7}}, {0.9, Interval{0.0, 0.4}},
                {0.2, Interval{0.5, 1.0}}, {0.55, Interval{0.5, 0.6}}};
  for (const auto& p : probes) {
    double omin = integrate_adaptive([&](double y) { return std::min(p.x, y); }, p.A.lo, p.A.hi);
    double oprod = integrate_adaptive([&](double y) { return p.x * y; }, p.A.lo, p.A.hi);
    CHECK(mmin.kernel_eval(p.x, p.A) == doctest::Approx(omin).epsilon(1e-9));
    CHECK(mprod.kernel_eval(p.x, p.A) == doctest::Approx(oprod).epsilon(1e-9));
    CHECK(mzero.kernel_eval(p.x, p.A) == 0.0);
  }

  // the closed-form primitive of the plane measure against a nested oracle
  Interval A{0.15, 0.6}, B{0.4, 0.95};
  double oracle = integrate_adaptive(
      [&](double x) {
        return integrate_adaptive([&](double y) { return std::min(x, y); }, B.lo, B.hi, 1e-11);
      },
      A.lo, A.hi, 1e-9);
  CHECK(mass2d(*mmin.cov_m_measure, A, B) == doctest::Approx(oracle).epsilon(1e-7));

  CHECK(abs_continuous_reference(mmin, Interval{0.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(abs_continuous_reference(mprod, Interval{0.0, 1.0}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(abs_continuous_reference(mzero, Interval{0.0, 1.0}) == 0.0);

  // fbm has a continuous diagonal version integrating to 1/2; white noise
  // against its own Brownian path does not
  auto mf = make_uniform_model("fbm", 4, 0.75);
  CHECK(abs_continuous_reference(mf, Interval{0.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-9));
  auto mb = make_uniform_model("brownian_wn", 4);
  CHECK_THROWS_AS(abs_continuous_reference(mb, Interval{0.0, 1.0}), std::logic_error);

  // sums concentrate near the diagonal integral regardless of the tag side
  auto batch = sample(mmin, 20000, 31);
  auto sl = mc_stochastic_sums(mmin, batch, left_tags(mmin));
  auto sm = mc_stochastic_sums(mmin, batch, mid_tags(mmin));
  double disc_left = 0.0, disc_mid = 0.0;
  for (std::size_t k = 0; k < mmin.cells.size(); ++k) {
    auto gl = static_cast<Eigen::Index>(
        std::lower_bound(mmin.grid.begin(), mmin.grid.end(), mmin.cells[k].lo) -
        mmin.grid.begin());
    auto gm = static_cast<Eigen::Index>(
        std::lower_bound(mmin.grid.begin(), mmin.grid.end(), mmin.cells[k].midpoint()) -
        mmin.grid.begin());
    disc_left += mmin.cov_zm(gl, static_cast<Eigen::Index>(k));
    disc_mid += mmin.cov_zm(gm, static_cast<Eigen::Index>(k));
  }
  double meanl = std::accumulate(sl.begin(), sl.end(), 0.0) / static_cast<double>(sl.size());
  double meanm = std::accumulate(sm.begin(), sm.end(), 0.0) / static_cast<double>(sm.size());
  CHECK(meanl == doctest::Approx(disc_left).epsilon(0.03));
  CHECK(meanm == doctest::Approx(disc_mid).epsilon(0.03));
  // both discrete means already sit near the common limit 1/2
  CHECK(disc_left == doctest::Approx(0.4375).epsilon(1e-6));
  CHECK(disc_mid == doctest::Approx(0.484375).epsilon(1e-6));
}

TEST_CASE("model kernel carries the pair and validates the domain") {
  auto m = make_uniform_model("fbm", 4, 0.75);
  auto k = model_kernel(m);
  auto reference = fbm_kernel(0.75);
  CHECK(k.has_attached_pair());
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 24; ++i) {
    double x = u(rng), a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    Interval A{a, b};
    CHECK(k(x, A) == doctest::Approx(reference(x, A)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(k(1.5, Interval{0.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(k(0.5, Interval{-0.25, 0.5}), std::invalid_argument);

  std::vector<double> pts{0.1, 0.4, 0.8};
  std::vector<Interval> sets{Interval{0.0, 0.3}, Interval{0.3, 0.7}, Interval{0.7, 1.0}};
  std::vector<double> alpha{1.0, -2.0, 0.5}, beta{0.3, 1.1, -0.7};
  auto cs = cauchy_schwarz_check(k, pts, sets, alpha, beta);
  CHECK(cs.lhs <= cs.rhs + 1e-12);
}
