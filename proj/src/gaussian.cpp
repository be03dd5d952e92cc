#include "fmk/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fmk/kernel.hpp"
#include "fmk/quadrature.hpp"
#include "fmk/rng.hpp"

namespace fmk {

namespace {

constexpr int kSampleBlock = 8192;

void check_partition(const std::vector<Interval>& cells, const std::vector<double>& grid) {
  if (cells.empty()) throw std::invalid_argument("model: empty cell partition");
  for (const auto& c : cells) {
    check_interval(c);
    if (c.degenerate()) throw std::invalid_argument("model: degenerate cell");
  }
  for (std::size_t k = 0; k + 1 < cells.size(); ++k) {
    if (cells[k].hi != cells[k + 1].lo)
      throw std::invalid_argument("model: cells must tile the domain contiguously");
  }
  if (cells.front().lo != 0.0 || cells.back().hi != 1.0)
    throw std::invalid_argument("model: partition must cover [0, 1]");
  if (grid.empty()) throw std::invalid_argument("model: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] < 0.0 || grid[i] > 1.0)
      throw std::invalid_argument("model: grid point outside [0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument("model: grid must be strictly increasing");
  }
}

std::size_t exact_index(const std::vector<double>& sorted, double v, const char* what) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
  if (it == sorted.end() || *it != v)
    throw std::invalid_argument(std::string("model: ") + what + " is not a grid value");
  return static_cast<std::size_t>(it - sorted.begin());
}

// Refined boundaries for the cumulative families: cell boundaries joined
// with the grid, deduplicated exactly so grid values are boundary values.
std::vector<double> refined_boundaries(const std::vector<Interval>& cells,
                                       const std::vector<double>& grid) {
  std::vector<double> rb;
  rb.reserve(cells.size() + grid.size() + 1);
  rb.push_back(cells.front().lo);
  for (const auto& c : cells) rb.push_back(c.hi);
  rb.insert(rb.end(), grid.begin(), grid.end());
  std::sort(rb.begin(), rb.end());
  rb.erase(std::unique(rb.begin(), rb.end()), rb.end());
  return rb;
}

void fill_cross_blocks(GaussianGridModel& m) {
  const std::size_t ng = m.grid.size(), nm = m.cells.size();
  m.cov_zz.resize(static_cast<Eigen::Index>(ng), static_cast<Eigen::Index>(ng));
  for (std::size_t i = 0; i < ng; ++i)
    for (std::size_t j = 0; j < ng; ++j)
      m.cov_zz(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m.cov_z_fn(m.grid[i], m.grid[j]);
  m.cov_mm.resize(static_cast<Eigen::Index>(nm), static_cast<Eigen::Index>(nm));
  for (std::size_t k = 0; k < nm; ++k)
    for (std::size_t l = 0; l < nm; ++l)
      m.cov_mm(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
          mass2d(*m.cov_m_measure, m.cells[k], m.cells[l]);
  m.cov_zm.resize(static_cast<Eigen::Index>(ng), static_cast<Eigen::Index>(nm));
  for (std::size_t i = 0; i < ng; ++i)
    for (std::size_t k = 0; k < nm; ++k)
      m.cov_zm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          m.kernel_eval(m.grid[i], m.cells[k]);
}

void build_cumulative(GaussianGridModel& m, const ModelSpec& spec) {
  auto rb = refined_boundaries(m.cells, m.grid);
  const std::size_t R = rb.size() - 1;

  m.cell_split.assign(1, 0);
  for (const auto& c : m.cells) m.cell_split.push_back(exact_index(rb, c.hi, "cell boundary"));
  m.grid_pos.clear();
  for (double g : m.grid) m.grid_pos.push_back(exact_index(rb, g, "grid point"));

  if (spec.family == "brownian_wn") {
    KernelHandle k = brownian_wn_kernel();
    m.cov_z_fn = k.cov_z;
    m.cov_m_measure = k.cov_m;
    m.kernel_eval = k.eval;
    m.diag_scale.resize(static_cast<Eigen::Index>(R));
    for (std::size_t j = 0; j < R; ++j)
      m.diag_scale(static_cast<Eigen::Index>(j)) = std::sqrt(rb[j + 1] - rb[j]);
  } else {
    KernelHandle k = fbm_kernel(spec.hurst);
    m.params["hurst"] = spec.hurst;
    m.cov_z_fn = k.cov_z;
    m.cov_m_measure = k.cov_m;
    m.kernel_eval = k.eval;
    Eigen::MatrixXd latent(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(R));
    for (std::size_t i = 0; i < R; ++i) {
      Interval ri{rb[i], rb[i + 1]};
      for (std::size_t j = 0; j <= i; ++j) {
        Interval rj{rb[j], rb[j + 1]};
        double v = mass2d(*m.cov_m_measure, ri, rj);
        latent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        latent(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
    }
    auto [L, jit] = cholesky_with_jitter(latent);
    m.chol = std::move(L);
    m.jitter = jit;
  }
  m.cumulative = true;
  fill_cross_blocks(m);
}

void build_independent(GaussianGridModel& m) {
  const std::size_t ng = m.grid.size(), nm = m.cells.size();
  const std::size_t L = ng + nm;
  m.cov_z_fn = [](double x, double y) { return std::min(x, y); };
  m.cov_m_measure = std::make_shared<Measure2D>(Measure2D::diagonal(Measure1D::lebesgue()));
  m.kernel_eval = [](double, const Interval&) { return 0.0; };

  m.diag_scale.resize(static_cast<Eigen::Index>(L));
  double prev = 0.0;
  for (std::size_t i = 0; i < ng; ++i) {
    m.diag_scale(static_cast<Eigen::Index>(i)) = std::sqrt(m.grid[i] - prev);
    prev = m.grid[i];
  }
  for (std::size_t k = 0; k < nm; ++k)
    m.diag_scale(static_cast<Eigen::Index>(ng + k)) = std::sqrt(m.cells[k].length());

  m.map_z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ng), static_cast<Eigen::Index>(L));
  for (std::size_t i = 0; i < ng; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      m.map_z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  m.map_m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nm), static_cast<Eigen::Index>(L));
  for (std::size_t k = 0; k < nm; ++k)
    m.map_m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(ng + k)) = 1.0;
  fill_cross_blocks(m);
}

double min_primitive(double s, double t) {
  // iint_{[0,s]x[0,t]} min(x,y) dx dy
  if (s > t) std::swap(s, t);
  return 0.5 * s * s * t - s * s * s / 6.0;
}

void build_abs_continuous(GaussianGridModel& m, const ModelSpec& spec) {
  if (spec.cross != "zero" && spec.cross != "product" && spec.cross != "min")
    throw std::invalid_argument("model: cross must be zero, product or min");
  if (spec.quad_per_cell < 1) throw std::invalid_argument("model: quad_per_cell must be >= 1");
  m.cross = spec.cross;
  m.params["quad_per_cell"] = static_cast<double>(spec.quad_per_cell);
  const std::size_t ng = m.grid.size(), nm = m.cells.size();
  const std::size_t q = static_cast<std::size_t>(spec.quad_per_cell);

  const bool linear = spec.cross == "product";  // Z(t) = t xi, else Brownian Z
  auto cz = [linear](double x, double y) { return linear ? x * y : std::min(x, y); };
  m.cov_z_fn = cz;
  // M always integrates a Brownian-type density except in the linear case.
  auto cu = cz;
  const std::string cross = spec.cross;
  m.kernel_eval = [cross](double x, const Interval& A) {
    double a = A.lo, b = A.hi;
    if (cross == "zero") return 0.0;
    if (cross == "product") return x * 0.5 * (b * b - a * a);
    // int_A min(x, y) dy
    if (x <= a) return x * (b - a);
    if (x >= b) return 0.5 * (b * b - a * a);
    return 0.5 * (x * x - a * a) + x * (b - x);
  };
  if (linear)
    m.cov_m_measure = std::make_shared<Measure2D>(
        Measure2D::surface_increment([](double s, double t) { return 0.25 * s * s * t * t; }));
  else
    m.cov_m_measure = std::make_shared<Measure2D>(Measure2D::surface_increment(min_primitive));

  // Panel nodes carrying the density of M; latent = (Z at grid, U at nodes).
  std::vector<double> nodes;
  std::vector<double> weights;
  nodes.reserve(nm * q);
  for (const auto& c : m.cells) {
    double w = c.length() / static_cast<double>(q);
    for (std::size_t j = 0; j < q; ++j) {
      nodes.push_back(c.lo + (static_cast<double>(j) + 0.5) * w);
      weights.push_back(w);
    }
  }
  const std::size_t L = ng + nodes.size();
  auto cx = [cross](double x, double y) {
    if (cross == "zero") return 0.0;
    if (cross == "product") return x * y;
    return std::min(x, y);
  };
  Eigen::MatrixXd latent(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
  auto point = [&](std::size_t i) { return i < ng ? m.grid[i] : nodes[i - ng]; };
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double v;
      if (i < ng && j < ng)
        v = cz(point(i), point(j));
      else if (i >= ng && j >= ng)
        v = cu(point(i), point(j));
      else
        v = cx(point(i), point(j));
      latent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      latent(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  auto [Lf, jit] = cholesky_with_jitter(latent);
  m.chol = std::move(Lf);
  m.jitter = jit;

  m.map_z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ng), static_cast<Eigen::Index>(L));
  for (std::size_t i = 0; i < ng; ++i)
    m.map_z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
  m.map_m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nm), static_cast<Eigen::Index>(L));
  for (std::size_t k = 0; k < nm; ++k)
    for (std::size_t j = 0; j < q; ++j)
      m.map_m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(ng + k * q + j)) =
          weights[k * q + j];

  // Second-order blocks from the same latent covariance the sampler uses,
  // so empirical moments match them to Monte Carlo accuracy exactly.
  m.cov_zz = m.map_z * latent * m.map_z.transpose();
  m.cov_mm = m.map_m * latent * m.map_m.transpose();
  m.cov_zm = m.map_z * latent * m.map_m.transpose();
}

}  // namespace

std::pair<Eigen::MatrixXd, double> cholesky_with_jitter(const Eigen::MatrixXd& cov) {
  static const double schedule[] = {0.0, 1e-12, 1e-10, 1e-8};
  for (double j : schedule) {
    Eigen::MatrixXd boosted = cov;
    if (j > 0.0) boosted.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(boosted);
    if (llt.info() == Eigen::Success) return {Eigen::MatrixXd(llt.matrixL()), j};
  }
  throw FactorizationError("latent covariance failed Cholesky at every jitter level");
}

GaussianGridModel make_model(const ModelSpec& spec) {
  check_partition(spec.cells, spec.grid);
  GaussianGridModel m;
  m.family = spec.family;
  m.cells = spec.cells;
  m.grid = spec.grid;
  m.domain = Interval{spec.cells.front().lo, spec.cells.back().hi};

  if (spec.family == "brownian_wn" || spec.family == "fbm") {
    if (spec.family == "fbm" && !(spec.hurst > 0.5 && spec.hurst < 1.0))
      throw std::invalid_argument("model: fbm hurst must lie in (1/2, 1)");
    build_cumulative(m, spec);
  } else if (spec.family == "independent") {
    build_independent(m);
  } else if (spec.family == "abs_continuous") {
    build_abs_continuous(m, spec);
  } else {
    throw std::invalid_argument("model: unknown family " + spec.family);
  }
  return m;
}

GaussianGridModel make_uniform_model(const std::string& family, int n, double hurst,
                                     const std::string& cross) {
  if (n < 1) throw std::invalid_argument("model: n must be >= 1");
  ModelSpec spec;
  spec.family = family;
  spec.hurst = hurst;
  spec.cross = cross;
  // Same boundary arithmetic as the uniform partition scheme, so level
  // tags resolve to grid values exactly.
  std::vector<double> b(static_cast<std::size_t>(n) + 1);
  b[0] = 0.0;
  b[static_cast<std::size_t>(n)] = 1.0;
  for (int i = 1; i < n; ++i) b[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
  for (int j = 0; j < n; ++j)
    spec.cells.push_back(Interval{b[static_cast<std::size_t>(j)],
                                  b[static_cast<std::size_t>(j) + 1], true, j + 1 == n});
  std::vector<double> grid;
  for (const auto& c : spec.cells) {
    grid.push_back(c.lo);
    grid.push_back(c.midpoint());
  }
  grid.push_back(1.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  spec.grid = std::move(grid);
  return make_model(spec);
}

SampleBatch sample(const GaussianGridModel& model, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
  const std::size_t ng = model.grid.size(), nm = model.cells.size();
  const Eigen::Index latent_dim =
      model.chol.size() > 0 ? model.chol.rows() : model.diag_scale.size();

  SampleBatch batch;
  batch.z.resize(count, static_cast<Eigen::Index>(ng));
  batch.m.resize(count, static_cast<Eigen::Index>(nm));

  Eigen::MatrixXd xi(latent_dim, kSampleBlock);
  Eigen::MatrixXd lat;
  for (int s0 = 0, block = 0; s0 < count; s0 += kSampleBlock, ++block) {
    const int bs = std::min(kSampleBlock, count - s0);
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(block)));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int c = 0; c < bs; ++c)
      for (Eigen::Index r = 0; r < latent_dim; ++r) xi(r, c) = normal(rng);

    if (model.chol.size() > 0)
      lat.noalias() = model.chol * xi.leftCols(bs);
    else
      lat = model.diag_scale.asDiagonal() * xi.leftCols(bs);

    if (model.cumulative) {
      // Walk the refined masses cell by cell; Z at a cell boundary is the
      // left fold of the cell masses bit for bit.
      for (int c = 0; c < bs; ++c) {
        const int s = s0 + c;
        std::size_t gi = 0;
        double running = 0.0;
        for (std::size_t k = 0; k < nm; ++k) {
          double cellsum = 0.0;
          for (std::size_t j = model.cell_split[k]; j < model.cell_split[k + 1]; ++j) {
            while (gi < ng && model.grid_pos[gi] == j) {
              batch.z(s, static_cast<Eigen::Index>(gi)) = running + cellsum;
              ++gi;
            }
            cellsum += lat(static_cast<Eigen::Index>(j), c);
          }
          batch.m(s, static_cast<Eigen::Index>(k)) = cellsum;
          running += cellsum;
        }
        for (; gi < ng; ++gi) batch.z(s, static_cast<Eigen::Index>(gi)) = running;
      }
    } else {
      batch.z.middleRows(s0, bs).noalias() = (model.map_z * lat).transpose();
      batch.m.middleRows(s0, bs).noalias() = (model.map_m * lat).transpose();
    }
  }
  return batch;
}

std::vector<double> mc_stochastic_sums(const GaussianGridModel& model, const SampleBatch& batch,
                                       const std::vector<double>& tags) {
  if (tags.size() != model.cells.size())
    throw std::invalid_argument("mc_stochastic_sums: one tag per cell required");
  if (batch.z.cols() != static_cast<Eigen::Index>(model.grid.size()) ||
      batch.m.cols() != static_cast<Eigen::Index>(model.cells.size()))
    throw std::invalid_argument("mc_stochastic_sums: batch shape does not match model");
  std::vector<Eigen::Index> gidx;
  gidx.reserve(tags.size());
  for (double t : tags)
    gidx.push_back(static_cast<Eigen::Index>(exact_index(model.grid, t, "tag")));

  const int count = static_cast<int>(batch.z.rows());
  std::vector<double> sums(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    double acc = 0.0;
    for (std::size_t j = 0; j < tags.size(); ++j)
      acc += batch.z(s, gidx[j]) * batch.m(s, static_cast<Eigen::Index>(j));
    sums[static_cast<std::size_t>(s)] = acc;
  }
  return sums;
}

L2GapResult l2_gap(const std::vector<double>& sums_a, const std::vector<double>& sums_b) {
  if (sums_a.size() != sums_b.size() || sums_a.empty())
    throw std::invalid_argument("l2_gap: sums must be non-empty and equally sized");
  const std::size_t n = sums_a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = sums_a[i] - sums_b[i];
    mean += d * d;
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = sums_a[i] - sums_b[i];
    double dev = d * d - mean;
    ss += dev * dev;
  }
  L2GapResult r;
  r.gap = mean;
  r.se = n > 1 ? std::sqrt(ss / (static_cast<double>(n) - 1.0) / static_cast<double>(n)) : 0.0;
  return r;
}

namespace {

// Exact Var(sum_j Z(tag_j) M_j) from the covariance blocks via the fourth
// moment factorization of jointly Gaussian variables.
double discrete_sum_variance(const Eigen::MatrixXd& czz, const Eigen::MatrixXd& cmm,
                             const Eigen::MatrixXd& czm) {
  double acc = czz.cwiseProduct(cmm).sum();
  acc += czm.cwiseProduct(czm.transpose()).sum();
  return acc;
}

}  // namespace

MomentDiagnostics moment_checks(const GaussianGridModel& model, const SampleBatch& batch,
                                const std::vector<double>& tags,
                                const SelfIntegralReport& si_report,
                                const SelfIntegralReport& quasi_report, std::uint64_t tuple_seed) {
  if (si_report.verdict != Verdict::Converged || quasi_report.verdict != Verdict::Converged)
    throw std::logic_error(
        "moment_checks: both reports must be Converged; without a unique limit "
        "there is no target moment");
  if (tags.size() != model.cells.size())
    throw std::invalid_argument("moment_checks: one tag per cell required");
  if (tags.size() % 2 != 0)
    throw std::invalid_argument("moment_checks: even cell count required for the half-level");

  const auto sums = mc_stochastic_sums(model, batch, tags);
  const double N = static_cast<double>(sums.size());
  MomentDiagnostics d;
  d.target_mean = *si_report.value;

  d.mean = std::accumulate(sums.begin(), sums.end(), 0.0) / N;
  double ss = 0.0;
  for (double s : sums) ss += (s - d.mean) * (s - d.mean);
  d.var = N > 1 ? ss / (N - 1.0) : 0.0;
  d.se_mean = std::sqrt(d.var / N);
  d.se_var = d.var * std::sqrt(2.0 / (N - 1.0));

  const std::size_t nm = tags.size();
  std::vector<Eigen::Index> gidx;
  for (double t : tags) gidx.push_back(static_cast<Eigen::Index>(exact_index(model.grid, t, "tag")));

  Eigen::MatrixXd czz_t(nm, nm), czm_t(nm, nm);
  for (std::size_t a = 0; a < nm; ++a)
    for (std::size_t b = 0; b < nm; ++b) {
      czz_t(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          model.cov_zz(gidx[a], gidx[b]);
      czm_t(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          model.cov_zm(gidx[a], static_cast<Eigen::Index>(b));
    }
  for (std::size_t a = 0; a < nm; ++a) d.discrete_mean += czm_t(static_cast<Eigen::Index>(a),
                                                                static_cast<Eigen::Index>(a));
  d.discrete_var = discrete_sum_variance(czz_t, model.cov_mm, czm_t);

  // Level-n quadrature of C_Z against C_M plus the quasi limit is the
  // variance target; the Richardson term prices the remaining level gap.
  Eigen::MatrixXd cz_tags(nm, nm);
  for (std::size_t a = 0; a < nm; ++a)
    for (std::size_t b = 0; b < nm; ++b)
      cz_tags(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          model.cov_z_fn(tags[a], tags[b]);
  d.czcm_quad = cz_tags.cwiseProduct(model.cov_mm).sum();
  d.target_var = d.czcm_quad + *quasi_report.value;

  const std::size_t nc = nm / 2;
  Eigen::MatrixXd czz_c(nc, nc), cmm_c(nc, nc), czm_c(nc, nc);
  for (std::size_t a = 0; a < nc; ++a)
    for (std::size_t b = 0; b < nc; ++b) {
      czz_c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          model.cov_zz(gidx[2 * a], gidx[2 * b]);
      cmm_c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          model.cov_mm(static_cast<Eigen::Index>(2 * a), static_cast<Eigen::Index>(2 * b)) +
          model.cov_mm(static_cast<Eigen::Index>(2 * a), static_cast<Eigen::Index>(2 * b + 1)) +
          model.cov_mm(static_cast<Eigen::Index>(2 * a + 1), static_cast<Eigen::Index>(2 * b)) +
          model.cov_mm(static_cast<Eigen::Index>(2 * a + 1), static_cast<Eigen::Index>(2 * b + 1));
      czm_c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          model.cov_zm(gidx[2 * a], static_cast<Eigen::Index>(2 * b)) +
          model.cov_zm(gidx[2 * a], static_cast<Eigen::Index>(2 * b + 1));
    }
  const double var_half = discrete_sum_variance(czz_c, cmm_c, czm_c);
  d.richardson_slack = 2.5 * std::abs(d.discrete_var - var_half);

  d.mean_ok = std::abs(d.mean - d.target_mean) <=
              3.0 * d.se_mean + std::abs(d.discrete_mean - d.target_mean);
  d.var_ok = std::abs(d.var - d.target_var) <= 3.0 * d.se_var + d.richardson_slack;

  // Fourth-moment spot checks on random coordinate tuples.
  const std::size_t ng = model.grid.size();
  std::mt19937_64 rng(derive_seed(tuple_seed, 0xf0f0u));
  std::uniform_int_distribution<std::size_t> pick(0, ng + nm - 1);
  auto column = [&](std::size_t i) {
    return i < ng ? batch.z.col(static_cast<Eigen::Index>(i))
                  : batch.m.col(static_cast<Eigen::Index>(i - ng));
  };
  auto pair_cov = [&](std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    if (j < ng) return model.cov_zz(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (i >= ng)
      return model.cov_mm(static_cast<Eigen::Index>(i - ng), static_cast<Eigen::Index>(j - ng));
    return model.cov_zm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - ng));
  };
  d.isserlis_max_z = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::size_t i1 = pick(rng), i2 = pick(rng), i3 = pick(rng), i4 = pick(rng);
    Eigen::ArrayXd prod = column(i1).array() * column(i2).array() * column(i3).array() *
                          column(i4).array();
    const double pm = prod.mean();
    const double psd = std::sqrt((prod - pm).square().sum() / std::max(1.0, N - 1.0));
    const double expected = pair_cov(i1, i2) * pair_cov(i3, i4) +
                            pair_cov(i1, i3) * pair_cov(i2, i4) +
                            pair_cov(i1, i4) * pair_cov(i2, i3);
    const double se = psd / std::sqrt(N);
    double z;
    if (se < 1e-300)
      z = std::abs(pm - expected) <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    else
      z = std::abs(pm - expected) / se;
    d.isserlis_max_z = std::max(d.isserlis_max_z, z);
  }
  d.isserlis_ok = d.isserlis_max_z <= 5.0;
  return d;
}

double abs_continuous_reference(const GaussianGridModel& model, const Interval& D) {
  check_interval(D);
  Fn1 diag;
  if (model.family == "independent") {
    diag = [](double) { return 0.0; };
  } else if (model.family == "fbm") {
    const double h = model.params.at("hurst");
    diag = [h](double x) { return h * std::pow(x, 2.0 * h - 1.0); };
  } else if (model.family == "abs_continuous") {
    if (model.cross == "zero")
      diag = [](double) { return 0.0; };
    else if (model.cross == "product")
      diag = [](double x) { return x * x; };
    else
      diag = [](double x) { return x; };
  } else {
    throw std::logic_error(
        "abs_continuous_reference: the cross covariance of " + model.family +
        " has no continuous diagonal version");
  }
  return integrate_adaptive(diag, D.lo, D.hi, 1e-11);
}

KernelHandle model_kernel(const GaussianGridModel& model) {
  KernelHandle k;
  k.name = "model:" + model.family + (model.cross.empty() ? "" : ":" + model.cross);
  k.domain = model.domain;
  k.params = model.params;
  k.cov_z = model.cov_z_fn;
  k.cov_m = model.cov_m_measure;
  Interval dom = model.domain;
  auto fn = model.kernel_eval;
  k.eval = [dom, fn](double x, const Interval& A) {
    check_interval(A);
    if (!(x >= dom.lo && x <= dom.hi) || A.lo < dom.lo || A.hi > dom.hi)
      throw std::invalid_argument("model kernel: argument outside the domain");
    return fn(x, A);
  };
  return k;
}

}  // namespace fmk
