#include "fmk/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fmk/quadrature.hpp"

namespace fmk {

namespace {

void check_args(const Interval& domain, double x, const Interval& A, const char* who) {
  if (!(x >= domain.lo && x <= domain.hi))
    throw std::invalid_argument(std::string(who) + ": point outside kernel domain");
  check_interval(A);
  if (A.lo < domain.lo || A.hi > domain.hi)
    throw std::invalid_argument(std::string(who) + ": set outside kernel domain");
}

double fbm_surface(double s, double t, double hh) {
  return 0.5 * (std::pow(s, hh) + std::pow(t, hh) - std::pow(std::abs(t - s), hh));
}

// sgn(u) |u|^{7/8}
double g78(double u) {
  double a = std::pow(std::abs(u), 0.875);
  return u < 0 ? -a : a;
}

}  // namespace

KernelHandle tensor_kernel(std::function<double(double)> f, Measure1D mu, Interval domain,
                           std::string label) {
  if (!f) throw std::invalid_argument("tensor_kernel needs a callable");
  check_interval(domain);
  KernelHandle k;
  k.name = std::move(label);
  k.domain = domain;
  auto fz = f;
  k.eval = [f = std::move(f), mu, domain, name = k.name](double x, const Interval& A) {
    check_args(domain, x, A, name.c_str());
    return f(x) * mass(mu, A);
  };
  k.cov_z = [fz](double x, double y) { return fz(x) * fz(y); };
  k.cov_m = std::make_shared<Measure2D>(Measure2D::tensor(mu, mu));
  return k;
}

KernelHandle brownian_wn_kernel() {
  KernelHandle k;
  k.name = "brownian_wn";
  k.domain = closed(0.0, 1.0);
  Interval domain = k.domain;
  k.eval = [domain](double x, const Interval& A) {
    check_args(domain, x, A, "brownian_wn");
    double hi = std::min(A.hi, x);
    return hi > A.lo ? hi - A.lo : 0.0;
  };
  k.cov_z = [](double x, double y) { return std::min(x, y); };
  k.cov_m = std::make_shared<Measure2D>(Measure2D::diagonal(Measure1D::lebesgue()));
  return k;
}

KernelHandle fbm_kernel(double hurst) {
  if (!(hurst > 0.5 && hurst < 1.0))
    throw std::invalid_argument("fbm_kernel: hurst must lie in (1/2, 1)");
  KernelHandle k;
  k.name = "fbm";
  k.domain = closed(0.0, 1.0);
  k.params["hurst"] = hurst;
  Interval domain = k.domain;
  double hh = 2.0 * hurst;
  k.eval = [domain, hh](double t, const Interval& A) {
    check_args(domain, t, A, "fbm");
    return 0.5 * (std::pow(A.hi, hh) - std::pow(A.lo, hh) + std::pow(std::abs(t - A.lo), hh) -
                  std::pow(std::abs(t - A.hi), hh));
  };
  k.cov_z = [hh](double s, double t) { return fbm_surface(s, t, hh); };
  k.cov_m = std::make_shared<Measure2D>(
      Measure2D::surface_increment([hh](double s, double t) { return fbm_surface(s, t, hh); }));
  return k;
}

KernelHandle orthogonal_kernel(Measure1D nu, std::string label) {
  KernelHandle k;
  k.name = std::move(label);
  k.domain = closed(0.0, 1.0);
  Interval domain = k.domain;
  k.eval = [nu, domain, name = k.name](double t, const Interval& A) {
    check_args(domain, t, A, name.c_str());
    return mass(nu, intersect(closed(0.0, t), A));
  };
  auto nuz = nu;
  k.cov_z = [nuz](double s, double t) { return mass(nuz, closed(0.0, std::min(s, t))); };
  k.cov_m = std::make_shared<Measure2D>(Measure2D::diagonal(nu));
  return k;
}

KernelHandle singular_kernel() {
  KernelHandle k;
  k.name = "singular";
  k.domain = closed(-1.0, 1.0);
  Interval domain = k.domain;
  k.eval = [domain](double x, const Interval& A) {
    check_args(domain, x, A, "singular");
    return (8.0 / 7.0) * (g78(A.hi - x) - g78(A.lo - x));
  };
  // C_Z(x, y) = ∫_{-1}^{1} |x-u|^{-1/8} |y-u|^{-1/8} du; numeric off the
  // diagonal (split at the singular points), closed form on it.
  k.cov_z = [](double x, double y) {
    if (x == y)
      return (4.0 / 3.0) * (std::pow(1.0 + x, 0.75) + std::pow(1.0 - x, 0.75));
    double lo = std::min(x, y), hi = std::max(x, y);
    auto f = [x, y](double u) {
      return std::pow(std::abs(x - u), -0.125) * std::pow(std::abs(y - u), -0.125);
    };
    double acc = 0.0;
    if (lo > -1.0) acc += integrate_tanh_sinh(f, -1.0, lo);
    acc += integrate_tanh_sinh(f, lo, hi);
    if (hi < 1.0) acc += integrate_tanh_sinh(f, hi, 1.0);
    return acc;
  };
  k.cov_m = std::make_shared<Measure2D>(Measure2D::diagonal(Measure1D::lebesgue()));
  return k;
}

KernelHandle psi_mu_kernel(std::function<double(double, double)> psi, Measure1D mu,
                           Interval mu_domain, KernelHandle base, int panels) {
  if (!psi) throw std::invalid_argument("psi_mu_kernel needs a callable");
  if (panels <= 0) throw std::invalid_argument("psi_mu_kernel: panels must be positive");
  check_interval(mu_domain);
  KernelHandle k;
  k.name = "psi_mu(" + base.name + ")";
  k.domain = base.domain;
  k.params = base.params;
  k.params["panels"] = static_cast<double>(panels);

  // precompute panel nodes and mu-masses once
  std::vector<double> nodes(panels), weights(panels);
  double w = mu_domain.length() / panels;
  for (int i = 0; i < panels; ++i) {
    double a = mu_domain.lo + i * w;
    double b = (i + 1 == panels) ? mu_domain.hi : mu_domain.lo + (i + 1) * w;
    nodes[i] = 0.5 * (a + b);
    weights[i] = mass(mu, Interval{a, b, true, false});
  }
  Interval domain = k.domain;
  k.eval = [psi = std::move(psi), base, nodes, weights, domain](double y, const Interval& A) {
    check_args(domain, y, A, "psi_mu");
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      acc += psi(nodes[i], y) * base.eval(nodes[i], A) * weights[i];
    return acc;
  };
  return k;
}

double eval_second_order(const SecondOrderKernel& k2, double x, double y, const Interval& A,
                         const Interval& B) {
  return k2.base.eval(y, A) * k2.base.eval(x, B);
}

double eval_increment(const IncrementKernel& k, double x, double y, const Interval& A) {
  if (x == y) return 0.0;
  return k.base.eval(x, A) - k.base.eval(y, A);
}

std::pair<double, double> iterated_integral_both_orders(
    const KernelHandle& K, const Measure1D& mu, const std::function<double(double, double)>& psi,
    const Interval& D_mu, const Interval& D_kernel, int n) {
  if (n <= 0) throw std::invalid_argument("iterated_integral_both_orders: n must be positive");
  check_interval(D_mu);
  check_interval(D_kernel);

  // midpoint partition of the kernel domain
  std::vector<Interval> cells(n);
  std::vector<double> tags(n);
  double len = D_kernel.length();
  for (int j = 0; j < n; ++j) {
    double a = D_kernel.lo + len * (static_cast<double>(j) / n);
    double b = (j + 1 == n) ? D_kernel.hi : D_kernel.lo + len * (static_cast<double>(j + 1) / n);
    cells[j] = Interval{a, b, true, j + 1 == n};
    tags[j] = 0.5 * (a + b);
  }

  // order A: compose first, then one kernel Riemann sum
  KernelHandle composed = psi_mu_kernel(psi, mu, D_mu, K);
  double order_a = 0.0;
  for (int j = 0; j < n; ++j) order_a += composed.eval(tags[j], cells[j]);

  // order B: weighted kernel sum inside (kernel held at the mu node),
  // mu-panels outside
  double order_b = 0.0;
  double wmu = D_mu.length() / n;
  for (int i = 0; i < n; ++i) {
    double a = D_mu.lo + i * wmu;
    double b = (i + 1 == n) ? D_mu.hi : D_mu.lo + (i + 1) * wmu;
    double x = 0.5 * (a + b);
    double inner = 0.0;
    for (int j = 0; j < n; ++j) inner += psi(x, tags[j]) * K.eval(x, cells[j]);
    order_b += inner * mass(mu, Interval{a, b, true, false});
  }
  return {order_a, order_b};
}

CauchySchwarzResult cauchy_schwarz_check(const KernelHandle& K, const std::vector<double>& points,
                                         const std::vector<Interval>& sets,
                                         const std::vector<double>& alpha,
                                         const std::vector<double>& beta) {
  if (!K.has_attached_pair())
    throw std::logic_error("cauchy_schwarz_check: kernel has no attached pair");
  if (points.size() != alpha.size() || sets.size() != beta.size())
    throw std::invalid_argument("cauchy_schwarz_check: size mismatch");

  CauchySchwarzResult r;
  double bilinear = 0.0;
  for (std::size_t j = 0; j < points.size(); ++j)
    for (std::size_t k = 0; k < sets.size(); ++k)
      bilinear += alpha[j] * beta[k] * K.eval(points[j], sets[k]);
  r.lhs = std::abs(bilinear);

  double qz = 0.0;
  for (std::size_t j = 0; j < points.size(); ++j)
    for (std::size_t k = 0; k < points.size(); ++k)
      qz += alpha[j] * alpha[k] * K.cov_z(points[j], points[k]);
  double qm = 0.0;
  for (std::size_t j = 0; j < sets.size(); ++j)
    for (std::size_t k = 0; k < sets.size(); ++k)
      qm += beta[j] * beta[k] * mass2d(*K.cov_m, sets[j], sets[k]);
  r.rhs = std::sqrt(std::max(0.0, qz)) * std::sqrt(std::max(0.0, qm));
  return r;
}

double kernel_tv_estimate(const KernelHandle& K, double x, const Interval& B, int depth) {
  double acc = 0.0;
  for (const auto& c : dyadic_cells(B, depth)) acc += std::abs(K.eval(x, c));
  return acc;
}

double local_bound_probe(const KernelHandle& K, const Interval& D, const Interval& B, int grid_n,
                         int depth) {
  if (grid_n < 2) throw std::invalid_argument("local_bound_probe: grid_n must be >= 2");
  double best = 0.0;
  for (int i = 0; i < grid_n; ++i) {
    double x = D.lo + D.length() * (static_cast<double>(i) / (grid_n - 1));
    if (i + 1 == grid_n) x = D.hi;
    best = std::max(best, kernel_tv_estimate(K, x, B, depth));
  }
  return best;
}

double attached_pair_bound(const KernelHandle& K, const Interval& D, const Interval& B, int grid_n,
                           int depth) {
  if (!K.has_attached_pair())
    throw std::logic_error("attached_pair_bound: kernel has no attached pair");
  if (grid_n < 2) throw std::invalid_argument("attached_pair_bound: grid_n must be >= 2");
  double mvar = std::sqrt(std::max(0.0, total_variation2d_estimate(*K.cov_m, B, B, depth)));
  double best = 0.0;
  for (int i = 0; i < grid_n; ++i) {
    double x = D.lo + D.length() * (static_cast<double>(i) / (grid_n - 1));
    if (i + 1 == grid_n) x = D.hi;
    best = std::max(best, std::sqrt(std::max(0.0, K.cov_z(x, x))));
  }
  return best * mvar;
}

}  // namespace fmk
