#include "fmk/selfint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fmk/rng.hpp"

namespace fmk {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "Converged";
    case Verdict::TagDependent: return "TagDependent";
    case Verdict::Unbounded: return "Unbounded";
  }
  return "?";
}

std::vector<int> doubling_levels(int n_max) {
  if (n_max < 8) throw std::invalid_argument("doubling_levels: n_max must be >= 8");
  std::vector<int> levels;
  for (int n = 4; n <= n_max; n *= 2) levels.push_back(n);
  return levels;
}

double aitken_extrapolate(const std::vector<double>& s) {
  std::size_t m = s.size();
  if (m < 3) return s.back();
  double d1 = s[m - 1] - s[m - 2];
  double d0 = s[m - 2] - s[m - 3];
  double denom = d1 - d0;
  if (std::abs(denom) < 1e-14) return s.back();
  double e = s[m - 1] - d1 * d1 / denom;
  if (std::abs(e - s.back()) > 6.0 * std::abs(d1)) return s.back();
  return e;
}

std::vector<RiemannSystem> default_ensemble(const Interval& domain, std::uint64_t seed) {
  std::vector<RiemannSystem> out;
  std::uint64_t idx = 0;
  for (SchemeKind sk : {SchemeKind::Uniform, SchemeKind::Dyadic, SchemeKind::Random})
    for (TagKind tk : {TagKind::Left, TagKind::Right, TagKind::Midpoint, TagKind::Random})
      out.push_back(make_system(domain, sk, tk, derive_seed(seed, idx++)));
  return out;
}

std::vector<RiemannSystem> default_quasi_ensemble(const Interval& domain, std::uint64_t seed) {
  return {make_system(domain, SchemeKind::Uniform, TagKind::Left),
          make_system(domain, SchemeKind::Uniform, TagKind::Midpoint),
          make_system(domain, SchemeKind::Random, TagKind::Random, derive_seed(seed, 91))};
}

namespace {

constexpr std::size_t kUnboundedWindow = 5;

bool growing_tail(const std::vector<std::pair<int, double>>& pts) {
  if (pts.size() < kUnboundedWindow) return false;
  std::size_t start = pts.size() - kUnboundedWindow;
  for (std::size_t i = start; i + 1 < pts.size(); ++i)
    if (!(std::abs(pts[i].second) < std::abs(pts[i + 1].second))) return false;
  return true;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return v[m];
  return 0.5 * (v[m - 1] + v[m]);
}

// shared verdict logic once traces are filled in
void finish_report(SelfIntegralReport& rep) {
  bool any_unbounded = false;
  bool all_cauchy = true;
  std::vector<double> finals, extrapolated;
  for (auto& tr : rep.traces) {
    std::vector<double> sums;
    sums.reserve(tr.points.size());
    for (auto& [n, s] : tr.points) sums.push_back(s);
    tr.final_sum = sums.back();
    tr.extrapolated = aitken_extrapolate(sums);
    tr.cauchy = sums.size() >= 2 && std::abs(sums.back() - sums[sums.size() - 2]) <= rep.tol;
    tr.flagged_unbounded = growing_tail(tr.points) && std::abs(tr.final_sum) > rep.bound;
    any_unbounded = any_unbounded || tr.flagged_unbounded;
    all_cauchy = all_cauchy && tr.cauchy;
    finals.push_back(tr.final_sum);
    extrapolated.push_back(tr.extrapolated);
    rep.system_values[tr.label] = tr.final_sum;
  }
  double spread = finals.empty() ? 0.0
                                 : *std::max_element(finals.begin(), finals.end()) -
                                       *std::min_element(finals.begin(), finals.end());
  if (any_unbounded) {
    rep.verdict = Verdict::Unbounded;
  } else if (all_cauchy && spread <= rep.tol) {
    rep.verdict = Verdict::Converged;
    rep.value = median(extrapolated);
  } else {
    rep.verdict = Verdict::TagDependent;
  }
}

}  // namespace

SelfIntegralReport estimate_self_integral(const KernelHandle& K, const Interval& D,
                                          const std::vector<RiemannSystem>& ensemble, int n_max,
                                          double tol, double bound_factor) {
  if (ensemble.empty()) throw std::invalid_argument("estimate_self_integral: empty ensemble");
  if (!(tol > 0.0)) throw std::invalid_argument("estimate_self_integral: tol must be positive");
  check_interval(D);

  SelfIntegralReport rep;
  rep.kernel_name = K.name;
  rep.domain = D;
  rep.tol = tol;
  rep.n_max = n_max;
  rep.bound = bound_factor * local_bound_probe(K, D, D, 33, 6);

  auto levels = doubling_levels(n_max);
  for (const auto& sys : ensemble) {
    SystemTrace tr;
    tr.label = sys.label;
    for (int n : levels) {
      Level lv = build_level(sys, n);
      tr.points.emplace_back(n, kernel_riemann_sum(K, lv));
    }
    rep.traces.push_back(std::move(tr));
  }
  finish_report(rep);
  return rep;
}

SelfIntegralReport estimate_quasi_self_integral(const SecondOrderKernel& K2, const Interval& A,
                                                const Interval& B,
                                                const std::vector<RiemannSystem>& ensemble_a,
                                                const std::vector<RiemannSystem>& ensemble_b,
                                                int n_max, double tol, double bound_factor) {
  if (ensemble_a.empty() || ensemble_b.empty())
    throw std::invalid_argument("estimate_quasi_self_integral: empty ensemble");
  if (!(tol > 0.0))
    throw std::invalid_argument("estimate_quasi_self_integral: tol must be positive");
  check_interval(A);
  check_interval(B);

  SelfIntegralReport rep;
  rep.kernel_name = K2.base.name;
  rep.domain = A;
  rep.domain_b = B;
  rep.tol = tol;
  rep.n_max = n_max;
  rep.bound = bound_factor * local_bound_probe(K2.base, A, A, 33, 6) *
              local_bound_probe(K2.base, B, B, 33, 6);

  auto levels = doubling_levels(n_max);
  for (const auto& sa : ensemble_a) {
    for (const auto& sb : ensemble_b) {
      SystemTrace tr;
      tr.label = sa.label + "x" + sb.label;
      for (int n : levels) {
        Level la = build_level(sa, n);
        Level lb = build_level(sb, n);
        tr.points.emplace_back(n, double_riemann_sum(K2, la, lb));
      }
      rep.traces.push_back(std::move(tr));
    }
  }
  finish_report(rep);
  return rep;
}

AdditivityResult additivity_check(const KernelHandle& K, const Interval& D, double c, int n_max,
                                  double tol, std::uint64_t seed) {
  check_interval(D);
  if (!(c > D.lo && c < D.hi))
    throw std::invalid_argument("additivity_check: split point must be interior");

  Interval left{D.lo, c}, right{c, D.hi};
  auto run = [&](const Interval& part, std::uint64_t tag) {
    auto rep = estimate_self_integral(K, part, default_ensemble(part, derive_seed(seed, tag)),
                                      n_max, tol);
    if (rep.verdict != Verdict::Converged)
      throw std::logic_error("additivity_check: self-integral over [" + std::to_string(part.lo) +
                             ", " + std::to_string(part.hi) + "] is " + to_string(rep.verdict));
    return *rep.value;
  };
  AdditivityResult r;
  r.left = run(left, 1);
  r.right = run(right, 2);
  r.whole = run(D, 3);
  return r;
}

}  // namespace fmk
