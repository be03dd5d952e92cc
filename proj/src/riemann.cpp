#include "fmk/riemann.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fmk/rng.hpp"

namespace fmk {

namespace {

const char* scheme_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::Uniform: return "uniform";
    case SchemeKind::Dyadic: return "dyadic";
    case SchemeKind::Random: return "random";
    case SchemeKind::AdversarialGeometric: return "adversarial_geometric";
  }
  return "?";
}

const char* tag_name(TagKind k) {
  switch (k) {
    case TagKind::Left: return "left";
    case TagKind::Right: return "right";
    case TagKind::Midpoint: return "midpoint";
    case TagKind::Random: return "random";
    case TagKind::NearRight: return "near_right";
  }
  return "?";
}

// cell boundaries (n+1 values, first = lo, last = hi exactly)
std::vector<double> boundaries(const Interval& D, const PartitionScheme& s, int n) {
  std::vector<double> b(static_cast<std::size_t>(n) + 1);
  b.front() = D.lo;
  b.back() = D.hi;
  double len = D.length();
  switch (s.kind) {
    case SchemeKind::Uniform:
      for (int i = 1; i < n; ++i) b[i] = D.lo + len * (static_cast<double>(i) / n);
      break;
    case SchemeKind::Dyadic: {
      int k = 0;
      while ((1 << (k + 1)) <= n) ++k;
      int coarse = 1 << k;
      int halved = n - coarse;  // leftmost coarse cells that get split in two
      int idx = 1;
      for (int i = 0; i < coarse; ++i) {
        double a = D.lo + len * (static_cast<double>(i) / coarse);
        double c = D.lo + len * (static_cast<double>(i + 1) / coarse);
        if (i < halved) b[idx++] = 0.5 * (a + c);
        if (i + 1 < coarse) b[idx++] = c;
      }
      break;
    }
    case SchemeKind::Random: {
      std::mt19937_64 rng(derive_seed(s.seed, static_cast<std::uint64_t>(n)));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> g(static_cast<std::size_t>(n));
      double total = 0.0;
      for (auto& gi : g) {
        gi = u(rng);
        total += gi;
      }
      double acc = 0.0;
      for (int i = 1; i < n; ++i) {
        acc += len * (0.1 / n + 0.9 * g[static_cast<std::size_t>(i - 1)] / total);
        b[i] = D.lo + acc;
      }
      break;
    }
    case SchemeKind::AdversarialGeometric: {
      double small = std::exp(static_cast<double>(-n));
      if (small == 0.0)
        throw std::invalid_argument("adversarial_geometric: cell width underflows at n=" +
                                    std::to_string(n));
      if ((n - 1) * small >= len)
        throw std::invalid_argument("adversarial_geometric: short cells exceed the domain");
      for (int i = 1; i < n; ++i) b[i] = D.lo + i * small;
      break;
    }
  }
  for (int i = 0; i < n; ++i)
    if (!(b[i] < b[i + 1]))
      throw std::invalid_argument("partition produced an empty cell at n=" + std::to_string(n));
  return b;
}

void append_level(const RiemannSystem& sys, int n, Level& out) {
  if (!sys.parts.empty()) {
    for (const auto& p : sys.parts) append_level(p, n, out);
    return;
  }
  if (n < 1) throw std::invalid_argument("build_level: n must be >= 1");
  check_interval(sys.domain);
  if (sys.domain.degenerate()) throw std::invalid_argument("build_level: degenerate domain");

  auto b = boundaries(sys.domain, sys.scheme, n);
  std::mt19937_64 tag_rng(derive_seed(sys.tags.seed ^ 0x7474u, static_cast<std::uint64_t>(n)));
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::size_t base = out.cells.size();
  out.part_offsets.push_back(base);
  for (int j = 0; j < n; ++j) {
    Interval cell{b[j], b[j + 1], true, j + 1 == n};
    double tag = cell.lo;
    switch (sys.tags.kind) {
      case TagKind::Left:
        tag = cell.lo;
        break;
      case TagKind::Right:
        tag = cell.closed_right ? cell.hi : std::nextafter(cell.hi, cell.lo);
        break;
      case TagKind::Midpoint:
        tag = cell.midpoint();
        break;
      case TagKind::Random: {
        tag = cell.lo + u(tag_rng) * cell.length();
        if (!(tag < cell.hi)) tag = std::nextafter(cell.hi, cell.lo);
        if (tag < cell.lo) tag = cell.lo;
        break;
      }
      case TagKind::NearRight: {
        double ell = cell.length();
        tag = cell.hi - ell * ell;
        if (!(tag > cell.lo) || !(tag < cell.hi)) tag = cell.midpoint();
        break;
      }
    }
    out.cells.push_back(cell);
    out.tags.push_back(tag);
  }
}

}  // namespace

RiemannSystem make_system(const Interval& domain, SchemeKind scheme, TagKind tags,
                          std::uint64_t seed, std::string label) {
  check_interval(domain);
  RiemannSystem s;
  s.domain = domain;
  s.scheme.kind = scheme;
  s.scheme.seed = seed;
  s.tags.kind = tags;
  s.tags.seed = seed;
  s.label = label.empty() ? std::string(scheme_name(scheme)) + "/" + tag_name(tags)
                          : std::move(label);
  return s;
}

Level build_level(const RiemannSystem& sys, int n) {
  Level out;
  append_level(sys, n, out);
  out.part_offsets.push_back(out.cells.size());
  return out;
}

double kernel_riemann_sum(const KernelHandle& K, const Level& level) {
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < level.part_offsets.size(); ++p) {
    double part = 0.0;
    for (std::size_t j = level.part_offsets[p]; j < level.part_offsets[p + 1]; ++j)
      part += K.eval(level.tags[j], level.cells[j]);
    total += part;
  }
  return total;
}

double double_riemann_sum(const SecondOrderKernel& K2, const Level& a, const Level& b) {
  double total = 0.0;
  for (std::size_t j = 0; j < a.cells.size(); ++j) {
    double row = 0.0;
    for (std::size_t k = 0; k < b.cells.size(); ++k)
      row += eval_second_order(K2, a.tags[j], b.tags[k], a.cells[j], b.cells[k]);
    total += row;
  }
  return total;
}

RiemannSystem merge_systems(const RiemannSystem& a, const RiemannSystem& b) {
  check_interval(a.domain);
  check_interval(b.domain);
  const RiemannSystem* lo = &a;
  const RiemannSystem* hi = &b;
  if (b.domain.hi == a.domain.lo) {
    lo = &b;
    hi = &a;
  } else if (a.domain.hi != b.domain.lo) {
    throw std::invalid_argument("merge_systems: domains must touch at one endpoint");
  }
  RiemannSystem m;
  m.domain = Interval{lo->domain.lo, hi->domain.hi};
  m.scheme = lo->scheme;
  m.tags = lo->tags;
  m.label = "merge(" + lo->label + "," + hi->label + ")";
  m.parts = {*lo, *hi};
  return m;
}

double integrate_riemann(const Measure1D& mu, const std::function<double(double)>& f,
                         const Interval& I, const RiemannSystem& sys, int n) {
  if (!f) throw std::invalid_argument("integrate_riemann needs a callable");
  RiemannSystem local = sys;
  local.domain = I;
  local.parts.clear();
  Level level = build_level(local, n);
  double acc = 0.0;
  for (std::size_t j = 0; j < level.cells.size(); ++j)
    acc += f(level.tags[j]) * mass(mu, level.cells[j]);
  return acc;
}

}  // namespace fmk
