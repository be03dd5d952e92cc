#include "fmk/measure.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "fmk/quadrature.hpp"

namespace fmk {

Measure1D Measure1D::lebesgue(double scale) {
  Measure1D m;
  m.kind_ = Kind::Lebesgue;
  m.scale_ = scale;
  return m;
}

Measure1D Measure1D::density(std::function<double(double)> f) {
  if (!f) throw std::invalid_argument("density measure needs a callable");
  Measure1D m;
  m.kind_ = Kind::Density;
  m.density_ = std::move(f);
  return m;
}

Measure1D Measure1D::density(std::function<double(double)> f,
                             std::function<double(double)> antiderivative) {
  if (!f || !antiderivative) throw std::invalid_argument("density measure needs callables");
  Measure1D m;
  m.kind_ = Kind::Density;
  m.density_ = std::move(f);
  m.antideriv_ = std::move(antiderivative);
  return m;
}

Measure1D Measure1D::atoms(std::vector<Atom> atoms) {
  for (const auto& a : atoms)
    if (!std::isfinite(a.location) || !std::isfinite(a.weight))
      throw std::invalid_argument("atom location/weight must be finite");
  Measure1D m;
  m.kind_ = Kind::Atomic;
  m.atoms_ = std::move(atoms);
  return m;
}

Measure1D Measure1D::signed_sum(std::vector<Measure1D> parts) {
  if (parts.empty()) throw std::invalid_argument("signed_sum needs at least one part");
  Measure1D m;
  m.kind_ = Kind::Sum;
  m.parts_ = std::move(parts);
  return m;
}

double mass(const Measure1D& mu, const Interval& I) {
  check_interval(I);
  if (I.empty()) return 0.0;
  switch (mu.kind_) {
    case Measure1D::Kind::Lebesgue:
      return mu.scale_ * I.length();
    case Measure1D::Kind::Density:
      if (I.degenerate()) return 0.0;
      if (mu.antideriv_) return mu.antideriv_(I.hi) - mu.antideriv_(I.lo);
      return integrate_adaptive(mu.density_, I.lo, I.hi);
    case Measure1D::Kind::Atomic: {
      double acc = 0.0;
      for (const auto& a : mu.atoms_)
        if (I.contains(a.location)) acc += a.weight;
      return acc;
    }
    case Measure1D::Kind::Sum: {
      double acc = 0.0;
      for (const auto& p : mu.parts_) acc += mass(p, I);
      return acc;
    }
  }
  return 0.0;
}

std::vector<Interval> dyadic_cells(const Interval& I, int depth) {
  check_interval(I);
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  std::size_t n = std::size_t{1} << depth;
  std::vector<Interval> cells;
  cells.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a = I.lo + I.length() * (static_cast<double>(i) / static_cast<double>(n));
    double b = (i + 1 == n) ? I.hi
                            : I.lo + I.length() * (static_cast<double>(i + 1) / static_cast<double>(n));
    Interval c{a, b, true, false};
    if (i == 0) c.closed_left = I.closed_left;
    if (i + 1 == n) c.closed_right = I.closed_right;
    cells.push_back(c);
  }
  return cells;
}

double total_variation_estimate(const Measure1D& mu, const Interval& I, int depth) {
  double acc = 0.0;
  for (const auto& c : dyadic_cells(I, depth)) acc += std::abs(mass(mu, c));
  return acc;
}

Measure2D Measure2D::density(std::function<double(double, double)> g) {
  if (!g) throw std::invalid_argument("density measure needs a callable");
  Measure2D m;
  m.kind_ = Kind::Density;
  m.fn2_ = std::move(g);
  return m;
}

Measure2D Measure2D::diagonal(Measure1D nu) {
  Measure2D m;
  m.kind_ = Kind::Diagonal;
  m.factors_.push_back(std::move(nu));
  return m;
}

Measure2D Measure2D::tensor(Measure1D mu1, Measure1D mu2) {
  Measure2D m;
  m.kind_ = Kind::Tensor;
  m.factors_.push_back(std::move(mu1));
  m.factors_.push_back(std::move(mu2));
  return m;
}

Measure2D Measure2D::surface_increment(std::function<double(double, double)> C) {
  if (!C) throw std::invalid_argument("surface_increment needs a callable");
  Measure2D m;
  m.kind_ = Kind::SurfaceIncrement;
  m.fn2_ = std::move(C);
  return m;
}

Measure2D Measure2D::signed_sum(std::vector<Measure2D> parts) {
  if (parts.empty()) throw std::invalid_argument("signed_sum needs at least one part");
  Measure2D m;
  m.kind_ = Kind::Sum;
  m.parts_ = std::move(parts);
  return m;
}

double mass2d(const Measure2D& m, const Interval& A, const Interval& B) {
  check_interval(A);
  check_interval(B);
  if (A.empty() || B.empty()) return 0.0;
  switch (m.kind_) {
    case Measure2D::Kind::Density: {
      if (A.degenerate() || B.degenerate()) return 0.0;
      auto outer = [&](double x) {
        return integrate_adaptive([&](double y) { return m.fn2_(x, y); }, B.lo, B.hi, 1e-11);
      };
      return integrate_adaptive(outer, A.lo, A.hi, 1e-9);
    }
    case Measure2D::Kind::Diagonal:
      return mass(m.factors_[0], intersect(A, B));
    case Measure2D::Kind::Tensor:
      return mass(m.factors_[0], A) * mass(m.factors_[1], B);
    case Measure2D::Kind::SurfaceIncrement:
      // endpoint inclusion is immaterial: surface measures here are atomless
      return m.fn2_(A.hi, B.hi) - m.fn2_(A.lo, B.hi) - m.fn2_(A.hi, B.lo) + m.fn2_(A.lo, B.lo);
    case Measure2D::Kind::Sum: {
      double acc = 0.0;
      for (const auto& p : m.parts_) acc += mass2d(p, A, B);
      return acc;
    }
  }
  return 0.0;
}

double total_variation2d_estimate(const Measure2D& m, const Interval& A, const Interval& B,
                                  int depth) {
  auto ca = dyadic_cells(A, depth);
  auto cb = dyadic_cells(B, depth);
  double acc = 0.0;
  for (const auto& a : ca)
    for (const auto& b : cb) acc += std::abs(mass2d(m, a, b));
  return acc;
}

}  // namespace fmk
