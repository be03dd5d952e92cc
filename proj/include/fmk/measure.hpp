#pragma once
#include <functional>
#include <vector>

#include "fmk/interval.hpp"

namespace fmk {

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

// Finite signed measure on an interval of the line. Four representations:
//   Lebesgue   scale * dx
//   Density    f(x) dx, optionally with a registered antiderivative F
//              (register one when f has integrable singularities; without it
//              masses fall back to adaptive quadrature and f must be finite)
//   Atomic     finite list of point masses
//   Sum        signed combination of parts
class Measure1D {
 public:
  enum class Kind { Lebesgue, Density, Atomic, Sum };

  static Measure1D lebesgue(double scale = 1.0);
  static Measure1D density(std::function<double(double)> f);
  static Measure1D density(std::function<double(double)> f,
                           std::function<double(double)> antiderivative);
  static Measure1D atoms(std::vector<Atom> atoms);
  static Measure1D signed_sum(std::vector<Measure1D> parts);

  Kind kind() const { return kind_; }
  const std::vector<Atom>& atom_list() const { return atoms_; }

  friend double mass(const Measure1D& mu, const Interval& I);
  friend double total_variation_estimate(const Measure1D& mu, const Interval& I, int depth);

 private:
  Measure1D() = default;
  Kind kind_ = Kind::Lebesgue;
  double scale_ = 1.0;
  std::function<double(double)> density_;
  std::function<double(double)> antideriv_;
  std::vector<Atom> atoms_;
  std::vector<Measure1D> parts_;
};

// mu(I), honoring endpoint inclusion for atoms. Degenerate intervals carry
// atom mass only.
double mass(const Measure1D& mu, const Interval& I);

// Lower bound for |mu|(I): sum of |mass| over the 2^depth dyadic subcells
// of I. Non-decreasing in depth; equals |mu|(I) in the limit.
double total_variation_estimate(const Measure1D& mu, const Interval& I, int depth);

// Finite signed measure on a rectangle of the plane.
//   Density          g(x, y) dx dy
//   Diagonal         image of a line measure nu under x -> (x, x):
//                    mass(A x B) = nu(A ∩ B)
//   Tensor           mu1 x mu2
//   SurfaceIncrement rectangle increments of a surface C(s, t):
//                    mass([a,b] x [c,d]) = C(b,d) - C(a,d) - C(b,c) + C(a,c)
//   Sum              signed combination of parts
class Measure2D {
 public:
  enum class Kind { Density, Diagonal, Tensor, SurfaceIncrement, Sum };

  static Measure2D density(std::function<double(double, double)> g);
  static Measure2D diagonal(Measure1D nu);
  static Measure2D tensor(Measure1D mu1, Measure1D mu2);
  static Measure2D surface_increment(std::function<double(double, double)> C);
  static Measure2D signed_sum(std::vector<Measure2D> parts);

  Kind kind() const { return kind_; }

  friend double mass2d(const Measure2D& m, const Interval& A, const Interval& B);

 private:
  Measure2D() = default;
  Kind kind_ = Kind::Density;
  std::function<double(double, double)> fn2_;  // density or surface
  std::vector<Measure1D> factors_;             // diagonal: [nu]; tensor: [mu1, mu2]
  std::vector<Measure2D> parts_;
};

double mass2d(const Measure2D& m, const Interval& A, const Interval& B);

// Lower bound for |m|(A x B) via the dyadic 2^depth x 2^depth grid.
double total_variation2d_estimate(const Measure2D& m, const Interval& A, const Interval& B,
                                  int depth);

// The 2^depth dyadic subcells of I: half-open, except the last inherits the
// right closure of I (and the first the left closure). Shared by the
// variation estimates and by kernel variation probes.
std::vector<Interval> dyadic_cells(const Interval& I, int depth);

}  // namespace fmk
