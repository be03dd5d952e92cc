#pragma once

namespace fmk {

// One-dimensional interval with explicit endpoint inclusion flags.
// Default-constructed flags give a closed interval [lo, hi]; partition
// cells are built half-open [lo, hi) except the rightmost one.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool closed_left = true;
  bool closed_right = true;

  double length() const { return hi - lo; }
  double midpoint() const { return lo + 0.5 * (hi - lo); }
  bool degenerate() const { return lo == hi; }
  bool empty() const { return lo > hi || (lo == hi && !(closed_left && closed_right)); }

  bool contains(double x) const {
    if (x < lo || x > hi) return false;
    if (x == lo && !closed_left) return false;
    if (x == hi && !closed_right) return false;
    return true;
  }
};

inline Interval closed(double lo, double hi) { return {lo, hi, true, true}; }
inline Interval half_open(double lo, double hi) { return {lo, hi, true, false}; }

// Throws std::invalid_argument on non-finite endpoints or lo > hi.
void check_interval(const Interval& I);

// Set intersection; returns an interval with empty() == true when disjoint.
Interval intersect(const Interval& a, const Interval& b);

}  // namespace fmk
