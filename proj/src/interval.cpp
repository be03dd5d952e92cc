#include "fmk/interval.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fmk {

void check_interval(const Interval& I) {
  if (!std::isfinite(I.lo) || !std::isfinite(I.hi))
    throw std::invalid_argument("interval endpoints must be finite");
  if (I.lo > I.hi)
    throw std::invalid_argument("interval has lo > hi: [" + std::to_string(I.lo) + ", " +
                                std::to_string(I.hi) + "]");
}

Interval intersect(const Interval& a, const Interval& b) {
  Interval r;
  if (a.lo > b.lo) {
    r.lo = a.lo;
    r.closed_left = a.closed_left;
  } else if (b.lo > a.lo) {
    r.lo = b.lo;
    r.closed_left = b.closed_left;
  } else {
    r.lo = a.lo;
    r.closed_left = a.closed_left && b.closed_left;
  }
  if (a.hi < b.hi) {
    r.hi = a.hi;
    r.closed_right = a.closed_right;
  } else if (b.hi < a.hi) {
    r.hi = b.hi;
    r.closed_right = b.closed_right;
  } else {
    r.hi = a.hi;
    r.closed_right = a.closed_right && b.closed_right;
  }
  if (r.lo > r.hi) return Interval{0.0, 0.0, false, false};
  return r;
}

}  // namespace fmk
