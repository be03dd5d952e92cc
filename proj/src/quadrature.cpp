#include "fmk/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace fmk {

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const Fn1& f, double a, double fa, double b, double fb, double m, double fm,
             double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(a, fa, m, fm, flm);
  double right = simpson(m, fm, b, fb, frm);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const Fn1& f, double a, double b, double abs_tol, int max_depth) {
  if (!(a <= b)) throw std::invalid_argument("integrate_adaptive: a > b");
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = simpson(a, fa, b, fb, fm);
  return adapt(f, a, fa, b, fb, m, fm, whole, abs_tol, max_depth);
}

double integrate_tanh_sinh(const Fn1& f, double a, double b, double rel_tol, int max_level) {
  if (!(a <= b)) throw std::invalid_argument("integrate_tanh_sinh: a > b");
  if (a == b) return 0.0;
  const double c = 0.5 * (a + b), h0 = 0.5 * (b - a);
  const double pi_half = 1.5707963267948966;
  const double tmax = 3.9;  // tanh(pi/2 sinh 3.9) is 1 to double precision

  // x(t) = c + h0 tanh(pi/2 sinh t); w(t) = h0 (pi/2) cosh t / cosh^2(pi/2 sinh t)
  auto node = [&](double t, double& x, double& w) {
    double s = pi_half * std::sinh(t);
    double ch = std::cosh(s);
    x = c + h0 * std::tanh(s);
    w = h0 * pi_half * std::cosh(t) / (ch * ch);
  };

  double x0, w0;
  node(0.0, x0, w0);
  double step = 1.0;
  double sum = w0 * f(x0);
  for (double t = 1.0; t <= tmax; t += 1.0) {  // the rest of the level-0 grid
    for (double sgn : {1.0, -1.0}) {
      double x, w;
      node(sgn * t, x, w);
      if (x <= a || x >= b || w == 0.0) continue;
      sum += w * f(x);
    }
  }
  double result = sum * step;

  for (int level = 1; level <= max_level; ++level) {
    step *= 0.5;
    // add the new (odd-index) nodes for this level
    for (double t = step; t <= tmax; t += 2.0 * step) {
      for (double sgn : {1.0, -1.0}) {
        double x, w;
        node(sgn * t, x, w);
        if (x <= a || x >= b) continue;  // underflowed to an endpoint
        if (w == 0.0) continue;
        sum += w * f(x);
      }
    }
    double prev = result;
    result = sum * step;
    if (level >= 3 && std::abs(result - prev) <= rel_tol * (std::abs(result) + 1e-300)) break;
  }
  return result;
}

double integrate_panels(const Fn1& f, double a, double b, int n) {
  if (n <= 0) throw std::invalid_argument("integrate_panels: n must be positive");
  if (a == b) return 0.0;
  double h = (b - a) / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += f(a + (i + 0.5) * h);
  return acc * h;
}

}  // namespace fmk
