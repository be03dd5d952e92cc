#pragma once
#include <functional>

namespace fmk {

using Fn1 = std::function<double(double)>;

// Adaptive Simpson with absolute tolerance. f must be finite on [a, b].
double integrate_adaptive(const Fn1& f, double a, double b, double abs_tol = 1e-10, int max_depth = 48);

// tanh-sinh rule on (a, b); tolerates integrable endpoint singularities.
// Never evaluates f at a or b.
double integrate_tanh_sinh(const Fn1& f, double a, double b, double rel_tol = 1e-11, int max_level = 12);

// Fixed-panel midpoint rule with n equal panels (used where a deterministic
// cheap rule is wanted, e.g. kernels defined through a quadrature).
double integrate_panels(const Fn1& f, double a, double b, int n);

}  // namespace fmk
