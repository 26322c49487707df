#pragma once

#include <functional>

namespace ritherm {

// (sin x / x)^2, series near the origin.
double sinc2(double x);

// Adaptive Gauss-Kronrod over [a, b] with breakpoints at the nonzero multiples of pi,
// where sinc^2-weighted integrands have their zeros.
double integrate_oscillatory(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-12);

// Integral of sinc^2 over [-a, a].
double sinc_square_integral(double half_width, double rel_tol = 1e-12);

}  // namespace ritherm
