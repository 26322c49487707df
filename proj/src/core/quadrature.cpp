#include "core/quadrature.hpp"

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "core/errors.hpp"

namespace ritherm {

double sinc2(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-4) {
    const double x2 = x * x;
    // (1 - x^2/6 + x^4/120)^2 truncated at x^4
    return 1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 45.0;
  }
  const double s = std::sin(x) / x;
  return s * s;
}

double integrate_oscillatory(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  require(std::isfinite(a) && std::isfinite(b), "integrate_oscillatory: limits must be finite");
  if (a == b) return 0.0;
  if (a > b) return -integrate_oscillatory(f, b, a, rel_tol);
  std::vector<double> cuts{a};
  const double first = std::floor(a / M_PI) + 1.0;
  for (double k = first; k * M_PI < b; k += 1.0)
    if (k * M_PI > a) cuts.push_back(k * M_PI);
  cuts.push_back(b);
  using Gk = boost::math::quadrature::gauss_kronrod<double, 15>;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (cuts[k + 1] <= cuts[k]) continue;
    double err = 0.0;
    total += Gk::integrate(f, cuts[k], cuts[k + 1], 20, rel_tol, &err);
  }
  return total;
}

double sinc_square_integral(double half_width, double rel_tol) {
  require(half_width >= 0.0, "sinc_square_integral: half width must be nonnegative");
  // Even integrand: integrate [0, a] and double.
  return 2.0 * integrate_oscillatory([](double u) { return sinc2(u); }, 0.0, half_width, rel_tol);
}

}  // namespace ritherm
