#include <doctest.h>

#include <cmath>
#include <numbers>

#include "core/quadrature.hpp"

using namespace ritherm;

namespace {

// Composite Simpson with n (even) panels.
template <class F>
double simpson(F f, double a, double b, std::size_t n) {
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + static_cast<double>(k) * h);
  return s * h / 3.0;
}

double naive_sinc2(double x) {
  const double s = std::sin(x) / x;
  return s * s;
}

}  // namespace

TEST_CASE("sinc squared values") {
  CHECK(sinc2(0.0) == 1.0);
  CHECK(sinc2(2.0) == doctest::Approx(0.20671).epsilon(1e-4));
  CHECK(sinc2(2.0) == doctest::Approx(std::pow(std::sin(2.0) / 2.0, 2)).epsilon(1e-15));
  CHECK(sinc2(2.0) <= 0.25);
  CHECK(sinc2(std::numbers::pi) <= 1e-30);
  CHECK(sinc2(-1.7) == sinc2(1.7));
}

TEST_CASE("sinc squared near the origin is smooth") {
  for (double x : {1e-9, 1e-6, 5e-5, 9.9e-5, 1.01e-4, 1e-3}) {
    CHECK(sinc2(x) == doctest::Approx(naive_sinc2(x)).epsilon(1e-13));
    CHECK(sinc2(x) <= 1.0);
  }
}

TEST_CASE("sinc squared bounds") {
  for (double x = 0.01; x < 50.0; x *= 1.07) {
    CHECK(sinc2(x) <= 1.0 / (x * x) + 1e-15);
    CHECK(sinc2(x) >= 1.0 - x * x / 2.0 - 1e-15);
  }
  CHECK(sinc2(0.1) >= 1.0 - 0.005);
}

TEST_CASE("integral of sinc squared against Simpson") {
  for (double a : {0.3, std::numbers::pi / 2.0, 2.0, 7.5, 31.4, 200.0}) {
    const double oracle = simpson([](double x) { return sinc2(x); }, -a, a, 1000000);
    CHECK(sinc_square_integral(a) == doctest::Approx(oracle).epsilon(1e-10));
  }
  // Total mass pi.
  CHECK(sinc_square_integral(1e5) == doctest::Approx(std::numbers::pi).epsilon(1e-4));
  CHECK(sinc_square_integral(std::numbers::pi / 2.0) >= 2.43);
}

TEST_CASE("oscillatory integrand with a smooth weight") {
  auto f = [](double x) { return sinc2(x) / (1.0 + std::exp(-0.7 * (2.0 + x / 5.0))); };
  const double oracle = simpson(f, -12.0, 19.0, 1000000);
  CHECK(integrate_oscillatory(f, -12.0, 19.0) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(integrate_oscillatory(f, 3.0, 3.0) == 0.0);
  CHECK(integrate_oscillatory(f, 19.0, -12.0) == doctest::Approx(-oracle).epsilon(1e-10));
}
