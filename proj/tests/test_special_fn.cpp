#include <doctest.h>

#include <cmath>
#include <limits>

#include "fedmdm/errors.hpp"
#include "fedmdm/special_fn.hpp"
#include "oracles.hpp"

using fedmdm::special_fn::digamma;
using fedmdm::special_fn::log_gamma;

namespace {

std::vector<double> sweep_points() {
  std::vector<double> xs;
  for (int i = 0; i <= 2800; ++i) xs.push_back(std::pow(10.0, -6.0 + 14.0 * i / 2800.0));
  for (double c : {1.0, 2.0}) {
    for (double d = 1e-12; d < 0.5; d *= 3.7) {
      xs.push_back(c + d);
      xs.push_back(c - d);
    }
  }
  for (double x : {0.5, 1.5, 2.5, 3.0, 9.999, 10.0, 10.001, 1e8}) xs.push_back(x);
  return xs;
}

}  // namespace

TEST_CASE("log_gamma exact values") {
  CHECK(log_gamma(1.0) == 0.0);
  CHECK(log_gamma(2.0) == 0.0);
  CHECK(log_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-15));
  CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(M_PI)).epsilon(1e-15));
}

TEST_CASE("digamma reference values") {
  CHECK(std::abs(digamma(1.0) + 0.57721566490153286) < 1e-14);
  CHECK(std::abs(digamma(2.0) - digamma(1.0) - 1.0) < 1e-14);
  const double x = 1e6;
  CHECK(std::abs(digamma(x) - (std::log(x) - 0.5 / x)) < 1e-9);
}

TEST_CASE("non-positive and non-finite arguments are domain errors") {
  for (double bad : {0.0, -1.0, -0.5, std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()}) {
    CHECK_THROWS_AS(log_gamma(bad), fedmdm::DomainError);
    CHECK_THROWS_AS(digamma(bad), fedmdm::DomainError);
  }
}

TEST_CASE("log_gamma relative error against MPFR over [1e-6, 1e8]") {
  double worst = 0.0;
  double worst_x = 0.0;
  for (double x : sweep_points()) {
    const double ref = oracle::lgamma_ref(x);
    const double err = std::abs(log_gamma(x) - ref) / std::abs(ref);
    if (err > worst) {
      worst = err;
      worst_x = x;
    }
  }
  INFO("worst x = " << worst_x);
  CHECK(worst <= 1e-12);
}

TEST_CASE("digamma absolute error against MPFR over [1e-6, 1e8]") {
  double worst = 0.0;
  double worst_x = 0.0;
  for (double x : sweep_points()) {
    const double err = std::abs(digamma(x) - oracle::digamma_ref(x));
    if (err > worst) {
      worst = err;
      worst_x = x;
    }
  }
  INFO("worst x = " << worst_x);
  CHECK(worst <= 1e-10);
}

TEST_CASE("recurrences hold on [0.1, 100]") {
  double lg_worst = 0.0;
  double dg_worst = 0.0;
  for (int i = 0; i <= 5000; ++i) {
    const double x = 0.1 + (100.0 - 0.1) * i / 5000.0;
    lg_worst = std::max(lg_worst, std::abs(log_gamma(x + 1) - log_gamma(x) - std::log(x)));
    dg_worst = std::max(dg_worst, std::abs(digamma(x + 1) - digamma(x) - 1.0 / x));
  }
  CHECK(lg_worst <= 1e-10);
  CHECK(dg_worst <= 1e-10);
}

TEST_CASE("digamma matches the derivative of log_gamma") {
  for (int i = 0; i <= 500; ++i) {
    const double x = 0.5 + (50.0 - 0.5) * i / 500.0;
    const double h = 1e-5 * x;
    const double fd = (log_gamma(x + h) - log_gamma(x - h)) / (2 * h);
    CHECK(std::abs(fd - digamma(x)) <= 1e-5);
  }
}
