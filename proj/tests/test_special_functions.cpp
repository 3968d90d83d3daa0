#include <doctest.h>

#include <cmath>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "compolattice/special_functions.hpp"
#include "test_support.hpp"

using namespace compolattice;
using testsupport::kEulerGamma;
using testsupport::kPi;

TEST_CASE("digamma matches closed forms") {
  CHECK(digamma(1.0) == doctest::Approx(-kEulerGamma).epsilon(1e-13));
  CHECK(digamma(0.5) == doctest::Approx(-kEulerGamma - 2.0 * std::log(2.0)).epsilon(1e-13));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - kEulerGamma).epsilon(1e-13));
}

TEST_CASE("trigamma matches closed forms") {
  CHECK(trigamma(1.0) == doctest::Approx(kPi * kPi / 6.0).epsilon(1e-13));
  CHECK(trigamma(0.5) == doctest::Approx(kPi * kPi / 2.0).epsilon(1e-13));
  CHECK(trigamma(2.0) == doctest::Approx(kPi * kPi / 6.0 - 1.0).epsilon(1e-13));
}

TEST_CASE("recurrences hold at random points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(1e-3, 50.0);
  for (int i = 0; i < 200; ++i) {
    const double x = unif(rng);
    CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-11));
    CHECK(trigamma(x) - trigamma(x + 1.0) == doctest::Approx(1.0 / (x * x)).epsilon(1e-11));
  }
}

TEST_CASE("matches reference implementation over the working range") {
  // log-spaced grid over [1e-8, 1e6]
  for (int i = 0; i <= 140; ++i) {
    const double x = std::pow(10.0, -8.0 + 0.1 * i);
    const double dg = digamma(x);
    const double tg = trigamma(x);
    CHECK(std::abs(dg - boost::math::digamma(x)) <=
          1e-12 * std::max(1.0, std::abs(boost::math::digamma(x))));
    CHECK(std::abs(tg - boost::math::trigamma(x)) <=
          1e-12 * std::max(1.0, std::abs(boost::math::trigamma(x))));
  }
}

TEST_CASE("rejects non-positive arguments") {
  CHECK_THROWS_AS(digamma(0.0), std::invalid_argument);
  CHECK_THROWS_AS(trigamma(-1.0), std::invalid_argument);
}
