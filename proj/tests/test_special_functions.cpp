#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "pba/special_functions.hpp"

using namespace pba;

namespace {

// Numerical integration of the t density from 0 to |t|.
double integrated_t_cdf(double t, double df) {
  const double log_norm = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  auto density = [&](double x) { return std::exp(log_norm - (df + 1) / 2 * std::log1p(x * x / df)); };
  const double half = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, 0.0, std::abs(t), 10, 1e-12);
  return t >= 0 ? 0.5 + half : 0.5 - half;
}

}  // namespace

TEST_CASE("incomplete beta agrees with closed forms and a reference implementation") {
  CHECK(regularized_incomplete_beta(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(regularized_incomplete_beta(2, 1, 0.5) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(regularized_incomplete_beta(1, 3, 0.2) == doctest::Approx(1 - std::pow(0.8, 3)).epsilon(1e-14));
  CHECK(regularized_incomplete_beta(2.5, 4, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.5, 4, 1.0) == 1.0);
  for (double a : {0.5, 1.0, 2.5, 7.0, 25.0}) {
    for (double b : {0.5, 1.5, 3.0, 12.0}) {
      for (double x : {0.01, 0.2, 0.5, 0.77, 0.99}) {
        const double expected = boost::math::ibeta(a, b, x);
        CHECK(std::abs(regularized_incomplete_beta(a, b, x) - expected) <= 1e-10 * std::max(expected, 1e-300));
      }
    }
  }
  CHECK_THROWS_AS(regularized_incomplete_beta(-1, 1, 0.5), std::domain_error);
  CHECK_THROWS_AS(regularized_incomplete_beta(1, 1, 1.5), std::domain_error);
}

TEST_CASE("t CDF matches numerical integration of the density") {
  double worst = 0.0;
  for (int df = 1; df <= 50; ++df) {
    for (double t = -10.0; t <= 10.0; t += 0.25) {
      worst = std::max(worst, std::abs(student_t_cdf(t, df) - integrated_t_cdf(t, df)));
    }
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("two-sided p values") {
  CHECK(student_t_two_sided_p(0.0, 5) == doctest::Approx(1.0));
  CHECK(student_t_two_sided_p(std::sqrt(12.0), 2) == doctest::Approx(0.0742).epsilon(1e-3));
  CHECK(student_t_two_sided_p(1.96, 1e6) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(student_t_two_sided_p(-3.0, 7) == student_t_two_sided_p(3.0, 7));
  // Cauchy special case: P(|T| > 1) = 1/2.
  CHECK(student_t_two_sided_p(1.0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}
