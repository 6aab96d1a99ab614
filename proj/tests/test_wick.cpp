#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "phi4/gaussian.hpp"
#include "phi4/stats.hpp"
#include "phi4/wick.hpp"

using namespace phi4;
constexpr double pi = std::numbers::pi;

TEST_CASE("Hermite polynomials in closed form") {
  for (double x : {-1.7, 0.0, 0.4, 2.5}) {
    for (double a : {0.0, 0.3, 1.9}) {
      CHECK(hermite_apply(x, a, 0) == 1.0);
      CHECK(hermite_apply(x, a, 1) == x);
      CHECK(hermite_apply(x, a, 2) == doctest::Approx(x * x - a));
      CHECK(hermite_apply(x, a, 3) == doctest::Approx(x * x * x - 3 * a * x));
      CHECK(hermite_apply(x, a, 4) ==
            doctest::Approx(x * x * x * x - 6 * a * x * x + 3 * a * a));
    }
  }
  CHECK_THROWS_AS(hermite_apply(1.0, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(hermite_apply(1.0, 1.0, -1), std::invalid_argument);
}

TEST_CASE("Hermite polynomials are orthogonal under N(0, a)") {
  std::mt19937_64 e(3);
  std::normal_distribution<double> n(0.0, std::sqrt(0.7));
  RunningStats p12;
  RunningStats p13;
  RunningStats p22;
  for (int i = 0; i < 200000; ++i) {
    const double x = n(e);
    p12.add(hermite_apply(x, 0.7, 1) * hermite_apply(x, 0.7, 2));
    p13.add(hermite_apply(x, 0.7, 1) * hermite_apply(x, 0.7, 3));
    p22.add(hermite_apply(x, 0.7, 2) * hermite_apply(x, 0.7, 2));
  }
  CHECK(std::abs(p12.mean()) < 4.0 * p12.stderr_of_mean());
  CHECK(std::abs(p13.mean()) < 4.0 * p13.stderr_of_mean());
  CHECK(std::abs(p22.mean() - 2.0 * 0.49) < 4.0 * p22.stderr_of_mean());
}

TEST_CASE("binomial expansion in the mean and in v") {
  const TorusGrid g(pi, 16);
  std::mt19937_64 e(9);
  const double t = 0.6;
  const RealField z = sample_centred_ou(g, t, e);
  const RealField phi0 = RealField::from_function(g, [](Point x) { return std::sin(x[0]) + 0.3; });
  const RealField v = RealField::from_function(g, [](Point x) { return std::cos(x[1]) - 0.2; });
  const double a = 0.45;

  const WickBundle centred = wick_centred(z, t, Convention::fixed, a);
  const WickBundle full = wick_with_ic(centred, phi0, t);
  const Array2 zfull = z.values + heat_semigroup(phi0, t).values;
  CHECK((full.z.values - zfull).abs().maxCoeff() < 1e-12);
  for (int n = 1; n <= 4; ++n) {
    CHECK((full.power(n).values - hermite_apply(zfull, a, n)).abs().maxCoeff() < 1e-10);
    if (n < 2) continue;
    const Array2 direct = hermite_apply(Array2(zfull + v.values), a, n);
    CHECK((wick_of_phi(v, full, n).values - direct).abs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(wick_of_phi(v, full, 1), std::invalid_argument);
  CHECK((full.power(0).values - 1.0).abs().maxCoeff() == 0.0);

  const WickBundle via_mean = wick_with_mean(centred, heat_semigroup(phi0, t));
  CHECK((via_mean.z4.values - full.z4.values).abs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(wick_of_phi(v, full, 2, t + 0.1), std::invalid_argument);
  CHECK_NOTHROW(wick_of_phi(v, full, 2, t));
}

TEST_CASE("conventions and their counterterms") {
  const TorusGrid g(pi, 16);
  std::mt19937_64 e(1);
  const RealField z = sample_centred_ou(g, 0.5, e);
  const WickBundle hom = wick_centred(z, 0.5, Convention::homogeneous);
  CHECK(hom.a == doctest::Approx(counterterm_variance(0.5, g)));
  const WickBundle fix = wick_centred(z, 0.5, Convention::fixed);
  CHECK(fix.a == doctest::Approx(reference_counterterm(g)));
  CHECK_THROWS_AS(wick_centred(z, 0.5, Convention::homogeneous, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(wick_centred(z, 0.0, Convention::fixed), std::invalid_argument);

  // ::Z^2:: - :Z^2: = a_ref - a_t = -f(t, L)
  const Array2 diff = hom.z2.values - fix.z2.values;
  const double f = counterterm_bridge_f(0.5, g, reference_counterterm(g));
  CHECK((diff + f).abs().maxCoeff() < 1e-12);
}

TEST_CASE("homogeneous Wick square has mean zero") {
  const TorusGrid g(pi, 16);
  const RngPolicy p{12};
  RunningStats m;
  for (int r = 0; r < 2000; ++r) {
    auto e = p.engine(r, 0, Channel::initial);
    const WickBundle b = wick_centred(sample_centred_ou(g, 0.3, e), 0.3, Convention::homogeneous);
    m.add(b.z2(2, 7));
  }
  CHECK(std::abs(m.mean()) < 4.0 * m.stderr_of_mean());
}
