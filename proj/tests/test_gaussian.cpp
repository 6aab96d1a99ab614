#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "phi4/gaussian.hpp"
#include "phi4/oracles.hpp"

using namespace phi4;
constexpr double pi = std::numbers::pi;

namespace {

// |T| sum_p |f_p|^2 (e^{-|t1-t2| w} - e^{-(t1+t2) w}) / w: Cov((Z~_t1, f), (Z~_t2, f)).
double projected_covariance(const RealField& f, double t1, double t2) {
  const CArray2 c = forward(f).coeffs;
  const Array2 w = generator_symbol(f.grid);
  const Array2 k = ((-std::abs(t1 - t2) * w).exp() - (-(t1 + t2) * w).exp()) / w;
  return f.grid.volume() * (c.abs2() * k).sum();
}

RealField bump(const TorusGrid& g, double r) {
  return RealField::from_function(g, [r](Point x) {
    const double u = 1.0 - (x[0] * x[0] + x[1] * x[1]) / (r * r);
    return u > 0.0 ? u * u * u : 0.0;
  });
}

}  // namespace

TEST_CASE("counterterm variance against the long double mode sum") {
  for (int n : {1, 2, 16, 64}) {
    for (double t : {0.01, 0.5, 3.0}) {
      const TorusGrid g(pi, n);
      const double ours = counterterm_variance(t, g);
      const long double ref = oracle::counterterm_variance(t, pi, n);
      CHECK(ours == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
    }
  }
  const TorusGrid one(0.5, 1);
  CHECK(counterterm_variance(0.3, one) == doctest::Approx(-std::expm1(-0.6)));
  CHECK_THROWS_AS(counterterm_variance(0.0, one), std::invalid_argument);
  const TorusGrid g(pi, 32);
  CHECK(counterterm_bridge_f(10.0, g, reference_counterterm(g)) == doctest::Approx(0.0));
  CHECK(counterterm_bridge_f(0.5, g, reference_counterterm(g)) < 0.0);
}

TEST_CASE("counterterm grows like log t / (4 pi) before the cutoff") {
  const TorusGrid g(1.0, 128);
  const double h2 = g.spacing() * g.spacing();
  const double slope =
      (counterterm_variance(100.0 * h2, g) - counterterm_variance(10.0 * h2, g)) / std::log(10.0);
  CHECK(slope * 4.0 * pi == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("one-shot OU samples have the exact site and projected variances") {
  const TorusGrid g(pi, 16);
  const RngPolicy p{21};
  const double t = 0.4;
  const RealField f = bump(g, 1.5);
  RunningStats site;
  RunningStats proj;
  for (int r = 0; r < 4000; ++r) {
    auto e = p.engine(r, 0, Channel::initial);
    const RealField z = sample_centred_ou(g, t, e);
    site.add(z(3, 5) * z(3, 5));
    const double x = inner(f, z);
    proj.add(x * x);
  }
  CHECK(std::abs(site.mean() - counterterm_variance(t, g)) < 4.0 * site.stderr_of_mean());
  CHECK(std::abs(proj.mean() - projected_covariance(f, t, t)) < 4.0 * proj.stderr_of_mean());
}

TEST_CASE("exact OU steps: variance, mean, cross-time covariance") {
  const TorusGrid g(pi, 16);
  const RngPolicy p{8};
  const double dt = 0.05;
  const OuStepper stepper(g, dt);
  const RealField f = bump(g, 1.2);
  const RealField phi0 = RealField::from_function(g, [](Point x) { return std::cos(x[0]); });
  RunningStats at4;
  RunningStats at10;
  RunningStats cross;
  for (int r = 0; r < 3000; ++r) {
    OuState s = OuState::start(phi0);
    double x4 = 0.0;
    for (int k = 0; k < 10; ++k) {
      stepper.advance(s, sample_slab(p, g, dt, k, r).increments);
      if (k == 3) x4 = inner(f, s.centred());
    }
    const double x10 = inner(f, s.centred());
    at4.add(x4 * x4);
    at10.add(x10 * x10);
    cross.add(x4 * x10);
    if (r == 0) {
      CHECK(s.t == doctest::Approx(0.5));
      CHECK((s.mean().values - heat_semigroup(phi0, 0.5).values).abs().maxCoeff() < 1e-12);
      CHECK((s.full().values - s.mean().values - s.centred().values).abs().maxCoeff() < 1e-12);
    }
  }
  CHECK(std::abs(at4.mean() - projected_covariance(f, 0.2, 0.2)) < 4.0 * at4.stderr_of_mean());
  CHECK(std::abs(at10.mean() - projected_covariance(f, 0.5, 0.5)) < 4.0 * at10.stderr_of_mean());
  CHECK(std::abs(cross.mean() - projected_covariance(f, 0.2, 0.5)) < 4.0 * cross.stderr_of_mean());

  OuState a = OuState::start(phi0);
  OuState b = OuState::start(phi0);
  const RealField inc = sample_slab(p, g, dt, 0, 0).increments;
  stepper.advance(a, inc);
  b = ou_step_exact(b, dt, inc);
  CHECK((a.full().values - b.full().values).abs().maxCoeff() < 1e-13);
}

TEST_CASE("stationary GFF has covariance A^{-1}") {
  const TorusGrid g(pi, 8);
  const RngPolicy p{4};
  RunningStats site;
  for (int r = 0; r < 4000; ++r) {
    auto e = p.engine(r, 0, Channel::initial);
    const RealField z = sample_gff(g, e);
    site.add(z(0, 0) * z(0, 0));
  }
  const double exact = (1.0 / generator_symbol(g)).sum() / g.volume();
  CHECK(std::abs(site.mean() - exact) < 4.0 * site.stderr_of_mean());
}

TEST_CASE("covariance kernel against the mode sum at distinct times") {
  const double L = 2.0;
  const double t1 = 0.3;
  const double t2 = 0.5;
  const Point x{0.4, -0.2};
  double sum = 0.0;
  for (int k1 = -80; k1 <= 80; ++k1)
    for (int k2 = -80; k2 <= 80; ++k2) {
      const double p1 = pi / L * k1;
      const double p2 = pi / L * k2;
      const double w = p1 * p1 + p2 * p2 + 1.0;
      sum += std::cos(p1 * x[0] + p2 * x[1]) * (std::exp(-(t2 - t1) * w) - std::exp(-(t1 + t2) * w)) / w;
    }
  sum /= 4.0 * L * L;
  CHECK(cov_kernel_eval({t1, t2, L}, x) == doctest::Approx(sum).epsilon(1e-9));
  CHECK(cov_kernel_eval({0.0, 0.0, L}, x) == 0.0);
  CHECK_THROWS_AS(cov_kernel_eval({0.5, 0.5, L}, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("Wick variance oracle agrees with the grid at n = 1") {
  const TorusGrid g(pi, 64);
  const double s = 0.5;
  const RealField f = RealField::from_function(g, [s](Point x) {
    return std::exp(-(x[0] * x[0] + x[1] * x[1]) / (2.0 * s * s));
  });
  CHECK(oracle::wick_variance(1, 0.5, pi, s) == doctest::Approx(projected_covariance(f, 0.5, 0.5)).epsilon(1e-6));
}

TEST_CASE("Z - Z^L oracle and support checks") {
  const TorusGrid master(2.0, 32);
  const RealField f = bump(master, 0.5);
  CHECK(z_minus_zL_exact(f, 2.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  const double one = z_minus_zL_exact(f, 1.0, 1.0);
  const double later = z_minus_zL_exact(f, 1.0, 2.0);
  CHECK(one > 0.0);
  CHECK(later > one);
  CHECK_THROWS_AS(require_support(bump(master, 1.5), 1.0, "test"), std::invalid_argument);
  CHECK_NOTHROW(require_support(f, 0.6, "test"));

  const DecayTable same = z_minus_zL_decay(f, {2.0}, {0.5}, 4, 0.1, RngPolicy{1});
  CHECK(same.rows.at(0).estimate == 0.0);
  CHECK_THROWS_AS(z_minus_zL_decay(f, {1.0}, {0.25}, 4, 0.1, RngPolicy{1}), std::invalid_argument);
}

TEST_CASE("coupled Gaussian differences match the oracle") {
  const TorusGrid master(2.0, 32);
  const RealField f = bump(master, 0.5);
  const DecayTable table = z_minus_zL_decay(f, {1.0}, {0.5, 1.0}, 600, 0.01, RngPolicy{77});
  for (const DecayRow& row : table.rows) {
    CHECK(row.oracle == doctest::Approx(z_minus_zL_exact(f, row.half_length, row.t)));
    CHECK(std::abs(row.estimate - row.oracle) < 4.0 * row.error);
  }
  std::ostringstream csv;
  write_decay_csv(csv, table);
  CHECK(csv.str().find("L,t") != std::string::npos);
}

TEST_CASE("bridge f becomes uniform in L") {
  // f(t, L) - f(t, 2L) at spacing 1/8: image terms of the Green function
  std::vector<double> d;
  for (double L : {2.0, 3.0, 4.0, 5.0}) {
    const TorusGrid a(L, static_cast<int>(16 * L));
    const TorusGrid b(2 * L, static_cast<int>(32 * L));
    d.push_back(std::abs(counterterm_bridge_f(0.5, a, reference_counterterm(a)) -
                         counterterm_bridge_f(0.5, b, reference_counterterm(b))));
  }
  for (std::size_t k = 1; k < d.size(); ++k) CHECK(d[k] < d[k - 1] / 5.0);
  CHECK(d.back() < 1e-4);
}
