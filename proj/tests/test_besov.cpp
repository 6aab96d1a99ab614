#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "phi4/besov.hpp"
#include "phi4/gaussian.hpp"
#include "phi4/noise.hpp"

using namespace phi4;
constexpr double pi = std::numbers::pi;

TEST_CASE("dyadic scales respect the grid limits") {
  const TorusGrid g(pi, 64);
  const auto s = dyadic_scales(g);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == 1.0);
  CHECK(s[2] == 0.25);
  CHECK(dyadic_scales(g, 1).size() == 2);
  CHECK_THROWS_AS(dyadic_scales(g, 3), std::invalid_argument);
  CHECK(dyadic_scales(TorusGrid(pi, 256)).size() == 5);
}

TEST_CASE("kernels have unit mass and preserve constants") {
  const TorusGrid g(pi, 64);
  const double h2 = g.spacing() * g.spacing();
  for (Profile p : {Profile::exponential, Profile::polynomial}) {
    for (double R : dyadic_scales(g)) {
      const RealField k = bump_kernel(g, R, p);
      CHECK(k.values.sum() * h2 == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(k.values.minCoeff() >= 0.0);
      const RealField c = smooth_at_scale(RealField::constant(g, 2.5), R, p);
      CHECK((c.values - 2.5).abs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("negative norm of constants, scaling and weights") {
  const TorusGrid g(pi, 64);
  NormConfig cfg;
  cfg.alpha = 0.3;
  CHECK(neg_norm(RealField::constant(g, -1.5), cfg, Region::whole()) == doctest::Approx(1.5));
  CHECK(neg_norm(RealField::constant(g, 2.0), cfg, Region::box(1.5)) == doctest::Approx(2.0));
  std::mt19937_64 e(4);
  const RealField f = sample_gff(g, e);
  RealField f3 = f;
  f3.values *= 3.0;
  CHECK(neg_norm(f3, cfg, Region::whole()) == doctest::Approx(3.0 * neg_norm(f, cfg, Region::whole())));
  NormConfig weighted = cfg;
  weighted.sigma = 1.0;
  CHECK(neg_norm(f, weighted, Region::whole()) <= neg_norm(f, cfg, Region::whole()) + 1e-15);
  CHECK(neg_norm(f, cfg, Region::box(1.5)) <= neg_norm(f, cfg, Region::whole()) + 1e-15);
  CHECK(weight({0.0, 0.0}, 2.0) == 1.0);
  CHECK(weight({3.0, 4.0}, 1.0) == doctest::Approx(1.0 / std::sqrt(26.0)));
}

TEST_CASE("sup and Hoelder norms of simple fields") {
  const TorusGrid g(pi, 64);
  const double h = g.spacing();
  const RealField c = RealField::constant(g, -4.0);
  CHECK(sup_norm(c, 0.0, Region::whole()) == 4.0);
  CHECK(holder_seminorm(c, 0.5, Region::whole()) == 0.0);
  CHECK(holder_norm(c, 0.5, Region::box(1.0)) == 4.0);

  const RealField x1 = RealField::from_function(g, [](Point x) { return x[0]; });
  CHECK(holder_seminorm(x1, 0.25, Region::box(1.0)) == doctest::Approx(std::pow(10 * h, 0.75)));
  CHECK_THROWS_AS(holder_seminorm(x1, 1.0, Region::box(1.0)), std::invalid_argument);
  CHECK(holder_seminorm(x1, 0.5, Region::box(1.0)) == doctest::Approx(std::sqrt(10 * h)));
  CHECK(sup_norm(x1, 0.0, Region::box(1.0)) == doctest::Approx(10 * h));
  CHECK(holder_norm(x1, 0.5, Region::box(1.0)) == doctest::Approx(10 * h + std::sqrt(10 * h)));
}

TEST_CASE("dual norm is a seminorm plus a weighted L1 norm") {
  const TorusGrid g(pi, 32);
  CHECK(b11_dual_norm(RealField::constant(g, 0.0), 0.5) == 0.0);
  const RealField c = RealField::constant(g, 1.0);
  CHECK(b11_dual_norm(c, 0.5) == doctest::Approx(g.volume()));
  const RealField b = RealField::from_function(g, [](Point x) {
    const double u = 1.0 - (x[0] * x[0] + x[1] * x[1]);
    return u > 0.0 ? u * u * u : 0.0;
  });
  RealField b2 = b;
  b2.values *= -2.0;
  CHECK(b11_dual_norm(b2, 0.5) == doctest::Approx(2.0 * b11_dual_norm(b, 0.5)));
  CHECK(b11_dual_norm(b, 0.5) > b.values.abs().sum() * g.spacing() * g.spacing());
}

TEST_CASE("inequality reports on Gaussian free fields") {
  const TorusGrid g(pi, 64);
  const RngPolicy p{10};
  std::vector<RealField> samples;
  std::vector<RealField> smooth;
  for (int r = 0; r < 12; ++r) {
    auto e = p.engine(r, 0, Channel::initial);
    samples.push_back(sample_gff(g, e));
    smooth.push_back(heat_flow(samples.back(), 0.05));
  }
  const InequalityReport heat = check_heat_smoothing(samples, 0.2, {0.01, 0.1, 1.0}, 0.5);
  CHECK(heat.pass);
  CHECK(heat.samples == 12);
  const InequalityReport ker = check_kernel_equivalence(samples, 0.2, 0.5);
  CHECK(ker.pass);
  CHECK(ker.min_ratio > 0.0);
  const InequalityReport emb = check_embedding(samples, 0.2, 0.5);
  CHECK(emb.pass);
  const InequalityReport mul = check_multiplication(smooth, samples, 0.3, 0.5, 0.5);
  CHECK(std::isfinite(mul.median_ratio));
  CHECK(mul.min_ratio <= mul.median_ratio);
  CHECK(mul.median_ratio <= mul.max_ratio);

  std::ostringstream csv;
  write_report_csv(csv, {heat, ker});
  CHECK(csv.str().find(heat.inequality) != std::string::npos);
}
