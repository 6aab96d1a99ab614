#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "phi4/oracles.hpp"
#include "phi4/torus_grid.hpp"

using namespace phi4;
constexpr double pi = std::numbers::pi;

namespace {

RealField random_field(const TorusGrid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  RealField f(g);
  for (Eigen::Index k = 0; k < f.values.size(); ++k) f.values.data()[k] = n(rng);
  return f;
}

}  // namespace

TEST_CASE("grid geometry") {
  const TorusGrid g(2.0, 8);
  CHECK(g.spacing() == doctest::Approx(0.5));
  CHECK(g.coordinate(0) == -2.0);
  CHECK(g.coordinate(4) == doctest::Approx(0.0));
  CHECK(g.volume() == doctest::Approx(16.0));
  CHECK(g.signed_index(5) == -3);
  CHECK(g.wavenumber(1) == doctest::Approx(pi / 2.0));
  CHECK_THROWS_AS(TorusGrid(1.0, 7), std::invalid_argument);
  CHECK_THROWS_AS(TorusGrid(-1.0, 8), std::invalid_argument);
  CHECK_NOTHROW(TorusGrid(1.0, 1));
}

TEST_CASE("FFT round trip and Parseval over random fields") {
  std::mt19937_64 rng(11);
  for (const auto& [L, N] : {std::pair{pi, 16}, std::pair{2.0, 32}, std::pair{0.5, 2}}) {
    const TorusGrid g(L, N);
    double worst_round = 0.0;
    double worst_parseval = 0.0;
    for (int k = 0; k < 100; ++k) {
      const RealField f = random_field(g, rng);
      const RealField h = random_field(g, rng);
      worst_round = std::max(worst_round, (inverse(forward(f)).values - f.values).abs().maxCoeff());
      const CArray2 c = forward(f).coeffs;
      const CArray2 d = forward(h).coeffs;
      const double spectral = g.volume() * (c * d.conjugate()).sum().real();
      const double direct = inner(f, h);
      worst_parseval = std::max(worst_parseval, std::abs(spectral - direct) / (1.0 + std::abs(direct)));
    }
    CHECK(worst_round < 1e-12);
    CHECK(worst_parseval < 1e-12);
  }
}

TEST_CASE("Fourier convention on plane waves") {
  const TorusGrid g(pi, 16);
  const RealField c = RealField::constant(g, 3.0);
  const CArray2 cc = forward(c).coeffs;
  CHECK(cc(0, 0).real() == doctest::Approx(3.0));
  CHECK(cc.abs().sum() == doctest::Approx(3.0));
  // cos(x1) = (e^{ix1} + e^{-ix1}) / 2 with p = k on L = pi.
  const RealField w = RealField::from_function(g, [](Point x) { return std::cos(x[0]); });
  const CArray2 cw = forward(w).coeffs;
  CHECK(cw(1, 0).real() == doctest::Approx(0.5));
  CHECK(cw(15, 0).real() == doctest::Approx(0.5));
  CHECK(std::abs(cw(1, 0).imag()) < 1e-14);
  // sin(x2) lives in the imaginary part with the e^{-ipx} sign.
  const RealField s = RealField::from_function(g, [](Point x) { return std::sin(x[1]); });
  CHECK(forward(s).coeffs(0, 1).imag() == doctest::Approx(-0.5));
}

TEST_CASE("heat semigroup: composition, constants, positivity") {
  std::mt19937_64 rng(5);
  const TorusGrid g(pi, 32);
  const RealField f = random_field(g, rng);
  const RealField a = heat_semigroup(heat_semigroup(f, 0.2), 0.3);
  const RealField b = heat_semigroup(f, 0.5);
  CHECK((a.values - b.values).abs().maxCoeff() < 1e-12);
  CHECK((heat_semigroup(f, 0.0).values - f.values).abs().maxCoeff() < 1e-12);
  const RealField c = heat_semigroup(RealField::constant(g, 2.0), 0.7);
  CHECK(c(3, 4) == doctest::Approx(2.0 * std::exp(-0.7)));
  CHECK(heat_flow(RealField::constant(g, 2.0), 0.7)(3, 4) == doctest::Approx(2.0));
  const RealField lat = heat_semigroup(f, 0.5, Symbol::lattice);
  CHECK((lat.values - b.values).abs().maxCoeff() < 0.05);
  CHECK_THROWS_AS(heat_semigroup(f, -1.0), std::invalid_argument);

  const RealField bump = RealField::from_function(g, [](Point x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return r2 < 1.0 ? std::pow(1.0 - r2, 3) : 0.0;
  });
  const RealField smooth = heat_flow(bump, 0.5);
  CHECK(smooth.values.minCoeff() > -1e-10 * smooth.values.maxCoeff());
  // mass is conserved by e^{t Delta}
  CHECK(inner(smooth, RealField::constant(g, 1.0)) ==
        doctest::Approx(inner(bump, RealField::constant(g, 1.0))).epsilon(1e-12));
}

TEST_CASE("periodic heat kernel against the image-sum oracle") {
  CHECK(periodic_heat_kernel(1.0, {2.0, 0.0}, 8.0) ==
        doctest::Approx(std::exp(-1.0) / (4.0 * pi)).epsilon(1e-6));
  for (double t : {0.05, 0.5, 2.0}) {
    for (Point x : {Point{0.0, 0.0}, Point{0.7, -1.3}, Point{3.0, 3.0}}) {
      const double ours = periodic_heat_kernel(t, x, pi);
      const double ref = oracle::image_sum_heat_kernel(t, x, pi);
      CHECK(ours == doctest::Approx(ref).epsilon(1e-13));
    }
  }
  CHECK(heat_kernel(0.25, {0.0, 0.0}) == doctest::Approx(1.0 / pi));
}

TEST_CASE("multipliers report the offending wavenumber") {
  const TorusGrid g(pi, 8);
  try {
    multiplier_table(g, [](double p2) { return 1.0 / p2; });
    FAIL("expected a domain error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("p = (0, 0)") != std::string::npos);
  }
  const Array2 m = multiplier_table(g, [](double p2) { return 1.0 / (1.0 + p2); });
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("lattice symbol approaches |p|^2 at low modes") {
  const TorusGrid g(pi, 64);
  CHECK(g.lattice_symbol()(1, 0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(g.lattice_symbol()(1, 1) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(g.lattice_symbol()(0, 0) == 0.0);
  CHECK((g.lattice_symbol() <= g.squared_wavenumbers() + 1e-12).all());
}

TEST_CASE("snapshot round trip is bitwise") {
  std::mt19937_64 rng(2);
  const TorusGrid g(1.5, 8);
  const RealField f = random_field(g, rng);
  std::stringstream buf;
  write_snapshot(buf, f);
  const RealField back = read_snapshot(buf);
  CHECK(back.grid == g);
  CHECK((back.values == f.values).all());
  std::stringstream bad("NOPE....");
  CHECK_THROWS_AS(read_snapshot(bad), std::runtime_error);
  std::stringstream truncated(buf.str().substr(0, 30));
  CHECK_THROWS_AS(read_snapshot(truncated), std::runtime_error);
  std::ostringstream csv;
  write_slice_csv(csv, f, 0);
  const std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') >= 8);
}

TEST_CASE("inner product and mean") {
  const TorusGrid g(1.0, 4);
  const RealField one = RealField::constant(g, 1.0);
  CHECK(inner(one, one) == doctest::Approx(4.0));
  CHECK(spatial_mean(RealField::constant(g, 2.5)) == doctest::Approx(2.5));
  CHECK_THROWS_AS(inner(one, RealField(TorusGrid(1.0, 8))), std::invalid_argument);
}
