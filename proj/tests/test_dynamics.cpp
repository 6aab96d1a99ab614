#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "phi4/dynamics.hpp"
#include "phi4/oracles.hpp"

using namespace phi4;
constexpr double pi = std::numbers::pi;

namespace {

RealField zero_noise(const TorusGrid& g) { return RealField::constant(g, 0.0); }

RealField bump(const TorusGrid& g, double r) {
  return RealField::from_function(g, [r](Point x) {
    const double u = 1.0 - (x[0] * x[0] + x[1] * x[1]) / (r * r);
    return u > 0.0 ? u * u * u : 0.0;
  });
}

// <phi^2> under exp(-h^2 (lambda phi^4 / 4 + m phi^2 / 2)) on one site.
double single_site_phi2(double h, double lambda, double m) {
  using boost::math::quadrature::gauss_kronrod;
  auto w = [&](double x) { return std::exp(-h * h * (lambda * x * x * x * x / 4 + m * x * x / 2)); };
  const double z = gauss_kronrod<double, 61>::integrate(w, -12.0, 12.0, 15, 1e-13);
  const double s = gauss_kronrod<double, 61>::integrate([&](double x) { return x * x * w(x); }, -12.0,
                                                        12.0, 15, 1e-13);
  return s / z;
}

double dpd_constant(double c, const SimConfig& cfg, const TorusGrid& g) {
  DpdIntegrator dpd(g, cfg);
  DpdState s = dpd.start(RealField::constant(g, c));
  const long steps = std::lround(cfg.horizon / cfg.dt);
  for (long k = 0; k < steps; ++k) dpd.step(s, zero_noise(g));
  const RealField phi = s.phi();
  CHECK((phi.values - phi(0, 0)).abs().maxCoeff() < 1e-12);
  return phi(0, 0);
}

}  // namespace

TEST_CASE("scheme names") {
  for (Scheme s : {Scheme::dpd_exponential, Scheme::langevin_euler, Scheme::langevin_exponential})
    CHECK(parse_scheme(to_string(s)) == s);
  CHECK_THROWS_AS(parse_scheme("rk4"), std::invalid_argument);
}

TEST_CASE("configuration validation") {
  const TorusGrid g(pi, 32);
  SimConfig c;
  c.lambda = -1.0;
  try {
    c.validate(g);
    FAIL("negative lambda accepted");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("lambda must be positive") != std::string::npos);
  }
  c.lambda = 1.0;
  c.scheme = Scheme::langevin_euler;
  c.dt = 0.01;
  CHECK_THROWS_AS(c.validate(g), std::invalid_argument);
  c.dt = 1e-3;
  CHECK_NOTHROW(c.validate(g));
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(g), std::invalid_argument);
}

TEST_CASE("noise-free DPD on constants follows the quartic ODE at first order") {
  const TorusGrid g(1.0, 8);
  SimConfig cfg;
  cfg.lambda = 1.0;
  cfg.mu = 0.5;
  cfg.horizon = 1.0;
  cfg.a_ref = 0.0;
  const double exact = oracle::quartic_ode(2.0, cfg.mu, cfg.lambda, cfg.horizon);
  cfg.dt = 2e-3;
  const double e1 = std::abs(dpd_constant(2.0, cfg, g) - exact);
  cfg.dt = 1e-3;
  const double e2 = std::abs(dpd_constant(2.0, cfg, g) - exact);
  CHECK(e2 < 5e-3 * std::abs(exact));
  CHECK(std::log2(e1 / e2) == doctest::Approx(1.0).epsilon(0.1));

  const TorusGrid one(0.5, 1);
  cfg.split = InitialSplit::v_takes_phi0;
  CHECK(dpd_constant(2.0, cfg, one) == doctest::Approx(exact).epsilon(5e-3));
}

TEST_CASE("without interaction the DPD remainder stays zero") {
  const TorusGrid g(pi, 16);
  SimConfig cfg;
  cfg.lambda = 0.0;
  cfg.mu = 0.0;
  cfg.dt = 0.01;
  DpdIntegrator dpd(g, cfg);
  const RngPolicy p{5};
  DpdState s = dpd.start(RealField::from_function(g, [](Point x) { return std::cos(x[0]); }));
  OuState ou = OuState::start(s.phi());
  const OuStepper stepper(g, cfg.dt);
  for (int k = 0; k < 20; ++k) {
    const RealField inc = sample_slab(p, g, cfg.dt, k, 0).increments;
    dpd.step(s, inc);
    stepper.advance(ou, inc);
  }
  CHECK(s.v.values.abs().maxCoeff() == 0.0);
  CHECK((s.phi().values - ou.full().values).abs().maxCoeff() < 1e-12);
  CHECK(s.t == doctest::Approx(0.2));
}

TEST_CASE("Langevin drift is minus the scaled gradient of H") {
  const TorusGrid g(1.0, 8);
  std::mt19937_64 e(2);
  RealField phi = sample_gff(g, e);
  const double lambda = 0.8;
  const double mu = 0.3;
  const double a = 0.2;
  const RealField drift = langevin_drift(phi, lambda, mu, a);
  const double h2 = g.spacing() * g.spacing();
  for (auto [i, j] : {std::pair{0, 0}, std::pair{3, 5}, std::pair{7, 2}}) {
    const double eps = 1e-5;
    RealField up = phi;
    RealField down = phi;
    up(i, j) += eps;
    down(i, j) -= eps;
    const double grad =
        (lattice_hamiltonian(up, lambda, mu, a) - lattice_hamiltonian(down, lambda, mu, a)) / (2 * eps);
    CHECK(drift(i, j) == doctest::Approx(-grad / h2).epsilon(1e-7));
  }
}

TEST_CASE("Langevin blow-up guard keeps the last good field") {
  const TorusGrid g(1.0, 8);
  SimConfig cfg;
  cfg.scheme = Scheme::langevin_exponential;
  cfg.dt = 0.01;
  cfg.blowup_guard = 50.0;
  const RealField start = RealField::constant(g, 40.0);
  RealField phi = start;
  const LangevinIntegrator lg(g, cfg);
  bool caught = false;
  try {
    for (int k = 0; k < 10; ++k) lg.step(phi, zero_noise(g));
  } catch (const BlowUpError& b) {
    caught = true;
    CHECK(b.last_good().all_finite());
  }
  CHECK(caught);

  cfg.scheme = Scheme::dpd_exponential;
  cfg.blowup_guard = 1e3;
  DpdIntegrator dpd(g, cfg);
  DpdState s = dpd.start(RealField::constant(g, 1e4));
  CHECK_THROWS_AS(dpd.step(s, zero_noise(g)), BlowUpError);
}

TEST_CASE("observables of trivial and Gaussian fields") {
  const TorusGrid g(pi, 8);
  const RealField f = bump(g, 1.0);
  const auto s0 = observable_sample(RealField::constant(g, 0.0), {f});
  REQUIRE(s0.size() == 5);
  CHECK(s0[0] == 0.0);
  CHECK(s0[1] == 0.0);
  CHECK(s0[3] == 1.0);
  CHECK(s0[4] == 0.0);

  const RngPolicy p{3};
  Observables obs;
  for (int r = 0; r < 4000; ++r) {
    auto e = p.engine(r, 0, Channel::initial);
    obs.update(sample_gff(g, e), {f});
  }
  CHECK(std::abs(obs.susceptibility.mean() - 1.0) < 4.0 * obs.susceptibility.stderr_of_mean());
  CHECK(std::abs(obs.magnetisation.mean()) < 4.0 * obs.magnetisation.stderr_of_mean());
  Observables twice = obs;
  twice.merge(obs);
  CHECK(twice.phi2.count() == 2 * obs.phi2.count());
  CHECK(twice.characteristic(0).real() == doctest::Approx(obs.characteristic(0).real()));
}

TEST_CASE("MALA reproduces the one-site marginal") {
  const TorusGrid g(0.5, 1);
  SimConfig cfg;
  cfg.lambda = 1.0;
  cfg.mu = 1.0;
  cfg.a_ref = 0.0;
  std::vector<double> xs;
  MalaOptions o;
  o.samples = 40000;
  o.thin = 5;
  const MalaReport rep = mala_sample(g, cfg, RngPolicy{31}, o, RealField::constant(g, 0.0),
                                     [&](const RealField& phi) { xs.push_back(phi(0, 0) * phi(0, 0)); });
  CHECK(rep.warnings.empty());
  CHECK(rep.acceptance > 0.3);
  const Estimate est = batch_means(xs);
  const double exact = single_site_phi2(1.0, 1.0, 2.0);
  CHECK(std::abs(est.value - exact) < 4.0 * est.error);
}

TEST_CASE("exponential Langevin reaches the one-site marginal as dt -> 0") {
  const TorusGrid g(0.5, 1);
  SimConfig cfg;
  cfg.lambda = 1.0;
  cfg.mu = 1.0;
  cfg.a_ref = 0.0;
  cfg.scheme = Scheme::langevin_exponential;
  const RngPolicy p{41};
  std::vector<Estimate> est;
  const std::vector<double> dts{0.04, 0.02};
  for (double dt : dts) {
    cfg.dt = dt;
    const LangevinIntegrator lg(g, cfg);
    RealField phi = RealField::constant(g, 0.0);
    std::vector<double> xs;
    const long steps = std::lround(3000.0 / dt);
    const long every = std::lround(0.2 / dt);
    for (long k = 0; k < steps; ++k) {
      lg.step(phi, sample_slab(p, g, dt, k, std::lround(1.0 / dt)).increments);
      if (k > 1000 && k % every == 0) xs.push_back(phi(0, 0) * phi(0, 0));
    }
    est.push_back(batch_means(xs));
  }
  const double x0 = 2.0 * est[1].value - est[0].value;
  const double sigma = std::hypot(2.0 * est[1].error, est[0].error);
  CHECK(std::abs(x0 - single_site_phi2(1.0, 1.0, 2.0)) < 4.0 * sigma);
}

TEST_CASE("coupled run: identical tori and the Gaussian limit") {
  const TorusGrid master(2.0, 32);
  SimConfig cfg;
  cfg.lambda = 0.0;
  cfg.mu = 0.0;
  cfg.dt = 0.01;
  const RealField f = bump(master, 0.5);
  const CoupledResult r =
      coupled_run(RealField::constant(master, 0.0), cfg, {2.0, 1.0}, {0.5}, {f}, 400, RngPolicy{17});
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].delta[0] == 0.0);
  CHECK(r.rows[0].pathwise[0] == 0.0);
  // (Z - Z^L, f) is centred Gaussian: E|X| = sqrt(2 E X^2 / pi).
  const double expected = std::sqrt(2.0 * z_minus_zL_exact(f, 1.0, 0.5) / pi);
  CHECK(std::abs(r.rows[1].pathwise[0] - expected) < 4.0 * r.rows[1].pathwise_error[0]);
  CHECK_THROWS_AS(coupled_run(RealField::constant(master, 0.0), cfg, {1.0}, {0.505}, {f}, 4, RngPolicy{1}),
                  std::invalid_argument);
}
