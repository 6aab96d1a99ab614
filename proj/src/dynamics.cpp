#include "phi4/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace phi4 {

Scheme parse_scheme(const std::string& name) {
  if (name == "dpd-exponential") return Scheme::dpd_exponential;
  if (name == "langevin-euler") return Scheme::langevin_euler;
  if (name == "langevin-exponential") return Scheme::langevin_exponential;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::dpd_exponential: return "dpd-exponential";
    case Scheme::langevin_euler: return "langevin-euler";
    default: return "langevin-exponential";
  }
}

void SimConfig::validate(const TorusGrid& grid) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be positive");
  if (!std::isfinite(mu)) throw std::invalid_argument("mu must be finite");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
  if (!(blowup_guard > 0.0)) throw std::invalid_argument("blowup_guard must be positive");
  const double h = grid.spacing();
  if (scheme == Scheme::langevin_euler && grid.points() > 1 && !(dt < h * h / 4.0)) {
    std::ostringstream os;
    os << "dt must be below spacing^2/4 = " << h * h / 4.0 << " for the euler scheme";
    throw std::invalid_argument(os.str());
  }
}

double SimConfig::counterterm(const TorusGrid& grid) const {
  return a_ref ? *a_ref : reference_counterterm(grid);
}

DpdIntegrator::DpdIntegrator(const TorusGrid& grid, const SimConfig& cfg)
    : grid_(grid), cfg_(cfg), a_(cfg.counterterm(grid)), ou_(grid, cfg.dt, cfg.dpd_symbol) {
  cfg.validate(grid);
  decay_ = (-cfg.dt * generator_symbol(grid, cfg.dpd_symbol)).exp();
}

DpdState DpdIntegrator::start(const RealField& phi0) const {
  if (phi0.grid != grid_) throw std::invalid_argument("DPD start: grid mismatch");
  const bool z_first = cfg_.split == InitialSplit::z_takes_phi0;
  OuState ou = OuState::start(z_first ? phi0 : RealField(grid_), cfg_.dpd_symbol);
  RealField v = z_first ? RealField(grid_) : phi0;
  WickBundle wick = wick_bundle(ou.full(), 0.0, Convention::fixed, a_);
  return DpdState{0.0, std::move(v), std::move(ou), std::move(wick)};
}

void DpdIntegrator::step(DpdState& state, const RealField& increment) const {
  const Array2& v = state.v.values;
  const WickBundle& w = state.wick;
  const double lambda = cfg_.lambda;
  const double mu = cfg_.mu;
  const Array2 v2 = v.square();
  const Array2 force = -mu * (v + w.z.values) -
                       lambda * (v2 * v + 3.0 * v2 * w.z.values + 3.0 * v * w.z2.values + w.z3.values);
  RealField next = apply_multiplier(RealField(grid_, v + cfg_.dt * force), decay_);
  const double peak = next.values.abs().maxCoeff();
  if (!(peak <= cfg_.blowup_guard)) {
    std::ostringstream os;
    os << "DPD blow-up at t = " << state.t + cfg_.dt << ": |v| = " << peak;
    throw BlowUpError(os.str(), state.t, state.phi());
  }
  ou_.advance(state.ou, increment);
  state.v = std::move(next);
  state.t += cfg_.dt;
  state.wick = wick_bundle(state.ou.full(), state.t, Convention::fixed, a_);
}

DpdState dpd_step(const DpdState& state, const SimConfig& cfg, const RealField& increment) {
  SimConfig c = cfg;
  c.a_ref = state.wick.a;
  DpdState next = state;
  DpdIntegrator(state.v.grid, c).step(next, increment);
  return next;
}

RealField lattice_laplacian(const RealField& phi) {
  const int n = phi.grid.points();
  const double inv_h2 = 1.0 / (phi.grid.spacing() * phi.grid.spacing());
  RealField out(phi.grid);
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n;
    const int im = (i + n - 1) % n;
    for (int j = 0; j < n; ++j) {
      const int jp = (j + 1) % n;
      const int jm = (j + n - 1) % n;
      out(i, j) = inv_h2 * (phi(ip, j) + phi(im, j) + phi(i, jp) + phi(i, jm) - 4.0 * phi(i, j));
    }
  }
  return out;
}

double lattice_hamiltonian(const RealField& phi, double lambda, double mu, double a) {
  const int n = phi.grid.points();
  const double h = phi.grid.spacing();
  const double mass = 1.0 + mu - 3.0 * lambda * a;
  double gradient = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d1 = phi((i + 1) % n, j) - phi(i, j);
      const double d2 = phi(i, (j + 1) % n) - phi(i, j);
      gradient += d1 * d1 + d2 * d2;
    }
  }
  const Array2& x = phi.values;
  const Array2 x2 = x.square();
  const double local = (0.25 * lambda * x2.square() + 0.5 * mass * x2).sum();
  // |grad phi|^2 carries h^{-2}, cancelled by the h^2 volume element.
  return 0.5 * gradient + h * h * local;
}

RealField langevin_drift(const RealField& phi, double lambda, double mu, double a) {
  const double mass = 1.0 + mu - 3.0 * lambda * a;
  RealField lap = lattice_laplacian(phi);
  lap.values -= mass * phi.values + lambda * phi.values.cube();
  return lap;
}

LangevinIntegrator::LangevinIntegrator(const TorusGrid& grid, const SimConfig& cfg)
    : grid_(grid), cfg_(cfg), a_(cfg.counterterm(grid)) {
  cfg.validate(grid);
  const Array2 k = generator_symbol(grid, Symbol::lattice);
  decay_ = (-cfg.dt * k).exp();
  drift_weight_ = (-decay_ + 1.0) / k;
  noise_ = ((-(-2.0 * cfg.dt * k).exp() + 1.0) / (k * cfg.dt)).sqrt();
}

void LangevinIntegrator::step(RealField& phi, const RealField& increment) const {
  if (phi.grid != grid_ || increment.grid != grid_)
    throw std::invalid_argument("Langevin step: grid mismatch");
  const double lambda = cfg_.lambda;
  if (cfg_.scheme == Scheme::langevin_euler) {
    RealField drift = langevin_drift(phi, lambda, cfg_.mu, a_);
    phi.values += cfg_.dt * drift.values + std::sqrt(2.0) * increment.values;
  } else {
    const Array2 rest = -(cfg_.mu - 3.0 * lambda * a_) * phi.values - lambda * phi.values.cube();
    const SpectralField p = forward(phi);
    const SpectralField g = forward(RealField(grid_, rest));
    const SpectralField xi = forward(increment);
    phi = inverse(SpectralField(
        grid_, p.coeffs * decay_ + g.coeffs * drift_weight_ + xi.coeffs * noise_));
  }
  const double peak = phi.values.abs().maxCoeff();
  if (!(peak <= cfg_.blowup_guard))
    throw BlowUpError("Langevin blow-up: |phi| = " + std::to_string(peak), 0.0, phi);
}

RealField langevin_step(const RealField& phi, const SimConfig& cfg, const RealField& increment) {
  RealField next = phi;
  LangevinIntegrator(phi.grid, cfg).step(next, increment);
  return next;
}

void Observables::update(const RealField& phi, const std::vector<RealField>& tests) {
  if (char_re.size() != tests.size()) {
    char_re.assign(tests.size(), RunningStats{});
    char_im.assign(tests.size(), RunningStats{});
  }
  const std::vector<double> s = observable_sample(phi, tests);
  magnetisation.add(s[0]);
  susceptibility.add(s[1]);
  phi2.add(s[2]);
  for (std::size_t k = 0; k < tests.size(); ++k) {
    char_re[k].add(s[3 + 2 * k]);
    char_im[k].add(s[4 + 2 * k]);
  }
}

void Observables::merge(const Observables& other) {
  magnetisation.merge(other.magnetisation);
  susceptibility.merge(other.susceptibility);
  phi2.merge(other.phi2);
  if (char_re.empty()) {
    char_re = other.char_re;
    char_im = other.char_im;
    return;
  }
  if (other.char_re.size() != char_re.size()) throw std::invalid_argument("observable sets differ");
  for (std::size_t k = 0; k < char_re.size(); ++k) {
    char_re[k].merge(other.char_re[k]);
    char_im[k].merge(other.char_im[k]);
  }
}

std::complex<double> Observables::characteristic(std::size_t k) const {
  return {char_re.at(k).mean(), char_im.at(k).mean()};
}

std::vector<double> observable_sample(const RealField& phi, const std::vector<RealField>& tests) {
  const double volume = phi.grid.volume();
  const double total = spatial_mean(phi) * volume;
  std::vector<double> s{total / volume, total * total / volume, phi.values.square().mean()};
  for (const RealField& f : tests) {
    const double pairing = inner(f, phi);
    s.push_back(std::cos(pairing));
    s.push_back(std::sin(pairing));
  }
  return s;
}

CoupledResult coupled_run(const RealField& phi0, const SimConfig& cfg,
                          const std::vector<double>& sub_Ls, const std::vector<double>& times,
                          const std::vector<RealField>& tests, int replicas,
                          const RngPolicy& policy) {
  if (replicas < 2) throw std::invalid_argument("coupled run needs at least two replicas");
  const TorusGrid& master = phi0.grid;
  double min_L = master.half_length();
  for (double L : sub_Ls) min_L = std::min(min_L, L);
  for (const RealField& f : tests) {
    if (f.grid != master) throw std::invalid_argument("test functions live on the master grid");
    require_support(f, 2.0 / 3.0 * min_L, "coupled_run");
  }
  std::vector<long> record;
  for (double t : times) {
    const long s = std::lround(t / cfg.dt);
    if (s < 1 || std::abs(s * cfg.dt - t) > 1e-9 * std::max(1.0, t))
      throw std::invalid_argument("record times must be positive multiples of dt");
    record.push_back(s);
  }
  long last = 0;
  for (long s : record) last = std::max(last, s);

  SimConfig shared = cfg;
  shared.a_ref = cfg.counterterm(master);
  const std::size_t nL = sub_Ls.size();
  const std::size_t nf = tests.size();
  DpdIntegrator master_dpd(master, shared);
  std::vector<DpdIntegrator> sub_dpd;
  std::vector<RealField> phi0_sub;
  std::vector<std::vector<RealField>> tests_sub(nL);
  for (std::size_t l = 0; l < nL; ++l) {
    phi0_sub.push_back(periodise_initial(phi0, sub_Ls[l]));
    sub_dpd.emplace_back(phi0_sub.back().grid, shared);
    for (const RealField& f : tests) tests_sub[l].push_back(restrict_to_box(f, sub_Ls[l]));
  }
  const RealField phi0_master = periodise_initial(phi0, master.half_length());

  // acc[l][k][f] for the real/imaginary char. difference and the pathwise gap.
  using Grid3 = std::vector<std::vector<std::vector<RunningStats>>>;
  Grid3 re(nL, std::vector<std::vector<RunningStats>>(times.size(), std::vector<RunningStats>(nf)));
  Grid3 im = re;
  Grid3 gap = re;
  for (int r = 0; r < replicas; ++r) {
    DpdState big = master_dpd.start(phi0_master);
    std::vector<DpdState> small;
    for (std::size_t l = 0; l < nL; ++l) small.push_back(sub_dpd[l].start(phi0_sub[l]));
    for (long step = 0; step < last; ++step) {
      const NoiseSlab slab = sample_slab(policy, master, cfg.dt, static_cast<std::uint64_t>(step),
                                         static_cast<std::uint64_t>(r));
      master_dpd.step(big, slab.increments);
      for (std::size_t l = 0; l < nL; ++l) sub_dpd[l].step(small[l], periodise_noise(slab, sub_Ls[l]));
      for (std::size_t k = 0; k < times.size(); ++k) {
        if (record[k] != step + 1) continue;
        const RealField phi = big.phi();
        for (std::size_t l = 0; l < nL; ++l) {
          const RealField phi_l = small[l].phi();
          for (std::size_t q = 0; q < nf; ++q) {
            const double a = inner(tests[q], phi);
            const double b = inner(tests_sub[l][q], phi_l);
            re[l][k][q].add(std::cos(a) - std::cos(b));
            im[l][k][q].add(std::sin(a) - std::sin(b));
            gap[l][k][q].add(std::abs(a - b));
          }
        }
      }
    }
  }

  CoupledResult out;
  for (std::size_t l = 0; l < nL; ++l) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      CoupledRow row{sub_Ls[l], times[k], {}, {}, {}, {}};
      for (std::size_t q = 0; q < nf; ++q) {
        const double x = re[l][k][q].mean();
        const double y = im[l][k][q].mean();
        row.delta.push_back(std::hypot(x, y));
        row.delta_error.push_back(
            std::hypot(re[l][k][q].stderr_of_mean(), im[l][k][q].stderr_of_mean()));
        row.pathwise.push_back(gap[l][k][q].mean());
        row.pathwise_error.push_back(gap[l][k][q].stderr_of_mean());
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace phi4
