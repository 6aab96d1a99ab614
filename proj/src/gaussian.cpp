#include "phi4/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace phi4 {

OuState OuState::start(const RealField& phi0, Symbol symbol) {
  OuState s{phi0.grid, 0.0, symbol, SpectralField(phi0.grid), forward(phi0)};
  return s;
}

RealField OuState::full() const {
  return inverse(SpectralField(grid, centred_hat.coeffs + mean_hat.coeffs));
}

OuStepper::OuStepper(const TorusGrid& grid, double dt, Symbol symbol)
    : grid_(grid), dt_(dt), symbol_(symbol) {
  if (!(dt > 0.0)) throw std::invalid_argument("OU time step must be positive");
  const Array2 w = generator_symbol(grid, symbol);
  decay_ = (-dt * w).exp();
  noise_ = ((-(-2.0 * dt * w).exp() + 1.0) / (w * dt)).sqrt();
}

void OuStepper::advance(OuState& state, const RealField& increment) const {
  if (state.grid != grid_ || increment.grid != grid_)
    throw std::invalid_argument("OU step: grid mismatch");
  if (state.symbol != symbol_) throw std::invalid_argument("OU step: symbol mismatch");
  const SpectralField xi = forward(increment);
  state.centred_hat.coeffs = state.centred_hat.coeffs * decay_ + xi.coeffs * noise_;
  state.mean_hat.coeffs *= decay_;
  state.t += dt_;
}

OuState ou_step_exact(const OuState& state, double dt, const RealField& increment) {
  OuState next = state;
  OuStepper(state.grid, dt, state.symbol).advance(next, increment);
  return next;
}

RealField sample_gaussian(const TorusGrid& grid, std::mt19937_64& engine, const Array2& cov) {
  if ((cov < 0.0).any()) throw std::invalid_argument("covariance symbol must be nonnegative");
  RealField white(grid, standard_normals(engine, grid.points()) / grid.spacing());
  return apply_multiplier(white, cov.sqrt());
}

RealField sample_gff(const TorusGrid& grid, std::mt19937_64& engine, Symbol symbol) {
  return sample_gaussian(grid, engine, generator_symbol(grid, symbol).inverse());
}

RealField sample_centred_ou(const TorusGrid& grid, double t, std::mt19937_64& engine,
                            Symbol symbol) {
  if (!(t > 0.0)) throw std::invalid_argument("OU sample time must be positive");
  const Array2 w = generator_symbol(grid, symbol);
  return sample_gaussian(grid, engine, (-(-2.0 * t * w).exp() + 1.0) / w);
}

double cov_kernel_eval(const CovKernel& k, Point x, double quad_tol) {
  if (!(k.t1 >= 0.0) || !(k.t2 >= 0.0)) throw std::invalid_argument("kernel times must be nonnegative");
  const double L = k.half_length;
  const double lo = std::abs(k.t1 - k.t2);
  const double hi = k.t1 + k.t2;
  if (hi <= lo) return 0.0;
  for (double& c : x) c -= 2.0 * L * std::floor((c + L) / (2.0 * L));
  const double r2 = x[0] * x[0] + x[1] * x[1];
  if (r2 == 0.0 && lo == 0.0)
    throw std::invalid_argument("kernel diverges at x = 0 for equal times");
  // Below u_min the nearest image contributes less than e^{-700}.
  const double u_min = r2 / (4.0 * 700.0);
  const double a = std::max(lo, u_min);
  if (a >= hi) return 0.0;
  auto integrand = [&](double v) {
    const double u = std::exp(v);
    return u * std::exp(-u) * periodic_heat_kernel(u, x, L);
  };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, std::log(a), std::log(hi), 20, 1e-13, &error);
  if (!(error <= quad_tol)) {
    std::ostringstream os;
    os << "kernel quadrature did not reach " << quad_tol << " (achieved " << error << ")";
    throw QuadratureError(os.str(), error);
  }
  return value;
}

double counterterm_variance(double t, const TorusGrid& grid, Symbol symbol) {
  if (!(t > 0.0)) throw std::invalid_argument("counterterm time must be positive");
  const Array2 w = generator_symbol(grid, symbol);
  return ((-(-2.0 * t * w).exp() + 1.0) / w).sum() / grid.volume();
}

double reference_counterterm(const TorusGrid& grid) { return counterterm_variance(10.0, grid); }

double counterterm_bridge_f(double t, const TorusGrid& grid, double a_ref) {
  return counterterm_variance(t, grid) - a_ref;
}

void require_support(const RealField& f, double r, const char* what) {
  const TorusGrid& g = f.grid;
  for (int i = 0; i < g.points(); ++i) {
    for (int j = 0; j < g.points(); ++j) {
      if (f(i, j) == 0.0) continue;
      if (std::abs(g.coordinate(i)) > r || std::abs(g.coordinate(j)) > r) {
        std::ostringstream os;
        os << what << ": test function must be supported in [-" << r << ", " << r << "]^2";
        throw std::invalid_argument(os.str());
      }
    }
  }
}

double z_minus_zL_exact(const RealField& f, double sub_L, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("time must be nonnegative");
  require_support(f, sub_L, "z_minus_zL_exact");
  const TorusGrid& master = f.grid;
  const RealField f_sub = restrict_to_box(f, sub_L);
  const TorusGrid& sub = f_sub.grid;
  const SpectralField c = forward(f);
  const SpectralField d = forward(f_sub);
  const Array2 wp = generator_symbol(master);
  const Array2 wq = generator_symbol(sub);
  auto integral = [t](double rate) { return -std::expm1(-t * rate) / rate; };

  double master_term = 0.0;
  for (int p1 = 0; p1 < master.points(); ++p1)
    for (int p2 = 0; p2 < master.points(); ++p2)
      master_term += std::norm(c.coeffs(p1, p2)) * integral(2.0 * wp(p1, p2));
  master_term *= 2.0 * master.volume();

  double sub_term = 0.0;
  for (int q1 = 0; q1 < sub.points(); ++q1)
    for (int q2 = 0; q2 < sub.points(); ++q2)
      sub_term += std::norm(d.coeffs(q1, q2)) * integral(2.0 * wq(q1, q2));
  sub_term *= 2.0 * sub.volume();

  // Box sums D(q - p) = h sum_j e^{i (q - p) x_j} over the sub-grid sites.
  const int n = sub.points();
  const int N = master.points();
  const double h = master.spacing();
  Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic> box(n, N);
  for (int q = 0; q < n; ++q) {
    for (int p = 0; p < N; ++p) {
      const double k = sub.wavenumber(q) - master.wavenumber(p);
      std::complex<double> s = 0.0;
      for (int j = 0; j < n; ++j) s += std::polar(1.0, k * sub.coordinate(j));
      box(q, p) = h * s;
    }
  }

  double cross = 0.0;
  for (int q1 = 0; q1 < n; ++q1) {
    for (int q2 = 0; q2 < n; ++q2) {
      const std::complex<double> dq = d.coeffs(q1, q2);
      if (dq == 0.0) continue;
      std::complex<double> acc = 0.0;
      for (int p1 = 0; p1 < N; ++p1) {
        const std::complex<double> b1 = box(q1, p1);
        for (int p2 = 0; p2 < N; ++p2) {
          acc += std::conj(c.coeffs(p1, p2)) * b1 * box(q2, p2) *
                 integral(wp(p1, p2) + wq(q1, q2));
        }
      }
      cross += (dq * acc).real();
    }
  }
  cross *= 2.0;
  return master_term - 2.0 * cross + sub_term;
}

DecayTable z_minus_zL_decay(const RealField& f, const std::vector<double>& sub_Ls,
                            const std::vector<double>& times, int replicas, double dt,
                            const RngPolicy& policy) {
  if (replicas < 2) throw std::invalid_argument("need at least two replicas");
  if (sub_Ls.empty() || times.empty()) throw std::invalid_argument("empty decay table request");
  const TorusGrid& master = f.grid;
  double min_L = sub_Ls.front();
  for (double L : sub_Ls) min_L = std::min(min_L, L);
  require_support(f, 2.0 / 3.0 * min_L, "z_minus_zL_decay");

  std::vector<long> record_steps;
  for (double t : times) {
    const long s = std::lround(t / dt);
    if (s < 1 || std::abs(s * dt - t) > 1e-9 * std::max(1.0, t))
      throw std::invalid_argument("decay times must be positive multiples of dt");
    record_steps.push_back(s);
  }
  long last = 0;
  for (long s : record_steps) last = std::max(last, s);

  const std::size_t nL = sub_Ls.size();
  std::vector<RealField> f_sub;
  std::vector<OuStepper> steppers;
  std::vector<SpectralField> f_sub_hat;
  const SpectralField f_hat = forward(f);
  for (double L : sub_Ls) {
    f_sub.push_back(restrict_to_box(f, L));
    f_sub_hat.push_back(forward(f_sub.back()));
    steppers.emplace_back(f_sub.back().grid, dt);
  }
  const OuStepper master_stepper(master, dt);
  auto pairing = [](const SpectralField& a, const SpectralField& b) {
    return a.grid.volume() * (a.coeffs * b.coeffs.conjugate()).real().sum();
  };

  std::vector<std::vector<RunningStats>> acc(nL, std::vector<RunningStats>(times.size()));
  for (int r = 0; r < replicas; ++r) {
    OuState z = OuState::start(RealField(master));
    std::vector<OuState> zl;
    for (std::size_t l = 0; l < nL; ++l) zl.push_back(OuState::start(RealField(f_sub[l].grid)));
    for (long step = 0; step < last; ++step) {
      const NoiseSlab slab = sample_slab(policy, master, dt, static_cast<std::uint64_t>(step),
                                         static_cast<std::uint64_t>(r));
      master_stepper.advance(z, slab.increments);
      for (std::size_t l = 0; l < nL; ++l)
        steppers[l].advance(zl[l], periodise_noise(slab, sub_Ls[l]));
      for (std::size_t k = 0; k < times.size(); ++k) {
        if (record_steps[k] != step + 1) continue;
        const double full = pairing(z.centred_hat, f_hat);
        for (std::size_t l = 0; l < nL; ++l) {
          const double diff = full - pairing(zl[l].centred_hat, f_sub_hat[l]);
          acc[l][k].add(diff * diff);
        }
      }
    }
  }

  DecayTable table;
  std::vector<double> xs, ys;
  for (std::size_t l = 0; l < nL; ++l) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      DecayRow row{sub_Ls[l], times[k], acc[l][k].mean(), acc[l][k].stderr_of_mean(),
                   z_minus_zL_exact(f, sub_Ls[l], times[k])};
      table.rows.push_back(row);
      if (row.estimate > 0.0) {
        xs.push_back(row.half_length * row.half_length / row.t);
        ys.push_back(std::log(row.estimate));
      }
    }
  }
  if (xs.size() >= 2) table.fit = linear_fit(xs, ys);
  return table;
}

void write_decay_csv(std::ostream& out, const DecayTable& table) {
  out << "L,t,estimate,stderr,oracle_value\n";
  out.precision(12);
  for (const DecayRow& r : table.rows)
    out << r.half_length << ',' << r.t << ',' << r.estimate << ',' << r.error << ',' << r.oracle
        << '\n';
}

}  // namespace phi4
