#include <cmath>
#include <sstream>

#include "phi4/dynamics.hpp"

namespace phi4 {

namespace {

class Preconditioned {
 public:
  Preconditioned(const TorusGrid& grid, const SimConfig& cfg, double a)
      : grid_(grid), cfg_(cfg), a_(a) {
    const double h2 = grid.spacing() * grid.spacing();
    const Array2 w = generator_symbol(grid, Symbol::lattice) * h2;
    c_ = w.inverse();
    c_half_ = c_.sqrt();
    c_inv_ = w;
  }

  double energy(const RealField& x) const { return lattice_hamiltonian(x, cfg_.lambda, cfg_.mu, a_); }

  /// C grad U.
  RealField c_grad(const RealField& x) const {
    const double h2 = grid_.spacing() * grid_.spacing();
    RealField g = langevin_drift(x, cfg_.lambda, cfg_.mu, a_);
    g.values *= -h2;
    return apply_multiplier(g, c_);
  }

  RealField c_half(const RealField& xi) const { return apply_multiplier(xi, c_half_); }

  /// u . C^{-1} u over sites.
  double c_inv_norm(const RealField& u) const {
    return (u.values * apply_multiplier(u, c_inv_).values).sum();
  }

 private:
  TorusGrid grid_;
  SimConfig cfg_;
  double a_;
  Array2 c_;
  Array2 c_half_;
  Array2 c_inv_;
};

}  // namespace

MalaReport mala_sample(const TorusGrid& grid, const SimConfig& cfg, const RngPolicy& policy,
                       const MalaOptions& options, const RealField& start,
                       const std::function<void(const RealField&)>& visit) {
  if (start.grid != grid) throw std::invalid_argument("MALA start: grid mismatch");
  if (options.samples < 0 || options.thin < 1 || options.burn_in < 0)
    throw std::invalid_argument("MALA needs samples >= 0, thin >= 1, burn_in >= 0");
  const Preconditioned pc(grid, cfg, cfg.counterterm(grid));
  MalaReport report;
  double tau = options.initial_tau;

  RealField x = start;
  double ux = pc.energy(x);
  RealField gx = pc.c_grad(x);

  long accepted_window = 0;
  long window = 0;
  long accepted = 0;
  long counted = 0;
  const long total = options.burn_in + options.samples * options.thin;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (long it = 0; it < total; ++it) {
    auto noise_engine = policy.engine(options.replica, static_cast<std::uint64_t>(it), Channel::proposal);
    const RealField xi(grid, standard_normals(noise_engine, grid.points()));
    RealField y(grid, x.values - 0.5 * tau * gx.values + std::sqrt(tau) * pc.c_half(xi).values);
    const double uy = pc.energy(y);
    const RealField gy = pc.c_grad(y);
    const RealField fwd(grid, y.values - x.values + 0.5 * tau * gx.values);
    const RealField bwd(grid, x.values - y.values + 0.5 * tau * gy.values);
    const double log_ratio =
        -uy + ux - (pc.c_inv_norm(bwd) - pc.c_inv_norm(fwd)) / (2.0 * tau);
    auto accept_engine = policy.engine(options.replica, static_cast<std::uint64_t>(it), Channel::accept);
    const bool accept = std::isfinite(log_ratio) && std::log(uniform(accept_engine)) < log_ratio;
    if (accept) {
      x = std::move(y);
      ux = uy;
      gx = gy;
    }
    if (it < options.burn_in) {
      accepted_window += accept;
      if (++window == 100) {
        const double rate = static_cast<double>(accepted_window) / window;
        if (rate > 0.8) tau *= 1.25;
        if (rate < 0.4) tau *= 0.7;
        accepted_window = 0;
        window = 0;
      }
      continue;
    }
    accepted += accept;
    ++counted;
    if ((it - options.burn_in + 1) % options.thin == 0) visit(x);
  }
  report.tau = tau;
  report.proposals = counted;
  report.acceptance = counted > 0 ? static_cast<double>(accepted) / counted : 0.0;
  if (counted > 0 && (report.acceptance < 0.05 || report.acceptance > 0.99)) {
    std::ostringstream os;
    os << "MALA acceptance " << report.acceptance << " outside [0.05, 0.99]; retune tau";
    report.warnings.push_back(os.str());
  }
  return report;
}

}  // namespace phi4
