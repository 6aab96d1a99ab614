#ifndef PHI4_DYNAMICS_HPP
#define PHI4_DYNAMICS_HPP

#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phi4/gaussian.hpp"
#include "phi4/noise.hpp"
#include "phi4/stats.hpp"
#include "phi4/wick.hpp"

namespace phi4 {

enum class Scheme { dpd_exponential, langevin_euler, langevin_exponential };
/// z_takes_phi0: Z_0 = phi0, v_0 = 0. v_takes_phi0: Z~_0 = 0, v_0 = phi0.
enum class InitialSplit { z_takes_phi0, v_takes_phi0 };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme scheme);

struct SimConfig {
  double lambda = 1.0;
  double mu = 0.0;
  double dt = 1e-3;
  double horizon = 1.0;
  Scheme scheme = Scheme::dpd_exponential;
  /// Symbol of A in the DPD scheme; Langevin always uses the lattice one.
  Symbol dpd_symbol = Symbol::spectral;
  InitialSplit split = InitialSplit::z_takes_phi0;
  double blowup_guard = 1e6;
  /// Counterterm a in 3 lambda a; the grid's reference counterterm if unset.
  std::optional<double> a_ref;

  /// Throws std::invalid_argument naming the offending field.
  void validate(const TorusGrid& grid) const;
  double counterterm(const TorusGrid& grid) const;
};

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double t, RealField last_good)
      : std::runtime_error(what), t_(t), last_good_(std::move(last_good)) {}
  double time() const { return t_; }
  const RealField& last_good() const { return last_good_; }

 private:
  double t_;
  RealField last_good_;
};

struct DpdState {
  double t;
  RealField v;
  OuState ou;
  WickBundle wick;  // fixed convention, Wick powers of the full Z

  RealField phi() const { return RealField(v.grid, v.values + wick.z.values); }
};

/// ETD1 integrator for the remainder v of phi = Z + v:
///   v <- e^{-dt A} (v + dt F(v, Z)),
///   F = -mu (v + Z) - lambda (v^3 + 3 v^2 Z + 3 v :Z^2: + :Z^3:),
/// with Z advanced by the exact OU step on the same slab.
class DpdIntegrator {
 public:
  DpdIntegrator(const TorusGrid& grid, const SimConfig& cfg);

  DpdState start(const RealField& phi0) const;
  void step(DpdState& state, const RealField& increment) const;
  double a() const { return a_; }

 private:
  TorusGrid grid_;
  SimConfig cfg_;
  double a_;
  OuStepper ou_;
  Array2 decay_;
};

/// One DPD step with a fresh integrator.
DpdState dpd_step(const DpdState& state, const SimConfig& cfg, const RealField& increment);

/// 5-point Laplacian with periodic wrap.
RealField lattice_laplacian(const RealField& phi);
/// H = h^2 sum [ |grad phi|^2 / 2 + lambda phi^4 / 4 + (1 + mu - 3 lambda a) phi^2 / 2 ].
double lattice_hamiltonian(const RealField& phi, double lambda, double mu, double a);
/// -h^{-2} dH/dphi = Lap phi - (1 + mu - 3 lambda a) phi - lambda phi^3.
RealField langevin_drift(const RealField& phi, double lambda, double mu, double a);

/// Lattice Langevin step with site noise of variance dt/h^2 per slab:
/// euler: phi + dt drift + sqrt2 slab;
/// exponential: K = lattice symbol + 1 solved exactly in Fourier, the rest
/// of the drift by Euler with weight (1 - e^{-dt K}) / K.
class LangevinIntegrator {
 public:
  LangevinIntegrator(const TorusGrid& grid, const SimConfig& cfg);
  void step(RealField& phi, const RealField& increment) const;
  double a() const { return a_; }

 private:
  TorusGrid grid_;
  SimConfig cfg_;
  double a_;
  Array2 decay_;
  Array2 drift_weight_;
  Array2 noise_;
};

RealField langevin_step(const RealField& phi, const SimConfig& cfg, const RealField& increment);

struct MalaOptions {
  long samples = 1000;
  long thin = 10;
  long burn_in = 2000;
  double initial_tau = 0.5;
  std::uint64_t replica = 0;
};

struct MalaReport {
  double tau = 0.0;
  double acceptance = 0.0;
  long proposals = 0;
  std::vector<std::string> warnings;
};

/// Metropolis-adjusted Langevin targeting exp(-H) with the Fourier
/// preconditioner C = (h^2 (lattice symbol + 1))^{-1}. The step tau is tuned
/// in burn-in towards acceptance in [0.4, 0.8] and then frozen.
MalaReport mala_sample(const TorusGrid& grid, const SimConfig& cfg, const RngPolicy& policy,
                       const MalaOptions& options, const RealField& start,
                       const std::function<void(const RealField&)>& visit);

/// Running equilibrium observables.
struct Observables {
  RunningStats magnetisation;
  RunningStats susceptibility;
  RunningStats phi2;
  std::vector<RunningStats> char_re;
  std::vector<RunningStats> char_im;

  void update(const RealField& phi, const std::vector<RealField>& tests);
  void merge(const Observables& other);
  std::complex<double> characteristic(std::size_t k) const;
};

/// Per-site samples of one configuration: (phi,1)/|T|, (phi,1)^2/|T|,
/// mean of phi^2, and cos/sin of (f, phi) per test function.
std::vector<double> observable_sample(const RealField& phi, const std::vector<RealField>& tests);

struct CoupledRow {
  double half_length;
  double t;
  std::vector<double> delta;        // |E e^{i(f,phi)} - E e^{i(f,phi^L)}| per f
  std::vector<double> delta_error;
  std::vector<double> pathwise;     // E|(phi - phi^L, f)| per f
  std::vector<double> pathwise_error;
};

struct CoupledResult {
  std::vector<CoupledRow> rows;
};

/// DPD dynamics on the master torus and each sub-torus, driven by the same
/// restricted noise and periodised initial condition; all tori share the
/// master counterterm.
CoupledResult coupled_run(const RealField& phi0, const SimConfig& cfg,
                          const std::vector<double>& sub_Ls, const std::vector<double>& times,
                          const std::vector<RealField>& tests, int replicas,
                          const RngPolicy& policy);

}  // namespace phi4

#endif  // PHI4_DYNAMICS_HPP
