#ifndef PHI4_GAUSSIAN_HPP
#define PHI4_GAUSSIAN_HPP

#include <random>
#include <stdexcept>
#include <vector>

#include "phi4/noise.hpp"
#include "phi4/stats.hpp"
#include "phi4/torus_grid.hpp"

namespace phi4 {

/// Ornstein-Uhlenbeck state dZ = -AZ dt + sqrt2 dW, kept in Fourier space as
/// the centred part Z~ and the mean e^{-tA} phi0, so Z = mean + Z~.
struct OuState {
  TorusGrid grid;
  double t = 0.0;
  Symbol symbol = Symbol::spectral;
  SpectralField centred_hat;
  SpectralField mean_hat;

  /// State at time 0 with Z_0 = phi0 (Z~_0 = 0).
  static OuState start(const RealField& phi0, Symbol symbol = Symbol::spectral);

  RealField centred() const { return inverse(centred_hat); }
  RealField mean() const { return inverse(mean_hat); }
  RealField full() const;
};

/// Exact transition over dt driven by one slab of site variance dt/h^2:
/// per mode, c <- e^{-dt w} c + xi * sqrt((1 - e^{-2 dt w}) / (w dt)).
OuState ou_step_exact(const OuState& state, double dt, const RealField& increment);

/// Cached multiplier tables for repeated steps of one size.
class OuStepper {
 public:
  OuStepper(const TorusGrid& grid, double dt, Symbol symbol = Symbol::spectral);
  void advance(OuState& state, const RealField& increment) const;
  double dt() const { return dt_; }

 private:
  TorusGrid grid_;
  double dt_;
  Symbol symbol_;
  Array2 decay_;
  Array2 noise_;
};

/// Centred Gaussian field with Fourier covariance |T| E|c_p|^2 = cov(p).
RealField sample_gaussian(const TorusGrid& grid, std::mt19937_64& engine, const Array2& cov);
/// Stationary OU law (GFF), covariance A^{-1}.
RealField sample_gff(const TorusGrid& grid, std::mt19937_64& engine,
                     Symbol symbol = Symbol::spectral);
/// Exact one-shot sample of Z~_t.
RealField sample_centred_ou(const TorusGrid& grid, double t, std::mt19937_64& engine,
                            Symbol symbol = Symbol::spectral);

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

/// K^L(t1, t2, x) = int_{|t1-t2|}^{t1+t2} e^{-u} p^L_u(x) du.
struct CovKernel {
  double t1;
  double t2;
  double half_length;
};

/// Gauss-Kronrod in v = log u with the image-sum kernel. Rejects x = 0 at
/// equal times (log divergence); returns 0 on an empty interval.
double cov_kernel_eval(const CovKernel& k, Point x, double quad_tol = 1e-10);

/// Var(Z~_t(x)) on the grid: |T|^{-1} sum_p (1 - e^{-2tw}) / w.
double counterterm_variance(double t, const TorusGrid& grid, Symbol symbol = Symbol::spectral);
/// Fixed counterterm of a grid, counterterm_variance(10, grid).
double reference_counterterm(const TorusGrid& grid);
/// f(t, L) = counterterm_variance(t) - a_ref, the shift between the fixed and
/// homogeneous Wick conventions.
double counterterm_bridge_f(double t, const TorusGrid& grid, double a_ref);

/// E[(Z_t - Z^L_t, f)^2] for the restricted-noise coupling, as an exact sum
/// over master and sub-torus modes with the time integrals done in closed
/// form. f lives on the master grid and is supported inside the sub box.
double z_minus_zL_exact(const RealField& f, double sub_L, double t);

struct DecayRow {
  double half_length;
  double t;
  double estimate;
  double error;
  double oracle;
};

struct DecayTable {
  std::vector<DecayRow> rows;
  LinearFit fit;  // log estimate against L^2 / t, over rows with estimate > 0
};

/// Monte Carlo of E[(Z_t - Z^L_t, f)^2] with shared noise, exact OU steps of
/// size dt, Z_0 = 0. Every time must be a multiple of dt.
DecayTable z_minus_zL_decay(const RealField& f, const std::vector<double>& sub_Ls,
                            const std::vector<double>& times, int replicas, double dt,
                            const RngPolicy& policy);

void write_decay_csv(std::ostream& out, const DecayTable& table);

/// Throws unless f vanishes outside [-r, r]^2.
void require_support(const RealField& f, double r, const char* what);

}  // namespace phi4

#endif  // PHI4_GAUSSIAN_HPP
