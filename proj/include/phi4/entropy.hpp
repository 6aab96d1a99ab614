#ifndef PHI4_ENTROPY_HPP
#define PHI4_ENTROPY_HPP

#include <string>
#include <vector>

#include "phi4/dynamics.hpp"
#include "phi4/stats.hpp"
#include "phi4/torus_grid.hpp"

namespace phi4 {

/// -sum_p log(1 - e^{-2t w_p}) over the grid modes.
double fredholm_logdet(double t, const TorusGrid& grid);

/// The four terms of E_m[log dm_t^0 / dm_inf^0] for m_t^0 = N(e^{-tA} phi0,
/// A^{-1}(1 - e^{-2tA})) and m_inf^0 = N(0, A^{-1}):
///   fredholm       = -1/2 log det(1 - e^{-2tA})                         (exact)
///   mean_quadratic = -1/2 (e^{-tA}phi0, A (1 - e^{-2tA})^{-1} e^{-tA}phi0) (exact)
///   quadratic      = -1/2 E (phi, A e^{-2tA} (1 - e^{-2tA})^{-1} phi)       (mc)
///   cross          = E (phi, A (1 - e^{-2tA})^{-1} e^{-tA} phi0)            (mc)
struct GaussianRelentTerms {
  double fredholm = 0.0;
  double mean_quadratic = 0.0;
  Estimate quadratic;
  Estimate cross;

  double total() const { return fredholm + mean_quadratic + quadratic.value + cross.value; }
};

GaussianRelentTerms gaussian_relent_terms(double t, const RealField& phi0,
                                          const std::vector<RealField>& samples);

/// Exact KL(m_t^0 | m_inf^0) for phi0 = 0: sum_p 1/2 [-log(1 - e^{-2tw}) - e^{-2tw}].
double gaussian_kl_closed_form(double t, const TorusGrid& grid);

/// Drift B = lambda :phi^3: + (mu - 1) phi of the entropy dynamics
/// (d + A) phi = -B + sqrt2 W, i.e. the phi^4 SPDE with mass parameter mu - 1.
struct DriftSpec {
  double lambda;
  double mu;

  double spde_mu() const { return mu - 1.0; }
  RealField operator()(const DpdState& s) const;
};

/// Linear family B = kappa phi (lambda = 0, kappa = mu - 1), phi0 = 0:
/// closed-form Girsanov bound 1/2 int_0^t E|| e^{-(t-s)A/2} B_s ||^2 ds.
double linear_girsanov_bound(double mu, double t, const TorusGrid& grid);
/// Exact KL(m_t | m_t^0) in the same family.
double linear_exact_entropy(double mu, double t, const TorusGrid& grid);

/// 2 e^{-(t-s)A} B_{2s-t} on the step grid s_k = k dt: `drifts` holds B at
/// s_0..s_n (n dt = t); zero for k < n/2.
RealField shifted_drift(const std::vector<RealField>& drifts, double dt, int k);

struct GirsanovOptions {
  double t = 1.0;
  double dt = 0.01;
  int replicas = 32;
  Symbol symbol = Symbol::spectral;
};

/// Monte Carlo of 1/2 int_0^t || e^{-(t-s)A/2} B_s ||^2 ds along DPD paths
/// from phi0, trapezoid over the stored steps with the first step s = 0
/// excluded (its contribution is O(dt)).
Estimate girsanov_entropy_bound(const DriftSpec& drift, const RealField& phi0,
                                const GirsanovOptions& options, const RngPolicy& policy);

struct TimeShiftResult {
  double dt;
  Estimate gap;  // E ||phi_t - phi~_t||_{L^2}
};

/// Evolves the original dynamics and the time-shifted one with the same noise
/// for each dt in `dts` (each half the previous one, nested noise), and
/// reports the terminal gap.
std::vector<TimeShiftResult> time_shift_check(const DriftSpec& drift, const RealField& phi0,
                                              double t, const std::vector<double>& dts,
                                              int replicas, const RngPolicy& policy);

struct PotentialTerms {
  Estimate log_partition;   // log E_{GFF}[e^{-V}]
  Estimate mean_potential;  // E_{m_t}[V]
  double effective_sample_size = 0.0;
  bool unreliable = false;
};

/// V = int (lambda/4 :phi^4: + mu/2 :phi^2:) at the fixed convention with
/// counterterm a. gff_samples drive the log-partition (jackknife error,
/// flagged when ESS < 100); dynamics_samples drive E[V].
PotentialTerms potential_terms(double lambda, double mu, double a,
                               const std::vector<RealField>& gff_samples,
                               const std::vector<RealField>& dynamics_samples);
double potential(const RealField& phi, double lambda, double mu, double a);
/// -1/2 sum_p log(1 + mu / w_p) + (mu/2) |T| a: exact log-partition for lambda = 0.
double mass_log_partition(double mu, double a, const TorusGrid& grid);

/// sqrt(2 H).
double pinsker_tv_bound(double H);

struct DecayFit {
  double rate = 0.0;
  double rate_error = 0.0;
  double lower95 = 0.0;  // one-sided 95% lower confidence bound
  int window = 0;        // points used
};

/// Least squares of log D against t over the leading window where
/// D >= 3 * error; the rate is minus the slope.
DecayFit decay_rate_fit(const std::vector<double>& t, const std::vector<double>& D,
                        const std::vector<double>& error = {});

struct EntropyTerm {
  std::string name;
  double value;
  double error;
  bool exact;
};

struct EntropyReport {
  std::vector<EntropyTerm> terms;
  bool log_partition_unreliable = false;

  double total() const;
  std::string to_json() const;
};

}  // namespace phi4

#endif  // PHI4_ENTROPY_HPP
