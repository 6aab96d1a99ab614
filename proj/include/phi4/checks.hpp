#ifndef PHI4_CHECKS_HPP
#define PHI4_CHECKS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "phi4/besov.hpp"
#include "phi4/dynamics.hpp"
#include "phi4/noise.hpp"
#include "phi4/torus_grid.hpp"

namespace phi4 {

struct CheckOptions {
  bool quick = false;
  std::uint64_t seed = 20240601;
  /// Overrides the default replica count of Monte Carlo checks when > 0.
  int replicas = 0;
};

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::string summary;
  nlohmann::json stats;
};

CheckResult check_gaussian_covariance(const CheckOptions& o);
CheckResult check_wick_variance(const CheckOptions& o);
CheckResult check_counterterm_bridge(const CheckOptions& o);
CheckResult check_z_minus_zl(const CheckOptions& o);
CheckResult check_invariance(const CheckOptions& o);
CheckResult check_scheme_agreement(const CheckOptions& o);
CheckResult check_apriori_bound(const CheckOptions& o);
CheckResult check_propagation(const CheckOptions& o);
CheckResult check_entropy_pipeline(const CheckOptions& o);
CheckResult check_norm_suite(const CheckOptions& o);
CheckResult check_uniqueness(const CheckOptions& o);

struct InvarianceOptions {
  /// Two Langevin step sizes; the averages are extrapolated linearly to dt = 0.
  std::vector<double> dts{0.02, 0.01};
  double burn = 20.0;
  double span = 1500.0;
  double record_every = 0.2;
  long mala_samples = 16000;
  long mala_thin = 10;
  long mala_burn = 3000;
};

struct InvarianceRow {
  std::string observable;
  std::vector<Estimate> langevin;  // per dt
  double extrapolated = 0.0;
  Estimate mala;
  double sigma = 0.0;  // joint standard error of extrapolated - mala
  double z = 0.0;
};

struct InvarianceStudy {
  std::vector<InvarianceRow> rows;
  MalaReport mala;
};

/// Long-run exponential Langevin averages of magnetisation, susceptibility,
/// <phi^2> and Re E e^{i(f, phi)} per test function, against MALA.
InvarianceStudy invariance_study(const TorusGrid& grid, SimConfig cfg, const InvarianceOptions& options,
                                 const std::vector<RealField>& tests, const RngPolicy& policy);

/// Heat smoothing, multiplication, duality, kernel equivalence and embedding on
/// GFF samples (and their heat-smoothed copies and Wick squares).
std::vector<InequalityReport> norm_suite(const TorusGrid& grid, int samples, double alpha,
                                         double beta, double sigma, const RngPolicy& policy);

/// d indexed by increasing L decreases; an increase is tolerated only from a
/// value already within 3 errors of zero, and only within joint 3 sigma.
bool decreasing_until_floor(const std::vector<double>& d, const std::vector<double>& e);

/// Runs one acceptance check by number (1..11).
CheckResult run_check(int id, const CheckOptions& o);
/// Check numbers in a suite: gaussian, wick, norms, dynamics, entropy, all.
std::vector<int> suite_checks(const std::string& suite);

/// Compactly supported bump amp (1 - |x - c|^2 / r^2)^3.
RealField bump_function(const TorusGrid& grid, Point centre, double radius, double amp = 1.0);
/// amp exp(-|x - c|^2 / (2 s^2)) with minimum-image distance.
RealField gaussian_function(const TorusGrid& grid, Point centre, double s, double amp = 1.0);

}  // namespace phi4

#endif  // PHI4_CHECKS_HPP
