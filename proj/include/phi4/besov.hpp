#ifndef PHI4_BESOV_HPP
#define PHI4_BESOV_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "phi4/torus_grid.hpp"

namespace phi4 {

/// Test-function profiles, both supported in the unit ball:
/// exponential: exp(-1 / (1 - |x|^2)); polynomial: (1 - |x|^2)^3.
/// Each is renormalised so that h^2 sum Psi_R = 1 on the grid.
enum class Profile { exponential, polynomial };

struct NormConfig {
  double alpha = 0.1;  // ||f||_{-alpha}, alpha > 0
  double sigma = 0.0;  // weight (1 + |x|^2)^{-sigma/2}
  Profile profile = Profile::exponential;
  int levels = -1;     // scales 2^{-j}, j = 0..levels; -1 picks the largest allowed
};

/// Either the weighted norm over the whole fundamental domain, or the local
/// norm on the box [-r, r]^2.
struct Region {
  bool weighted = true;
  double half_width = 0.0;

  static Region whole() { return Region{true, 0.0}; }
  static Region box(double r) { return Region{false, r}; }
};

double weight(Point x, double sigma);

/// Dyadic scales R = 2^{-j}, j = 0..J, with J <= log2(N/8) and R >= 2h.
/// levels = -1 takes the largest such J; larger requests are rejected.
std::vector<double> dyadic_scales(const TorusGrid& grid, int levels = -1);

/// Psi_R sampled on the grid around the origin (minimum image).
RealField bump_kernel(const TorusGrid& grid, double R, Profile profile);
/// Psi_R * f by FFT.
RealField smooth_at_scale(const RealField& f, double R, Profile profile);

/// max_R max_x R^alpha |Psi_R * f(x)|, weighted by rho(x) or restricted to
/// centres with B_R(x) inside the box.
double neg_norm(const RealField& f, const NormConfig& cfg, const Region& region);
/// sup |f| (times rho when weighted).
double sup_norm(const RealField& f, double sigma, const Region& region);
/// max over sites x and all grid offsets 0 < |z| <= 1 of
/// rho(x) |f(x) - f(x + z)| / |z|^alpha; in the box both x and x + z must lie in it.
double holder_seminorm(const RealField& f, double alpha, const Region& region, double sigma = 0.0);
double holder_norm(const RealField& f, double alpha, const Region& region, double sigma = 0.0);

/// ||g||_{L^1(1/rho)} + h^4 sum_x sum_{0<|y|<=1} |g(x) - g(x+y)| / (rho(x) |y|^{beta+2}).
double b11_dual_norm(const RealField& g, double beta, double sigma = 0.0);

struct InequalityReport {
  std::string inequality;
  int samples = 0;
  double median_ratio = 0.0;
  double p95_ratio = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  bool pass = false;
};

/// Heat smoothing ||e^{t Lap} v||_rho <= C t^{-alpha/2} ||v||_{-alpha,rho}:
/// ratio per t is the sup over samples; pass iff max/min over t < 20.
InequalityReport check_heat_smoothing(const std::vector<RealField>& samples, double alpha,
                                      const std::vector<double>& times, double sigma = 0.0);

/// ||u v||_{-alpha, rho rho'} / (||v||_{-alpha,rho} ||u||_{beta,rho'}) with
/// rho' = rho; pass iff p95 <= 2 median.
InequalityReport check_multiplication(const std::vector<RealField>& u, const std::vector<RealField>& v,
                                      double alpha, double beta, double sigma = 0.0);

/// Per f, the constant max_g |(f, g)| / (||f||_{-alpha,rho} |||g|||_{beta,1/rho}),
/// with g over the given family and the bump at the maximising centre of each
/// scale; pass iff p95 <= 2 median over f.
InequalityReport check_duality(const std::vector<RealField>& f, const std::vector<RealField>& g,
                               double alpha, double beta, double sigma = 0.0);

/// Ratio of neg_norm under the two profiles; pass iff max/min <= 3.
InequalityReport check_kernel_equivalence(const std::vector<RealField>& samples, double alpha,
                                          double sigma = 0.0);

/// ||f||^p_{-alpha,rho} against int_{2h}^1 R^{p alpha - 2} ||Psi_R * f||^p_{L^p(rho)} dR/R at
/// p = 4; reports C = (lhs/rhs)^{1/p}; pass iff finite and p95 <= 2 median.
InequalityReport check_embedding(const std::vector<RealField>& samples, double alpha,
                                 double sigma = 0.0, double p = 4.0);

void write_report_csv(std::ostream& out, const std::vector<InequalityReport>& reports);

}  // namespace phi4

#endif  // PHI4_BESOV_HPP
