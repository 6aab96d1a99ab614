#include "phi4/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace phi4 {

double fredholm_logdet(double t, const TorusGrid& grid) {
  if (!(t > 0.0)) throw std::invalid_argument("fredholm_logdet needs t > 0");
  const Array2 w = generator_symbol(grid);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) sum -= std::log1p(-std::exp(-2.0 * t * w.data()[k]));
  return sum;
}

GaussianRelentTerms gaussian_relent_terms(double t, const RealField& phi0,
                                          const std::vector<RealField>& samples) {
  if (!(t > 0.0)) throw std::invalid_argument("gaussian_relent_terms needs t > 0");
  const TorusGrid& g = phi0.grid;
  const Array2 w = generator_symbol(g);
  const Array2 e2 = (-2.0 * t * w).exp();
  const Array2 one_minus = -e2 + 1.0;
  const double volume = g.volume();

  GaussianRelentTerms terms;
  terms.fredholm = 0.5 * fredholm_logdet(t, g);
  const SpectralField p0 = forward(phi0);
  terms.mean_quadratic = -0.5 * volume * (p0.coeffs.abs2() * w * e2 / one_minus).sum();

  const Array2 quad_symbol = w * e2 / one_minus;
  const CArray2 cross_vector = p0.coeffs * (w * (-t * w).exp() / one_minus);
  std::vector<double> quad, cross;
  for (const RealField& s : samples) {
    if (s.grid != g) throw std::invalid_argument("sample grid mismatch");
    const SpectralField ps = forward(s);
    quad.push_back(-0.5 * volume * (ps.coeffs.abs2() * quad_symbol).sum());
    cross.push_back(volume * (ps.coeffs * cross_vector.conjugate()).real().sum());
  }
  if (!samples.empty()) {
    terms.quadratic = mean_estimate(quad);
    terms.cross = mean_estimate(cross);
  }
  return terms;
}

double gaussian_kl_closed_form(double t, const TorusGrid& grid) {
  const Array2 e2 = (-2.0 * t * generator_symbol(grid)).exp();
  double sum = 0.0;
  for (Eigen::Index k = 0; k < e2.size(); ++k) sum += 0.5 * (-std::log1p(-e2.data()[k]) - e2.data()[k]);
  return sum;
}

RealField DriftSpec::operator()(const DpdState& s) const {
  RealField b = wick_of_phi(s.v, s.wick, 3);
  b.values = lambda * b.values + (mu - 1.0) * (s.v.values + s.wick.z.values);
  return b;
}

double linear_girsanov_bound(double mu, double t, const TorusGrid& grid) {
  const double kappa = mu - 1.0;
  const Array2 w = generator_symbol(grid);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double om = w.data()[k];
    const double nu = om + kappa;
    if (!(nu > 0.0)) throw std::invalid_argument("linear family needs w + mu - 1 > 0 on every mode");
    const double d = om - 2.0 * nu;
    const double second = std::abs(d) < 1e-12 ? t * std::exp(-t * om)
                                              : (std::exp(-2.0 * t * nu) - std::exp(-t * om)) / d;
    sum += (-std::expm1(-t * om) / om - second) / nu;
  }
  return 0.5 * kappa * kappa * sum;
}

double linear_exact_entropy(double mu, double t, const TorusGrid& grid) {
  const double kappa = mu - 1.0;
  const Array2 w = generator_symbol(grid);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double om = w.data()[k];
    const double nu = om + kappa;
    if (!(nu > 0.0)) throw std::invalid_argument("linear family needs w + mu - 1 > 0 on every mode");
    const double r = (-std::expm1(-2.0 * t * nu) / nu) / (-std::expm1(-2.0 * t * om) / om);
    sum += 0.5 * (r - 1.0 - std::log(r));
  }
  return sum;
}

RealField shifted_drift(const std::vector<RealField>& drifts, double dt, int k) {
  if (drifts.empty()) throw std::invalid_argument("no stored drifts");
  const int n = static_cast<int>(drifts.size()) - 1;
  if (k < 0 || k > n) throw std::invalid_argument("shifted drift: step outside the stored range");
  if (2 * k < n) return RealField(drifts.front().grid);
  const int source = 2 * k - n;
  RealField out = heat_semigroup(drifts[static_cast<std::size_t>(source)], (n - k) * dt);
  out.values *= 2.0;
  return out;
}

Estimate girsanov_entropy_bound(const DriftSpec& drift, const RealField& phi0,
                                const GirsanovOptions& o, const RngPolicy& policy) {
  if (!(o.t > 0.0)) throw std::invalid_argument("Girsanov bound needs t > 0");
  const long n = std::lround(o.t / o.dt);
  if (n < 2 || std::abs(n * o.dt - o.t) > 1e-9 * o.t)
    throw std::invalid_argument("Girsanov bound needs t to be at least two steps of dt");
  const TorusGrid& g = phi0.grid;
  SimConfig cfg;
  cfg.lambda = drift.lambda;
  cfg.mu = drift.spde_mu();
  cfg.dt = o.dt;
  cfg.horizon = o.t;
  cfg.dpd_symbol = o.symbol;
  const DpdIntegrator dpd(g, cfg);
  const Array2 w = generator_symbol(g, o.symbol);
  std::vector<double> values;
  for (int r = 0; r < o.replicas; ++r) {
    DpdState s = dpd.start(phi0);
    double integral = 0.0;
    for (long k = 0; k <= n; ++k) {
      if (k > 0) {
        const SpectralField b = forward(drift(s));
        const double sq = g.volume() * (b.coeffs.abs2() * (-(o.t - k * o.dt) * w).exp()).sum();
        integral += (k == 1 || k == n ? 0.5 : 1.0) * o.dt * sq;
      }
      if (k == n) break;
      dpd.step(s, sample_slab(policy, g, o.dt, static_cast<std::uint64_t>(k),
                              static_cast<std::uint64_t>(r)).increments);
    }
    values.push_back(0.5 * integral);
  }
  return mean_estimate(values);
}

std::vector<TimeShiftResult> time_shift_check(const DriftSpec& drift, const RealField& phi0,
                                              double t, const std::vector<double>& dts,
                                              int replicas, const RngPolicy& policy) {
  if (dts.empty()) throw std::invalid_argument("time shift check needs at least one dt");
  for (std::size_t l = 1; l < dts.size(); ++l)
    if (std::abs(dts[l] * 2.0 - dts[l - 1]) > 1e-12 * dts[l - 1])
      throw std::invalid_argument("time shift check needs each dt to halve the previous one");
  const TorusGrid& g = phi0.grid;
  const double fine_dt = dts.back();
  std::vector<TimeShiftResult> out;
  for (std::size_t l = 0; l < dts.size(); ++l) {
    const double dt = dts[l];
    const long n = std::lround(t / dt);
    if (n < 2 || n % 2 != 0 || std::abs(n * dt - t) > 1e-9 * t)
      throw std::invalid_argument("t must be an even number of steps of every dt");
    const int ratio = 1 << static_cast<int>(dts.size() - 1 - l);
    SimConfig cfg;
    cfg.lambda = drift.lambda;
    cfg.mu = drift.spde_mu();
    cfg.dt = dt;
    cfg.horizon = t;
    const DpdIntegrator dpd(g, cfg);
    const Array2 decay = (-dt * generator_symbol(g)).exp();
    std::vector<double> gaps;
    for (int r = 0; r < replicas; ++r) {
      DpdState s = dpd.start(phi0);
      RealField shifted_v(g);
      std::vector<RealField> drifts;
      for (long k = 0; k < n; ++k) {
        drifts.push_back(drift(s));
        // B~ at s_k needs B at 2k - n <= k, already stored.
        RealField tilde(g);
        if (2 * k >= n) {
          tilde = heat_semigroup(drifts[static_cast<std::size_t>(2 * k - n)], (n - k) * dt);
          tilde.values *= 2.0;
        }
        shifted_v = apply_multiplier(RealField(g, shifted_v.values - dt * tilde.values), decay);
        dpd.step(s, summed_increment(policy, g, fine_dt, static_cast<std::uint64_t>(k * ratio), ratio,
                                     static_cast<std::uint64_t>(r)));
      }
      const RealField diff(g, s.v.values - shifted_v.values);
      gaps.push_back(std::sqrt(inner(diff, diff)));
    }
    out.push_back({dt, mean_estimate(gaps)});
  }
  return out;
}

double potential(const RealField& phi, double lambda, double mu, double a) {
  const double h = phi.grid.spacing();
  return h * h *
         (0.25 * lambda * hermite_apply(phi.values, a, 4) + 0.5 * mu * hermite_apply(phi.values, a, 2)).sum();
}

PotentialTerms potential_terms(double lambda, double mu, double a,
                               const std::vector<RealField>& gff_samples,
                               const std::vector<RealField>& dynamics_samples) {
  PotentialTerms out;
  if (lambda == 0.0 && mu == 0.0) {
    out.effective_sample_size = static_cast<double>(gff_samples.size());
    return out;
  }
  const std::size_t n = gff_samples.size();
  if (n >= 2) {
    std::vector<double> logw;
    for (const RealField& s : gff_samples) logw.push_back(-potential(s, lambda, mu, a));
    const double shift = *std::max_element(logw.begin(), logw.end());
    double sum = 0.0;
    double sum2 = 0.0;
    std::vector<double> w;
    for (double lw : logw) {
      w.push_back(std::exp(lw - shift));
      sum += w.back();
      sum2 += w.back() * w.back();
    }
    const double nn = static_cast<double>(n);
    out.log_partition.value = shift + std::log(sum / nn);
    double mean_loo = 0.0;
    std::vector<double> loo;
    for (double wi : w) {
      loo.push_back(shift + std::log(std::max(sum - wi, std::numeric_limits<double>::min()) / (nn - 1.0)));
      mean_loo += loo.back() / nn;
    }
    double ss = 0.0;
    for (double x : loo) ss += (x - mean_loo) * (x - mean_loo);
    out.log_partition.error = std::sqrt((nn - 1.0) / nn * ss);
    out.effective_sample_size = sum * sum / sum2;
    out.unreliable = out.effective_sample_size < 100.0;
  } else {
    out.unreliable = true;
  }
  std::vector<double> v;
  for (const RealField& s : dynamics_samples) v.push_back(potential(s, lambda, mu, a));
  if (!v.empty()) out.mean_potential = mean_estimate(v);
  return out;
}

double mass_log_partition(double mu, double a, const TorusGrid& grid) {
  const Array2 w = generator_symbol(grid);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) sum -= 0.5 * std::log1p(mu / w.data()[k]);
  return sum + 0.5 * mu * grid.volume() * a;
}

double pinsker_tv_bound(double H) {
  if (!(H >= 0.0)) throw std::invalid_argument("relative entropy must be nonnegative");
  return std::sqrt(2.0 * H);
}

DecayFit decay_rate_fit(const std::vector<double>& t, const std::vector<double>& D,
                        const std::vector<double>& error) {
  if (t.size() != D.size() || (!error.empty() && error.size() != D.size()))
    throw std::invalid_argument("decay fit: series lengths differ");
  std::vector<double> x, y, s;
  for (std::size_t k = 0; k < D.size(); ++k) {
    const double e = error.empty() ? 0.0 : error[k];
    if (!(D[k] > 0.0) || D[k] < 3.0 * e) break;
    x.push_back(t[k]);
    y.push_back(std::log(D[k]));
    s.push_back(e / D[k]);
  }
  if (x.size() < 2) throw std::invalid_argument("decay fit: empty fit window");
  DecayFit fit;
  fit.window = static_cast<int>(x.size());
  const LinearFit plain = linear_fit(x, y);
  fit.rate = -plain.slope;
  double se = plain.dof > 0 ? plain.slope_stderr : 0.0;
  const bool weighted = std::all_of(s.begin(), s.end(), [](double v) { return v > 0.0; });
  if (weighted) se = std::max(se, linear_fit(x, y, s).slope_stderr);
  if (!std::isfinite(se)) se = 0.0;
  fit.rate_error = se;
  const double q = plain.dof > 0 ? student_t_quantile(plain.dof, 0.90) : 1.6448536269514722;
  fit.lower95 = fit.rate - q * se;
  return fit;
}

double EntropyReport::total() const {
  double sum = 0.0;
  for (const EntropyTerm& t : terms) sum += t.value;
  return sum;
}

std::string EntropyReport::to_json() const {
  nlohmann::json j;
  j["terms"] = nlohmann::json::array();
  for (const EntropyTerm& t : terms)
    j["terms"].push_back({{"name", t.name}, {"value", t.value}, {"stderr", t.error},
                          {"provenance", t.exact ? "exact" : "mc"}});
  j["total_upper_bound"] = total();
  j["log_partition_unreliable"] = log_partition_unreliable;
  return j.dump(2);
}

}  // namespace phi4
