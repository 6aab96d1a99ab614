#include "phi4/besov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "phi4/stats.hpp"

namespace phi4 {

namespace {

struct Offset {
  int di;
  int dj;
  double inv_len_pow;
};

std::vector<Offset> offsets_within_unit(const TorusGrid& grid, double exponent) {
  const double h = grid.spacing();
  const int reach = std::min(static_cast<int>(std::floor(1.0 / h)), grid.points() / 2);
  std::vector<Offset> out;
  for (int di = -reach; di <= reach; ++di) {
    for (int dj = -reach; dj <= reach; ++dj) {
      if (di == 0 && dj == 0) continue;
      const double len = h * std::sqrt(static_cast<double>(di * di + dj * dj));
      if (len > 1.0 + 1e-12) continue;
      out.push_back({di, dj, std::pow(len, -exponent)});
    }
  }
  return out;
}

int wrap(int i, int n) { return ((i % n) + n) % n; }

bool in_box(double x, double r) { return std::abs(x) <= r + 1e-12; }

void check_region(const TorusGrid& grid, const Region& region) {
  if (!region.weighted && !(region.half_width > 0.0 && region.half_width <= grid.half_length()))
    throw std::invalid_argument("local norm box must lie inside the fundamental domain");
}

InequalityReport summarise(std::string name, const std::vector<double>& ratios) {
  InequalityReport r;
  r.inequality = std::move(name);
  r.samples = static_cast<int>(ratios.size());
  if (ratios.empty()) return r;
  r.median_ratio = median(ratios);
  r.p95_ratio = quantile(ratios, 0.95);
  r.min_ratio = *std::min_element(ratios.begin(), ratios.end());
  r.max_ratio = *std::max_element(ratios.begin(), ratios.end());
  return r;
}

bool all_finite(const std::vector<double>& xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

double weight(Point x, double sigma) {
  if (sigma == 0.0) return 1.0;
  return std::pow(1.0 + x[0] * x[0] + x[1] * x[1], -0.5 * sigma);
}

std::vector<double> dyadic_scales(const TorusGrid& grid, int levels) {
  const int cap_n = static_cast<int>(std::floor(std::log2(grid.points() / 8.0) + 1e-12));
  const int cap_h = static_cast<int>(std::floor(std::log2(1.0 / (2.0 * grid.spacing())) + 1e-12));
  const int cap = std::min(cap_n, cap_h);
  if (cap < 0) throw std::invalid_argument("grid too coarse for any admissible scale");
  if (levels > cap)
    throw std::invalid_argument("J = " + std::to_string(levels) + " exceeds the grid cap " +
                                std::to_string(cap));
  const int J = levels < 0 ? cap : levels;
  std::vector<double> scales;
  for (int j = 0; j <= J; ++j) scales.push_back(std::ldexp(1.0, -j));
  return scales;
}

RealField bump_kernel(const TorusGrid& grid, double R, Profile profile) {
  if (!(R > 0.0)) throw std::invalid_argument("scale must be positive");
  RealField k(grid);
  for (int i = 0; i < grid.points(); ++i) {
    for (int j = 0; j < grid.points(); ++j) {
      const double x = grid.coordinate(i) / R;
      const double y = grid.coordinate(j) / R;
      const double r2 = x * x + y * y;
      if (r2 >= 1.0) continue;
      k(i, j) = profile == Profile::exponential ? std::exp(-1.0 / (1.0 - r2)) : std::pow(1.0 - r2, 3);
    }
  }
  const double h = grid.spacing();
  const double mass = h * h * k.values.sum();
  if (!(mass > 0.0)) throw std::invalid_argument("scale below the grid resolution");
  k.values /= mass;
  return k;
}

RealField smooth_at_scale(const RealField& f, double R, Profile profile) {
  const SpectralField kf = forward(bump_kernel(f.grid, R, profile));
  const SpectralField ff = forward(f);
  return inverse(SpectralField(f.grid, f.grid.volume() * kf.coeffs * ff.coeffs));
}

double neg_norm(const RealField& f, const NormConfig& cfg, const Region& region) {
  if (!(cfg.alpha > 0.0)) throw std::invalid_argument("neg_norm needs alpha > 0");
  check_region(f.grid, region);
  const TorusGrid& g = f.grid;
  double best = 0.0;
  for (double R : dyadic_scales(g, cfg.levels)) {
    const RealField s = smooth_at_scale(f, R, cfg.profile);
    const double scale = std::pow(R, cfg.alpha);
    for (int i = 0; i < g.points(); ++i) {
      const double x1 = g.coordinate(i);
      for (int j = 0; j < g.points(); ++j) {
        const double x2 = g.coordinate(j);
        double w = 1.0;
        if (region.weighted) {
          w = weight({x1, x2}, cfg.sigma);
        } else if (!in_box(std::abs(x1) + R, region.half_width) ||
                   !in_box(std::abs(x2) + R, region.half_width)) {
          continue;
        }
        best = std::max(best, scale * w * std::abs(s(i, j)));
      }
    }
  }
  return best;
}

double sup_norm(const RealField& f, double sigma, const Region& region) {
  check_region(f.grid, region);
  const TorusGrid& g = f.grid;
  double best = 0.0;
  for (int i = 0; i < g.points(); ++i) {
    for (int j = 0; j < g.points(); ++j) {
      const Point x{g.coordinate(i), g.coordinate(j)};
      if (!region.weighted && (!in_box(x[0], region.half_width) || !in_box(x[1], region.half_width)))
        continue;
      best = std::max(best, (region.weighted ? weight(x, sigma) : 1.0) * std::abs(f(i, j)));
    }
  }
  return best;
}

double holder_seminorm(const RealField& f, double alpha, const Region& region, double sigma) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("Hoelder exponent must lie in (0, 1)");
  check_region(f.grid, region);
  const TorusGrid& g = f.grid;
  const int n = g.points();
  const std::vector<Offset> offsets = offsets_within_unit(g, alpha);
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x1 = g.coordinate(i);
    for (int j = 0; j < n; ++j) {
      const double x2 = g.coordinate(j);
      double w = 1.0;
      if (region.weighted) {
        w = weight({x1, x2}, sigma);
      } else if (!in_box(x1, region.half_width) || !in_box(x2, region.half_width)) {
        continue;
      }
      const double fx = f(i, j);
      double local = 0.0;
      for (const Offset& o : offsets) {
        if (!region.weighted) {
          const double h = g.spacing();
          if (!in_box(x1 + o.di * h, region.half_width) || !in_box(x2 + o.dj * h, region.half_width))
            continue;
        }
        local = std::max(local, std::abs(fx - f(wrap(i + o.di, n), wrap(j + o.dj, n))) * o.inv_len_pow);
      }
      best = std::max(best, w * local);
    }
  }
  return best;
}

double holder_norm(const RealField& f, double alpha, const Region& region, double sigma) {
  return sup_norm(f, sigma, region) + holder_seminorm(f, alpha, region, sigma);
}

double b11_dual_norm(const RealField& g, double beta, double sigma) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  const TorusGrid& grid = g.grid;
  const int n = grid.points();
  const double h2 = grid.spacing() * grid.spacing();
  const std::vector<Offset> offsets = offsets_within_unit(grid, beta + 2.0);
  double l1 = 0.0;
  double variation = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double inv_w = 1.0 / weight({grid.coordinate(i), grid.coordinate(j)}, sigma);
      const double gx = g(i, j);
      l1 += inv_w * std::abs(gx);
      double local = 0.0;
      for (const Offset& o : offsets)
        local += std::abs(gx - g(wrap(i + o.di, n), wrap(j + o.dj, n))) * o.inv_len_pow;
      variation += inv_w * local;
    }
  }
  return h2 * l1 + h2 * h2 * variation;
}

InequalityReport check_heat_smoothing(const std::vector<RealField>& samples, double alpha,
                                      const std::vector<double>& times, double sigma) {
  if (samples.empty() || times.empty()) throw std::invalid_argument("heat smoothing needs samples and times");
  NormConfig cfg;
  cfg.alpha = alpha;
  cfg.sigma = sigma;
  std::vector<double> norms;
  for (const RealField& v : samples) norms.push_back(neg_norm(v, cfg, Region::whole()));
  std::vector<double> per_time;
  for (double t : times) {
    double worst = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const double lhs = sup_norm(heat_flow(samples[k], t), sigma, Region::whole());
      worst = std::max(worst, lhs / (std::pow(t, -alpha / 2.0) * norms[k]));
    }
    per_time.push_back(worst);
  }
  InequalityReport r = summarise("heat-smoothing", per_time);
  r.samples = static_cast<int>(samples.size());
  r.pass = all_finite(per_time) && r.min_ratio > 0.0 && r.max_ratio / r.min_ratio < 20.0;
  return r;
}

InequalityReport check_multiplication(const std::vector<RealField>& u, const std::vector<RealField>& v,
                                      double alpha, double beta, double sigma) {
  if (u.size() != v.size() || u.empty()) throw std::invalid_argument("multiplication check needs paired samples");
  if (!(beta > alpha && alpha > 0.0)) throw std::invalid_argument("multiplication check needs beta > alpha > 0");
  NormConfig cfg;
  cfg.alpha = alpha;
  cfg.sigma = sigma;
  NormConfig cfg2 = cfg;
  cfg2.sigma = 2.0 * sigma;
  std::vector<double> ratios;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const RealField uv(u[k].grid, u[k].values * v[k].values);
    const double denom = neg_norm(v[k], cfg, Region::whole()) * holder_norm(u[k], beta, Region::whole(), sigma);
    if (denom == 0.0) continue;
    ratios.push_back(neg_norm(uv, cfg2, Region::whole()) / denom);
  }
  InequalityReport r = summarise("multiplication", ratios);
  r.pass = !ratios.empty() && all_finite(ratios) && r.p95_ratio <= 2.0 * r.median_ratio;
  return r;
}

InequalityReport check_duality(const std::vector<RealField>& f, const std::vector<RealField>& g,
                               double alpha, double beta, double sigma) {
  if (f.empty() || g.empty()) throw std::invalid_argument("duality check needs samples");
  NormConfig cfg;
  cfg.alpha = alpha;
  cfg.sigma = sigma;
  std::vector<double> g_norms;
  for (const RealField& gk : g) g_norms.push_back(b11_dual_norm(gk, beta, sigma));
  std::vector<double> ratios;
  for (const RealField& fk : f) {
    const double nf = neg_norm(fk, cfg, Region::whole());
    if (nf == 0.0) continue;
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      worst = std::max(worst, std::abs(inner(fk, g[k])) / (nf * g_norms[k]));
    // Witnesses Psi_R(x* - .) at the maximising centre x* of each scale, for
    // which (f, g) = Psi_R * f(x*).
    const TorusGrid& grid = fk.grid;
    const int n = grid.points();
    for (double R : dyadic_scales(grid, cfg.levels)) {
      const RealField s = smooth_at_scale(fk, R, cfg.profile);
      int bi = 0;
      int bj = 0;
      double best = -1.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double v = weight({grid.coordinate(i), grid.coordinate(j)}, sigma) * std::abs(s(i, j));
          if (v > best) {
            best = v;
            bi = i;
            bj = j;
          }
        }
      const RealField centred = bump_kernel(grid, R, cfg.profile);
      RealField witness(grid);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          witness((i + bi - n / 2 + n) % n, (j + bj - n / 2 + n) % n) = centred(i, j);
      worst = std::max(worst, std::abs(inner(fk, witness)) / (nf * b11_dual_norm(witness, beta, sigma)));
    }
    ratios.push_back(worst);
  }
  InequalityReport r = summarise("duality", ratios);
  r.pass = !ratios.empty() && all_finite(ratios) && r.p95_ratio <= 2.0 * r.median_ratio;
  return r;
}

InequalityReport check_kernel_equivalence(const std::vector<RealField>& samples, double alpha,
                                          double sigma) {
  NormConfig a;
  a.alpha = alpha;
  a.sigma = sigma;
  NormConfig b = a;
  b.profile = Profile::polynomial;
  std::vector<double> ratios;
  for (const RealField& s : samples) {
    const double nb = neg_norm(s, b, Region::whole());
    if (nb > 0.0) ratios.push_back(neg_norm(s, a, Region::whole()) / nb);
  }
  InequalityReport r = summarise("kernel-equivalence", ratios);
  r.pass = !ratios.empty() && all_finite(ratios) && r.max_ratio <= 3.0 * r.min_ratio;
  return r;
}

InequalityReport check_embedding(const std::vector<RealField>& samples, double alpha, double sigma,
                                 double p) {
  if (samples.empty()) throw std::invalid_argument("embedding check needs samples");
  const TorusGrid& g = samples.front().grid;
  NormConfig cfg;
  cfg.alpha = alpha;
  cfg.sigma = sigma;
  // Geometric R grid on [2h, 1], trapezoid in log R.
  const double r_min = 2.0 * g.spacing();
  const int m = 24;
  std::vector<double> rs;
  for (int k = 0; k <= m; ++k) rs.push_back(r_min * std::pow(1.0 / r_min, static_cast<double>(k) / m));
  const double dlog = std::log(1.0 / r_min) / m;
  Array2 w(g.points(), g.points());
  for (int i = 0; i < g.points(); ++i)
    for (int j = 0; j < g.points(); ++j) w(i, j) = std::pow(weight({g.coordinate(i), g.coordinate(j)}, sigma), p);
  const double h2 = g.spacing() * g.spacing();
  std::vector<double> constants;
  for (const RealField& f : samples) {
    const double lhs = std::pow(neg_norm(f, cfg, Region::whole()), p);
    double rhs = 0.0;
    for (int k = 0; k <= m; ++k) {
      const RealField s = smooth_at_scale(f, rs[k], Profile::exponential);
      const double lp = h2 * (w * s.values.abs().pow(p)).sum();
      const double trap = (k == 0 || k == m) ? 0.5 : 1.0;
      rhs += trap * dlog * std::pow(rs[k], p * alpha - 2.0) * lp;
    }
    if (rhs > 0.0) constants.push_back(std::pow(lhs / rhs, 1.0 / p));
  }
  InequalityReport r = summarise("embedding", constants);
  r.pass = !constants.empty() && all_finite(constants) && r.p95_ratio <= 2.0 * r.median_ratio;
  return r;
}

void write_report_csv(std::ostream& out, const std::vector<InequalityReport>& reports) {
  out << "inequality,sample_count,median_ratio,p95_ratio,verdict\n";
  out.precision(10);
  for (const InequalityReport& r : reports)
    out << r.inequality << ',' << r.samples << ',' << r.median_ratio << ',' << r.p95_ratio << ','
        << (r.pass ? "pass" : "fail") << '\n';
}

}  // namespace phi4
