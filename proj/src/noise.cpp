#include "phi4/noise.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace phi4 {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t RngPolicy::stream_key(std::uint64_t replica, std::uint64_t step,
                                    Channel channel) const {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ replica);
  h = splitmix64(h ^ step);
  return splitmix64(h ^ static_cast<std::uint64_t>(channel));
}

std::mt19937_64 RngPolicy::engine(std::uint64_t replica, std::uint64_t step,
                                  Channel channel) const {
  return std::mt19937_64(stream_key(replica, step, channel));
}

Array2 standard_normals(std::mt19937_64& engine, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Array2 out(n, n);
  for (Eigen::Index k = 0; k < out.size(); ++k) out.data()[k] = normal(engine);
  return out;
}

NoiseSlab sample_slab(const RngPolicy& policy, const TorusGrid& grid, double dt,
                      std::uint64_t step, std::uint64_t replica) {
  if (!(dt > 0.0)) throw std::invalid_argument("noise time step must be positive");
  auto engine = policy.engine(replica, step);
  const double scale = std::sqrt(dt) / grid.spacing();
  RealField increments(grid, standard_normals(engine, grid.points()) * scale);
  return NoiseSlab{grid, dt, std::move(increments), step, replica};
}

RealField summed_increment(const RngPolicy& policy, const TorusGrid& grid, double fine_dt,
                           std::uint64_t first, int count, std::uint64_t replica) {
  if (count < 1) throw std::invalid_argument("need at least one fine slab");
  RealField sum = sample_slab(policy, grid, fine_dt, first, replica).increments;
  for (int k = 1; k < count; ++k)
    sum.values += sample_slab(policy, grid, fine_dt, first + static_cast<std::uint64_t>(k), replica)
                      .increments.values;
  return sum;
}

namespace {

bool near_integer(double x, double& rounded) {
  rounded = std::round(x);
  return std::abs(x - rounded) < 1e-9 * std::max(1.0, std::abs(x));
}

}  // namespace

int sub_grid_offset(const TorusGrid& master, double sub_L) {
  const double L = master.half_length();
  double ratio = 0.0;
  double offset = 0.0;
  double points = 0.0;
  std::ostringstream why;
  if (!(sub_L > 0.0) || sub_L > L * (1 + 1e-12)) {
    why << "sub-torus half-length " << sub_L << " must lie in (0, " << L << "]";
    throw std::invalid_argument(why.str());
  }
  if (!near_integer(L / sub_L, ratio)) {
    why << "L_max / sub_L = " << L / sub_L << " must be an integer";
    throw std::invalid_argument(why.str());
  }
  if (!near_integer((L - sub_L) / master.spacing(), offset) ||
      !near_integer(2.0 * sub_L / master.spacing(), points) ||
      static_cast<long>(points) % 2 != 0) {
    why << "sub-torus edge -" << sub_L << " must sit on a master site and 2 sub_L / h = "
        << 2.0 * sub_L / master.spacing() << " must be an even integer";
    throw std::invalid_argument(why.str());
  }
  return static_cast<int>(offset);
}

TorusGrid sub_grid(const TorusGrid& master, double sub_L) {
  sub_grid_offset(master, sub_L);
  if (sub_L >= master.half_length()) return master;
  const int n = static_cast<int>(std::lround(2.0 * sub_L / master.spacing()));
  return TorusGrid(n * master.spacing() / 2.0, n);
}

RealField restrict_to_box(const RealField& master, double sub_L) {
  const int offset = sub_grid_offset(master.grid, sub_L);
  TorusGrid g = sub_grid(master.grid, sub_L);
  const int n = g.points();
  return RealField(g, master.values.block(offset, offset, n, n));
}

RealField extend_by_zero(const RealField& sub, const TorusGrid& master) {
  const int offset = sub_grid_offset(master, sub.grid.half_length());
  if (std::abs(sub.grid.spacing() - master.spacing()) > 1e-12 * master.spacing())
    throw std::invalid_argument("sub-grid spacing differs from the master spacing");
  RealField out(master);
  const int n = sub.grid.points();
  out.values.block(offset, offset, n, n) = sub.values;
  return out;
}

RealField periodise_noise(const NoiseSlab& slab, double sub_L) {
  return restrict_to_box(slab.increments, sub_L);
}

double smooth_cutoff(double r) {
  constexpr double inner = 0.99;
  constexpr double outer = 1.0;
  if (r <= inner) return 1.0;
  if (r >= outer) return 0.0;
  auto psi = [](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; };
  const double s = (r - inner) / (outer - inner);
  return psi(1.0 - s) / (psi(1.0 - s) + psi(s));
}

double default_bump(Point x) { return smooth_cutoff(std::abs(x[0])) * smooth_cutoff(std::abs(x[1])); }

RealField periodise_initial(const RealField& phi0, double sub_L,
                            const std::function<double(Point)>& cutoff) {
  sub_grid_offset(phi0.grid, sub_L);
  TorusGrid g = sub_grid(phi0.grid, sub_L);
  RealField out(g);
  const int n_master = phi0.grid.points();
  const int n = g.points();
  const double h = phi0.grid.spacing();
  for (int i = 0; i < n_master; ++i) {
    const double y1 = phi0.grid.coordinate(i);
    for (int j = 0; j < n_master; ++j) {
      const double y2 = phi0.grid.coordinate(j);
      const double weight = cutoff({y1 / sub_L, y2 / sub_L});
      if (weight == 0.0) continue;
      // Site index of y modulo 2 sub_L on the sub-grid.
      const long a = std::lround((y1 + sub_L) / h);
      const long b = std::lround((y2 + sub_L) / h);
      const int si = static_cast<int>(((a % n) + n) % n);
      const int sj = static_cast<int>(((b % n) + n) % n);
      out(si, sj) += weight * phi0(i, j);
    }
  }
  return out;
}

}  // namespace phi4
