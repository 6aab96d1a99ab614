#ifndef PHI4_NOISE_HPP
#define PHI4_NOISE_HPP

#include <cstdint>
#include <functional>
#include <random>

#include "phi4/torus_grid.hpp"

namespace phi4 {

/// Stream channels, so that different consumers of one (replica, step) never
/// share draws.
enum class Channel : std::uint64_t {
  space_time = 0,
  initial = 1,
  proposal = 2,
  accept = 3,
  auxiliary = 4,
};

/// Counter-based seeding: every (replica, step, channel) triple is hashed with
/// the global seed through splitmix64 and seeds a fresh mt19937_64.
struct RngPolicy {
  std::uint64_t seed = 0;

  std::uint64_t stream_key(std::uint64_t replica, std::uint64_t step,
                           Channel channel = Channel::space_time) const;
  std::mt19937_64 engine(std::uint64_t replica, std::uint64_t step,
                         Channel channel = Channel::space_time) const;
  static const char* rule() { return "splitmix64(seed, replica, step, channel) -> mt19937_64"; }
};

std::uint64_t splitmix64(std::uint64_t x);

/// n x n array of independent standard normals drawn from `engine`.
Array2 standard_normals(std::mt19937_64& engine, int n);

struct NoiseSlab {
  TorusGrid master_grid;
  double dt;
  RealField increments;
  std::uint64_t step_index;
  std::uint64_t stream_id;
};

/// I.i.d. N(0, dt/h^2) per site; deterministic in all arguments.
NoiseSlab sample_slab(const RngPolicy& policy, const TorusGrid& grid, double dt,
                      std::uint64_t step, std::uint64_t replica);

/// Sum of `count` consecutive fine slabs starting at fine step `first`: the
/// increment over count * fine_dt, nested across step sizes.
RealField summed_increment(const RngPolicy& policy, const TorusGrid& grid, double fine_dt,
                           std::uint64_t first, int count, std::uint64_t replica);

/// Grid of the sub-torus [-sub_L, sub_L)^2 with the master spacing. Throws
/// unless L_max/sub_L is an integer and the box edge sits on a master site.
TorusGrid sub_grid(const TorusGrid& master, double sub_L);
/// Index of the master site at -sub_L in each direction.
int sub_grid_offset(const TorusGrid& master, double sub_L);

/// Restriction of a master field to the box [-sub_L, sub_L)^2.
RealField restrict_to_box(const RealField& master, double sub_L);
/// Master field equal to `sub` on the box and zero elsewhere.
RealField extend_by_zero(const RealField& sub, const TorusGrid& master);

/// Noise of the sub-torus: the master increments on [-sub_L, sub_L)^2,
/// periodically extended, so that (W^L, f) = (W, f) for f supported in the box.
RealField periodise_noise(const NoiseSlab& slab, double sub_L);

/// Smooth step: 1 on [0, 0.99], 0 on [1, inf).
double smooth_cutoff(double r);
/// chi(x) = b(|x1|) b(|x2|) with b = smooth_cutoff; equals 1 on the box
/// [-0.99, 0.99]^2 and vanishes outside [-1, 1]^2.
double default_bump(Point x);

/// Sum over images of chi(x / sub_L) phi0(x), on the sub-grid.
RealField periodise_initial(const RealField& phi0, double sub_L,
                            const std::function<double(Point)>& cutoff = default_bump);

}  // namespace phi4

#endif  // PHI4_NOISE_HPP
