#include <doctest.h>

#include <cmath>
#include <numbers>

#include "phi4/noise.hpp"
#include "phi4/stats.hpp"

using namespace phi4;

TEST_CASE("slabs are deterministic per (seed, replica, step)") {
  const TorusGrid g(2.0, 16);
  const RngPolicy p{42};
  const NoiseSlab a = sample_slab(p, g, 0.01, 7, 3);
  const NoiseSlab b = sample_slab(p, g, 0.01, 7, 3);
  CHECK((a.increments.values == b.increments.values).all());
  CHECK((a.increments.values != sample_slab(p, g, 0.01, 8, 3).increments.values).any());
  CHECK((a.increments.values != sample_slab(p, g, 0.01, 7, 4).increments.values).any());
  CHECK((a.increments.values != sample_slab(RngPolicy{43}, g, 0.01, 7, 3).increments.values).any());
  CHECK(p.stream_key(1, 2, Channel::space_time) != p.stream_key(1, 2, Channel::initial));
  CHECK_THROWS_AS(sample_slab(p, g, 0.0, 0, 0), std::invalid_argument);
}

TEST_CASE("site variance dt/h^2 and whiteness") {
  const TorusGrid g(1.0, 32);
  const double dt = 0.004;
  const RngPolicy p{9};
  RunningStats var;
  RunningStats neighbour;
  RunningStats lag;
  for (int step = 0; step < 200; ++step) {
    const Array2 x = sample_slab(p, g, dt, step, 0).increments.values;
    const Array2 y = sample_slab(p, g, dt, step + 1, 0).increments.values;
    const double s2 = dt / (g.spacing() * g.spacing());
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) {
        var.add(x(i, j) * x(i, j) / s2);
        neighbour.add(x(i, j) * x(i, (j + 1) % 32) / s2);
        lag.add(x(i, j) * y(i, j) / s2);
      }
  }
  CHECK(std::abs(var.mean() - 1.0) < 4.0 * var.stderr_of_mean());
  CHECK(std::abs(neighbour.mean()) < 4.0 * neighbour.stderr_of_mean());
  CHECK(std::abs(lag.mean()) < 4.0 * lag.stderr_of_mean());
}

TEST_CASE("summed increments nest across step sizes") {
  const TorusGrid g(1.0, 8);
  const RngPolicy p{1};
  const RealField two = summed_increment(p, g, 0.01, 4, 2, 0);
  const RealField sum(g, sample_slab(p, g, 0.01, 4, 0).increments.values +
                             sample_slab(p, g, 0.01, 5, 0).increments.values);
  CHECK((two.values - sum.values).abs().maxCoeff() < 1e-15);
  const RealField four = summed_increment(p, g, 0.01, 4, 4, 0);
  const RealField pair(g, two.values + summed_increment(p, g, 0.01, 6, 2, 0).values);
  CHECK((four.values - pair.values).abs().maxCoeff() < 1e-13);
}

TEST_CASE("sub-grid alignment and pairing of coupled noise") {
  const TorusGrid master(4.0, 64);
  CHECK(sub_grid_offset(master, 1.0) == 24);
  CHECK(sub_grid(master, 2.0).points() == 32);
  CHECK(sub_grid(master, 4.0) == master);
  CHECK_THROWS_AS(sub_grid_offset(master, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(sub_grid_offset(master, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(sub_grid_offset(TorusGrid(4.0, 16), 0.25), std::invalid_argument);

  // (W^L, f) = (W, f) for f supported in the box.
  const NoiseSlab slab = sample_slab(RngPolicy{3}, master, 0.01, 0, 0);
  const RealField f = RealField::from_function(master, [](Point x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return r2 < 0.81 ? 1.0 - r2 : 0.0;
  });
  const RealField wl = periodise_noise(slab, 1.0);
  const RealField fl = restrict_to_box(f, 1.0);
  CHECK(inner(wl, fl) == doctest::Approx(inner(slab.increments, f)).epsilon(1e-13));
  CHECK((periodise_noise(slab, 4.0).values == slab.increments.values).all());

  // nested: restricting to 2 then to 1 equals restricting to 1
  const RealField via2 = restrict_to_box(periodise_noise(slab, 2.0), 1.0);
  CHECK((via2.values == wl.values).all());
  const RealField back = extend_by_zero(wl, master);
  CHECK(inner(back, f) == doctest::Approx(inner(wl, fl)).epsilon(1e-13));
}

TEST_CASE("cutoff and periodised initial condition") {
  CHECK(smooth_cutoff(0.5) == 1.0);
  CHECK(smooth_cutoff(0.99) == 1.0);
  CHECK(smooth_cutoff(1.0) == 0.0);
  CHECK(smooth_cutoff(0.995) == doctest::Approx(0.5));
  double prev = 1.0;
  for (double r = 0.99; r <= 1.0; r += 0.001) {
    CHECK(smooth_cutoff(r) <= prev + 1e-15);
    prev = smooth_cutoff(r);
  }
  CHECK(default_bump({0.98, -0.98}) == 1.0);
  CHECK(default_bump({1.0, 0.0}) == 0.0);

  const TorusGrid master(4.0, 64);
  const RealField phi0 = RealField::from_function(master, [](Point x) { return std::cos(x[0]) + x[1]; });
  const RealField same = periodise_initial(phi0, 4.0);
  const RealField sub = periodise_initial(phi0, 2.0);
  CHECK(sub.grid.points() == 32);
  // inside 0.99 of the box the field is untouched
  const int off = sub_grid_offset(master, 2.0);
  CHECK(sub(16, 16) == doctest::Approx(phi0(off + 16, off + 16)));
  CHECK(sub(8, 20) == doctest::Approx(phi0(off + 8, off + 20)));
  CHECK(same(32, 32) == doctest::Approx(phi0(32, 32)));
  // the fold of a constant: images of the bump tile to 1 away from the seam
  const RealField ones = periodise_initial(RealField::constant(master, 1.0), 1.0);
  CHECK(ones(8, 8) == doctest::Approx(1.0));
}
