#ifndef PHI4_ORACLES_HPP
#define PHI4_ORACLES_HPP

#include "phi4/torus_grid.hpp"

/// Reference values computed along code paths independent of the library:
/// direct sums in long double, plain image sums, quadrature.
namespace phi4::oracle {

/// sum_{|a_i| <= reach} p_t(x - 2 a L).
double image_sum_heat_kernel(double t, Point x, double L, int reach = 8);

/// (1/|T|) sum_k (1 - e^{-2t w}) / w in long double over signed indices.
long double counterterm_variance(double t, double L, int N);

/// -sum_k log(1 - e^{-2t w}) in long double over signed indices.
long double fredholm_logdet(double t, double L, int N);

/// Periodic autocorrelation of f(x) = exp(-|x|^2 / (2 s^2)) on [-L, L)^2:
/// sum over images of pi s^2 exp(-|r|^2 / (4 s^2)).
double gaussian_autocorrelation(Point r, double s, double L);

/// n! int_T g(r) K^L(t, t, r)^n dr for the Gaussian bump of width s, with g
/// its autocorrelation: polar coordinates around the origin with geometric
/// radial panels.
double wick_variance(int n, double t, double L, double s);

/// Solution at T of v' = -(1 + mu) v - lambda v^3, v(0) = c (adaptive
/// Dormand-Prince at tight tolerance).
double quartic_ode(double c, double mu, double lambda, double T);

/// KL(N(0, var) | N(0, var0)).
double scalar_gaussian_kl(double var, double var0);

}  // namespace phi4::oracle

#endif  // PHI4_ORACLES_HPP
