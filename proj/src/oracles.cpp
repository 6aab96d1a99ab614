#include "phi4/oracles.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/numeric/odeint.hpp>

#include "phi4/gaussian.hpp"

namespace phi4::oracle {

double image_sum_heat_kernel(double t, Point x, double L, int reach) {
  double sum = 0.0;
  for (int a = -reach; a <= reach; ++a) {
    for (int b = -reach; b <= reach; ++b) {
      const double y1 = x[0] - 2.0 * L * a;
      const double y2 = x[1] - 2.0 * L * b;
      sum += std::exp(-(y1 * y1 + y2 * y2) / (4.0 * t)) / (4.0 * std::numbers::pi * t);
    }
  }
  return sum;
}

long double counterterm_variance(double t, double L, int N) {
  const long double pi = std::numbers::pi_v<long double>;
  long double sum = 0.0L;
  for (int k1 = -N / 2; k1 < N / 2 + (N == 1); ++k1) {
    for (int k2 = -N / 2; k2 < N / 2 + (N == 1); ++k2) {
      const long double p2 = (pi / L) * (pi / L) * static_cast<long double>(k1 * k1 + k2 * k2);
      const long double w = p2 + 1.0L;
      sum += -std::expm1(-2.0L * t * w) / w;
    }
  }
  return sum / (4.0L * L * L);
}

long double fredholm_logdet(double t, double L, int N) {
  const long double pi = std::numbers::pi_v<long double>;
  long double sum = 0.0L;
  for (int k1 = N / 2 - 1 + (N == 1); k1 >= -N / 2; --k1) {
    for (int k2 = N / 2 - 1 + (N == 1); k2 >= -N / 2; --k2) {
      const long double w = (pi / L) * (pi / L) * static_cast<long double>(k1 * k1 + k2 * k2) + 1.0L;
      sum -= std::log1p(-std::exp(-2.0L * t * w));
    }
  }
  return sum;
}

double gaussian_autocorrelation(Point r, double s, double L) {
  double sum = 0.0;
  for (int a = -3; a <= 3; ++a) {
    for (int b = -3; b <= 3; ++b) {
      const double y1 = r[0] - 2.0 * L * a;
      const double y2 = r[1] - 2.0 * L * b;
      sum += std::exp(-(y1 * y1 + y2 * y2) / (4.0 * s * s));
    }
  }
  return std::numbers::pi * s * s * sum;
}

double wick_variance(int n, double t, double L, double s) {
  if (n < 1 || n > 4) throw std::invalid_argument("Wick variance oracle supports n = 1..4");
  using boost::math::quadrature::gauss;
  const CovKernel kernel{t, t, L};
  auto integrand = [&](double r, double theta) {
    const Point x{r * std::cos(theta), r * std::sin(theta)};
    const double k = cov_kernel_eval(kernel, x, 1e-9);
    return r * gaussian_autocorrelation(x, s, L) * std::pow(k, n);
  };
  // The square has the symmetry group of order 8; integrate theta in [0, pi/4]
  // over r in [0, L / cos theta].
  auto radial = [&](double theta) {
    const double edge = L / std::cos(theta);
    double sum = 0.0;
    double hi = edge;
    for (int panel = 0; panel < 30; ++panel) {
      const double lo = panel == 29 ? 0.0 : hi * 0.5;
      sum += gauss<double, 15>::integrate([&](double r) { return integrand(r, theta); }, lo, hi);
      hi = lo;
    }
    return sum;
  };
  const double angular = gauss<double, 20>::integrate(radial, 0.0, std::numbers::pi / 4.0);
  double factorial = 1.0;
  for (int k = 2; k <= n; ++k) factorial *= k;
  return factorial * 8.0 * angular;
}

double quartic_ode(double c, double mu, double lambda, double T) {
  using namespace boost::numeric::odeint;
  using State = std::array<double, 1>;
  State x{c};
  auto rhs = [&](const State& v, State& dv, double) { dv[0] = -(1.0 + mu) * v[0] - lambda * v[0] * v[0] * v[0]; };
  integrate_adaptive(make_controlled<runge_kutta_dopri5<State>>(1e-13, 1e-13), rhs, x, 0.0, T, 1e-4);
  return x[0];
}

double scalar_gaussian_kl(double var, double var0) {
  const double r = var / var0;
  return 0.5 * (r - 1.0 - std::log(r));
}

}  // namespace phi4::oracle
