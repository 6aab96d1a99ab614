#include "phi4/wick.hpp"

#include <cmath>
#include <stdexcept>

#include "phi4/gaussian.hpp"

namespace phi4 {

namespace {

constexpr int kBinomial[5][5] = {
    {1, 0, 0, 0, 0}, {1, 1, 0, 0, 0}, {1, 2, 1, 0, 0}, {1, 3, 3, 1, 0}, {1, 4, 6, 4, 1}};

void check_order(int n, int lo) {
  if (n < lo || n > 4) throw std::invalid_argument("Wick order must lie in [" + std::to_string(lo) + ", 4]");
}

}  // namespace

double hermite_apply(double x, double a, int n) {
  check_order(n, 0);
  const double x2 = x * x;
  switch (n) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return x2 - a;
    case 3: return x * (x2 - 3.0 * a);
    default: return x2 * x2 - 6.0 * a * x2 + 3.0 * a * a;
  }
}

Array2 hermite_apply(const Array2& x, double a, int n) {
  check_order(n, 0);
  switch (n) {
    case 0: return Array2::Ones(x.rows(), x.cols());
    case 1: return x;
    case 2: return x.square() - a;
    case 3: return x * (x.square() - 3.0 * a);
    default: return x.square() * (x.square() - 6.0 * a) + 3.0 * a * a;
  }
}

RealField WickBundle::power(int n) const {
  check_order(n, 0);
  switch (n) {
    case 0: return RealField::constant(z.grid, 1.0);
    case 1: return z;
    case 2: return z2;
    case 3: return z3;
    default: return z4;
  }
}

WickBundle wick_bundle(const RealField& z, double t, Convention convention, double a) {
  const TorusGrid& g = z.grid;
  return WickBundle{t,
                    convention,
                    a,
                    z,
                    RealField(g, hermite_apply(z.values, a, 2)),
                    RealField(g, hermite_apply(z.values, a, 3)),
                    RealField(g, hermite_apply(z.values, a, 4))};
}

WickBundle wick_centred(const RealField& centred, double t, Convention convention,
                        std::optional<double> a_ref) {
  if (!(t > 0.0)) throw std::invalid_argument("Wick powers need t > 0");
  if (convention == Convention::homogeneous) {
    if (a_ref) throw std::invalid_argument("homogeneous convention takes no reference counterterm");
    return wick_bundle(centred, t, convention, counterterm_variance(t, centred.grid));
  }
  return wick_bundle(centred, t, convention, a_ref ? *a_ref : reference_counterterm(centred.grid));
}

WickBundle wick_with_mean(const WickBundle& centred, const RealField& mean) {
  if (mean.grid != centred.z.grid) throw std::invalid_argument("Wick expansion: grid mismatch");
  const Array2& m = mean.values;
  auto expand = [&](int n) {
    Array2 sum = Array2::Zero(m.rows(), m.cols());
    for (int l = 0; l <= n; ++l) sum += kBinomial[n][l] * centred.power(l).values * m.pow(n - l);
    return RealField(mean.grid, std::move(sum));
  };
  return WickBundle{centred.t, centred.convention, centred.a, expand(1), expand(2), expand(3), expand(4)};
}

WickBundle wick_with_ic(const WickBundle& centred, const RealField& phi0, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("Wick powers with initial condition need t > 0");
  if (std::abs(t - centred.t) > 1e-12 * std::max(1.0, t))
    throw std::invalid_argument("Wick expansion: time stamp mismatch");
  return wick_with_mean(centred, heat_semigroup(phi0, t));
}

RealField wick_of_phi(const RealField& v, const WickBundle& bundle, int n, std::optional<double> t) {
  check_order(n, 2);
  if (v.grid != bundle.z.grid) throw std::invalid_argument("wick_of_phi: grid mismatch");
  if (t && std::abs(*t - bundle.t) > 1e-12 * std::max(1.0, *t))
    throw std::invalid_argument("wick_of_phi: time stamp mismatch");
  Array2 sum = Array2::Zero(v.values.rows(), v.values.cols());
  for (int l = 0; l <= n; ++l) sum += kBinomial[n][l] * bundle.power(l).values * v.values.pow(n - l);
  return RealField(v.grid, std::move(sum));
}

}  // namespace phi4
