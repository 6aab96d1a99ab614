#ifndef PHI4_WICK_HPP
#define PHI4_WICK_HPP

#include <optional>

#include "phi4/torus_grid.hpp"

namespace phi4 {

/// homogeneous: a = exact variance of Z~_t (::Z^n::, one chaos each).
/// fixed: a = a_ref of the grid (:Z^n:).
enum class Convention { homogeneous, fixed };

/// Hermite polynomial P_n(a, x) = e^{-(a/2) d^2/dx^2} x^n, n = 0..4.
double hermite_apply(double x, double a, int n);
Array2 hermite_apply(const Array2& x, double a, int n);

struct WickBundle {
  double t;
  Convention convention;
  double a;
  RealField z;
  RealField z2;
  RealField z3;
  RealField z4;

  /// :Z^n: for n = 0..4 (n = 0 is the constant 1).
  RealField power(int n) const;
};

/// Bundle of P_n(a, Z) for n = 1..4 with a given counterterm.
WickBundle wick_bundle(const RealField& z, double t, Convention convention, double a);

/// Wick powers of a centred OU sample. The fixed convention uses a_ref, or the
/// grid's reference counterterm when none is given; the homogeneous one takes
/// no a_ref.
WickBundle wick_centred(const RealField& centred, double t, Convention convention,
                        std::optional<double> a_ref = std::nullopt);

/// :Z^n: = sum_l C(n,l) :Z~^l: (e^{-tA} phi0)^{n-l}.
WickBundle wick_with_ic(const WickBundle& centred, const RealField& phi0, double t);
/// Same expansion with the mean field e^{-tA} phi0 supplied.
WickBundle wick_with_mean(const WickBundle& centred, const RealField& mean);

/// :phi^n: = sum_l C(n,l) :Z^l: v^{n-l}. When t is given it must match the
/// bundle's time.
RealField wick_of_phi(const RealField& v, const WickBundle& bundle, int n,
                      std::optional<double> t = std::nullopt);

}  // namespace phi4

#endif  // PHI4_WICK_HPP
