#ifndef PHI4_TORUS_GRID_HPP
#define PHI4_TORUS_GRID_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>

#include <Eigen/Core>

namespace phi4 {

using Array2 = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CArray2 =
    Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Point = std::array<double, 2>;

/// Discretisation of the torus [-L, L)^2 with N x N sites.
///
/// Site (i, j) sits at x = (-L + i h, -L + j h) with h = 2L/N; i indexes the
/// first coordinate and is the row of every field array. The dual lattice is
/// p = (pi/L) k with signed k in [-N/2, N/2); the Nyquist index -N/2 is used
/// for |p|^2 (it is real on the grid).
///
/// Fourier normalisation (used everywhere):
///   c_k = N^{-2} sum_j f(x_j) exp(-i p_k . x_j),   f(x_j) = sum_k c_k exp(i p_k . x_j),
/// so c_k approximates the continuum Fourier coefficient (1/|T|) int f e^{-ipx}.
/// Consequences: (f, g) = h^2 sum f g = |T| sum_k c_k conj(d_k), and discrete
/// white noise of site variance dt/h^2 has mode variance dt/|T|.
class TorusGrid {
 public:
  TorusGrid(double half_length, int points);

  double half_length() const { return half_length_; }
  int points() const { return points_; }
  double spacing() const { return spacing_; }
  double volume() const { return 4.0 * half_length_ * half_length_; }
  double coordinate(int i) const { return -half_length_ + i * spacing_; }

  int signed_index(int k) const { return k < (points_ + 1) / 2 ? k : k - points_; }
  double wavenumber(int k) const;

  /// |p|^2 per mode, in FFT index order.
  const Array2& squared_wavenumbers() const { return tables_->p2; }
  /// 5-point finite-difference symbol (4/h^2)(sin^2(p1 h/2) + sin^2(p2 h/2)).
  const Array2& lattice_symbol() const { return tables_->p2_lattice; }
  /// (-1)^{k1+k2}: phase of e^{-i p.x} at the corner x = (-L, -L).
  const Array2& phase() const { return tables_->phase; }

  bool operator==(const TorusGrid& other) const {
    return points_ == other.points_ && half_length_ == other.half_length_;
  }
  bool operator!=(const TorusGrid& other) const { return !(*this == other); }

 private:
  struct Tables {
    Array2 p2;
    Array2 p2_lattice;
    Array2 phase;
  };

  double half_length_;
  int points_;
  double spacing_;
  std::shared_ptr<const Tables> tables_;
};

struct RealField {
  TorusGrid grid;
  Array2 values;

  explicit RealField(const TorusGrid& g) : grid(g), values(Array2::Zero(g.points(), g.points())) {}
  RealField(const TorusGrid& g, Array2 v);

  static RealField constant(const TorusGrid& g, double c);
  static RealField from_function(const TorusGrid& g, const std::function<double(Point)>& f);

  double operator()(int i, int j) const { return values(i, j); }
  double& operator()(int i, int j) { return values(i, j); }
  bool all_finite() const { return values.allFinite(); }
};

/// Fourier coefficients of a RealField (Hermitian symmetric when real).
struct SpectralField {
  TorusGrid grid;
  CArray2 coeffs;

  explicit SpectralField(const TorusGrid& g)
      : grid(g), coeffs(CArray2::Zero(g.points(), g.points())) {}
  SpectralField(const TorusGrid& g, CArray2 c);
};

SpectralField forward(const RealField& field);
RealField inverse(const SpectralField& field);
/// Inverse transform keeping the imaginary part, for symmetry diagnostics.
CArray2 inverse_complex(const SpectralField& field);

/// Precomputed multiplier table m(|p|^2); rejects non-finite values with the
/// offending wavenumber in the message.
Array2 multiplier_table(const TorusGrid& grid, const std::function<double(double)>& m);

SpectralField apply_multiplier(const SpectralField& field, const std::function<double(double)>& m);
SpectralField apply_multiplier(const SpectralField& field, const Array2& table);
RealField apply_multiplier(const RealField& field, const Array2& table);

/// Which symbol stands for -Delta: exact |p|^2, or the 5-point stencil.
enum class Symbol { spectral, lattice };

/// omega(p) = symbol(p) + 1, the symbol of A.
Array2 generator_symbol(const TorusGrid& grid, Symbol symbol = Symbol::spectral);

/// e^{-tA} with A = -Delta + 1 (spectral symbol).
RealField heat_semigroup(const RealField& field, double t);
RealField heat_semigroup(const RealField& field, double t, Symbol symbol);
/// e^{t Delta} without the mass term.
RealField heat_flow(const RealField& field, double t);

/// Sum over images of the plane heat kernel, p_t^L(x) = sum_a p_t(x - 2aL).
double periodic_heat_kernel(double t, Point x, double half_length);
/// Plane heat kernel (4 pi t)^{-1} exp(-|x|^2 / 4t).
double heat_kernel(double t, Point x);

/// L^2(torus) inner product h^2 sum f g.
double inner(const RealField& f, const RealField& g);
/// (f, 1) / |T|.
double spatial_mean(const RealField& f);

/// Binary snapshot: "PHI4", u32 version, f64 L, u32 N, N^2 f64 row-major, little endian.
void write_snapshot(std::ostream& out, const RealField& field);
void write_snapshot(const std::string& path, const RealField& field);
RealField read_snapshot(std::istream& in);
RealField read_snapshot(const std::string& path);

/// CSV "x,value" for the row i of the field (fixed first coordinate).
void write_slice_csv(std::ostream& out, const RealField& field, int row);

}  // namespace phi4

#endif  // PHI4_TORUS_GRID_HPP
