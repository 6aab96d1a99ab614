#include "phi4/torus_grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fftw3.h>

namespace phi4 {

namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    auto* scratch = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
    fftw_plan plan =
        fftw_plan_dft_2d(n, n, scratch, scratch, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    plans_.emplace(key, plan);
    return plan;
  }

  ~FftPlans() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

void execute(CArray2& data, int sign) {
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(FftPlans::instance().get(static_cast<int>(data.rows()), sign), ptr, ptr);
}

std::string describe_mode(const TorusGrid& grid, int k1, int k2) {
  std::ostringstream os;
  os << "p = (" << grid.wavenumber(k1) << ", " << grid.wavenumber(k2) << ")";
  return os.str();
}

}  // namespace

TorusGrid::TorusGrid(double half_length, int points)
    : half_length_(half_length), points_(points), spacing_(2.0 * half_length / points) {
  if (!(half_length > 0.0) || !std::isfinite(half_length))
    throw std::invalid_argument("torus half-length must be positive");
  if (points < 1 || (points != 1 && points % 2 != 0))
    throw std::invalid_argument("points per dimension must be even (or 1)");

  auto tables = std::make_shared<Tables>();
  tables->p2.resize(points, points);
  tables->p2_lattice.resize(points, points);
  tables->phase.resize(points, points);
  const double h = spacing_;
  for (int k1 = 0; k1 < points; ++k1) {
    for (int k2 = 0; k2 < points; ++k2) {
      const double p1 = wavenumber(k1);
      const double p2 = wavenumber(k2);
      tables->p2(k1, k2) = p1 * p1 + p2 * p2;
      const double s1 = std::sin(0.5 * p1 * h);
      const double s2 = std::sin(0.5 * p2 * h);
      tables->p2_lattice(k1, k2) = 4.0 / (h * h) * (s1 * s1 + s2 * s2);
      tables->phase(k1, k2) = ((signed_index(k1) + signed_index(k2)) % 2 == 0) ? 1.0 : -1.0;
    }
  }
  tables_ = std::move(tables);
}

double TorusGrid::wavenumber(int k) const {
  return std::numbers::pi * signed_index(k) / half_length_;
}

RealField::RealField(const TorusGrid& g, Array2 v) : grid(g), values(std::move(v)) {
  if (values.rows() != g.points() || values.cols() != g.points())
    throw std::invalid_argument("field shape does not match grid");
}

RealField RealField::constant(const TorusGrid& g, double c) {
  return RealField(g, Array2::Constant(g.points(), g.points(), c));
}

RealField RealField::from_function(const TorusGrid& g, const std::function<double(Point)>& f) {
  RealField out(g);
  for (int i = 0; i < g.points(); ++i)
    for (int j = 0; j < g.points(); ++j) out(i, j) = f({g.coordinate(i), g.coordinate(j)});
  return out;
}

SpectralField::SpectralField(const TorusGrid& g, CArray2 c) : grid(g), coeffs(std::move(c)) {
  if (coeffs.rows() != g.points() || coeffs.cols() != g.points())
    throw std::invalid_argument("spectral field shape does not match grid");
}

SpectralField forward(const RealField& field) {
  const int n = field.grid.points();
  CArray2 data = field.values.cast<std::complex<double>>();
  execute(data, FFTW_FORWARD);
  data *= field.grid.phase() / (static_cast<double>(n) * n);
  return SpectralField(field.grid, std::move(data));
}

CArray2 inverse_complex(const SpectralField& field) {
  CArray2 data = field.coeffs * field.grid.phase();
  execute(data, FFTW_BACKWARD);
  return data;
}

RealField inverse(const SpectralField& field) {
  return RealField(field.grid, inverse_complex(field).real());
}

Array2 multiplier_table(const TorusGrid& grid, const std::function<double(double)>& m) {
  const int n = grid.points();
  Array2 table(n, n);
  const Array2& p2 = grid.squared_wavenumbers();
  for (int k1 = 0; k1 < n; ++k1) {
    for (int k2 = 0; k2 < n; ++k2) {
      const double value = m(p2(k1, k2));
      if (!std::isfinite(value))
        throw std::domain_error("multiplier is not finite at " + describe_mode(grid, k1, k2));
      table(k1, k2) = value;
    }
  }
  return table;
}

SpectralField apply_multiplier(const SpectralField& field, const std::function<double(double)>& m) {
  return apply_multiplier(field, multiplier_table(field.grid, m));
}

SpectralField apply_multiplier(const SpectralField& field, const Array2& table) {
  if (table.rows() != field.coeffs.rows() || table.cols() != field.coeffs.cols())
    throw std::invalid_argument("multiplier table shape does not match grid");
  return SpectralField(field.grid, field.coeffs * table);
}

RealField apply_multiplier(const RealField& field, const Array2& table) {
  return inverse(apply_multiplier(forward(field), table));
}

Array2 generator_symbol(const TorusGrid& grid, Symbol symbol) {
  return (symbol == Symbol::spectral ? grid.squared_wavenumbers() : grid.lattice_symbol()) + 1.0;
}

RealField heat_semigroup(const RealField& field, double t) {
  return heat_semigroup(field, t, Symbol::spectral);
}

RealField heat_semigroup(const RealField& field, double t, Symbol symbol) {
  if (!(t >= 0.0)) throw std::invalid_argument("heat semigroup time must be nonnegative");
  if (t == 0.0) return field;
  Array2 table = (-t * generator_symbol(field.grid, symbol)).exp();
  return apply_multiplier(field, table);
}

RealField heat_flow(const RealField& field, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("heat flow time must be nonnegative");
  if (t == 0.0) return field;
  Array2 table = (-t * field.grid.squared_wavenumbers()).exp();
  return apply_multiplier(field, table);
}

double heat_kernel(double t, Point x) {
  return std::exp(-(x[0] * x[0] + x[1] * x[1]) / (4.0 * t)) / (4.0 * std::numbers::pi * t);
}

double periodic_heat_kernel(double t, Point x, double half_length) {
  if (!(t > 0.0)) throw std::invalid_argument("heat kernel time must be positive");
  if (!(half_length > 0.0)) throw std::invalid_argument("torus half-length must be positive");
  const double period = 2.0 * half_length;
  // Representative of x in [-L, L)^2.
  for (double& c : x) c -= period * std::floor((c + half_length) / period);

  double sum = heat_kernel(t, x);
  for (int shell = 1;; ++shell) {
    for (int a1 = -shell; a1 <= shell; ++a1) {
      for (int a2 = -shell; a2 <= shell; ++a2) {
        if (std::max(std::abs(a1), std::abs(a2)) != shell) continue;
        sum += heat_kernel(t, {x[0] - period * a1, x[1] - period * a2});
      }
    }
    // Points of the next shell are at distance >= (2 shell + 1) L from x.
    const double nearest = (2.0 * shell + 1.0) * half_length;
    const double largest_omitted = heat_kernel(t, {nearest, 0.0});
    const double next_shell_count = 8.0 * (shell + 1);
    if (4.0 * largest_omitted * next_shell_count < 1e-14 * sum) break;
    if (shell > 100000) throw std::runtime_error("periodic heat kernel image sum did not converge");
  }
  return sum;
}

double inner(const RealField& f, const RealField& g) {
  if (f.grid != g.grid) throw std::invalid_argument("inner product of fields on different grids");
  const double h = f.grid.spacing();
  return h * h * (f.values * g.values).sum();
}

double spatial_mean(const RealField& f) { return f.values.mean(); }

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated snapshot");
  return value;
}

constexpr std::uint32_t kSnapshotVersion = 1;

}  // namespace

void write_snapshot(std::ostream& out, const RealField& field) {
  out.write("PHI4", 4);
  put<std::uint32_t>(out, kSnapshotVersion);
  put<double>(out, field.grid.half_length());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(field.grid.points()));
  // Row-major storage matches the on-disk order.
  out.write(reinterpret_cast<const char*>(field.values.data()),
            static_cast<std::streamsize>(sizeof(double) * field.values.size()));
  if (!out) throw std::runtime_error("failed to write snapshot");
}

void write_snapshot(const std::string& path, const RealField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_snapshot(out, field);
}

RealField read_snapshot(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PHI4", 4) != 0) throw std::runtime_error("bad snapshot magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kSnapshotVersion)
    throw std::runtime_error("unsupported snapshot version " + std::to_string(version));
  const auto half_length = get<double>(in);
  const auto n = get<std::uint32_t>(in);
  RealField field(TorusGrid(half_length, static_cast<int>(n)));
  in.read(reinterpret_cast<char*>(field.values.data()),
          static_cast<std::streamsize>(sizeof(double) * field.values.size()));
  if (!in) throw std::runtime_error("truncated snapshot");
  return field;
}

RealField read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_snapshot(in);
}

void write_slice_csv(std::ostream& out, const RealField& field, int row) {
  if (row < 0 || row >= field.grid.points()) throw std::out_of_range("slice row out of range");
  out << "x,value\n" << std::setprecision(17);
  for (int j = 0; j < field.grid.points(); ++j)
    out << field.grid.coordinate(j) << ',' << field.values(row, j) << '\n';
}

}  // namespace phi4
