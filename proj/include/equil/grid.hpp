#ifndef EQUIL_GRID_HPP
#define EQUIL_GRID_HPP

// Node-centred discretization of the truncated channel [-Lx, Lx] x [-1, 1],
// the Field value type and the quadrature / difference primitives every other
// module builds on.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace equil {

/// Raised when an input violates a documented precondition.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Truncated channel grid. Nodes sit at x_i = (i - (nx-1)/2) hx and
/// y_j = -1 + j hy, so x = 0 and y in {-1, 0, 1} are always nodes. The x
/// direction is periodic with period nx * hx = 2 Lx.
class ChannelGrid {
 public:
  ChannelGrid() = default;
  ChannelGrid(int nx, int ny, double Lx) : nx_(nx), ny_(ny), Lx_(Lx) {
    if (nx < 3 || nx % 2 == 0) throw ContractError("ChannelGrid: nx must be odd and >= 3");
    if (ny < 3 || ny % 2 == 0) throw ContractError("ChannelGrid: ny must be odd and >= 3");
    if (!(Lx > 0.0) || !std::isfinite(Lx)) throw ContractError("ChannelGrid: Lx must be positive");
    hx_ = 2.0 * Lx / nx;
    hy_ = 2.0 / (ny - 1);
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double Lx() const { return Lx_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  int center_x() const { return (nx_ - 1) / 2; }
  int center_y() const { return (ny_ - 1) / 2; }

  double x(int i) const { return (i - center_x()) * hx_; }
  double y(int j) const {
    if (j == 0) return -1.0;
    if (j == ny_ - 1) return 1.0;
    if (j == center_y()) return 0.0;
    return -1.0 + j * hy_;
  }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * ny_ + j; }

  /// Trapezoid weight of node (i, j): plain in the periodic x direction, halved
  /// on the Dirichlet rows.
  double weight(int i, int j) const {
    (void)i;
    const double wy = (j == 0 || j == ny_ - 1) ? 0.5 : 1.0;
    return hx_ * hy_ * wy;
  }

  bool operator==(const ChannelGrid& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && Lx_ == o.Lx_;
  }

 private:
  int nx_ = 0;
  int ny_ = 0;
  double Lx_ = 0.0;
  double hx_ = 0.0;
  double hy_ = 0.0;
};

/// Dense sample of a scalar on a ChannelGrid, stored x-major
/// (values[i * ny + j]).
class Field {
 public:
  Field() = default;
  explicit Field(const ChannelGrid& g, double fill = 0.0) : grid_(g), values_(g.size(), fill) {}
  Field(const ChannelGrid& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
    if (values_.size() != g.size()) throw ContractError("Field: value count does not match grid");
  }

  template <class Fn>
  static Field sample(const ChannelGrid& g, Fn&& fn) {
    Field f(g);
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) f(i, j) = fn(g.x(i), g.y(j));
    return f;
  }

  const ChannelGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }
  double max() const { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }
  double min() const { return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end()); }
  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  Field& operator+=(const Field& o) {
    check_same(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  Field& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double a, Field f) { return f *= a; }
  friend Field operator*(Field f, double a) { return f *= a; }

  /// Pointwise product.
  friend Field hadamard(const Field& a, const Field& b) {
    a.check_same(b);
    Field out(a.grid_);
    for (std::size_t k = 0; k < a.values_.size(); ++k) out.values_[k] = a.values_[k] * b.values_[k];
    return out;
  }

  template <class Fn>
  Field map(Fn&& fn) const {
    Field out(grid_);
    for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = fn(values_[k]);
    return out;
  }

 private:
  void check_same(const Field& o) const {
    if (!(grid_ == o.grid_)) throw ContractError("Field: grid mismatch");
  }

  ChannelGrid grid_;
  std::vector<double> values_;
};

/// Trapezoidal quadrature over the truncated domain.
inline double integrate(const Field& f) {
  const auto& g = f.grid();
  double total = 0.0;
  for (int i = 0; i < g.nx(); ++i) {
    double col = 0.0;
    for (int j = 1; j < g.ny() - 1; ++j) col += f(i, j);
    col += 0.5 * (f(i, 0) + f(i, g.ny() - 1));
    total += col;
  }
  return total * g.hx() * g.hy();
}

/// Discrete L2 norm, sqrt(integrate(f^2)).
inline double l2_norm(const Field& f) { return std::sqrt(integrate(hadamard(f, f))); }

namespace detail {

// Second-order derivative along a strided line of n samples.
inline void diff_line(const double* in, std::ptrdiff_t stride, int n, double h, double* out) {
  if (n < 3) {
    for (int k = 0; k < n; ++k) out[k * stride] = 0.0;
    return;
  }
  const double inv2h = 1.0 / (2.0 * h);
  out[0] = (-3.0 * in[0] + 4.0 * in[stride] - in[2 * stride]) * inv2h;
  for (int k = 1; k < n - 1; ++k) out[k * stride] = (in[(k + 1) * stride] - in[(k - 1) * stride]) * inv2h;
  const auto last = static_cast<std::ptrdiff_t>(n - 1) * stride;
  out[last] = (3.0 * in[last] - 4.0 * in[last - stride] + in[last - 2 * stride]) * inv2h;
}

}  // namespace detail

inline Field diff_x(const Field& f) {
  const auto& g = f.grid();
  Field out(g);
  for (int j = 0; j < g.ny(); ++j)
    detail::diff_line(&f.values()[j], g.ny(), g.nx(), g.hx(), &out.values()[j]);
  return out;
}

inline Field diff_y(const Field& f) {
  const auto& g = f.grid();
  Field out(g);
  for (int i = 0; i < g.nx(); ++i)
    detail::diff_line(&f.values()[g.index(i, 0)], 1, g.ny(), g.hy(), &out.values()[g.index(i, 0)]);
  return out;
}

/// (d/dx, d/dy): centred second-order differences inside, one-sided
/// second-order differences on the outermost nodes.
inline std::pair<Field, Field> gradient(const Field& f) { return {diff_x(f), diff_y(f)}; }

// ---------------------------------------------------------------------------
// Serialization
//
// Binary layout (all little-endian):
//   bytes  0..3   magic "CHNF"
//   bytes  4..7   uint32 nx
//   bytes  8..11  uint32 ny
//   bytes 12..15  uint32 reserved (0)
//   bytes 16..23  float64 Lx
//   bytes 24..31  reserved (0)
//   then nx*ny float64 values, x-major.

namespace detail {

template <class T>
void put_le(std::string& buf, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  buf.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(const char* p) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace detail

inline constexpr std::size_t kFieldHeaderBytes = 32;

inline std::string encode_field(const Field& f) {
  const auto& g = f.grid();
  std::string buf;
  buf.reserve(kFieldHeaderBytes + 8 * f.size());
  buf.append("CHNF", 4);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.nx()));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.ny()));
  detail::put_le<std::uint32_t>(buf, 0u);
  detail::put_le<double>(buf, g.Lx());
  detail::put_le<std::uint64_t>(buf, 0u);
  for (double v : f.values()) detail::put_le<double>(buf, v);
  return buf;
}

inline Field decode_field(std::string_view buf) {
  if (buf.size() < kFieldHeaderBytes || buf.substr(0, 4) != "CHNF")
    throw std::runtime_error("field: bad magic or truncated header");
  const auto nx = detail::get_le<std::uint32_t>(buf.data() + 4);
  const auto ny = detail::get_le<std::uint32_t>(buf.data() + 8);
  const auto Lx = detail::get_le<double>(buf.data() + 16);
  ChannelGrid g(static_cast<int>(nx), static_cast<int>(ny), Lx);
  if (buf.size() != kFieldHeaderBytes + 8 * g.size())
    throw std::runtime_error("field: payload size does not match header");
  std::vector<double> values(g.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    values[k] = detail::get_le<double>(buf.data() + kFieldHeaderBytes + 8 * k);
  return Field(g, std::move(values));
}

inline void write_field(const std::string& path, const Field& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const auto buf = encode_field(f);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline Field read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_field(ss.str());
}

/// CSV export of (x, y, value) triples, one node per line.
inline void write_field_csv(const std::string& path, const Field& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const auto& g = f.grid();
  out << "x,y,value\n" << std::setprecision(17);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) out << g.x(i) << ',' << g.y(j) << ',' << f(i, j) << '\n';
}

}  // namespace equil

#endif  // EQUIL_GRID_HPP
