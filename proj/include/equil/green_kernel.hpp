#ifndef EQUIL_GREEN_KERNEL_HPP
#define EQUIL_GREEN_KERNEL_HPP

// Dirichlet Green function of -Laplace on the channel R x [-1, 1] and the
// direct quadrature convolution built on it. The convolution is O(N M) and
// serves as an independent check on the fast Poisson solver.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "grid.hpp"
#include "parallel.hpp"

namespace equil {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class KernelRegime { near_diagonal, far_field, generic };

struct KernelEval {
  double value = 0.0;
  KernelRegime regime = KernelRegime::generic;
};

inline constexpr double kNearDiagonalRadius = 1e-3;
inline constexpr double kFarFieldSeparation = 30.0;

/// G(z, z') in strip-shifted coordinates Y = y + 1 in (0, 2):
///
///   G = 1/(4 pi) ln[(cosh(pi dx/2) - cos(pi (Y+Y')/2)) /
///                   (cosh(pi dx/2) - cos(pi (Y-Y')/2))].
///
/// Both brackets are evaluated as 2 sinh^2(a/2) + 2 sin^2(b/2) so there is no
/// cancellation as z' -> z. G vanishes on y = +-1 and behaves like
/// -ln|z - z'| / (2 pi) near the diagonal.
inline KernelEval green(Point z, Point zp) {
  const double dx = z.x - zp.x;
  const double dy = z.y - zp.y;
  const double r2 = dx * dx + dy * dy;
  if (r2 == 0.0) throw std::domain_error("green: coincident points");

  constexpr double pi = std::numbers::pi;
  const double sum_arg = 0.25 * pi * ((z.y + 1.0) + (zp.y + 1.0));
  const double diff_arg = 0.25 * pi * dy;
  const double adx = std::abs(dx);

  KernelEval out;
  if (adx > kFarFieldSeparation) {
    // ln(num/den) = ln(1 + (cos b - cos b_s) / den), den ~ e^{a}/2.
    // Both numerator terms are written relative to e^{a}/2 to stay finite.
    const double a = 0.5 * pi * adx;
    const double ea = std::exp(-a);
    const double cos_sum = std::cos(2.0 * sum_arg);
    const double cos_diff = std::cos(2.0 * diff_arg);
    const double den_scaled = 1.0 + ea * ea - 2.0 * ea * cos_diff;
    out.value = std::log1p(2.0 * ea * (cos_diff - cos_sum) / den_scaled) / (4.0 * pi);
    out.regime = KernelRegime::far_field;
    return out;
  }

  // num - den = sin^2(sum_arg) - sin^2(diff_arg) = sin(pi Y/2) sin(pi Y'/2),
  // so ln(num/den) = log1p of an exactly formed ratio, accurate also when
  // num/den is close to 1 at moderate |dx|.
  const double sh = std::sinh(0.25 * pi * dx);
  const double sd = std::sin(diff_arg);
  const double den = sh * sh + sd * sd;
  const double excess = std::sin(0.5 * pi * (z.y + 1.0)) * std::sin(0.5 * pi * (zp.y + 1.0));
  out.value = std::log1p(excess / den) / (4.0 * pi);
  out.regime = std::sqrt(r2) < kNearDiagonalRadius ? KernelRegime::near_diagonal : KernelRegime::generic;
  return out;
}

/// Regular part R(z, z) = lim [G(z, z') + ln|z - z'| / (2 pi)] on the
/// diagonal, = ln(4 sin(pi (y+1)/2) / pi) / (2 pi).
inline double green_regular_diagonal(double y) {
  constexpr double pi = std::numbers::pi;
  const double s = std::sin(0.5 * pi * (y + 1.0));
  if (s <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(4.0 * s / pi) / (2.0 * pi);
}

/// Integral of ln(x^2 + y^2) over the rectangle [-a/2, a/2] x [-b/2, b/2].
inline double log_r2_rectangle_integral(double a, double b) {
  // Quarter rectangle [0, p] x [0, q]:
  //   pq (ln(p^2 + q^2) - 3) + p^2 atan(q/p) + q^2 atan(p/q).
  const double p = 0.5 * a;
  const double q = 0.5 * b;
  const double quarter = p * q * (std::log(p * p + q * q) - 3.0) + p * p * std::atan(q / p) + q * q * std::atan(p / q);
  return 4.0 * quarter;
}

/// int over the channel with |x'| > Lx of G(z, z') dz'.
inline double green_exterior_mass(Point z, double Lx) {
  constexpr double pi = std::numbers::pi;
  const double Y = z.y + 1.0;
  double s = 0.0;
  for (int m = 1; m < 100000; m += 2) {
    const double k = 0.5 * m * pi;
    const double decay = std::exp(-k * (Lx - z.x)) + std::exp(-k * (Lx + z.x));
    const double term = std::sin(k * Y) * 4.0 / (m * pi) * decay / (2.0 * k * k);
    s += term;
    if (std::abs(decay) < 1e-18 * k * k) break;
  }
  return s;
}

/// Normal derivatives of G(z, .) on the walls y' = -1 and y' = +1 (Poisson
/// kernel of the strip), both taken positive into the channel.
inline std::pair<double, double> green_wall_flux(Point z, double xp) {
  constexpr double pi = std::numbers::pi;
  const double th = 0.5 * pi * (z.y + 1.0);
  const double ch = std::cosh(0.5 * pi * (z.x - xp));
  const double st = std::sin(th), ct = std::cos(th);
  return {st / (4.0 * (ch - ct)), st / (4.0 * (ch + ct))};
}

/// psi(z_i) = sum_{j != i} w_j G(z_i, z_j) omega(z_j) + D_i omega(z_i) with
/// trapezoid weights w_j. The diagonal weight D_i is chosen so that constants
/// are integrated exactly over the box: D_i = int_box G(z_i, .) minus the
/// punctured kernel sum, the latter corrected at the walls with the
/// Euler-Maclaurin end term (G has nonzero normal derivative there). This
/// subtracts the log singularity, leaving an integrand the trapezoid rule
/// handles to high order.
inline Field convolve(const Field& omega) {
  const auto& g = omega.grid();
  struct Source {
    Point z;
    double weighted;
    int i;
    int j;
  };
  std::vector<Source> sources;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 1; j < g.ny() - 1; ++j)
      if (omega(i, j) != 0.0) sources.push_back({{g.x(i), g.y(j)}, g.weight(i, j) * omega(i, j), i, j});

  const double hx = g.hx(), hy = g.hy();
  auto diagonal_weight = [&](int i, int j) {
    const Point z{g.x(i), g.y(j)};
    double punctured = 0.0;
    double wall = 0.0;
    for (int ip = 0; ip < g.nx(); ++ip) {
      const double xp = g.x(ip);
      for (int jp = 1; jp < g.ny() - 1; ++jp) {
        if (ip == i && jp == j) continue;
        punctured += green(z, {xp, g.y(jp)}).value;
      }
      const auto [lo, hi] = green_wall_flux(z, xp);
      wall += lo + hi;
    }
    const double exact = 0.5 * (1.0 - z.y * z.y) - green_exterior_mass(z, g.Lx());
    return exact - hx * hy * punctured - hx * hy * hy / 12.0 * wall;
  };

  Field psi(g);
  parallel_blocks(static_cast<std::size_t>(g.nx()), [&](std::size_t b, std::size_t e) {
    for (auto i = static_cast<int>(b); i < static_cast<int>(e); ++i) {
      for (int j = 1; j < g.ny() - 1; ++j) {
        const Point z{g.x(i), g.y(j)};
        double acc = 0.0;
        for (const auto& s : sources)
          if (s.i != i || s.j != j) acc += s.weighted * green(z, s.z).value;
        if (omega(i, j) != 0.0) acc += omega(i, j) * diagonal_weight(i, j);
        psi(i, j) = acc;
      }
    }
  });
  return psi;
}

}  // namespace equil

#endif  // EQUIL_GREEN_KERNEL_HPP
