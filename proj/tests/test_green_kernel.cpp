#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "equil/green_kernel.hpp"
#include "equil/poisson.hpp"

using namespace equil;

namespace {

// Eigenfunction expansion in the strip 0 < Y < 2:
//   G = sum_m sin(m pi Y/2) sin(m pi Y'/2) exp(-k_m |dx|) / (2 k_m),  k_m = m pi / 2.
double green_series(Point z, Point zp) {
  const double Y = z.y + 1.0, Yp = zp.y + 1.0, adx = std::abs(z.x - zp.x);
  double s = 0.0;
  for (int m = 1;; ++m) {
    const double k = 0.5 * m * std::numbers::pi;
    const double decay = std::exp(-k * adx);
    if (decay < 1e-18 * k) break;
    s += std::sin(k * Y) * std::sin(k * Yp) * decay / (2.0 * k);
  }
  return s;
}

Field bump(const ChannelGrid& g, double cx, double cy, double r, double amp) {
  return Field::sample(g, [=](double x, double y) {
    const double d2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (r * r);
    if (d2 >= 1.0) return 0.0;
    const double u = 1.0 - d2;
    return amp * u * u * u * u;
  });
}

double rel_l2(const Field& a, const Field& b) { return l2_norm(a - b) / l2_norm(b); }

}  // namespace

TEST(Green, MatchesImageSeries) {
  const Point pts[] = {{0.0, 0.0}, {0.3, -0.7}, {-1.2, 0.55}, {2.0, 0.9}, {0.01, -0.2}};
  for (const auto& a : pts)
    for (const auto& b : pts) {
      if (a.x == b.x && a.y == b.y) continue;
      EXPECT_NEAR(green(a, b).value, green_series(a, b), 1e-12) << a.x << "," << a.y << " " << b.x << "," << b.y;
    }
}

TEST(Green, SymmetricPositiveAndVanishingOnWalls) {
  const Point z{0.4, 0.2}, zp{-0.3, -0.5};
  EXPECT_DOUBLE_EQ(green(z, zp).value, green(zp, z).value);
  EXPECT_GT(green(z, zp).value, 0.0);
  EXPECT_NEAR(green({0.4, 1.0}, zp).value, 0.0, 1e-15);
  EXPECT_NEAR(green({0.4, -1.0}, zp).value, 0.0, 1e-15);
  EXPECT_THROW(green(z, z), std::domain_error);
}

TEST(Green, NearDiagonalSingularity) {
  const double y = 0.25;
  for (double r : {1e-4, 1e-6, 1e-9}) {
    const auto k = green({0.0, y}, {r, y});
    EXPECT_EQ(k.regime, KernelRegime::near_diagonal);
    EXPECT_NEAR(k.value + std::log(r) / (2.0 * std::numbers::pi), green_regular_diagonal(y), 1e-6);
  }
}

TEST(Green, FarFieldDecaysAndStaysFinite) {
  const auto k = green({0.0, 0.1}, {40.0, -0.2});
  EXPECT_EQ(k.regime, KernelRegime::far_field);
  EXPECT_GT(k.value, 0.0);
  EXPECT_LT(k.value, 1e-25);
  const auto k2 = green({0.0, 0.1}, {29.0, -0.2});
  const auto k3 = green({0.0, 0.1}, {31.0, -0.2});
  EXPECT_GT(k2.value, k3.value);
  // exp(-pi |dx| / 2) decay between the branches.
  EXPECT_NEAR(k2.value / k3.value, std::exp(std::numbers::pi), 1e-6 * std::exp(std::numbers::pi));
}

TEST(Green, RectangleLogIntegral) {
  // Midpoint-rule oracle on a fine offset grid (avoids the origin).
  const double a = 0.3, b = 0.1;
  const int n = 1200;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = -a / 2 + (i + 0.5) * a / n, y = -b / 2 + (j + 0.5) * b / n;
      s += std::log(x * x + y * y);
    }
  s *= a * b / (double(n) * n);
  EXPECT_NEAR(log_r2_rectangle_integral(a, b), s, 1e-5 * std::abs(s));
}

TEST(Green, ConvolutionMatchesFastSolver) {
  const ChannelGrid g(129, 65, 8.0);
  const Field inputs[] = {
      bump(g, 0.0, 0.0, 0.8, 1.0),
      bump(g, 0.5, -0.3, 0.6, 2.0) + bump(g, -0.9, 0.35, 0.5, 1.0),
      Field::sample(g, [](double x, double y) {
        const double r2 = x * x / 2.0 + y * y;
        return r2 < 0.64 ? std::pow(std::cos(0.5 * std::numbers::pi * std::sqrt(r2) / 0.8), 6) * (1.0 + 0.5 * x) : 0.0;
      }),
  };
  const PoissonSolver solver(g);
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& w : inputs) {
    const Field direct = convolve(w);
    const Field fast = solver.stream_function(w);
    EXPECT_LE(rel_l2(direct, fast), 1e-3);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 30.0);
}

TEST(Green, ExponentialDecayConstant) {
  for (double y : {-0.5, 0.0, 0.3, 0.5})
    for (double yp : {-0.5, -0.1, 0.5}) {
      const double v = green({0.0, y}, {10.0, yp}).value;
      EXPECT_LE(std::abs(v), 10.0 * std::exp(-0.5 * std::numbers::pi * 10.0));
    }
}

TEST(Convolve, ZeroAndPositivity) {
  const ChannelGrid g(65, 33, 4.0);
  EXPECT_EQ(convolve(Field(g)).max_abs(), 0.0);
  const Field psi = convolve(bump(g, 0.2, 0.1, 0.5, 1.0));
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 1; j < g.ny() - 1; ++j) EXPECT_GT(psi(i, j), 0.0);
}

TEST(Convolve, SymmetricSourceDecaysLikeMassOverX) {
  const ChannelGrid g(129, 33, 8.0);
  const Field w = bump(g, 0.0, 0.0, 0.6, 1.0);
  const double mass = integrate(w);
  const Field psi = convolve(w);
  const int j0 = g.center_y();
  for (int i = 0; i < g.nx(); ++i)
    if (std::abs(g.x(i)) >= 2.0) EXPECT_LE(psi(i, j0), 5.0 * mass / std::abs(g.x(i)));
}

TEST(Convolve, PotentialBoundForSmallMassFields) {
  // Mass eps^2 spread at amplitude eps^{1-q} on a thin flat patch.
  for (double eps : {0.1, 0.05, 0.025}) {
    const double q = 0.05, amp = std::pow(eps, 1.0 - q);
    const double half_y = 2.0 * eps, half_x = eps * eps / (4.0 * half_y * amp);
    const int ny = 2 * static_cast<int>(std::ceil(8.0 / eps)) + 1;
    const ChannelGrid g(257, ny, 2.0);
    if (half_x < 2.0 * g.hx()) continue;
    Field w = Field::sample(g, [&](double x, double y) {
      return (std::abs(x) <= half_x && std::abs(y) <= half_y) ? amp : 0.0;
    });
    w *= eps * eps / integrate(w);
    const double sup = PoissonSolver(g).stream_function(w).max_abs();
    EXPECT_LE(sup, 20.0 * eps * eps * std::abs(std::log(eps))) << eps;
  }
}
