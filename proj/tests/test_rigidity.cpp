#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "equil/rigidity.hpp"

using namespace equil;

namespace {

constexpr double pi = std::numbers::pi;

Field ux_field(const ChannelGrid& g, double amp) {
  Field u(g);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) u(i, j) = amp * std::cos(g.x(i)) * std::sin(0.5 * pi * g.y(j) + 0.3);
  return u;
}

}  // namespace

TEST(CriticalLayer, ZeroFlowZeroSpeedHasRootAtCentre) {
  const ChannelGrid g(33, 17, 2.0);
  const auto L = critical_layer(Field(g), 0.0);
  EXPECT_TRUE(L.monotone_ok);
  for (int i = 0; i < g.nx(); ++i) {
    EXPECT_EQ(L.regime[i], LayerRegime::interior_root);
    EXPECT_EQ(L.ystar[i], 0.0);
  }
}

TEST(CriticalLayer, ClampsWhenNoSignChange) {
  const ChannelGrid g(33, 17, 2.0);
  const auto lo = critical_layer(Field(g), 2.0);
  const auto hi = critical_layer(Field(g), -2.0);
  for (int i = 0; i < g.nx(); ++i) {
    EXPECT_EQ(lo.regime[i], LayerRegime::clamped_low);
    EXPECT_EQ(lo.ystar[i], -1.0);
    EXPECT_EQ(hi.regime[i], LayerRegime::clamped_high);
    EXPECT_EQ(hi.ystar[i], 1.0);
  }
}

TEST(CriticalLayer, MonotoneFlowSatisfiesLowerBoundAndRootResidual) {
  const ChannelGrid g(129, 65, 4.0);
  const Field ux = ux_field(g, 0.1);
  for (double c : {0.0, 0.3, -0.7}) {
    const auto L = critical_layer(ux, c);
    ASSERT_TRUE(L.monotone_ok);
    for (int i = 0; i < g.nx(); ++i)
      if (L.regime[i] == LayerRegime::interior_root) EXPECT_LE(L.root_residual[i], 1e-9);
    const auto chk = layer_lower_bound(L, ux);
    EXPECT_TRUE(chk.applicable);
    EXPECT_EQ(chk.violations, 0u) << chk.worst_margin;
  }
}

TEST(CriticalLayer, SteepFlowIsFlaggedButStillSolved) {
  const ChannelGrid g(65, 33, 4.0);
  const Field ux = ux_field(g, 1.5);
  const auto L = critical_layer(ux, 0.0);
  EXPECT_FALSE(L.monotone_ok);
  EXPECT_GT(L.max_dy_ux, 0.5);
  for (int i = 0; i < g.nx(); ++i)
    if (L.regime[i] == LayerRegime::interior_root) EXPECT_LE(L.root_residual[i], 1e-9);
}

TEST(EnergyIdentity, ManufacturedStreamFunction) {
  // psi = exp(-x^2) sin(pi (y+1)/2)^2 vanishes on the walls with its normal
  // derivative; w = -Lap psi analytically.
  const ChannelGrid g(513, 257, 6.0);
  Field w(g);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double x = g.x(i), Y = 0.5 * pi * (g.y(j) + 1.0);
      const double gx = std::exp(-x * x), gxx = (4.0 * x * x - 2.0) * gx;
      const double s2 = std::sin(Y) * std::sin(Y), s2yy = 0.5 * pi * pi * std::cos(2.0 * Y);
      w(i, j) = -(gxx * s2 + gx * s2yy);
    }
  const auto sol = solve_poisson(w);
  const auto st = energy_identity_stats(w, sol, 0.0);
  ASSERT_TRUE(st.ratio.has_value());
  EXPECT_LE(st.identity_error, 0.02) << st.lhs << " " << st.rhs_direct;
  EXPECT_GE(st.rhs_weighted_half_floor, st.rhs_weighted);
}

TEST(EnergyIdentity, ShearFlowHasZeroLhs) {
  const ChannelGrid g(65, 33, 2.0);
  Field w(g);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) w(i, j) = std::cos(0.5 * pi * g.y(j));
  const auto st = energy_identity_stats(w, solve_poisson(w), 0.0);
  EXPECT_LT(st.lhs, 1e-24);
  EXPECT_LT(std::abs(st.rhs_direct), 1e-20);
  EXPECT_FALSE(st.ratio.has_value());
}

TEST(ThresholdWitness, ZeroCrossingInterpolates) {
  EXPECT_NEAR(*slope_zero_crossing({0, 1, 2}, {1.0, 0.5, -0.5}), 1.5, 1e-15);
  EXPECT_FALSE(slope_zero_crossing({0, 1, 2}, {1.0, 0.5, 0.1}).has_value());
}

TEST(ThresholdWitness, SyntheticAnisotropicFamily) {
  // w = eps^{1-2q} G(x / 0.5, y / eps): ||w||_{W^{s,p}} ~ eps^{1 - 2q + 1/p - s}.
  const double q = 0.05;
  const ChannelGrid g(81, 161, 3.0);
  std::vector<double> eps = {0.2, 0.1, 0.05};
  std::vector<NormCalculator> calcs;
  for (double e : eps) {
    Field w(g);
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 1; j < g.ny() - 1; ++j) {
        const double X = g.x(i) / 0.5, Y = g.y(j) / e;
        w(i, j) = std::pow(e, 1.0 - 2.0 * q) * std::exp(-0.5 * (X * X + Y * Y));
      }
    calcs.emplace_back(std::move(w));
  }
  const auto wit = threshold_witness(eps, calcs, q, {2.0});
  ASSERT_EQ(wit.s0.size(), 1u);
  ASSERT_TRUE(wit.s0[0].second.has_value());
  EXPECT_NEAR(*wit.s0[0].second, 1.5 - 2.0 * q, 0.1);
  for (const auto& r : wit.rows)
    if (r.s > 0.0) EXPECT_NEAR(r.fit.slope, r.fit.predicted, 0.15) << r.fit.quantity;
  EXPECT_THROW(threshold_witness({0.1, 0.05}, calcs, q), ContractError);
}
