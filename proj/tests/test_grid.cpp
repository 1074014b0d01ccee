#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "equil/grid.hpp"

using namespace equil;

TEST(ChannelGrid, NodesAndSpacing) {
  const ChannelGrid g(9, 5, 2.0);
  EXPECT_DOUBLE_EQ(g.hx(), 4.0 / 9.0);
  EXPECT_DOUBLE_EQ(g.hy(), 0.5);
  EXPECT_DOUBLE_EQ(g.x(g.center_x()), 0.0);
  EXPECT_DOUBLE_EQ(g.y(0), -1.0);
  EXPECT_DOUBLE_EQ(g.y(2), 0.0);
  EXPECT_DOUBLE_EQ(g.y(4), 1.0);
  EXPECT_NEAR(g.x(8) - g.x(0), 8 * g.hx(), 1e-14);
}

TEST(ChannelGrid, RejectsEvenOrTinyDims) {
  EXPECT_THROW(ChannelGrid(8, 5, 1.0), ContractError);
  EXPECT_THROW(ChannelGrid(9, 4, 1.0), ContractError);
  EXPECT_THROW(ChannelGrid(1, 5, 1.0), ContractError);
  EXPECT_THROW(ChannelGrid(9, 5, 0.0), ContractError);
}

TEST(Field, IntegrateLinearInYIsExact) {
  const ChannelGrid g(11, 9, 1.5);
  const auto f = Field::sample(g, [](double, double y) { return 3.0 + 2.0 * y; });
  // Periodic box of length 2 Lx = 3, channel height 2: integral = 3 * 2 * 3.
  EXPECT_NEAR(integrate(f), 18.0, 1e-12);
}

TEST(Field, CenteredDerivativesOfQuadratic) {
  const ChannelGrid g(21, 17, 1.0);
  const auto f = Field::sample(g, [](double x, double y) { return x * x + 3.0 * x * y + y * y; });
  auto [fx, fy] = gradient(f);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      EXPECT_NEAR(fx(i, j), 2.0 * g.x(i) + 3.0 * g.y(j), 1e-10);
      EXPECT_NEAR(fy(i, j), 3.0 * g.x(i) + 2.0 * g.y(j), 1e-10);
    }
}

TEST(FieldIO, BinaryRoundTrip) {
  const ChannelGrid g(7, 5, 0.75);
  const auto f = Field::sample(g, [](double x, double y) { return std::sin(x) * std::cos(3 * y) + 1e-300; });
  const auto path = std::filesystem::temp_directory_path() / "equil_grid_roundtrip.bin";
  write_field(path.string(), f);
  const Field back = read_field(path.string());
  std::filesystem::remove(path);
  ASSERT_TRUE(back.grid() == g);
  for (std::size_t k = 0; k < f.size(); ++k) EXPECT_EQ(back[k], f[k]);
}

TEST(FieldIO, RejectsBadMagic) {
  std::string junk(64, 'x');
  EXPECT_THROW(decode_field(junk), std::runtime_error);
}
