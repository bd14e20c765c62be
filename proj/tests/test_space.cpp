#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "modlab/counterexamples.hpp"
#include "modlab/space.hpp"
#include "oracles.hpp"

using namespace modlab;

TEST(Space, Grid1dCellsAndBoundary) {
  const auto s = grid_1d(0.0, 2.0, 8);
  ASSERT_EQ(s.size(), 8u);
  EXPECT_DOUBLE_EQ(s.total_mass(), 2.0);
  EXPECT_DOUBLE_EQ(s.point(0)[0], 0.125);
  EXPECT_TRUE(s.is_boundary(0));
  EXPECT_TRUE(s.is_boundary(7));
  EXPECT_FALSE(s.is_boundary(3));
  EXPECT_EQ(s.neighbor_pairs().size(), 7u);
  EXPECT_DOUBLE_EQ(s.min_spacing(), 0.25);
}

TEST(Space, Grid2dLayoutIsRowMajor) {
  const auto s = grid_2d({0.0, 1.0, 0.0, 2.0}, 4, 2);
  ASSERT_EQ(s.size(), 8u);
  EXPECT_NEAR(s.total_mass(), 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.point(5)[0], 0.375);
  EXPECT_DOUBLE_EQ(s.point(5)[1], 1.5);
  // 3 horizontal pairs per row, 4 vertical pairs.
  EXPECT_EQ(s.neighbor_pairs().size(), 10u);
  const std::vector<double> q{0.9, 0.1};
  EXPECT_EQ(s.nearest_point(q), 3u);
}

TEST(Space, NearestPointMatchesScanOffGrid) {
  const auto g = grid_1d(0.0, 1.0, 10);
  std::vector<std::vector<double>> coords;
  std::vector<double> mass;
  for (std::size_t i = 0; i < g.size(); ++i) {
    coords.push_back({g.point(i)[0]});
    mass.push_back(g.mass(i));
  }
  const auto e = MeasureSpace::create(mass, coords);
  for (double t = 0.01; t < 1.0; t += 0.037) {
    const std::vector<double> q{t};
    EXPECT_EQ(g.nearest_point(q), e.nearest_point(q)) << t;
  }
}

TEST(Space, CreateRejectsBadInput) {
  EXPECT_THROW(MeasureSpace::create({}), Error);
  EXPECT_THROW(MeasureSpace::create({-1.0, 1.0}), Error);
  EXPECT_THROW(MeasureSpace::create({0.0, 0.0}), Error);
  EXPECT_THROW(MeasureSpace::create({1.0}, {{0.0}, {1.0}}), Error);
  EXPECT_THROW(MeasureSpace::create({1.0}, {}, {3}), Error);
  try {
    grid_1d(1.0, 0.0, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidRange);
  }
}

TEST(Space, ScaledMassKeepsGeometry) {
  const auto s = grid_1d(0.0, 1.0, 5);
  const auto t = s.with_scaled_mass(3.0);
  EXPECT_NEAR(t.total_mass(), 3.0, 1e-15);
  EXPECT_TRUE(t.grid().has_value());
  EXPECT_EQ(t.neighbor_pairs().size(), 4u);
  EXPECT_THROW(s.with_scaled_mass(0.0), Error);
}

TEST(Space, DoublingOfUniformGridMatchesOracle) {
  const auto s = grid_1d(0.0, 1.0, 64);
  const std::vector<double> radii{1.0 / 64, 1.0 / 16, 0.1, 0.25};
  const auto rep = doubling_constant(s, radii);
  EXPECT_NEAR(rep.value, oracle::doubling(s, radii), 1e-12);
  EXPECT_GE(rep.value, 1.0);
}

TEST(Space, DoublingSkipsEmptyBalls) {
  const auto s = MeasureSpace::create({0.0, 1.0}, {{0.0}, {10.0}});
  const std::vector<double> radii{1.0};
  const auto rep = doubling_constant(s, radii);
  EXPECT_EQ(rep.skipped.size(), 1u);
  EXPECT_DOUBLE_EQ(rep.value, 1.0);
}

TEST(Space, SpikyDoublingMatchesBruteForce) {
  const auto sp = spiky_space(6, 6);
  const double brute = oracle::doubling(sp.space(), sp.doubling_radii);
  EXPECT_NEAR(sp.doubling.value, brute, 1e-12);
  EXPECT_TRUE(std::isfinite(sp.doubling.value));
}
