#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "modlab/random_instances.hpp"
#include "modlab/solver/lp.hpp"
#include "modlab/solver/pnorm.hpp"
#include "oracles.hpp"

using namespace modlab;
using namespace modlab::solver;

TEST(Lp, SmallOptimalWithVerifiedDual) {
  // min x + 2y  s.t.  x + y >= 2,  x <= 1.5,  y >= 0.
  LinearProgram lp;
  const auto x = lp.add_column(1.0), y = lp.add_column(2.0);
  lp.add_row({{x, 1.0}, {y, 1.0}}, RowSense::GreaterEqual, 2.0);
  lp.add_row({{x, 1.0}}, RowSense::LessEqual, 1.5);
  const auto out = solve_lp(lp);
  ASSERT_EQ(out.status, SolveStatus::Optimal);
  EXPECT_NEAR(out.objective, 2.5, 1e-12);
  EXPECT_NEAR(out.dual_objective, 2.5, 1e-12);
  EXPECT_GE(out.dual[0], 0.0);
  EXPECT_LE(out.dual[1], 0.0);
}

TEST(Lp, EqualityRowsAndShiftedBounds) {
  // min x + y  s.t.  x - y = 1,  x >= -3,  y >= -2.
  LinearProgram lp;
  const auto x = lp.add_column(1.0, -3.0), y = lp.add_column(1.0, -2.0);
  lp.add_row({{x, 1.0}, {y, -1.0}}, RowSense::Equal, 1.0);
  const auto out = solve_lp(lp);
  ASSERT_EQ(out.status, SolveStatus::Optimal);
  EXPECT_NEAR(out.primal[0], -1.0, 1e-12);
  EXPECT_NEAR(out.primal[1], -2.0, 1e-12);
}

TEST(Lp, InfeasibleCarriesFarkasCertificate) {
  LinearProgram lp;
  const auto x = lp.add_column(1.0);
  lp.add_row({{x, 1.0}}, RowSense::GreaterEqual, 2.0);
  lp.add_row({{x, 1.0}}, RowSense::LessEqual, 1.0);
  const auto out = solve_lp(lp);
  ASSERT_EQ(out.status, SolveStatus::Infeasible);
  EXPECT_LE(out.certificate_residual, kFeasibilityTol);
  EXPECT_LE(farkas_residual(lp, out.farkas), kFeasibilityTol);
}

TEST(Lp, UnboundedCarriesRay) {
  LinearProgram lp;
  const auto x = lp.add_column(-1.0), y = lp.add_column(0.0);
  lp.add_row({{x, 1.0}, {y, -1.0}}, RowSense::LessEqual, 1.0);
  const auto out = solve_lp(lp);
  ASSERT_EQ(out.status, SolveStatus::Unbounded);
  EXPECT_NEAR(-out.ray[0], -1.0, 1e-12);
  EXPECT_LE(out.certificate_residual, kFeasibilityTol);
}

TEST(Lp, BealeCycleTerminates) {
  LinearProgram lp;
  const std::vector<double> c{-0.75, 20.0, -0.5, 6.0};
  for (double v : c) lp.add_column(v);
  lp.add_row({{0, 0.25}, {1, -8.0}, {2, -1.0}, {3, 9.0}}, RowSense::LessEqual, 0.0);
  lp.add_row({{0, 0.5}, {1, -12.0}, {2, -0.5}, {3, 3.0}}, RowSense::LessEqual, 0.0);
  lp.add_row({{2, 1.0}}, RowSense::LessEqual, 1.0);
  const auto out = solve_lp(lp);
  ASSERT_EQ(out.status, SolveStatus::Optimal);
  EXPECT_NEAR(out.objective, -1.25, 1e-10);
}

TEST(Lp, TallProgramsAgreeWithDirectSolve) {
  InstanceRng rng(11);
  for (int t = 0; t < 10; ++t) {
    // min sum m x  s.t. one >= row per random sparse pattern; 3 columns, 90 rows.
    LinearProgram lp;
    for (int j = 0; j < 3; ++j) lp.add_column(rng.uniform(0.5, 1.5));
    for (int i = 0; i < 90; ++i) {
      std::vector<Term> row;
      for (std::size_t j = 0; j < 3; ++j)
        if (rng.coin(0.6)) row.push_back({j, rng.uniform(0.1, 1.0)});
      if (row.empty()) row.push_back({rng.index(3), 1.0});
      lp.add_row(row, i % 3 == 0 ? RowSense::LessEqual : RowSense::GreaterEqual, i % 3 == 0 ? 10.0 : rng.uniform(0.1, 1.0));
    }
    const auto a = solve_lp(lp);
    const auto b = solve_lp_direct(lp);
    ASSERT_EQ(a.status, b.status);
    EXPECT_NEAR(a.objective, b.objective, 1e-9 * (1.0 + std::abs(b.objective)));
    EXPECT_LE(a.primal_residual, 1e-8);
    EXPECT_LE(a.dual_residual, 1e-9);
  }
}

TEST(Lp, TallInfeasibleProgramKeepsCertificate) {
  LinearProgram lp;
  const auto x = lp.add_column(1.0);
  lp.add_row({{x, 1.0}}, RowSense::GreaterEqual, 5.0);
  for (int i = 0; i < 80; ++i) lp.add_row({{x, 1.0}}, RowSense::LessEqual, 1.0 + i);
  const auto out = solve_lp(lp);
  ASSERT_EQ(out.status, SolveStatus::Infeasible);
  EXPECT_LE(farkas_residual(lp, out.farkas), kFeasibilityTol);
}

TEST(Lp, RejectsNonFiniteData) {
  LinearProgram lp;
  lp.add_column(NAN);
  EXPECT_THROW(solve_lp(lp), Error);
}

TEST(Pnorm, SingleRowClosedForm) {
  // min sum w rho^p s.t. <a, rho> >= 1 has value (sum w^{-1/(p-1)} a^{p/(p-1)})^{-(p-1)}.
  const std::vector<double> w{0.5, 1.0, 2.0};
  const std::vector<SparseRow> rows{{{0, 1.0}, {1, 0.5}, {2, 2.0}}};
  for (double p : {1.5, 2.0, 3.0}) {
    double s = 0.0;
    for (std::size_t x = 0; x < 3; ++x) s += std::pow(w[x], -1.0 / (p - 1.0)) * std::pow(rows[0][x].second, p / (p - 1.0));
    const auto out = solve_pnorm_min(w, rows, p);
    ASSERT_EQ(out.status, SolveStatus::Optimal);
    EXPECT_NEAR(out.objective, std::pow(s, -(p - 1.0)), 1e-8) << p;
  }
}

TEST(Pnorm, EmptyRowIsInfeasible) {
  const std::vector<double> w{1.0, 1.0};
  const std::vector<SparseRow> rows{{{0, 1.0}}, {}};
  const auto out = solve_pnorm_min(w, rows, 2.0);
  EXPECT_EQ(out.status, SolveStatus::Infeasible);
}

TEST(Pnorm, RejectsPAtMostOne) {
  const std::vector<double> w{1.0};
  const std::vector<SparseRow> rows{{{0, 1.0}}};
  EXPECT_THROW(solve_pnorm_min(w, rows, 1.0), Error);
}

TEST(Oracle, VertexEnumerationSolvesKnownLp) {
  // min x + y  s.t.  x + 2y >= 2,  3x + y >= 3: optimum at (0.8, 0.6).
  const double v = oracle::vertex_min({1.0, 1.0}, {{1.0, 2.0}, {3.0, 1.0}}, {2.0, 3.0});
  EXPECT_NEAR(v, 1.4, 1e-12);
}
