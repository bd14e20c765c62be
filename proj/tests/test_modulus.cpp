#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "modlab/counterexamples.hpp"
#include "modlab/modulus.hpp"
#include "modlab/random_instances.hpp"
#include "oracles.hpp"

using namespace modlab;

namespace {

RandomInstanceOptions tiny() {
  RandomInstanceOptions o;
  o.min_points = 2;
  o.max_points = 6;
  o.max_members = 4;
  o.density = 0.5;
  return o;
}

/// Dirac members at points 1..3 of a four-cell space whose last cell is boundary.
MeasureFamily boundary_diracs(std::shared_ptr<const MeasureSpace> s) {
  MeasureFamily f(s);
  for (std::size_t x = 1; x < 4; ++x) f.add("d" + std::to_string(x), dirac(*s, x));
  return f;
}

std::shared_ptr<const MeasureSpace> accumulating_space() {
  return std::make_shared<const MeasureSpace>(
      MeasureSpace::create({0.5, 0.25, 0.125, 0.125}, {{0.5}, {0.25}, {0.125}, {0.0}}, {3}));
}

}  // namespace

TEST(Modulus, MatchesVertexOracleOnTinyInstances) {
  InstanceRng rng(101);
  for (int t = 0; t < 40; ++t) {
    const auto inst = random_instance(rng, tiny());
    const auto r = m_p(*inst.space, inst.family, 1.0);
    const double o = oracle::modulus_1(*inst.space, inst.family);
    ASSERT_TRUE(r.value.is_finite());
    EXPECT_NEAR(r.value.value(), o, 1e-8) << "trial " << t;
    ASSERT_TRUE(r.minimizer.has_value());
    EXPECT_TRUE(is_admissible(*r.minimizer, inst.family).admissible);
  }
}

TEST(Modulus, EmptyFamilyHasZeroModulus) {
  auto s = std::make_shared<const MeasureSpace>(grid_1d(0.0, 1.0, 4));
  MeasureFamily f(s);
  EXPECT_EQ(m_p(*s, f, 1.0).value.value(), 0.0);
  EXPECT_EQ(m_p(*s, f, 2.0).value.value(), 0.0);
}

TEST(Modulus, ZeroMemberIsInfiniteWithFarkas) {
  auto s = std::make_shared<const MeasureSpace>(grid_1d(0.0, 1.0, 4));
  MeasureFamily f(s);
  f.add("z", Measure::zero(4));
  const auto r = m_p(*s, f, 1.0);
  EXPECT_TRUE(r.value.is_infinite());
  EXPECT_EQ(r.certificate.status, solver::SolveStatus::Infeasible);
  EXPECT_FALSE(r.certificate.farkas.empty());
  EXPECT_LE(r.certificate.certificate_residual, solver::kFeasibilityTol);
  EXPECT_TRUE(m_p(*s, f, 2.0).value.is_infinite());
}

TEST(Modulus, BoundaryVanishingClassBlocksBoundaryDirac) {
  const auto s = accumulating_space();
  const auto f = boundary_diracs(s);
  const auto bv = m_p(*s, f, 1.0, FunctionClass::boundary_vanishing());
  EXPECT_TRUE(bv.value.is_infinite());
  EXPECT_LE(bv.certificate.certificate_residual, solver::kFeasibilityTol);
  // Under All the modulus of a Dirac family is the mass of its support.
  const auto all = m_p(*s, f, 1.0);
  EXPECT_NEAR(all.value.value(), 0.5, 1e-12);
}

TEST(Modulus, LipschitzClassDominatesAll) {
  auto s = std::make_shared<const MeasureSpace>(grid_1d(0.0, 1.0, 16));
  MeasureFamily f(s);
  f.add("a", dirac(*s, 3));
  f.add("b", dirac(*s, 9));
  const double all = m_p(*s, f, 1.0).value.value();
  double prev = HUGE_VAL;
  for (double L : {2.0, 8.0, 32.0, 128.0}) {
    const double lip = m_p(*s, f, 1.0, FunctionClass::lipschitz_with(L)).value.value();
    EXPECT_GE(lip, all - 1e-10);
    EXPECT_LE(lip, prev + 1e-10);
    prev = lip;
  }
  EXPECT_NEAR(prev, all, 1e-10);
}

TEST(Modulus, ClassPreconditions) {
  auto s = std::make_shared<const MeasureSpace>(MeasureSpace::create({1.0, 1.0}));
  MeasureFamily f(s);
  f.add("a", dirac(*s, 0));
  try {
    m_p(*s, f, 1.0, FunctionClass::lipschitz_with(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoCoords);
  }
  EXPECT_THROW(FunctionClass::lipschitz_with(0.0), Error);
  EXPECT_THROW(m_p(*s, f, 0.5), Error);
  auto other = std::make_shared<const MeasureSpace>(MeasureSpace::create({1.0, 1.0, 1.0}));
  EXPECT_THROW(m_p(*other, f, 1.0), Error);
}

TEST(Modulus, PTwoDiracClosedForm) {
  auto s = std::make_shared<const MeasureSpace>(MeasureSpace::create({0.3, 0.7}));
  MeasureFamily f(s);
  f.add("a", scale(dirac(*s, 1), 2.0));
  // min 0.7 rho^2 s.t. 2 rho >= 1 gives 0.7 / 4.
  EXPECT_NEAR(m_p(*s, f, 2.0).value.value(), 0.175, 1e-9);
}

TEST(Modulus, MinSupMinimizerFlattensIntervalFamily) {
  auto s = std::make_shared<const MeasureSpace>(grid_1d(0.0, 1.0, 1024));
  const auto fam = interval_family(4, s);
  const auto r = m_p(*s, fam, 1.0);
  ASSERT_NEAR(r.value.value(), 1.0, 1e-9);
  const auto flat = min_sup_minimizer(*s, fam, r.value.value());
  EXPECT_TRUE(is_admissible(flat, fam).admissible);
  double cost = 0.0;
  for (std::size_t x = 0; x < s->size(); ++x) cost += flat[x] * s->mass(x);
  EXPECT_NEAR(cost, 1.0, 1e-8);
  EXPECT_NEAR(flat.sup(), 16.0, 1e-6);
  EXPECT_LE(flat.sup(), r.minimizer->sup() + 1e-9);
}

TEST(Modulus, AdmissibleSequenceWindow) {
  auto s = std::make_shared<const MeasureSpace>(grid_1d(0.0, 1.0, 4));
  MeasureFamily f(s);
  f.add("a", dirac(*s, 0));
  std::vector<DensityFunction> seq{DensityFunction::constant(4, 0.0), DensityFunction::constant(4, 1.0),
                                   DensityFunction::constant(4, 2.0)};
  EXPECT_FALSE(check_admissible_sequence(seq, f, 0).admissible);
  const auto rep = check_admissible_sequence(seq, f, 1);
  EXPECT_TRUE(rep.admissible);
  EXPECT_DOUBLE_EQ(rep.tail_values[0], 1.0);
  EXPECT_THROW(check_admissible_sequence(seq, f, 3), Error);
}

TEST(Modulus, AmUpperReportsNondecreasingBound) {
  auto s = std::make_shared<const MeasureSpace>(grid_1d(0.0, 1.0, 16));
  const auto seq = FamilySequence::generate(
      [&](std::size_t k) {
        MeasureFamily f(s);
        for (std::size_t j = 0; j < k; ++j) f.add("d" + std::to_string(j), dirac(*s, j));
        return f;
      },
      5);
  const auto rep = am_upper(seq, 5);
  EXPECT_TRUE(rep.nondecreasing);
  EXPECT_NEAR(rep.estimate.value(), 5.0 / 16.0, 1e-12);
  EXPECT_EQ(rep.note, kAmUpperNote);
}
