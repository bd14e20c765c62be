#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "modlab/content.hpp"
#include "modlab/duality.hpp"
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

}  // namespace

TEST(Content, MatchesVertexOracleOnTinyInstances) {
  InstanceRng rng(202);
  for (int t = 0; t < 40; ++t) {
    const auto inst = random_instance(rng, tiny());
    const auto r = ct_p(*inst.space, inst.family, 1.0);
    ASSERT_TRUE(r.value.is_finite());
    EXPECT_NEAR(r.value.value(), oracle::content_1(*inst.space, inst.family), 1e-8) << "trial " << t;
  }
}

TEST(Content, PlanBarycenterStaysBelowReference) {
  InstanceRng rng(203);
  for (int t = 0; t < 20; ++t) {
    const auto inst = random_instance(rng);
    const auto r = ct_p(*inst.space, inst.family, 1.0);
    ASSERT_TRUE(r.plan.has_value());
    const auto bar = barycenter(*r.plan, inst.family);
    for (std::size_t x = 0; x < inst.space->size(); ++x) EXPECT_LE(bar.at(x), inst.space->mass(x) * (1.0 + 1e-9) + 1e-12);
    EXPECT_NEAR(r.plan->total(), r.value.value(), 1e-9 * std::max(1.0, r.value.value()));
  }
}

TEST(Content, ZeroMemberGivesInfinityWithRay) {
  auto s = std::make_shared<const MeasureSpace>(grid_1d(0.0, 1.0, 4));
  MeasureFamily f(s);
  f.add("a", dirac(*s, 1));
  f.add("z", Measure::zero(4));
  const auto r = ct_p(*s, f, 1.0);
  EXPECT_TRUE(r.value.is_infinite());
  EXPECT_FALSE(r.certificate.ray.empty());
  EXPECT_TRUE(ct_p(*s, f, 2.0).value.is_infinite());
}

TEST(Content, MemberOnNullPointGetsNoWeight) {
  auto s = std::make_shared<const MeasureSpace>(MeasureSpace::create({0.0, 1.0}));
  MeasureFamily f(s);
  f.add("null", dirac(*s, 0));
  f.add("b", dirac(*s, 1));
  const auto r = ct_p(*s, f, 1.0);
  EXPECT_NEAR(r.value.value(), 1.0, 1e-12);
  EXPECT_EQ(r.plan->weights[0], 0.0);
}

TEST(Content, DiracClosedFormForP) {
  // A single Dirac at a cell of mass m has Ct_p = m^{1/p}.
  auto s = std::make_shared<const MeasureSpace>(MeasureSpace::create({0.2, 0.8}));
  MeasureFamily f(s);
  f.add("a", dirac(*s, 0));
  for (double p : {1.0, 1.5, 2.0, 4.0}) {
    const auto r = ct_p(*s, f, p);
    EXPECT_NEAR(r.value.value(), std::pow(0.2, 1.0 / p), 1e-7) << p;
  }
}

TEST(Content, PGreaterThanOneDualDensityIsAdmissible) {
  InstanceRng rng(204);
  for (int t = 0; t < 10; ++t) {
    const auto inst = random_instance(rng);
    const auto r = ct_p(*inst.space, inst.family, 2.0);
    ASSERT_TRUE(r.dual_density.has_value());
    EXPECT_TRUE(is_admissible(*r.dual_density, inst.family, 1e-7).admissible);
    EXPECT_LE(r.kkt_residual, 1e-6);
  }
}

TEST(Content, IncreasingLimitEqualsUnion) {
  InstanceRng rng(205);
  const auto seq = random_nested_sequence(rng, 6);
  const auto rep = ct_increasing_limit(seq, 6);
  EXPECT_TRUE(rep.nondecreasing);
  EXPECT_LE(rep.limit_gap, 1e-8);
}

TEST(Duality, ReportCrossResiduals) {
  InstanceRng rng(206);
  const auto inst = random_instance(rng);
  const auto d = duality_gap(*inst.space, inst.family, 1.0);
  EXPECT_LE(d.relative_gap, 1e-6);
  EXPECT_LE(d.plan_cross_residual, 1e-8);
  EXPECT_LE(d.density_cross_residual, 1e-8);
}

TEST(Duality, InfiniteSidesMatch) {
  auto s = std::make_shared<const MeasureSpace>(grid_1d(0.0, 1.0, 4));
  MeasureFamily f(s);
  f.add("z", Measure::zero(4));
  const auto d = duality_gap(*s, f, 1.0);
  EXPECT_TRUE(d.matched_infinite);
  EXPECT_EQ(d.gap, 0.0);
}

TEST(Duality, AmBracketOrders) {
  InstanceRng rng(207);
  const auto seq = random_nested_sequence(rng, 4);
  const auto b = am_bracket(seq, 4);
  EXPECT_LE(b.lower.as_double(), b.upper.as_double() + 1e-8);
}
