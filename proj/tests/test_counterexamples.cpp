#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "modlab/content.hpp"
#include "modlab/counterexamples.hpp"
#include "modlab/modulus.hpp"
#include "modlab/random_instances.hpp"

using namespace modlab;

namespace {

std::shared_ptr<const MeasureSpace> line(std::size_t n) {
  return std::make_shared<const MeasureSpace>(grid_1d(0.0, 1.0, n));
}

}  // namespace

TEST(Interval, ModulusIsOneAtEveryDepth) {
  const auto s = line(1024);
  for (std::size_t k = 1; k <= 10; ++k) {
    const auto fam = interval_family(k, s);
    EXPECT_NEAR(m_p(*s, fam, 1.0).value.value(), 1.0, 1e-9) << k;
    EXPECT_NEAR(ct_p(*s, fam, 1.0).value.value(), 1.0, 1e-9) << k;
  }
}

TEST(Interval, FamiliesNestInK) {
  const auto s = line(256);
  const auto seq = FamilySequence::generate([&](std::size_t k) { return interval_family(k, s); }, 8);
  EXPECT_EQ(seq.first_violation(8), 0u);
}

TEST(Interval, TooFineKIsRejected) {
  const auto s = line(64);
  try {
    interval_family(7, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFineK);
  }
}

TEST(Interval, HatDensityHasUnitMassAndIsAdmissible) {
  const auto s = line(1024);
  for (std::size_t k = 1; k <= 6; ++k) {
    const auto rho = interval_hat_density(*s, k);
    double l1 = 0.0;
    for (std::size_t x = 0; x < s->size(); ++x) l1 += rho[x] * s->mass(x);
    EXPECT_NEAR(l1, 1.0, 1e-12) << k;
    EXPECT_TRUE(is_admissible(rho, interval_family(k, s), 1e-9).admissible) << k;
  }
}

TEST(Nonouter, ExtraMembersAddOneEach) {
  const auto s = line(1024);
  for (std::size_t j = 0; j <= 5; ++j) {
    const auto rep = nonouter_experiment(s, 0.5, j);
    EXPECT_TRUE(rep.pass) << j;
    EXPECT_NEAR(rep.value.value(), static_cast<double>(j + 1), 1e-6);
    EXPECT_NEAR(rep.base_value.value(), 1.0, 1e-9);
  }
}

TEST(Nonouter, RejectsOffGridDelta) {
  EXPECT_THROW(nonouter_experiment(line(16), 0.3, 1), Error);
}

TEST(Radial, ModulusIsNondecreasingInK) {
  const auto s = std::make_shared<const MeasureSpace>(grid_2d({-1.0, 1.0, -1.0, 1.0}, 16, 16));
  RadialFamilyOptions opt;
  opt.directions = 8;
  opt.radii = 4;
  double prev = 0.0;
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto fam = radial_family(k, s, opt);
    const double v = m_p(*s, fam, 1.0).value.value();
    EXPECT_GE(v, prev - 1e-10);
    prev = v;
  }
}

TEST(Radial, MollifierNearlyAdmissible) {
  const auto s = std::make_shared<const MeasureSpace>(grid_2d({-1.0, 1.0, -1.0, 1.0}, 32, 32));
  RadialFamilyOptions opt;
  opt.directions = 16;
  opt.radii = 8;
  const auto fam = radial_family(2, s, opt);
  const auto rho = radial_mollifier(*s, 2);
  EXPECT_TRUE(is_admissible(rho, fam, 0.05).admissible);
}

TEST(GSystemTest, InvariantViolationsAreReported) {
  const auto s = line(8);
  // G_{1,1} and G_{2,1} overlap at point 2.
  std::vector<std::vector<std::vector<std::size_t>>> overlap{{{0, 1, 2}, {0}}, {{2, 3}, {3}}};
  try {
    GSystem g(s, overlap);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConstructionInvariant);
  }
  std::vector<std::vector<std::vector<std::size_t>>> not_nested{{{0, 1}, {2}}};
  EXPECT_THROW(GSystem(s, not_nested), Error);
  std::vector<std::vector<std::vector<std::size_t>>> flat{{{0, 1}, {0, 1}}};
  EXPECT_THROW(GSystem(s, flat), Error);
  std::vector<std::vector<std::vector<std::size_t>>> ok{{{0, 1, 2}, {0}}, {{3, 4}, {4}}};
  GSystem g(s, ok);
  EXPECT_NEAR(g.mass(1, 1), 3.0 / 8.0, 1e-15);
  EXPECT_DOUBLE_EQ(g.g(2, 2)[4], 8.0);
}

TEST(Spiky, SpaceSatisfiesGSystemAndIsDoubling) {
  const auto sp = spiky_space(4, 4);
  EXPECT_EQ(sp.M(), 4u);
  EXPECT_EQ(sp.I(), 4u);
  EXPECT_TRUE(std::isfinite(sp.doubling.value));
  EXPECT_EQ(sp.space().size(), 4u * 4u * sp.cells_per_shell);
}

TEST(Construction, FamiliesNestAndStayBelowOne) {
  const auto sp = spiky_space(5, 5);
  const auto seq = construction_families(sp);
  EXPECT_EQ(seq.first_violation(seq.horizon()), 0u);
  const auto up = am_upper(seq, seq.horizon());
  for (const auto& v : up.values) EXPECT_LE(v.value(), 1.0 + 1e-8);
}

TEST(Construction, GSequenceIsBroken) {
  const auto sp = spiky_space(8, 8);
  std::vector<DensityFunction> h;
  for (std::size_t k = 1; k < 8; ++k) h.push_back(sp.system.g(1, k));
  const auto w = construction_witness(sp, h, 0.05);
  EXPECT_EQ(w.verdict, WitnessVerdict::Broken);
  for (double v : w.integrals) EXPECT_LE(v, 1.0 - 0.025 + 1e-9);
}

TEST(Construction, OversizedCandidatesAreRejected) {
  const auto sp = spiky_space(4, 4);
  std::vector<DensityFunction> h{DensityFunction::constant(sp.space().size(), 100.0)};
  try {
    construction_witness(sp, h, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RejectInput);
  }
}

TEST(Primes, GSystemNeedsEnoughSets) {
  auto [space, U] = atomic_decay_space(20);
  try {
    prime_gsystem(space, U, 3, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientSets);
  }
  EXPECT_EQ(first_primes(5), (std::vector<std::size_t>{2, 3, 5, 7, 11}));
}

TEST(Primes, NonincrFamilyBuilds) {
  auto [space, U] = atomic_decay_space(125);
  const auto r = nonincr_measures_family(space, U, 3, 3);
  EXPECT_EQ(r.system.M(), 3u);
  EXPECT_EQ(r.sequence.first_violation(3), 0u);
}
