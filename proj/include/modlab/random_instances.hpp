#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "modlab/measures.hpp"
#include "modlab/space.hpp"

namespace modlab {

/// Portable uniform draws from mt19937_64 (the std distributions are not
/// specified bit-for-bit across standard libraries).
class InstanceRng {
 public:
  explicit InstanceRng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  /// Uniform in {0, ..., n - 1}.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }
  /// Uniform in {lo, ..., hi}.
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }
  bool coin(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

struct RandomInstanceOptions {
  std::size_t min_points = 4;
  std::size_t max_points = 40;
  std::size_t min_members = 1;
  std::size_t max_members = 30;
  /// Probability that a point carries a member.
  double density = 0.3;
  /// Member coefficients are drawn from [coef_lo, coef_hi].
  double coef_lo = 0.1;
  double coef_hi = 1.0;
  /// Reference masses: uniform cells of a grid_1d on [0, 1] when true,
  /// otherwise independent draws from [0.05, 1].
  bool uniform_grid = false;
};

struct RandomInstance {
  std::shared_ptr<const MeasureSpace> space;
  MeasureFamily family;
};

/// Seeded random space plus family. Points lie on [0, 1] with coordinates and
/// neighbor pairs, so every function class applies; members are nonzero.
inline RandomInstance random_instance(InstanceRng& rng, const RandomInstanceOptions& opt = {}) {
  const std::size_t n = rng.between(opt.min_points, opt.max_points);
  const std::size_t k = rng.between(opt.min_members, opt.max_members);
  MeasureSpace s = grid_1d(0.0, 1.0, n);
  if (!opt.uniform_grid) {
    std::vector<double> mass(n);
    for (double& m : mass) m = rng.uniform(0.05, 1.0);
    s = s.with_masses(std::move(mass));
  }
  auto space = std::make_shared<const MeasureSpace>(std::move(s));
  MeasureFamily fam(space);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<Measure::Entry> e;
    for (std::size_t x = 0; x < n; ++x)
      if (rng.coin(opt.density)) e.emplace_back(x, rng.uniform(opt.coef_lo, opt.coef_hi));
    if (e.empty()) e.emplace_back(rng.index(n), rng.uniform(opt.coef_lo, opt.coef_hi));
    fam.add("mu" + std::to_string(j), Measure::from_entries(n, std::move(e)));
  }
  return {space, std::move(fam)};
}

inline RandomInstance random_instance(std::uint64_t seed, const RandomInstanceOptions& opt = {}) {
  InstanceRng rng(seed);
  return random_instance(rng, opt);
}

/// Nested sequence E_1 ⊂ ... ⊂ E_K: E_k is the first ceil(k |F| / K) members
/// of one random family F.
inline FamilySequence random_nested_sequence(InstanceRng& rng, std::size_t K, const RandomInstanceOptions& opt = {}) {
  auto inst = random_instance(rng, opt);
  const std::size_t total = inst.family.size();
  return FamilySequence::generate(
      [&](std::size_t k) {
        const std::size_t take = (k * total + K - 1) / K;
        std::vector<std::size_t> keep(take);
        for (std::size_t j = 0; j < take; ++j) keep[j] = j;
        return inst.family.subset(keep);
      },
      K, true);
}

}  // namespace modlab
