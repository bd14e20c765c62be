#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "modlab/content.hpp"
#include "modlab/modulus.hpp"

namespace modlab {

struct DualityReport {
  double p = 1.0;
  ExtendedValue modulus;  // M_p
  ExtendedValue content;  // Ct_p
  /// |M_1 - Ct_1| at p = 1, |M_p^(1/p) - Ct_p| otherwise; 0 when both infinite.
  double gap = 0.0;
  double relative_gap = 0.0;
  bool matched_infinite = false;
  /// The modulus dual plan, scored in the content program: max of its
  /// capacity violation and its objective shortfall (p = 1).
  double plan_cross_residual = 0.0;
  /// The content dual density, scored in the modulus program: max of its
  /// admissibility violation and its cost excess (p = 1).
  double density_cross_residual = 0.0;
};

namespace detail {

inline double plan_cross_residual(const MeasureSpace& space, const MeasureFamily& family, const Plan& plan,
                                  double target) {
  const auto bary = barycenter(plan, family);
  double worst = 0.0;
  for (const auto& [x, v] : bary.entries()) worst = std::max(worst, v - space.mass(x));
  return std::max(worst, std::abs(plan.total() - target));
}

inline double density_cross_residual(const MeasureSpace& space, const MeasureFamily& family,
                                     const DensityFunction& rho, double target) {
  const auto adm = is_admissible(rho, family);
  double cost = 0.0;
  for (std::size_t x = 0; x < space.size(); ++x) cost += space.mass(x) * rho[x];
  return std::max(std::max(0.0, -adm.min_margin), std::abs(cost - target));
}

}  // namespace detail

/// Solves both sides of the modulus/content duality and cross-checks the
/// certificates of one program inside the other.
inline DualityReport duality_gap(const MeasureSpace& space, const MeasureFamily& family, double p) {
  DualityReport rep;
  rep.p = p;
  const auto mod = m_p(space, family, p);
  const auto ct = ct_p(space, family, p);
  rep.modulus = mod.value;
  rep.content = ct.value;
  if (mod.value.is_infinite() || ct.value.is_infinite()) {
    rep.matched_infinite = mod.value.is_infinite() && ct.value.is_infinite();
    rep.gap = rep.matched_infinite ? 0.0 : HUGE_VAL;
    rep.relative_gap = rep.gap;
    return rep;
  }
  const double lhs = p == 1.0 ? mod.value.value() : std::pow(mod.value.value(), 1.0 / p);
  const double rhs = ct.value.value();
  rep.gap = std::abs(lhs - rhs);
  rep.relative_gap = rep.gap / std::max(1.0, lhs);
  if (p == 1.0) {
    if (mod.dual_plan) rep.plan_cross_residual = detail::plan_cross_residual(space, family, *mod.dual_plan, lhs);
    if (ct.dual_density)
      rep.density_cross_residual = detail::density_cross_residual(space, family, *ct.dual_density, rhs);
  }
  return rep;
}

inline DualityReport duality_gap(const MeasureFamily& family, double p) {
  return duality_gap(family.space(), family, p);
}

struct AmBracket {
  ExtendedValue lower;  // Ct_1(E_K)
  ExtendedValue upper;  // M_1(E_K)
};

/// Ct_1(E_K) <= AM <= M_1(E_K) for a verified monotone sequence.
inline AmBracket am_bracket(const FamilySequence& seq, std::size_t K) {
  seq.require_monotone(K);
  const auto& fam = seq.at(K);
  return {ct_p(fam.space(), fam, 1.0).value, m_p(fam.space(), fam, 1.0).value};
}

}  // namespace modlab
