#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "modlab/error.hpp"
#include "modlab/extended_value.hpp"
#include "modlab/measures.hpp"
#include "modlab/solver/lp.hpp"
#include "modlab/solver/pnorm.hpp"
#include "modlab/space.hpp"
#include "modlab/types.hpp"

namespace modlab {

/// Finite stand-ins for the admissible test-function classes.
struct FunctionClass {
  enum class Kind { All, Lipschitz, BoundaryVanishing };

  Kind kind = Kind::All;
  double lipschitz = 0.0;

  static FunctionClass all() { return {}; }
  static FunctionClass lipschitz_with(double L) {
    if (!(L > 0.0) || !std::isfinite(L)) throw Error(ErrorKind::InvalidRange, "Lipschitz constant must be positive");
    return {Kind::Lipschitz, L};
  }
  static FunctionClass boundary_vanishing() { return {Kind::BoundaryVanishing, 0.0}; }

  /// "all", "lip:<L>" or "bv".
  std::string name() const {
    switch (kind) {
      case Kind::All: return "all";
      case Kind::BoundaryVanishing: return "bv";
      case Kind::Lipschitz: {
        std::ostringstream os;
        os.precision(17);
        os << "lip:" << lipschitz;
        return os.str();
      }
    }
    return "all";
  }

  void check(const MeasureSpace& s) const {
    if (kind == Kind::Lipschitz && !s.has_coords()) {
      throw Error(ErrorKind::NoCoords, "Lipschitz class needs coordinates");
    }
    if (kind == Kind::BoundaryVanishing && !s.has_boundary()) {
      throw Error(ErrorKind::InvalidRange, "boundary-vanishing class needs boundary markers");
    }
  }
};

/// Solver evidence attached to a modulus or content value.
struct Certificate {
  solver::SolveStatus status = solver::SolveStatus::Optimal;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  /// Row multipliers proving infeasibility (Infinity results from an LP).
  std::vector<double> farkas;
  /// Direction proving unboundedness (Infinity results of a maximization).
  std::vector<double> ray;
  double certificate_residual = 0.0;
  std::size_t iterations = 0;
};

struct ModulusResult {
  ExtendedValue value;
  std::optional<DensityFunction> minimizer;
  /// LP dual restricted to the member rows (p = 1 only).
  std::optional<Plan> dual_plan;
  FunctionClass function_class;
  double p = 1.0;
  Certificate certificate;
};

struct AdmissibilityReport {
  std::vector<double> margins;  // <mu_j, rho> - 1
  double min_margin = HUGE_VAL;
  bool admissible = true;
};

/// Margins <mu_j, rho> - 1 for every member; admissible when all >= -tol.
inline AdmissibilityReport is_admissible(const DensityFunction& rho, const MeasureFamily& family, double tol = 1e-9) {
  AdmissibilityReport rep;
  rep.margins.reserve(family.size());
  for (const auto& mu : family.members()) {
    const double m = integrate(rho, mu) - 1.0;
    rep.margins.push_back(m);
    rep.min_margin = std::min(rep.min_margin, m);
  }
  rep.admissible = rep.min_margin >= -tol;
  return rep;
}

namespace detail {

inline void require_compatible(const MeasureSpace& space, const MeasureFamily& family) {
  if (family.empty()) return;
  if (family.space().size() != space.size()) {
    throw Error(ErrorKind::SpaceMismatch, "family and space have different point counts");
  }
}

inline Certificate certificate_of(const solver::SolveOutcome& o) {
  Certificate c;
  c.status = o.status;
  c.primal_residual = o.primal_residual;
  c.dual_residual = o.dual_residual;
  c.gap = o.gap;
  c.farkas = o.farkas;
  c.ray = o.ray;
  c.certificate_residual = o.certificate_residual;
  c.iterations = o.iterations;
  return c;
}

inline ModulusResult modulus_lp(const MeasureSpace& space, const MeasureFamily& family, const FunctionClass& cls) {
  using solver::RowSense;
  solver::LinearProgram lp;
  const std::size_t n = space.size();
  for (std::size_t x = 0; x < n; ++x) lp.add_column(space.mass(x));
  for (const auto& mu : family.members()) {
    std::vector<solver::Term> row;
    row.reserve(mu.entries().size());
    for (const auto& [x, v] : mu.entries()) row.push_back({x, v});
    lp.add_row(std::move(row), RowSense::GreaterEqual, 1.0);
  }
  if (cls.kind == FunctionClass::Kind::Lipschitz) {
    for (const auto& [a, b] : space.neighbor_pairs()) {
      const double bound = cls.lipschitz * space.distance(a, b);
      lp.add_row({{a, 1.0}, {b, -1.0}}, RowSense::LessEqual, bound);
      lp.add_row({{b, 1.0}, {a, -1.0}}, RowSense::LessEqual, bound);
    }
  } else if (cls.kind == FunctionClass::Kind::BoundaryVanishing) {
    for (std::size_t x : space.boundary()) lp.add_row({{x, 1.0}}, RowSense::Equal, 0.0);
  }
  const auto out = solver::solve_lp(lp);
  ModulusResult res;
  res.function_class = cls;
  res.p = 1.0;
  res.certificate = certificate_of(out);
  switch (out.status) {
    case solver::SolveStatus::Infeasible:
      res.value = ExtendedValue::infinity();
      break;
    case solver::SolveStatus::Unbounded:
      throw Error(ErrorKind::NumericFailure, "modulus LP reported unbounded");
    case solver::SolveStatus::Optimal: {
      res.value = ExtendedValue::finite(std::max(0.0, out.objective));
      std::vector<double> rho(n);
      for (std::size_t x = 0; x < n; ++x) rho[x] = std::max(0.0, out.primal[x]);
      res.minimizer = DensityFunction(std::move(rho));
      Plan plan;
      plan.weights.resize(family.size());
      for (std::size_t j = 0; j < family.size(); ++j) plan.weights[j] = std::max(0.0, out.dual[j]);
      res.dual_plan = std::move(plan);
      break;
    }
  }
  return res;
}

inline ModulusResult modulus_pnorm(const MeasureSpace& space, const MeasureFamily& family, double p,
                                   const FunctionClass& cls) {
  solver::PnormProblem prob;
  prob.p = p;
  prob.weights.assign(space.masses().begin(), space.masses().end());
  const bool bv = cls.kind == FunctionClass::Kind::BoundaryVanishing;
  bool empty_row = false;
  for (const auto& mu : family.members()) {
    solver::SparseRow row;
    for (const auto& [x, v] : mu.entries())
      if (!(bv && space.is_boundary(x))) row.emplace_back(x, v);
    empty_row = empty_row || row.empty();
    prob.rows.push_back(std::move(row));
    prob.rhs.push_back(1.0);
  }
  if (empty_row) {
    // Feasibility does not depend on p; the LP supplies a Farkas certificate.
    auto lp_res = modulus_lp(space, family, cls);
    if (lp_res.value.is_finite()) throw Error(ErrorKind::NumericFailure, "p-norm and LP disagree on feasibility");
    lp_res.p = p;
    lp_res.dual_plan.reset();
    lp_res.minimizer.reset();
    return lp_res;
  }
  if (cls.kind == FunctionClass::Kind::Lipschitz) {
    for (const auto& [a, b] : space.neighbor_pairs()) {
      const double bound = cls.lipschitz * space.distance(a, b);
      prob.rows.push_back({{a, -1.0}, {b, 1.0}});
      prob.rhs.push_back(-bound);
      prob.rows.push_back({{b, -1.0}, {a, 1.0}});
      prob.rhs.push_back(-bound);
    }
  }
  const auto out = solver::solve_pnorm_min(prob);
  ModulusResult res;
  res.function_class = cls;
  res.p = p;
  res.certificate = certificate_of(out);
  res.value = ExtendedValue::finite(std::max(0.0, out.objective));
  std::vector<double> rho(out.primal.begin(), out.primal.end());
  for (double& v : rho) v = std::max(0.0, v);
  res.minimizer = DensityFunction(std::move(rho));
  return res;
}

}  // namespace detail

/// M_p of a finite family under a function class. The space supplies the
/// reference measure, geometry and boundary; the family supplies the
/// measures (same point count). p = 1 is an LP whose dual on the member rows
/// is returned as a plan; p > 1 goes through the p-norm solver. Infinity is
/// returned, with an infeasibility certificate, when no admissible density
/// exists in the class. The empty family has modulus 0.
inline ModulusResult m_p(const MeasureSpace& space, const MeasureFamily& family, double p,
                         const FunctionClass& cls = FunctionClass::all()) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidRange, "modulus needs p >= 1");
  cls.check(space);
  detail::require_compatible(space, family);
  if (family.empty()) {
    ModulusResult res;
    res.value = ExtendedValue::finite(0.0);
    res.minimizer = DensityFunction::constant(space.size(), 0.0);
    res.dual_plan = Plan{};
    res.function_class = cls;
    res.p = p;
    return res;
  }
  if (p == 1.0) return detail::modulus_lp(space, family, cls);
  return detail::modulus_pnorm(space, family, p, cls);
}

inline ModulusResult m_p(const MeasureFamily& family, double p, const FunctionClass& cls = FunctionClass::all()) {
  return m_p(family.space(), family, p, cls);
}

/// Among the M_1 minimizers (class All), one with the smallest sup norm.
/// Points with identical ratio vectors (mu_j(x) / m(x))_j are merged into
/// atoms; averaging a density over an atom keeps every pairing and the cost,
/// so an atom-constant optimum exists and a small LP finds it.
inline DensityFunction min_sup_minimizer(const MeasureSpace& space, const MeasureFamily& family, double value) {
  detail::require_compatible(space, family);
  const std::size_t n = space.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> sig(n);
  for (std::size_t j = 0; j < family.size(); ++j) {
    for (const auto& [x, v] : family[j].entries()) {
      if (space.mass(x) == 0.0) throw Error(ErrorKind::Unsupported, "min_sup_minimizer with m-null charged points");
      sig[x].emplace_back(j, v / space.mass(x));
    }
  }
  std::map<std::vector<std::pair<std::size_t, double>>, std::size_t> atom_of;
  std::vector<std::size_t> atom(n, SIZE_MAX);
  std::vector<double> atom_mass;
  for (std::size_t x = 0; x < n; ++x) {
    if (sig[x].empty()) continue;
    auto [it, fresh] = atom_of.emplace(sig[x], atom_mass.size());
    if (fresh) atom_mass.push_back(0.0);
    atom[x] = it->second;
    atom_mass[it->second] += space.mass(x);
  }
  const std::size_t A = atom_mass.size();
  solver::LinearProgram lp;
  for (std::size_t a = 0; a < A; ++a) lp.add_column(0.0);
  const std::size_t t = lp.add_column(1.0);
  for (std::size_t j = 0; j < family.size(); ++j) {
    std::map<std::size_t, double> coef;
    for (const auto& [x, v] : family[j].entries()) coef[atom[x]] += v;
    std::vector<solver::Term> row;
    for (const auto& [a, c] : coef) row.push_back({a, c});
    lp.add_row(std::move(row), solver::RowSense::GreaterEqual, 1.0);
  }
  std::vector<solver::Term> cost;
  for (std::size_t a = 0; a < A; ++a) cost.push_back({a, atom_mass[a]});
  lp.add_row(std::move(cost), solver::RowSense::LessEqual, value * (1.0 + 1e-10) + 1e-12);
  for (std::size_t a = 0; a < A; ++a) lp.add_row({{a, 1.0}, {t, -1.0}}, solver::RowSense::LessEqual, 0.0);
  const auto out = solver::solve_lp(lp);
  if (out.status != solver::SolveStatus::Optimal) {
    throw Error(ErrorKind::NumericFailure, std::string("sup-norm refinement LP is ") + solver::to_string(out.status));
  }
  std::vector<double> rho(n, 0.0);
  for (std::size_t x = 0; x < n; ++x)
    if (atom[x] != SIZE_MAX) rho[x] = std::max(0.0, out.primal[atom[x]]);
  return DensityFunction(std::move(rho));
}

struct SequenceReport {
  /// Per member: min over j >= window_start of <mu, rho_j>.
  std::vector<double> tail_values;
  std::size_t window_start = 0;
  bool admissible = false;
};

/// Finite surrogate of liminf_j <mu, rho_j> >= 1: the minimum over the tail
/// window j >= J0 (0-based) must be at least 1 - tol for every member.
inline SequenceReport check_admissible_sequence(std::span<const DensityFunction> seq, const MeasureFamily& family,
                                                std::size_t J0, double tol = 1e-9) {
  if (seq.size() <= J0) throw Error(ErrorKind::InvalidRange, "sequence must be longer than the window start");
  SequenceReport rep;
  rep.window_start = J0;
  rep.admissible = true;
  for (const auto& mu : family.members()) {
    double tail = HUGE_VAL;
    for (std::size_t j = J0; j < seq.size(); ++j) tail = std::min(tail, integrate(seq[j], mu));
    rep.tail_values.push_back(tail);
    rep.admissible = rep.admissible && tail >= 1.0 - tol;
  }
  return rep;
}

struct AmUpperReport {
  std::vector<ExtendedValue> values;  // M_1(E_k), k = 1..K
  ExtendedValue estimate;             // M_1(E_K)
  bool nondecreasing = true;
  std::string note;
};

inline constexpr const char* kAmUpperNote =
    "upper bound for AM of the union; attained in the limit only for an optimal exhaustion";

/// M_1(E_k) for k = 1..K on a verified monotone sequence. The last value
/// bounds AM of the union from above; it is never reported as AM itself.
inline AmUpperReport am_upper(const FamilySequence& seq, std::size_t K,
                              const FunctionClass& cls = FunctionClass::all()) {
  seq.require_monotone(K);
  AmUpperReport rep;
  rep.note = kAmUpperNote;
  for (std::size_t k = 1; k <= K; ++k) {
    const auto& fam = seq.at(k);
    rep.values.push_back(m_p(fam.space(), fam, 1.0, cls).value);
    if (k > 1) {
      const auto& prev = rep.values[k - 2];
      const auto& cur = rep.values[k - 1];
      if (cur.as_double() < prev.as_double() - 1e-8 * std::max(1.0, prev.as_double())) rep.nondecreasing = false;
    }
  }
  rep.estimate = rep.values.back();
  return rep;
}

}  // namespace modlab
