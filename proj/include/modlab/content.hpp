#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "modlab/error.hpp"
#include "modlab/extended_value.hpp"
#include "modlab/measures.hpp"
#include "modlab/modulus.hpp"
#include "modlab/solver/lp.hpp"
#include "modlab/solver/orthant_newton.hpp"
#include "modlab/space.hpp"
#include "modlab/types.hpp"

namespace modlab {

struct ContentResult {
  ExtendedValue value;
  std::optional<Plan> plan;
  /// Admissible density certifying value^p >= M_p (p > 1) or the LP dual (p = 1).
  std::optional<DensityFunction> dual_density;
  double p = 1.0;
  Certificate certificate;
  /// p > 1: final Lagrange multiplier of the norm constraint.
  double multiplier = 0.0;
  std::size_t bisection_steps = 0;
  /// p > 1: max_j |min(eta_j, -grad_j)| of the inner problem at the multiplier.
  double kkt_residual = 0.0;
  /// p > 1: |sum_x m (eta#/m)^q - 1|.
  double norm_residual = 0.0;
};

inline constexpr double kBisectionLow = 1e-12;
inline constexpr double kBisectionHigh = 1e12;
inline constexpr std::size_t kBisectionMaxSteps = 200;

namespace detail {

/// Members that may carry weight: nonzero and not charging any m-null point.
struct ContentSupport {
  std::vector<std::size_t> active;
  std::optional<std::size_t> zero_member;
};

inline ContentSupport content_support(const MeasureSpace& space, const MeasureFamily& family) {
  ContentSupport cs;
  for (std::size_t j = 0; j < family.size(); ++j) {
    const auto& mu = family[j];
    if (mu.is_zero()) {
      cs.zero_member = j;
      return cs;
    }
    bool ok = true;
    for (const auto& [x, v] : mu.entries()) ok = ok && space.mass(x) > 0.0;
    if (ok) cs.active.push_back(j);
  }
  return cs;
}

inline ContentResult content_lp(const MeasureSpace& space, const MeasureFamily& family,
                                const std::vector<std::size_t>& active) {
  using solver::RowSense;
  const std::size_t n = space.size();
  solver::LinearProgram lp;
  for (std::size_t c = 0; c < active.size(); ++c) lp.add_column(-1.0);
  std::vector<std::vector<solver::Term>> by_point(n);
  for (std::size_t c = 0; c < active.size(); ++c)
    for (const auto& [x, v] : family[active[c]].entries()) by_point[x].push_back({c, v});
  std::vector<std::size_t> row_point;
  for (std::size_t x = 0; x < n; ++x) {
    if (by_point[x].empty()) continue;
    lp.add_row(std::move(by_point[x]), RowSense::LessEqual, space.mass(x));
    row_point.push_back(x);
  }
  const auto out = solver::solve_lp(lp);
  if (out.status != solver::SolveStatus::Optimal) {
    throw Error(ErrorKind::NumericFailure, std::string("content LP is bounded and feasible but solver returned ") +
                                               solver::to_string(out.status));
  }
  ContentResult res;
  res.p = 1.0;
  res.certificate = certificate_of(out);
  res.value = ExtendedValue::finite(std::max(0.0, -out.objective));
  Plan plan;
  plan.weights.assign(family.size(), 0.0);
  for (std::size_t c = 0; c < active.size(); ++c) plan.weights[active[c]] = std::max(0.0, out.primal[c]);
  res.plan = std::move(plan);
  std::vector<double> rho(n, 0.0);
  for (std::size_t r = 0; r < row_point.size(); ++r) rho[row_point[r]] = std::max(0.0, -out.dual[r]);
  res.dual_density = DensityFunction(std::move(rho));
  return res;
}

/// max_{eta >= 0} sum(eta) - lambda * F(eta), F(eta) = sum_x m (s/m)^q,
/// s = sum_j eta_j mu_j, over the active members.
class ContentInner {
 public:
  ContentInner(const MeasureSpace& space, const MeasureFamily& family, const std::vector<std::size_t>& active,
               double p)
      : q_(p / (p - 1.0)), k_(active.size()) {
    std::vector<std::ptrdiff_t> local(space.size(), -1);
    for (std::size_t c = 0; c < active.size(); ++c) {
      for (const auto& [x, v] : family[active[c]].entries()) {
        if (local[x] < 0) {
          local[x] = static_cast<std::ptrdiff_t>(mass_.size());
          mass_.push_back(space.mass(x));
          point_.push_back(x);
        }
      }
    }
    cols_.resize(k_);
    for (std::size_t c = 0; c < active.size(); ++c)
      for (const auto& [x, v] : family[active[c]].entries())
        cols_[c].emplace_back(static_cast<std::size_t>(local[x]), v);
  }

  double q() const { return q_; }
  std::size_t members() const { return k_; }
  const std::vector<std::size_t>& points() const { return point_; }

  std::vector<double> load(const Eigen::VectorXd& eta) const {
    std::vector<double> s(mass_.size(), 0.0);
    for (std::size_t c = 0; c < k_; ++c) {
      const double e = eta(static_cast<Eigen::Index>(c));
      if (e == 0.0) continue;
      for (const auto& [i, v] : cols_[c]) s[i] += e * v;
    }
    return s;
  }

  double norm_q(const std::vector<double>& s) const {
    double f = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) f += mass_[i] * std::pow(s[i] / mass_[i], q_);
    return f;
  }

  double norm_q(const Eigen::VectorXd& eta) const { return norm_q(load(eta)); }

  solver::ConcaveEval evaluate(const Eigen::VectorXd& eta, double lambda, bool with_hessian) const {
    const auto s = load(eta);
    solver::ConcaveEval ev;
    ev.value = eta.sum() - lambda * norm_q(s);
    std::vector<double> d1(s.size()), d2(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double r = s[i] / mass_[i];
      d1[i] = lambda * q_ * std::pow(r, q_ - 1.0);
      d2[i] = r > 0.0 ? lambda * q_ * (q_ - 1.0) * std::pow(r, q_ - 2.0) / mass_[i] : 0.0;
    }
    const auto K = static_cast<Eigen::Index>(k_);
    ev.gradient = Eigen::VectorXd::Ones(K);
    for (std::size_t c = 0; c < k_; ++c)
      for (const auto& [i, v] : cols_[c]) ev.gradient(static_cast<Eigen::Index>(c)) -= v * d1[i];
    if (with_hessian) {
      // Accumulate per point: H_ab -= d2 * mu_a * mu_b.
      std::vector<std::vector<std::pair<std::size_t, double>>> rows(s.size());
      for (std::size_t c = 0; c < k_; ++c)
        for (const auto& [i, v] : cols_[c]) rows[i].emplace_back(c, v);
      ev.hessian = Eigen::MatrixXd::Zero(K, K);
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (d2[i] == 0.0) continue;
        for (const auto& [a, va] : rows[i])
          for (const auto& [b, vb] : rows[i])
            ev.hessian(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) -= d2[i] * va * vb;
      }
    }
    return ev;
  }

  /// Scale-free KKT residual: |g_j| on the support, max(g_j, 0) off it. The
  /// gradient is invariant under the lambda scaling of the maximizer.
  static double kkt(const Eigen::VectorXd& eta, const Eigen::VectorXd& g) {
    const double floor = 1e-13 * eta.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < eta.size(); ++j)
      worst = std::max(worst, eta(j) > floor ? std::abs(g(j)) : std::max(0.0, g(j)));
    return worst;
  }

  /// rho = lambda q (s/m)^(q-1) on the charged points.
  std::vector<double> density(const Eigen::VectorXd& eta, double lambda, std::size_t n) const {
    const auto s = load(eta);
    std::vector<double> rho(n, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) rho[point_[i]] = lambda * q_ * std::pow(s[i] / mass_[i], q_ - 1.0);
    return rho;
  }

  Eigen::VectorXd uniform_start(double lambda) const {
    const auto K = static_cast<Eigen::Index>(k_);
    const double f1 = norm_q(Eigen::VectorXd::Ones(K));
    const double t = std::pow(static_cast<double>(k_) / (lambda * q_ * f1), 1.0 / (q_ - 1.0));
    return Eigen::VectorXd::Constant(K, t);
  }

 private:
  double q_;
  std::size_t k_;
  std::vector<double> mass_;
  std::vector<std::size_t> point_;
  std::vector<std::vector<std::pair<std::size_t, double>>> cols_;
};

inline ContentResult content_pnorm(const MeasureSpace& space, const MeasureFamily& family,
                                   const std::vector<std::size_t>& active, double p) {
  ContentInner inner(space, family, active, p);
  const double q = inner.q();
  constexpr double kKktTol = 1e-12;

  struct Solved {
    Eigen::VectorXd eta;
    double f = 0.0;
    double kkt = 0.0;
  };
  Eigen::VectorXd warm;
  double warm_lambda = 0.0;
  // The inner maximizer scales exactly as lambda^(-1/(q-1)), so after one
  // well-conditioned solve at lambda = 1 every warm start is already optimal
  // up to rounding and Newton only polishes it.
  auto solve_at = [&](double lambda) {
    Eigen::VectorXd start =
        warm.size() == 0 ? inner.uniform_start(lambda) : Eigen::VectorXd(warm * std::pow(warm_lambda / lambda, 1.0 / (q - 1.0)));
    auto eval = [&](const Eigen::VectorXd& e, bool h) { return inner.evaluate(e, lambda, h); };
    auto stop = [&](const Eigen::VectorXd& e, const solver::ConcaveEval& ev) {
      return ContentInner::kkt(e, ev.gradient) <= kKktTol;
    };
    const auto r = solver::maximize_on_orthant(eval, stop, start);
    Solved s;
    s.eta = r.point;
    s.f = inner.norm_q(s.eta);
    s.kkt = ContentInner::kkt(s.eta, inner.evaluate(s.eta, lambda, false).gradient);
    if (warm.size() == 0 || s.kkt <= 1e-9) {
      warm = s.eta;
      warm_lambda = lambda;
    }
    return s;
  };
  const Solved anchor = solve_at(1.0);
  if (!(anchor.kkt <= 1e-9)) throw Error(ErrorKind::NumericFailure, "content inner problem did not reach KKT tolerance");

  // F(eta(lambda)) decreases in lambda; bisect in log scale for F = 1. The
  // bracket ends only need the sign of F - 1 (overflow to inf is fine).
  double lo = kBisectionLow, hi = kBisectionHigh;
  if (!(solve_at(lo).f >= 1.0)) throw Error(ErrorKind::NumericFailure, "content multiplier below bisection bracket");
  if (!(solve_at(hi).f <= 1.0)) throw Error(ErrorKind::NumericFailure, "content multiplier above bisection bracket");
  double lambda = 1.0;
  Solved best = anchor;
  std::size_t steps = 0;
  for (; steps < kBisectionMaxSteps; ++steps) {
    const double mid = std::sqrt(lo * hi);
    const Solved s = solve_at(mid);
    lambda = mid;
    best = s;
    if (std::abs(s.f - 1.0) <= 1e-14) break;
    if (s.f > 1.0) lo = mid; else hi = mid;
    if (hi / lo - 1.0 <= 1e-15) break;
  }
  if (!(best.kkt <= 1e-9)) throw Error(ErrorKind::NumericFailure, "content inner problem did not reach KKT tolerance");
  // Land exactly on the constraint surface; F is q-homogeneous.
  Eigen::VectorXd eta = best.eta / std::pow(best.f, 1.0 / q);

  ContentResult res;
  res.p = p;
  res.multiplier = lambda;
  res.bisection_steps = steps;
  res.kkt_residual = best.kkt;
  res.norm_residual = std::abs(inner.norm_q(eta) - 1.0);
  res.value = ExtendedValue::finite(eta.sum());
  Plan plan;
  plan.weights.assign(family.size(), 0.0);
  for (std::size_t c = 0; c < active.size(); ++c) plan.weights[active[c]] = eta(static_cast<Eigen::Index>(c));
  res.plan = std::move(plan);

  // Certificate: rho admissible after rescaling; value^p <= M_p <= ||rho||_p^p.
  auto rho = inner.density(eta, lambda * std::pow(best.f, (q - 1.0) / q), space.size());
  double min_margin = HUGE_VAL;
  // Members charging m-null points are met for free there, so only active ones count.
  for (std::size_t j : active) {
    double a = 0.0;
    for (const auto& [x, v] : family[j].entries()) a += rho[x] * v;
    min_margin = std::min(min_margin, a);
  }
  if (min_margin < 1.0 && min_margin > 0.0)
    for (double& v : rho) v /= min_margin;
  double norm_p = 0.0;
  for (std::size_t x = 0; x < space.size(); ++x) norm_p += space.mass(x) * std::pow(rho[x], p);
  const double ct = eta.sum();
  res.certificate.status = solver::SolveStatus::Optimal;
  res.certificate.primal_residual = std::max(0.0, 1.0 - min_margin);
  res.certificate.gap = (std::pow(norm_p, 1.0 / p) - ct) / std::max(ct, 1e-300);
  res.certificate.iterations = steps;
  res.dual_density = DensityFunction(std::move(rho));
  if (!(std::abs(res.certificate.gap) <= solver::kPnormRelTol)) {
    throw Error(ErrorKind::NumericFailure, "content KKT certificate gap above tolerance");
  }
  return res;
}

}  // namespace detail

/// Ct_p of a finite family: max sum(eta) over atomic plans eta >= 0 whose
/// barycenter is absolutely continuous w.r.t. m with ||d eta#/dm||_q <= 1.
/// p = 1 is the LP dual of the M_1 LP. p > 1 bisects the Lagrange multiplier
/// of the norm constraint in [1e-12, 1e12]; each inner problem is a concave
/// maximization on the orthant (a nonnegative QP at p = 2). A zero member
/// gives Infinity with an unbounded ray.
inline ContentResult ct_p(const MeasureSpace& space, const MeasureFamily& family, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidRange, "content needs p >= 1");
  detail::require_compatible(space, family);
  ContentResult res;
  res.p = p;
  if (family.empty()) {
    res.value = ExtendedValue::finite(0.0);
    res.plan = Plan{};
    res.dual_density = DensityFunction::constant(space.size(), 0.0);
    return res;
  }
  const auto support = detail::content_support(space, family);
  if (support.zero_member) {
    res.value = ExtendedValue::infinity();
    res.certificate.status = solver::SolveStatus::Unbounded;
    res.certificate.ray.assign(family.size(), 0.0);
    res.certificate.ray[*support.zero_member] = 1.0;
    return res;
  }
  if (support.active.empty()) {
    res.value = ExtendedValue::finite(0.0);
    res.plan = Plan{std::vector<double>(family.size(), 0.0)};
    res.dual_density = DensityFunction::constant(space.size(), 0.0);
    return res;
  }
  if (p == 1.0) return detail::content_lp(space, family, support.active);
  return detail::content_pnorm(space, family, support.active, p);
}

inline ContentResult ct_p(const MeasureFamily& family, double p) { return ct_p(family.space(), family, p); }

struct IncreasingLimitReport {
  std::vector<ExtendedValue> values;  // Ct_p(E_k), k = 1..K
  ExtendedValue union_value;          // Ct_p of the materialized union up to K
  bool nondecreasing = true;
  double limit_gap = 0.0;             // |Ct_p(E_K) - Ct_p(union)|
};

/// Ct_p(E_k) for k = 1..K and Ct_p of the union of E_1..E_K.
inline IncreasingLimitReport ct_increasing_limit(const FamilySequence& seq, std::size_t K, double p = 1.0) {
  seq.require_monotone(K);
  IncreasingLimitReport rep;
  for (std::size_t k = 1; k <= K; ++k) {
    const auto& fam = seq.at(k);
    rep.values.push_back(ct_p(fam.space(), fam, p).value);
    if (k > 1) {
      const double prev = rep.values[k - 2].as_double(), cur = rep.values[k - 1].as_double();
      if (cur < prev - 1e-8 * std::max(1.0, prev)) rep.nondecreasing = false;
    }
  }
  const auto uni = seq.materialized_union(K);
  rep.union_value = ct_p(uni.space(), uni, p).value;
  const auto& last = rep.values.back();
  if (last.is_infinite() || rep.union_value.is_infinite()) {
    rep.limit_gap = last.is_infinite() == rep.union_value.is_infinite() ? 0.0 : HUGE_VAL;
  } else {
    rep.limit_gap = std::abs(last.value() - rep.union_value.value());
  }
  return rep;
}

}  // namespace modlab
