#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "modlab/error.hpp"
#include "modlab/solver/lp.hpp"
#include "modlab/solver/orthant_newton.hpp"

namespace modlab::solver {

using SparseRow = std::vector<std::pair<std::size_t, double>>;

/// min sum_x w(x) rho(x)^p  s.t.  <a_r, rho> >= b_r,  rho >= 0,  p > 1.
struct PnormProblem {
  std::vector<double> weights;
  std::vector<SparseRow> rows;
  std::vector<double> rhs;
  double p = 2.0;
};

namespace detail {

/// Dual of the p-norm program over the multipliers eta >= 0:
///   D(eta) = b^T eta - (p-1)/p * sum_x s(x)+ rho(x),
///   s = sum_r eta_r a_r,  rho = (s+ / (p w))^(1/(p-1)),
/// whose gradient is b - A rho, so rho(eta) is the primal candidate.
class PnormDual {
 public:
  PnormDual(const std::vector<double>& w, const std::vector<SparseRow>& rows, const std::vector<double>& b, double p)
      : w_(w), rows_(rows), b_(b), p_(p), by_point_(w.size()) {
    for (std::size_t r = 0; r < rows_.size(); ++r)
      for (const auto& [x, a] : rows_[r]) by_point_[x].emplace_back(r, a);
  }

  std::size_t num_rows() const { return rows_.size(); }

  std::vector<double> barycenter(const Eigen::VectorXd& eta) const {
    std::vector<double> s(w_.size(), 0.0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const double e = eta(static_cast<Eigen::Index>(r));
      if (e == 0.0) continue;
      for (const auto& [x, a] : rows_[r]) s[x] += e * a;
    }
    return s;
  }

  double density_at(double s, double w) const {
    if (!(s > 0.0)) return 0.0;
    return std::exp((std::log(s) - std::log(p_ * w)) / (p_ - 1.0));
  }

  std::vector<double> density(const std::vector<double>& s) const {
    std::vector<double> rho(s.size());
    for (std::size_t x = 0; x < s.size(); ++x) rho[x] = w_[x] > 0.0 ? density_at(s[x], w_[x]) : 0.0;
    return rho;
  }

  ConcaveEval evaluate(const Eigen::VectorXd& eta, bool with_hessian) const {
    const auto k = static_cast<Eigen::Index>(rows_.size());
    ConcaveEval ev;
    const auto s = barycenter(eta);
    const auto rho = density(s);
    double value = 0.0;
    for (std::size_t r = 0; r < rows_.size(); ++r) value += b_[r] * eta(static_cast<Eigen::Index>(r));
    double penalty = 0.0;
    for (std::size_t x = 0; x < s.size(); ++x)
      if (s[x] > 0.0) penalty += s[x] * rho[x];
    ev.value = value - (p_ - 1.0) / p_ * penalty;
    if (!std::isfinite(ev.value)) ev.value = -HUGE_VAL;
    ev.gradient.resize(k);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      double ar = 0.0;
      for (const auto& [x, a] : rows_[r]) ar += a * rho[x];
      ev.gradient(static_cast<Eigen::Index>(r)) = b_[r] - ar;
    }
    if (with_hessian) {
      ev.hessian = Eigen::MatrixXd::Zero(k, k);
      for (std::size_t x = 0; x < s.size(); ++x) {
        if (!(s[x] > 0.0)) continue;
        const double kappa = rho[x] / ((p_ - 1.0) * s[x]);
        const auto& touch = by_point_[x];
        for (const auto& [r, ar] : touch)
          for (const auto& [t, at] : touch)
            ev.hessian(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) -= kappa * ar * at;
      }
    }
    return ev;
  }

  double primal_value(const std::vector<double>& rho) const {
    double v = 0.0;
    for (std::size_t x = 0; x < rho.size(); ++x)
      if (rho[x] > 0.0) v += w_[x] * std::pow(rho[x], p_);
    return v;
  }

  /// Largest row shortfall b_r - <a_r, rho>.
  double shortfall(const std::vector<double>& rho) const {
    double worst = 0.0;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      double ar = 0.0;
      for (const auto& [x, a] : rows_[r]) ar += a * rho[x];
      worst = std::max(worst, b_[r] - ar);
    }
    return worst;
  }

  /// Feasible primal point near rho: the cheaper of a uniform rescaling and a
  /// constant shift (the latter keeps difference rows intact).
  std::vector<double> repair(const std::vector<double>& rho) const {
    std::vector<double> best;
    double best_val = HUGE_VAL;
    auto consider = [&](std::vector<double> cand) {
      if (shortfall(cand) > 1e-12 * (1.0 + rhs_max())) return;
      const double v = primal_value(cand);
      if (v < best_val) {
        best_val = v;
        best = std::move(cand);
      }
    };
    double scale = 1.0;
    bool scalable = true;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      double ar = 0.0;
      for (const auto& [x, a] : rows_[r]) ar += a * rho[x];
      if (b_[r] > 0.0) {
        if (!(ar > 0.0)) scalable = false;
        else scale = std::max(scale, b_[r] / ar);
      }
    }
    if (scalable) {
      std::vector<double> c = rho;
      for (double& v : c) v *= scale * (1.0 + 1e-15);
      consider(std::move(c));
    }
    double shift = 0.0;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      double ar = 0.0, mass = 0.0;
      for (const auto& [x, a] : rows_[r]) {
        ar += a * rho[x];
        mass += a;
      }
      if (b_[r] > ar) {
        if (mass > 0.0) shift = std::max(shift, (b_[r] - ar) / mass);
        else shift = HUGE_VAL;
      }
    }
    if (std::isfinite(shift)) {
      std::vector<double> c = rho;
      for (double& v : c) v += shift * (1.0 + 1e-15);
      consider(std::move(c));
    }
    return best;
  }

  /// Starting multipliers: the best uniform eta on the rows with b_r > 0.
  Eigen::VectorXd initial_point() const {
    const auto k = static_cast<Eigen::Index>(rows_.size());
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
    double B = 0.0;
    for (std::size_t r = 0; r < rows_.size(); ++r)
      if (b_[r] > 0.0) {
        e(static_cast<Eigen::Index>(r)) = 1.0;
        B += b_[r];
      }
    if (!(B > 0.0)) return eta;
    const auto S = barycenter(e);
    // log sum_x S (S/(p w))^(1/(p-1))
    double lmax = -HUGE_VAL;
    std::vector<double> terms;
    for (std::size_t x = 0; x < S.size(); ++x) {
      if (!(S[x] > 0.0) || !(w_[x] > 0.0)) continue;
      terms.push_back(std::log(S[x]) + (std::log(S[x]) - std::log(p_ * w_[x])) / (p_ - 1.0));
      lmax = std::max(lmax, terms.back());
    }
    if (terms.empty()) return eta;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - lmax);
    const double log_sum = lmax + std::log(acc);
    const double t = std::exp((p_ - 1.0) * (std::log(B) - log_sum));
    if (std::isfinite(t) && t > 0.0) eta = t * e;
    return eta;
  }

 private:
  double rhs_max() const {
    double m = 0.0;
    for (double b : b_) m = std::max(m, std::abs(b));
    return m;
  }

  const std::vector<double>& w_;
  const std::vector<SparseRow>& rows_;
  const std::vector<double>& b_;
  double p_;
  std::vector<std::vector<std::pair<std::size_t, double>>> by_point_;
};

}  // namespace detail

/// Solves the p-norm program through its concave dual. Rows whose support
/// touches a zero-weight point with a positive coefficient are satisfied for
/// free there and are dropped from the dual. An empty row with b_r > 0 makes
/// the program infeasible (Farkas certificate e_r). The stopping rule is the
/// certified relative gap between a repaired feasible primal and the dual.
inline SolveOutcome solve_pnorm_min(const PnormProblem& prob) {
  const double p = prob.p;
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidRange, "solve_pnorm_min needs p > 1");
  if (prob.rows.size() != prob.rhs.size()) throw Error(ErrorKind::SizeMismatch, "rows and rhs differ in length");
  const std::size_t n = prob.weights.size();
  for (double w : prob.weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::InvalidRange, "weights must be finite and nonnegative");

  SolveOutcome out;
  // Structural infeasibility: a row with no positive coefficient and b > 0
  // restricted to nonnegative rho; only all-zero rows are detected here.
  for (std::size_t r = 0; r < prob.rows.size(); ++r) {
    bool any = false;
    for (const auto& [x, a] : prob.rows[r]) {
      if (x >= n) throw Error(ErrorKind::BadIndex, "row references a missing point");
      any = any || a != 0.0;
    }
    if (!any && prob.rhs[r] > 0.0) {
      out.status = SolveStatus::Infeasible;
      out.farkas.assign(prob.rows.size(), 0.0);
      out.farkas[r] = 1.0 / prob.rhs[r];
      out.certificate_residual = 0.0;
      return out;
    }
  }

  // Free points: zero weight. Rows that charge them positively are dropped.
  std::vector<bool> free_point(n, false);
  for (std::size_t x = 0; x < n; ++x) free_point[x] = prob.weights[x] == 0.0;
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
  for (std::size_t r = 0; r < prob.rows.size(); ++r) {
    bool touches_free_positive = false;
    for (const auto& [x, a] : prob.rows[r]) {
      if (!free_point[x] || a == 0.0) continue;
      if (a < 0.0) throw Error(ErrorKind::Unsupported, "negative coefficient on a zero-weight point");
      touches_free_positive = true;
    }
    (touches_free_positive ? dropped : kept).push_back(r);
  }

  std::vector<SparseRow> rows;
  std::vector<double> rhs;
  for (std::size_t r : kept) {
    SparseRow row;
    for (const auto& [x, a] : prob.rows[r])
      if (!free_point[x] && a != 0.0) row.emplace_back(x, a);
    rows.push_back(std::move(row));
    rhs.push_back(prob.rhs[r]);
  }
  std::vector<double> w = prob.weights;
  // Zero-weight points never carry density in the dual formulation.
  detail::PnormDual dual(w, rows, rhs, p);

  std::vector<double> best_primal;
  double best_primal_value = HUGE_VAL;
  double last_dual = -HUGE_VAL;
  auto stop = [&](const Eigen::VectorXd& eta, const ConcaveEval& ev) {
    last_dual = std::max(last_dual, ev.value);
    const auto rho = dual.density(dual.barycenter(eta));
    auto feas = dual.repair(rho);
    if (!feas.empty()) {
      const double v = dual.primal_value(feas);
      if (v < best_primal_value) {
        best_primal_value = v;
        best_primal = std::move(feas);
      }
    }
    if (!std::isfinite(best_primal_value)) return false;
    const double gap = (best_primal_value - last_dual) / std::max(best_primal_value, 1e-300);
    return gap <= 1e-10;
  };

  Eigen::VectorXd eta;
  if (rows.empty()) {
    best_primal.assign(n, 0.0);
    best_primal_value = 0.0;
    last_dual = 0.0;
    eta.resize(0);
  } else {
    auto eval = [&](const Eigen::VectorXd& e, bool h) { return dual.evaluate(e, h); };
    OrthantNewtonOptions opts;
    auto res = maximize_on_orthant(eval, stop, dual.initial_point(), opts);
    eta = res.point;
    out.iterations = res.iterations;
  }
  if (best_primal.empty()) throw Error(ErrorKind::NumericFailure, "p-norm solver found no feasible primal point");

  // Dropped rows: raise rho on a free point until the row holds.
  for (std::size_t r : dropped) {
    double act = 0.0;
    std::size_t pick = SIZE_MAX;
    double pick_coef = 0.0;
    for (const auto& [x, a] : prob.rows[r]) {
      act += a * best_primal[x];
      if (free_point[x] && a > pick_coef) {
        pick = x;
        pick_coef = a;
      }
    }
    if (act < prob.rhs[r]) best_primal[pick] += (prob.rhs[r] - act) / pick_coef;
  }

  out.primal = best_primal;
  out.objective = best_primal_value;
  out.dual_objective = last_dual;
  out.gap = (best_primal_value - last_dual) / std::max(best_primal_value, 1e-300);
  if (best_primal_value == 0.0) out.gap = 0.0;
  out.dual.assign(prob.rows.size(), 0.0);
  for (std::size_t i = 0; i < kept.size(); ++i) out.dual[kept[i]] = eta(static_cast<Eigen::Index>(i));
  double short_worst = 0.0;
  for (std::size_t r = 0; r < prob.rows.size(); ++r) {
    double act = 0.0;
    for (const auto& [x, a] : prob.rows[r]) act += a * out.primal[x];
    short_worst = std::max(short_worst, prob.rhs[r] - act);
  }
  out.primal_residual = short_worst;
  out.dual_residual = 0.0;
  if (!(out.gap <= kPnormRelTol)) {
    throw Error(ErrorKind::NumericFailure, "p-norm solve stopped with relative gap " + std::to_string(out.gap));
  }
  out.status = SolveStatus::Optimal;
  return out;
}

/// Modulus-shaped convenience form: rows <mu_j, rho> >= 1.
inline SolveOutcome solve_pnorm_min(std::span<const double> weights, const std::vector<SparseRow>& measures, double p) {
  PnormProblem prob;
  prob.weights.assign(weights.begin(), weights.end());
  prob.rows = measures;
  prob.rhs.assign(measures.size(), 1.0);
  prob.p = p;
  return solve_pnorm_min(prob);
}

}  // namespace modlab::solver
