#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modlab/error.hpp"

namespace modlab::solver {

/// Global tolerances of the engine.
inline constexpr double kFeasibilityTol = 1e-9;
inline constexpr double kGapTol = 1e-8;
inline constexpr double kPnormRelTol = 1e-6;

enum class RowSense { GreaterEqual, LessEqual, Equal };

struct Term {
  std::size_t col;
  double coef;
};

/// min c^T x  s.t.  a_i x (>=|<=|=) b_i,  x >= lower.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<std::vector<Term>> rows;
  std::vector<RowSense> senses;
  std::vector<double> rhs;

  std::size_t num_cols() const { return objective.size(); }
  std::size_t num_rows() const { return rows.size(); }

  std::size_t add_column(double cost, double lower_bound = 0.0) {
    objective.push_back(cost);
    lower.push_back(lower_bound);
    return objective.size() - 1;
  }

  std::size_t add_row(std::vector<Term> terms, RowSense sense, double b) {
    rows.push_back(std::move(terms));
    senses.push_back(sense);
    rhs.push_back(b);
    return rows.size() - 1;
  }

  double lower_bound(std::size_t j) const { return lower.empty() ? 0.0 : lower[j]; }

  void validate() const {
    if (!lower.empty() && lower.size() != objective.size()) {
      throw Error(ErrorKind::SizeMismatch, "lower bounds do not match column count");
    }
    if (senses.size() != rows.size() || rhs.size() != rows.size()) {
      throw Error(ErrorKind::SizeMismatch, "row data has inconsistent lengths");
    }
    for (double c : objective)
      if (!std::isfinite(c)) throw Error(ErrorKind::InvalidRange, "objective must be finite");
    for (std::size_t j = 0; j < objective.size(); ++j)
      if (!std::isfinite(lower_bound(j))) throw Error(ErrorKind::InvalidRange, "lower bounds must be finite");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!std::isfinite(rhs[i])) throw Error(ErrorKind::InvalidRange, "rhs must be finite");
      for (const auto& t : rows[i]) {
        if (t.col >= objective.size()) throw Error(ErrorKind::BadIndex, "row references a missing column");
        if (!std::isfinite(t.coef)) throw Error(ErrorKind::InvalidRange, "matrix entries must be finite");
      }
    }
  }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

/// Result of an LP solve. Row multipliers follow the sign convention
/// y_i >= 0 on >= rows, y_i <= 0 on <= rows, free on = rows, for both the
/// optimal dual and the Farkas certificate.
struct SolveOutcome {
  SolveStatus status = SolveStatus::Optimal;
  std::vector<double> primal;
  std::vector<double> dual;
  double objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// Infeasible: y with A^T y <= 0 and y^T (b - A lower) = 1.
  std::vector<double> farkas;
  double certificate_residual = 0.0;
  /// Unbounded: d >= 0 with homogeneous feasibility and c^T d = -1.
  std::vector<double> ray;
  std::size_t iterations = 0;
  bool bland_engaged = false;
};

namespace detail {

inline double row_activity(const std::vector<Term>& row, const std::vector<double>& x) {
  double s = 0.0;
  for (const auto& t : row) s += t.coef * x[t.col];
  return s;
}

inline double sign_violation(RowSense sense, double y) {
  switch (sense) {
    case RowSense::GreaterEqual: return std::max(0.0, -y);
    case RowSense::LessEqual: return std::max(0.0, y);
    case RowSense::Equal: return 0.0;
  }
  return 0.0;
}

inline std::vector<double> transpose_product(const LinearProgram& lp, const std::vector<double>& y) {
  std::vector<double> aty(lp.num_cols(), 0.0);
  for (std::size_t i = 0; i < lp.num_rows(); ++i)
    for (const auto& t : lp.rows[i]) aty[t.col] += t.coef * y[i];
  return aty;
}

inline double shifted_rhs(const LinearProgram& lp, std::size_t i) {
  double b = lp.rhs[i];
  for (const auto& t : lp.rows[i]) b -= t.coef * lp.lower_bound(t.col);
  return b;
}

}  // namespace detail

/// Largest violation of rows and bounds by x.
inline double primal_residual(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < lp.num_cols(); ++j) worst = std::max(worst, lp.lower_bound(j) - x[j]);
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const double a = detail::row_activity(lp.rows[i], x);
    switch (lp.senses[i]) {
      case RowSense::GreaterEqual: worst = std::max(worst, lp.rhs[i] - a); break;
      case RowSense::LessEqual: worst = std::max(worst, a - lp.rhs[i]); break;
      case RowSense::Equal: worst = std::max(worst, std::abs(a - lp.rhs[i])); break;
    }
  }
  return worst;
}

/// Largest violation of reduced-cost nonnegativity and multiplier signs.
inline double dual_residual(const LinearProgram& lp, const std::vector<double>& y) {
  double worst = 0.0;
  const auto aty = detail::transpose_product(lp, y);
  for (std::size_t j = 0; j < lp.num_cols(); ++j) worst = std::max(worst, aty[j] - lp.objective[j]);
  for (std::size_t i = 0; i < lp.num_rows(); ++i) worst = std::max(worst, detail::sign_violation(lp.senses[i], y[i]));
  return worst;
}

/// b^T y + (c - A^T y)^T lower.
inline double dual_objective(const LinearProgram& lp, const std::vector<double>& y) {
  const auto aty = detail::transpose_product(lp, y);
  double v = 0.0;
  for (std::size_t i = 0; i < lp.num_rows(); ++i) v += lp.rhs[i] * y[i];
  for (std::size_t j = 0; j < lp.num_cols(); ++j) v += (lp.objective[j] - aty[j]) * lp.lower_bound(j);
  return v;
}

/// Residual of a Farkas certificate after normalizing y^T b' to 1. Returns
/// +inf when y^T b' is not positive.
inline double farkas_residual(const LinearProgram& lp, const std::vector<double>& y) {
  if (y.size() != lp.num_rows()) return HUGE_VAL;
  double yb = 0.0;
  for (std::size_t i = 0; i < lp.num_rows(); ++i) yb += y[i] * detail::shifted_rhs(lp, i);
  if (!(yb > 0.0)) return HUGE_VAL;
  double worst = 0.0;
  const auto aty = detail::transpose_product(lp, y);
  for (double v : aty) worst = std::max(worst, v / yb);
  for (std::size_t i = 0; i < lp.num_rows(); ++i)
    worst = std::max(worst, detail::sign_violation(lp.senses[i], y[i]) / yb);
  return worst;
}

/// Residual of an unbounded ray d: homogeneous feasibility with c^T d < 0.
inline double ray_residual(const LinearProgram& lp, const std::vector<double>& d) {
  if (d.size() != lp.num_cols()) return HUGE_VAL;
  double cd = 0.0;
  for (std::size_t j = 0; j < lp.num_cols(); ++j) cd += lp.objective[j] * d[j];
  if (!(cd < 0.0)) return HUGE_VAL;
  const double norm = -cd;
  double worst = 0.0;
  for (double v : d) worst = std::max(worst, -v / norm);
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const double a = detail::row_activity(lp.rows[i], d) / norm;
    switch (lp.senses[i]) {
      case RowSense::GreaterEqual: worst = std::max(worst, -a); break;
      case RowSense::LessEqual: worst = std::max(worst, a); break;
      case RowSense::Equal: worst = std::max(worst, std::abs(a)); break;
    }
  }
  return worst;
}

namespace detail {

/// Two-phase revised simplex on the equilibrated standard form
///   min c~^T z  s.t.  M z = beta, z >= 0,  beta >= 0,
/// holding an explicit dense basis inverse that is refreshed periodically.
class RevisedSimplex {
 public:
  explicit RevisedSimplex(const LinearProgram& lp) : lp_(lp) { build(); }

  SolveOutcome run() {
    SolveOutcome out;
    // Phase 1: minimize the sum of artificials.
    std::vector<double> phase1_cost(num_total_, 0.0);
    for (std::size_t j = first_artificial_; j < num_total_; ++j) phase1_cost[j] = 1.0;
    if (first_artificial_ < num_total_) {
      Phase p1 = iterate(phase1_cost, /*phase_one=*/true);
      if (p1 != Phase::Optimal) throw Error(ErrorKind::NumericFailure, "phase 1 did not converge");
      double infeas = 0.0;
      for (std::size_t k = 0; k < m_; ++k)
        if (is_artificial(head_[k])) infeas += std::max(0.0, xb_(static_cast<Eigen::Index>(k)));
      if (infeas > kFeasibilityTol * (1.0 + beta_max_)) {
        out.status = SolveStatus::Infeasible;
        out.farkas = unscaled_multipliers(phase1_cost);
        out.certificate_residual = farkas_residual(lp_, out.farkas);
        normalize_farkas(out.farkas);
        out.iterations = iterations_;
        out.bland_engaged = bland_;
        if (!(out.certificate_residual <= kFeasibilityTol)) {
          throw Error(ErrorKind::NumericFailure, "Farkas certificate failed verification");
        }
        return out;
      }
      drive_out_artificials();
    }

    std::vector<double> cost(num_total_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) cost[j] = cscaled_[j];
    for (int attempt = 0; attempt < 3; ++attempt) {
      Phase p2 = iterate(cost, /*phase_one=*/false);
      if (p2 == Phase::Unbounded) {
        out.status = SolveStatus::Unbounded;
        out.ray = unbounded_ray_;
        double cd = 0.0;
        for (std::size_t j = 0; j < lp_.num_cols(); ++j) cd += lp_.objective[j] * out.ray[j];
        if (cd < 0.0)
          for (double& v : out.ray) v /= -cd;
        out.certificate_residual = ray_residual(lp_, out.ray);
        out.iterations = iterations_;
        out.bland_engaged = bland_;
        if (!(out.certificate_residual <= kFeasibilityTol)) {
          throw Error(ErrorKind::NumericFailure, "unbounded ray failed verification");
        }
        return out;
      }
      reinvert();
      out.primal = unscaled_primal();
      out.dual = unscaled_multipliers(cost);
      out.objective = 0.0;
      for (std::size_t j = 0; j < lp_.num_cols(); ++j) out.objective += lp_.objective[j] * out.primal[j];
      out.dual_objective = dual_objective(lp_, out.dual);
      out.primal_residual = primal_residual(lp_, out.primal);
      out.dual_residual = dual_residual(lp_, out.dual);
      out.gap = std::abs(out.objective - out.dual_objective) / (1.0 + std::abs(out.objective));
      if (out.primal_residual <= kFeasibilityTol * (1.0 + rhs_max_) && out.dual_residual <= kFeasibilityTol &&
          out.gap <= kGapTol) {
        out.status = SolveStatus::Optimal;
        out.iterations = iterations_;
        out.bland_engaged = bland_;
        return out;
      }
    }
    throw Error(ErrorKind::NumericFailure,
                "LP residuals above tolerance (primal " + std::to_string(out.primal_residual) + ", dual " +
                    std::to_string(out.dual_residual) + ", gap " + std::to_string(out.gap) + ")");
  }

 private:
  enum class Phase { Optimal, Unbounded };
  using Col = std::vector<std::pair<std::size_t, double>>;

  bool is_artificial(std::size_t j) const { return j >= first_artificial_; }

  void build() {
    lp_.validate();
    m_ = lp_.num_rows();
    n_ = lp_.num_cols();
    // Equilibrate: rows by their largest entry, then columns likewise.
    row_scale_.assign(m_, 1.0);
    col_scale_.assign(n_, 1.0);
    for (std::size_t i = 0; i < m_; ++i) {
      double mx = 0.0;
      for (const auto& t : lp_.rows[i]) mx = std::max(mx, std::abs(t.coef));
      if (mx > 0.0) row_scale_[i] = 1.0 / mx;
    }
    std::vector<double> col_max(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      for (const auto& t : lp_.rows[i]) col_max[t.col] = std::max(col_max[t.col], std::abs(t.coef) * row_scale_[i]);
    for (std::size_t j = 0; j < n_; ++j)
      if (col_max[j] > 0.0) col_scale_[j] = 1.0 / col_max[j];

    rhs_max_ = 0.0;
    for (double b : lp_.rhs) rhs_max_ = std::max(rhs_max_, std::abs(b));

    cols_.assign(n_, {});
    sign_.assign(m_, 1.0);
    beta_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) {
      const double b = shifted_rhs(lp_, i) * row_scale_[i];
      sign_[i] = b < 0.0 ? -1.0 : 1.0;
      beta_(static_cast<Eigen::Index>(i)) = sign_[i] * b;
    }
    for (std::size_t i = 0; i < m_; ++i)
      for (const auto& t : lp_.rows[i])
        if (t.coef != 0.0) cols_[t.col].emplace_back(i, sign_[i] * row_scale_[i] * t.coef * col_scale_[t.col]);
    // Merge repeated (row, col) entries.
    for (auto& c : cols_) {
      std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      Col merged;
      for (const auto& e : c) {
        if (!merged.empty() && merged.back().first == e.first) merged.back().second += e.second;
        else merged.push_back(e);
      }
      c = std::move(merged);
    }
    cscaled_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) cscaled_[j] = lp_.objective[j] * col_scale_[j];

    head_.assign(m_, 0);
    slack_of_row_.assign(m_, SIZE_MAX);
    for (std::size_t i = 0; i < m_; ++i) {
      if (lp_.senses[i] == RowSense::Equal) continue;
      const double coef = (lp_.senses[i] == RowSense::LessEqual ? 1.0 : -1.0) * sign_[i];
      slack_of_row_[i] = cols_.size();
      cols_.push_back({{i, coef}});
    }
    first_artificial_ = cols_.size();
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t s = slack_of_row_[i];
      if (s != SIZE_MAX && cols_[s].front().second > 0.0) {
        head_[i] = s;
      } else {
        head_[i] = cols_.size();
        cols_.push_back({{i, 1.0}});
      }
    }
    num_total_ = cols_.size();
    basic_pos_.assign(num_total_, SIZE_MAX);
    for (std::size_t k = 0; k < m_; ++k) basic_pos_[head_[k]] = k;
    retired_.assign(num_total_, false);
    beta_max_ = beta_.size() > 0 ? beta_.cwiseAbs().maxCoeff() : 0.0;
    binv_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
    xb_ = beta_;
    refactor_every_ = std::max<std::size_t>(100, m_ / 8);
  }

  void reinvert() {
    const auto m = static_cast<Eigen::Index>(m_);
    if (m == 0) return;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t k = 0; k < m_; ++k)
      for (const auto& [i, v] : cols_[head_[k]]) B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    binv_ = lu.inverse();
    xb_ = binv_ * beta_;
    for (Eigen::Index k = 0; k < m; ++k)
      if (xb_(k) < 0.0 && xb_(k) > -kFeasibilityTol) xb_(k) = 0.0;
    since_refactor_ = 0;
  }

  Eigen::VectorXd ftran(std::size_t j) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
    for (const auto& [i, v] : cols_[j]) a += v * binv_.col(static_cast<Eigen::Index>(i));
    return a;
  }

  Eigen::VectorXd basic_costs(const std::vector<double>& cost) const {
    Eigen::VectorXd cb(static_cast<Eigen::Index>(m_));
    for (std::size_t k = 0; k < m_; ++k) cb(static_cast<Eigen::Index>(k)) = cost[head_[k]];
    return cb;
  }

  double reduced_cost(std::size_t j, const std::vector<double>& cost, const Eigen::VectorXd& y) const {
    double d = cost[j];
    for (const auto& [i, v] : cols_[j]) d -= v * y(static_cast<Eigen::Index>(i));
    return d;
  }

  void pivot(std::size_t q, std::size_t r, const Eigen::VectorXd& alpha) {
    const auto R = static_cast<Eigen::Index>(r);
    const double ar = alpha(R);
    double theta = xb_(R) / ar;
    if (theta < 0.0) theta = 0.0;
    xb_ -= theta * alpha;
    xb_(R) = theta;
    Eigen::RowVectorXd prow = binv_.row(R) / ar;
    Eigen::VectorXd col = alpha;
    col(R) = 0.0;
    binv_.noalias() -= col * prow;
    binv_.row(R) = prow;
    basic_pos_[head_[r]] = SIZE_MAX;
    if (is_artificial(head_[r])) retired_[head_[r]] = true;
    head_[r] = q;
    basic_pos_[q] = r;
    ++iterations_;
    if (++since_refactor_ >= refactor_every_) reinvert();
  }

  Phase iterate(const std::vector<double>& cost, bool phase_one) {
    const std::size_t max_iter = 50 * (m_ + num_total_) + 10000;
    const std::size_t degenerate_limit = 2 * (m_ + n_);
    std::size_t degenerate_run = 0;
    double cost_scale = 1.0;
    for (double c : cost) cost_scale = std::max(cost_scale, std::abs(c));
    const double opt_tol = 1e-11 * cost_scale;
    for (std::size_t local = 0; local < max_iter; ++local) {
      const Eigen::VectorXd y = binv_.transpose() * basic_costs(cost);
      std::size_t q = SIZE_MAX;
      double best = -opt_tol;
      for (std::size_t j = 0; j < num_total_; ++j) {
        if (basic_pos_[j] != SIZE_MAX) continue;
        if (is_artificial(j) && (retired_[j] || !phase_one)) continue;
        const double d = reduced_cost(j, cost, y);
        if (d < best) {
          best = d;
          q = j;
          if (bland_) break;
        }
      }
      if (q == SIZE_MAX) return Phase::Optimal;

      const Eigen::VectorXd alpha = ftran(q);
      const std::size_t r = ratio_test(alpha, phase_one);
      if (r == SIZE_MAX) {
        if (phase_one) throw Error(ErrorKind::NumericFailure, "phase 1 appears unbounded");
        record_ray(q, alpha);
        return Phase::Unbounded;
      }
      const double step = xb_(static_cast<Eigen::Index>(r)) / alpha(static_cast<Eigen::Index>(r));
      if (step <= 1e-12) {
        if (++degenerate_run > degenerate_limit) bland_ = true;
      } else {
        degenerate_run = 0;
      }
      pivot(q, r, alpha);
    }
    throw Error(ErrorKind::NumericFailure, "simplex iteration limit reached");
  }

  /// Harris two-pass ratio test; strict minimum with lowest-index ties once
  /// Bland's rule is engaged. Basic artificials (phase 2) must stay at zero.
  std::size_t ratio_test(const Eigen::VectorXd& alpha, bool phase_one) const {
    const double piv_tol = 1e-9;
    std::size_t r = SIZE_MAX;
    if (!phase_one) {
      double best_abs = 0.0;
      for (std::size_t k = 0; k < m_; ++k) {
        const double a = alpha(static_cast<Eigen::Index>(k));
        if (is_artificial(head_[k]) && std::abs(a) > piv_tol && std::abs(a) > best_abs) {
          best_abs = std::abs(a);
          r = k;
        }
      }
      if (r != SIZE_MAX && alpha(static_cast<Eigen::Index>(r)) < 0.0) {
        // Flip the artificial's sign so it can leave at level zero.
        return r;
      }
      if (r != SIZE_MAX) return r;
    }
    if (bland_) {
      double best_theta = HUGE_VAL;
      for (std::size_t k = 0; k < m_; ++k) {
        const double a = alpha(static_cast<Eigen::Index>(k));
        if (a <= piv_tol) continue;
        const double theta = std::max(0.0, xb_(static_cast<Eigen::Index>(k))) / a;
        if (theta < best_theta - 1e-14 ||
            (theta <= best_theta + 1e-14 && r != SIZE_MAX && head_[k] < head_[r])) {
          if (theta < best_theta) best_theta = theta;
          r = k;
        }
      }
      return r;
    }
    double theta_max = HUGE_VAL;
    for (std::size_t k = 0; k < m_; ++k) {
      const double a = alpha(static_cast<Eigen::Index>(k));
      if (a > piv_tol) theta_max = std::min(theta_max, (std::max(0.0, xb_(static_cast<Eigen::Index>(k))) + kFeasibilityTol) / a);
    }
    if (theta_max == HUGE_VAL) return SIZE_MAX;
    double best_alpha = 0.0;
    for (std::size_t k = 0; k < m_; ++k) {
      const double a = alpha(static_cast<Eigen::Index>(k));
      if (a <= piv_tol) continue;
      if (std::max(0.0, xb_(static_cast<Eigen::Index>(k))) / a <= theta_max && a > best_alpha) {
        best_alpha = a;
        r = k;
      }
    }
    return r;
  }

  void drive_out_artificials() {
    for (std::size_t k = 0; k < m_; ++k) {
      if (!is_artificial(head_[k])) continue;
      const Eigen::RowVectorXd row = binv_.row(static_cast<Eigen::Index>(k));
      std::size_t best = SIZE_MAX;
      double best_abs = 1e-9;
      for (std::size_t j = 0; j < first_artificial_; ++j) {
        if (basic_pos_[j] != SIZE_MAX) continue;
        double v = 0.0;
        for (const auto& [i, a] : cols_[j]) v += row(static_cast<Eigen::Index>(i)) * a;
        if (std::abs(v) > best_abs) {
          best_abs = std::abs(v);
          best = j;
        }
      }
      if (best != SIZE_MAX) pivot(best, k, ftran(best));
      // Otherwise the row is redundant and the artificial stays basic at zero.
    }
  }

  void record_ray(std::size_t q, const Eigen::VectorXd& alpha) {
    std::vector<double> z(num_total_, 0.0);
    z[q] = 1.0;
    for (std::size_t k = 0; k < m_; ++k) z[head_[k]] = -alpha(static_cast<Eigen::Index>(k));
    unbounded_ray_.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) unbounded_ray_[j] = std::max(0.0, z[j]) * col_scale_[j];
  }

  std::vector<double> unscaled_primal() const {
    std::vector<double> x(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      double v = 0.0;
      if (basic_pos_[j] != SIZE_MAX) v = std::max(0.0, xb_(static_cast<Eigen::Index>(basic_pos_[j])));
      x[j] = lp_.lower_bound(j) + v * col_scale_[j];
    }
    return x;
  }

  std::vector<double> unscaled_multipliers(const std::vector<double>& cost) const {
    const Eigen::VectorXd y = binv_.transpose() * basic_costs(cost);
    std::vector<double> out(m_);
    for (std::size_t i = 0; i < m_; ++i) out[i] = sign_[i] * row_scale_[i] * y(static_cast<Eigen::Index>(i));
    return out;
  }

  void normalize_farkas(std::vector<double>& y) const {
    double yb = 0.0;
    for (std::size_t i = 0; i < m_; ++i) yb += y[i] * shifted_rhs(lp_, i);
    if (yb > 0.0)
      for (double& v : y) v /= yb;
  }

  const LinearProgram& lp_;
  std::size_t m_ = 0, n_ = 0, num_total_ = 0, first_artificial_ = 0;
  std::vector<Col> cols_;
  std::vector<double> row_scale_, col_scale_, sign_, cscaled_;
  std::vector<std::size_t> slack_of_row_, head_, basic_pos_;
  std::vector<bool> retired_;
  Eigen::VectorXd beta_, xb_;
  Eigen::MatrixXd binv_;
  double beta_max_ = 0.0, rhs_max_ = 0.0;
  std::size_t iterations_ = 0, since_refactor_ = 0, refactor_every_ = 100;
  bool bland_ = false;
  std::vector<double> unbounded_ray_;
};

}  // namespace detail

/// Direct solve of `lp` without reformulation.
inline SolveOutcome solve_lp_direct(const LinearProgram& lp) {
  detail::RevisedSimplex simplex(lp);
  return simplex.run();
}

namespace detail {

/// Dual of `lp` after the shift x = lower + z:
///   min -b'^T y  s.t.  A^T y <= c,  y >= 0 on >= rows, y = -w on <= rows,
///   y = u - v on = rows.
/// `col_row[k]` / `col_sign[k]` map dual column k back to (row, sign).
struct DualForm {
  LinearProgram lp;
  std::vector<std::size_t> col_row;
  std::vector<double> col_sign;
};

inline DualForm dual_form(const LinearProgram& lp) {
  DualForm d;
  const std::size_t n = lp.num_cols();
  std::vector<std::vector<Term>> by_col(n);
  auto add = [&](std::size_t i, double sign) {
    const std::size_t k = d.lp.add_column(-sign * shifted_rhs(lp, i));
    d.col_row.push_back(i);
    d.col_sign.push_back(sign);
    for (const auto& t : lp.rows[i]) by_col[t.col].push_back({k, sign * t.coef});
  };
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    if (lp.senses[i] != RowSense::LessEqual) add(i, 1.0);
    if (lp.senses[i] != RowSense::GreaterEqual) add(i, -1.0);
  }
  for (std::size_t j = 0; j < n; ++j) d.lp.add_row(std::move(by_col[j]), RowSense::LessEqual, lp.objective[j]);
  return d;
}

inline std::vector<double> row_multipliers(const DualForm& d, const std::vector<double>& y, std::size_t rows) {
  std::vector<double> out(rows, 0.0);
  for (std::size_t k = 0; k < y.size(); ++k) out[d.col_row[k]] += d.col_sign[k] * y[k];
  return out;
}

/// Solves through the dual; empty when the result does not verify on `lp`.
inline std::optional<SolveOutcome> solve_via_dual(const LinearProgram& lp) {
  const DualForm d = dual_form(lp);
  SolveOutcome inner;
  try {
    inner = solve_lp_direct(d.lp);
  } catch (const Error&) {
    return std::nullopt;
  }
  SolveOutcome out;
  out.iterations = inner.iterations;
  out.bland_engaged = inner.bland_engaged;
  if (inner.status == SolveStatus::Infeasible) return std::nullopt;  // primal unbounded or infeasible
  if (inner.status == SolveStatus::Unbounded) {
    out.status = SolveStatus::Infeasible;
    out.farkas = row_multipliers(d, inner.ray, lp.num_rows());
    out.certificate_residual = farkas_residual(lp, out.farkas);
    if (!(out.certificate_residual <= kFeasibilityTol)) return std::nullopt;
    return out;
  }
  out.dual = row_multipliers(d, inner.primal, lp.num_rows());
  out.primal.resize(lp.num_cols());
  // Multipliers of the dual's <= rows are <= 0; their negation is z.
  for (std::size_t j = 0; j < lp.num_cols(); ++j) out.primal[j] = lp.lower_bound(j) + std::max(0.0, -inner.dual[j]);
  for (std::size_t j = 0; j < lp.num_cols(); ++j) out.objective += lp.objective[j] * out.primal[j];
  out.dual_objective = dual_objective(lp, out.dual);
  out.primal_residual = primal_residual(lp, out.primal);
  out.dual_residual = dual_residual(lp, out.dual);
  out.gap = std::abs(out.objective - out.dual_objective) / (1.0 + std::abs(out.objective));
  double rhs_max = 0.0;
  for (double b : lp.rhs) rhs_max = std::max(rhs_max, std::abs(b));
  if (out.primal_residual <= kFeasibilityTol * (1.0 + rhs_max) && out.dual_residual <= kFeasibilityTol &&
      out.gap <= kGapTol) {
    return out;
  }
  return std::nullopt;
}

}  // namespace detail

/// Row count above which tall programs are solved through their dual, whose
/// basis is sized by the column count instead.
inline constexpr std::size_t kDualizeMinRows = 64;

/// Solves the LP with a deterministic two-phase revised simplex (Dantzig
/// pricing, Harris ratio test, Bland's rule after 2*(rows+cols) consecutive
/// degenerate pivots). Optimal results carry a verified dual; infeasible ones a
/// verified Farkas certificate; unbounded ones a verified ray. Anything that
/// fails verification raises numeric-failure. Programs with many more rows
/// than columns go through the dual first and fall back to the direct solve
/// when that does not verify.
inline SolveOutcome solve_lp(const LinearProgram& lp) {
  lp.validate();
  if (lp.num_rows() > kDualizeMinRows && lp.num_rows() > 2 * lp.num_cols()) {
    if (auto via = detail::solve_via_dual(lp)) return *via;
  }
  return solve_lp_direct(lp);
}

}  // namespace modlab::solver
