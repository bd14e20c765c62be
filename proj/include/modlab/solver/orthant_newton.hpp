#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

namespace modlab::solver {

/// Value, gradient and (negative semidefinite) Hessian of a smooth concave
/// function at a point of the nonnegative orthant. value may be -inf outside
/// the effective domain.
struct ConcaveEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

struct OrthantNewtonOptions {
  std::size_t max_iterations = 500;
  double armijo = 1e-4;
  std::size_t max_backtracks = 80;
};

struct OrthantNewtonResult {
  Eigen::VectorXd point;
  std::size_t iterations = 0;
  bool converged = false;
  bool stalled = false;
};

/// Maximizes a concave function over eta >= 0 with a projected Newton method
/// (active set from the gradient sign at the bound, regularized Newton step on
/// the free set, Armijo search along the projection arc). `stop(eta, eval)`
/// decides convergence, typically from a duality gap.
template <typename Evaluate, typename Stop>
OrthantNewtonResult maximize_on_orthant(Evaluate&& evaluate, Stop&& stop, Eigen::VectorXd eta,
                                        const OrthantNewtonOptions& opt = {}) {
  OrthantNewtonResult res;
  const Eigen::Index k = eta.size();
  eta = eta.cwiseMax(0.0);
  ConcaveEval ev = evaluate(eta, true);
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    if (stop(eta, ev)) {
      res.converged = true;
      break;
    }
    const Eigen::VectorXd& g = ev.gradient;
    const double proj_gap = (eta - (eta + g).cwiseMax(0.0)).norm();
    const double eps_active = std::min(1e-10 * (1.0 + eta.cwiseAbs().maxCoeff()), proj_gap);

    std::vector<Eigen::Index> free;
    for (Eigen::Index r = 0; r < k; ++r)
      if (!(eta(r) <= eps_active && g(r) <= 0.0)) free.push_back(r);

    Eigen::VectorXd dir = g;  // active coordinates move along the gradient
    if (!free.empty()) {
      const auto nf = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd Hf(nf, nf);
      Eigen::VectorXd gf(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        gf(a) = g(free[a]);
        for (Eigen::Index b = 0; b < nf; ++b) Hf(a, b) = -ev.hessian(free[a], free[b]);
      }
      double diag_max = 0.0;
      for (Eigen::Index a = 0; a < nf; ++a) diag_max = std::max(diag_max, Hf(a, a));
      double delta = 1e-12 * std::max(diag_max, 1e-300);
      Eigen::VectorXd df;
      for (int attempt = 0; attempt < 40; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(Hf + delta * Eigen::MatrixXd::Identity(nf, nf));
        if (llt.info() == Eigen::Success) {
          df = llt.solve(gf);
          if (df.allFinite()) break;
        }
        delta = std::max(delta * 10.0, 1e-300);
        df.resize(0);
      }
      if (df.size() == nf) {
        for (Eigen::Index a = 0; a < nf; ++a) dir(free[a]) = df(a);
      }
    }

    auto try_direction = [&](const Eigen::VectorXd& d, Eigen::VectorXd& next, ConcaveEval& next_ev) {
      double alpha = 1.0;
      for (std::size_t bt = 0; bt < opt.max_backtracks; ++bt, alpha *= 0.5) {
        next = (eta + alpha * d).cwiseMax(0.0);
        const double predicted = g.dot(next - eta);
        if (!(predicted > 0.0)) continue;
        next_ev = evaluate(next, false);
        if (std::isfinite(next_ev.value) && next_ev.value >= ev.value + opt.armijo * predicted) return true;
      }
      return false;
    };

    Eigen::VectorXd next;
    ConcaveEval next_ev;
    bool moved = try_direction(dir, next, next_ev);
    if (!moved) moved = try_direction(g, next, next_ev);
    if (!moved) {
      res.stalled = true;
      break;
    }
    eta = next;
    ev = evaluate(eta, true);
  }
  if (!res.converged && !res.stalled) res.converged = stop(eta, ev);
  res.point = eta;
  return res;
}

}  // namespace modlab::solver
