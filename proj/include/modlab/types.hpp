#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "modlab/error.hpp"
#include "modlab/measures.hpp"

namespace modlab {

/// Nonnegative function on the points of a space (a test density rho).
class DensityFunction {
 public:
  DensityFunction() = default;
  explicit DensityFunction(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_)
      if (!(v >= 0.0)) throw Error(ErrorKind::InvalidRange, "density values must be nonnegative");
  }
  static DensityFunction constant(std::size_t n, double c) { return DensityFunction(std::vector<double>(n, c)); }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  double sup() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, v);
    return m;
  }

 private:
  std::vector<double> values_;
};

/// Atomic plan: nonnegative weight per family member.
struct Plan {
  std::vector<double> weights;

  double total() const {
    double t = 0.0;
    for (double w : weights) t += w;
    return t;
  }
};

/// <mu, rho> = sum_x rho(x) mu(x).
inline double integrate(const DensityFunction& rho, const Measure& mu) {
  if (rho.size() != mu.point_count()) throw Error(ErrorKind::SpaceMismatch, "density and measure live on different spaces");
  double s = 0.0;
  for (const auto& [i, v] : mu.entries()) s += rho[i] * v;
  return s;
}

/// Weighted sum of family members, sum_j eta_j mu_j.
inline Measure barycenter(const Plan& plan, const MeasureFamily& family) {
  if (plan.weights.size() != family.size()) throw Error(ErrorKind::SizeMismatch, "plan and family sizes differ");
  const std::size_t n = family.space().size();
  std::vector<double> dense(n, 0.0);
  for (std::size_t j = 0; j < family.size(); ++j) {
    const double w = plan.weights[j];
    if (!(w >= 0.0)) throw Error(ErrorKind::InvalidRange, "plan weights must be nonnegative");
    if (w == 0.0) continue;
    for (const auto& [i, v] : family[j].entries()) dense[i] += w * v;
  }
  return Measure::from_dense(dense);
}

}  // namespace modlab
