#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "modlab/error.hpp"
#include "modlab/space.hpp"

namespace modlab {

/// Nonnegative sparse mass vector over the points of a space.
class Measure {
 public:
  using Entry = std::pair<std::size_t, double>;

  Measure() = default;

  static Measure zero(std::size_t n_points) {
    Measure m;
    m.n_points_ = n_points;
    return m;
  }

  /// Duplicate indices are summed, zero masses are dropped.
  static Measure from_entries(std::size_t n_points, std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end());
    Measure m;
    m.n_points_ = n_points;
    for (const auto& [idx, mass] : entries) {
      if (idx >= n_points) throw Error(ErrorKind::BadIndex, "measure entry index out of range");
      if (!(mass >= 0.0) || !std::isfinite(mass)) {
        throw Error(ErrorKind::InvalidRange, "measure masses must be finite and nonnegative");
      }
      if (mass == 0.0) continue;
      if (!m.entries_.empty() && m.entries_.back().first == idx) {
        m.entries_.back().second += mass;
      } else {
        m.entries_.emplace_back(idx, mass);
      }
    }
    m.recompute_total();
    return m;
  }

  static Measure from_dense(std::span<const double> values) {
    std::vector<Entry> e;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] != 0.0) e.emplace_back(i, values[i]);
    return from_entries(values.size(), std::move(e));
  }

  std::size_t point_count() const { return n_points_; }
  std::span<const Entry> entries() const { return entries_; }
  double total() const { return total_; }
  bool is_zero() const { return entries_.empty(); }

  double at(std::size_t i) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{i, 0.0},
                               [](const Entry& a, const Entry& b) { return a.first < b.first; });
    return (it != entries_.end() && it->first == i) ? it->second : 0.0;
  }

  std::vector<double> dense() const {
    std::vector<double> out(n_points_, 0.0);
    for (const auto& [i, v] : entries_) out[i] = v;
    return out;
  }

  /// Entrywise equality up to `tol`.
  bool approx_equal(const Measure& other, double tol = 1e-12) const {
    if (n_points_ != other.n_points_) return false;
    std::size_t a = 0, b = 0;
    while (a < entries_.size() || b < other.entries_.size()) {
      if (b == other.entries_.size() || (a < entries_.size() && entries_[a].first < other.entries_[b].first)) {
        if (entries_[a++].second > tol) return false;
      } else if (a == entries_.size() || other.entries_[b].first < entries_[a].first) {
        if (other.entries_[b++].second > tol) return false;
      } else {
        if (std::abs(entries_[a++].second - other.entries_[b++].second) > tol) return false;
      }
    }
    return true;
  }

  friend Measure operator+(const Measure& x, const Measure& y) {
    if (x.n_points_ != y.n_points_) throw Error(ErrorKind::SpaceMismatch, "adding measures over different spaces");
    std::vector<Entry> e(x.entries_.begin(), x.entries_.end());
    e.insert(e.end(), y.entries_.begin(), y.entries_.end());
    return from_entries(x.n_points_, std::move(e));
  }

 private:
  void recompute_total() {
    total_ = 0.0;
    for (const auto& [i, v] : entries_) total_ += v;
  }

  std::size_t n_points_ = 0;
  std::vector<Entry> entries_;
  double total_ = 0.0;
};

/// Unit mass at point x.
inline Measure dirac(const MeasureSpace& s, std::size_t x) {
  if (x >= s.size()) throw Error(ErrorKind::BadIndex, "dirac point out of range");
  return Measure::from_entries(s.size(), {{x, 1.0}});
}

/// Arclength measure of a polyline, deposited on the nearest points. Each
/// segment is cut into pieces no longer than half the minimum cell spacing and
/// every piece drops its length on the point nearest to its midpoint.
inline Measure path_measure(const MeasureSpace& s, std::span<const std::vector<double>> polyline) {
  if (!s.has_coords()) throw Error(ErrorKind::NoCoords, "path_measure needs coordinates");
  if (polyline.size() < 2) throw Error(ErrorKind::ZeroLengthPath, "polyline needs at least two vertices");
  const std::size_t dim = s.dim();
  for (const auto& v : polyline) {
    if (v.size() != dim) throw Error(ErrorKind::SizeMismatch, "polyline vertex has wrong dimension");
  }
  const double step = 0.5 * s.min_spacing();
  std::vector<Measure::Entry> deposits;
  double length = 0.0;
  std::vector<double> mid(dim);
  for (std::size_t k = 0; k + 1 < polyline.size(); ++k) {
    const auto& p = polyline[k];
    const auto& q = polyline[k + 1];
    double sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) sq += (q[d] - p[d]) * (q[d] - p[d]);
    const double seg = std::sqrt(sq);
    if (seg == 0.0) continue;
    length += seg;
    const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(seg / step)));
    const double piece_len = seg / static_cast<double>(pieces);
    for (std::size_t t = 0; t < pieces; ++t) {
      const double frac = (static_cast<double>(t) + 0.5) / static_cast<double>(pieces);
      for (std::size_t d = 0; d < dim; ++d) mid[d] = p[d] + frac * (q[d] - p[d]);
      deposits.emplace_back(s.nearest_point(mid), piece_len);
    }
  }
  if (!(length > 0.0)) throw Error(ErrorKind::ZeroLengthPath, "polyline has zero length");
  return Measure::from_entries(s.size(), std::move(deposits));
}

/// Reference mass restricted to `subset`.
inline Measure restriction(const MeasureSpace& s, std::span<const std::size_t> subset) {
  std::vector<Measure::Entry> e;
  e.reserve(subset.size());
  std::set<std::size_t> seen;
  for (std::size_t i : subset) {
    if (i >= s.size()) throw Error(ErrorKind::BadIndex, "restriction index out of range");
    if (seen.insert(i).second) e.emplace_back(i, s.mass(i));
  }
  return Measure::from_entries(s.size(), std::move(e));
}

inline Measure scale(const Measure& mu, double c) {
  if (!(c >= 0.0)) throw Error(ErrorKind::NegativeScale, "scale factor must be nonnegative");
  std::vector<Measure::Entry> e(mu.entries().begin(), mu.entries().end());
  for (auto& [i, v] : e) v *= c;
  return Measure::from_entries(mu.point_count(), std::move(e));
}

/// Ordered, labelled list of measures over one shared space.
class MeasureFamily {
 public:
  MeasureFamily() = default;
  explicit MeasureFamily(std::shared_ptr<const MeasureSpace> space) : space_(std::move(space)) {
    if (!space_) throw Error(ErrorKind::SpaceMismatch, "family needs a space");
  }

  void add(std::string label, Measure mu) {
    if (mu.point_count() != space_->size()) {
      throw Error(ErrorKind::SpaceMismatch, "member '" + label + "' lives on a different space");
    }
    if (has_label(label)) throw Error(ErrorKind::InvalidRange, "duplicate family label '" + label + "'");
    labels_.push_back(std::move(label));
    members_.push_back(std::move(mu));
  }

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const Measure& operator[](std::size_t j) const { return members_.at(j); }
  const std::string& label(std::size_t j) const { return labels_.at(j); }
  std::span<const Measure> members() const { return members_; }
  std::span<const std::string> labels() const { return labels_; }
  const MeasureSpace& space() const { return *space_; }
  const std::shared_ptr<const MeasureSpace>& space_ptr() const { return space_; }

  bool has_label(const std::string& label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
  }

  /// True when some member equals `mu` entrywise up to `tol`.
  bool contains(const Measure& mu, double tol = 1e-12) const {
    return std::any_of(members_.begin(), members_.end(),
                       [&](const Measure& m) { return m.approx_equal(mu, tol); });
  }

  /// Family restricted to the members selected by `keep`.
  MeasureFamily subset(std::span<const std::size_t> keep) const {
    MeasureFamily f(space_);
    for (std::size_t j : keep) f.add(label(j), members_.at(j));
    return f;
  }

 private:
  std::shared_ptr<const MeasureSpace> space_;
  std::vector<Measure> members_;
  std::vector<std::string> labels_;
};

/// Concatenation of two families over the same space with duplicate measures
/// dropped (entrywise equality to 1e-12).
inline MeasureFamily union_families(const MeasureFamily& f1, const MeasureFamily& f2) {
  if (f1.space_ptr() != f2.space_ptr()) throw Error(ErrorKind::SpaceMismatch, "union of families over different spaces");
  MeasureFamily out(f1.space_ptr());
  auto push = [&](const std::string& label, const Measure& mu) {
    if (out.contains(mu)) return;
    std::string l = label;
    while (out.has_label(l)) l += "'";
    out.add(std::move(l), mu);
  };
  for (std::size_t j = 0; j < f1.size(); ++j) push(f1.label(j), f1[j]);
  for (std::size_t j = 0; j < f2.size(); ++j) push(f2.label(j), f2[j]);
  return out;
}

/// Materialized prefix E_1, ..., E_K of a sequence of families. When the
/// sequence is declared monotone, E_k must be contained in E_{k+1}.
class FamilySequence {
 public:
  FamilySequence() = default;
  FamilySequence(std::vector<MeasureFamily> families, bool monotone)
      : families_(std::move(families)), monotone_(monotone) {
    for (std::size_t k = 1; k < families_.size(); ++k) {
      if (families_[k].space_ptr() != families_[0].space_ptr()) {
        throw Error(ErrorKind::SpaceMismatch, "sequence families live on different spaces");
      }
    }
  }

  /// Calls `generator(k)` for k = 1..horizon.
  template <typename Generator>
  static FamilySequence generate(Generator&& generator, std::size_t horizon, bool monotone = true) {
    std::vector<MeasureFamily> fams;
    fams.reserve(horizon);
    for (std::size_t k = 1; k <= horizon; ++k) fams.push_back(generator(k));
    return FamilySequence(std::move(fams), monotone);
  }

  std::size_t horizon() const { return families_.size(); }
  bool monotone() const { return monotone_; }
  /// 1-based, as in E_1, E_2, ...
  const MeasureFamily& at(std::size_t k) const {
    if (k == 0 || k > families_.size()) throw Error(ErrorKind::BadIndex, "sequence index out of range");
    return families_[k - 1];
  }
  std::span<const MeasureFamily> families() const { return families_; }

  /// Membership check E_k subset of E_{k+1} for all k < K. Returns the first
  /// offending k, or 0 when the prefix is nested.
  std::size_t first_violation(std::size_t K) const {
    K = std::min(K, families_.size());
    for (std::size_t k = 1; k < K; ++k) {
      for (const auto& mu : families_[k - 1].members()) {
        if (!families_[k].contains(mu)) return k;
      }
    }
    return 0;
  }

  /// Throws not-monotone unless the flag is set and the prefix up to K nests.
  void require_monotone(std::size_t K) const {
    if (!monotone_) throw Error(ErrorKind::NotMonotone, "sequence is not flagged monotone");
    if (K == 0 || K > families_.size()) throw Error(ErrorKind::BadIndex, "horizon exceeds materialized families");
    if (std::size_t k = first_violation(K); k != 0) {
      throw Error(ErrorKind::NotMonotone, "E_" + std::to_string(k) + " is not contained in E_" + std::to_string(k + 1));
    }
  }

  /// Union of E_1..E_K with duplicates dropped.
  MeasureFamily materialized_union(std::size_t K) const {
    MeasureFamily u = at(1);
    for (std::size_t k = 2; k <= K; ++k) u = union_families(u, at(k));
    return u;
  }

 private:
  std::vector<MeasureFamily> families_;
  bool monotone_ = false;
};

}  // namespace modlab
