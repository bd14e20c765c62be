#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "modlab/error.hpp"

namespace modlab {

/// Axis-aligned cell layout recorded by the grid builders; lets nearest-cell
/// lookups run in O(1) instead of scanning every point.
struct GridGeometry {
  std::size_t dim = 1;
  std::array<double, 2> lower{0.0, 0.0};
  std::array<double, 2> spacing{1.0, 1.0};
  std::array<std::size_t, 2> counts{1, 1};
};

using PointPair = std::pair<std::size_t, std::size_t>;

/// Discretized metric measure space: point cells with reference masses,
/// optional Euclidean coordinates and optional boundary markers.
/// Immutable once built.
class MeasureSpace {
 public:
  MeasureSpace() = default;

  /// Builds a space from explicit per-point data. `coords` is either empty or
  /// holds `mass.size()` points of equal dimension.
  static MeasureSpace create(std::vector<double> mass,
                             std::vector<std::vector<double>> coords = {},
                             std::vector<std::size_t> boundary = {},
                             std::string kind = "explicit") {
    MeasureSpace s;
    if (mass.empty()) throw Error(ErrorKind::InvalidRange, "space needs at least one point");
    bool any_positive = false;
    for (double m : mass) {
      if (!(m >= 0.0) || !std::isfinite(m)) {
        throw Error(ErrorKind::InvalidRange, "point masses must be finite and nonnegative");
      }
      any_positive = any_positive || m > 0.0;
    }
    if (!any_positive) throw Error(ErrorKind::InvalidRange, "at least one point mass must be positive");
    s.mass_ = std::move(mass);
    if (!coords.empty()) {
      if (coords.size() != s.mass_.size()) {
        throw Error(ErrorKind::SizeMismatch, "coords must have one entry per point");
      }
      s.dim_ = coords.front().size();
      if (s.dim_ == 0) throw Error(ErrorKind::InvalidRange, "coordinates must have dimension >= 1");
      s.coords_.reserve(s.mass_.size() * s.dim_);
      for (const auto& c : coords) {
        if (c.size() != s.dim_) throw Error(ErrorKind::SizeMismatch, "coordinate dimensions differ");
        s.coords_.insert(s.coords_.end(), c.begin(), c.end());
      }
    }
    std::sort(boundary.begin(), boundary.end());
    boundary.erase(std::unique(boundary.begin(), boundary.end()), boundary.end());
    for (std::size_t b : boundary) {
      if (b >= s.mass_.size()) throw Error(ErrorKind::BadIndex, "boundary index out of range");
    }
    s.boundary_ = std::move(boundary);
    s.kind_ = std::move(kind);
    return s;
  }

  std::size_t size() const { return mass_.size(); }
  const std::string& kind() const { return kind_; }

  double mass(std::size_t i) const { return mass_.at(i); }
  std::span<const double> masses() const { return mass_; }
  double total_mass() const { return std::accumulate(mass_.begin(), mass_.end(), 0.0); }

  bool has_coords() const { return dim_ > 0; }
  std::size_t dim() const { return dim_; }
  std::span<const double> point(std::size_t i) const {
    require_coords();
    if (i >= size()) throw Error(ErrorKind::BadIndex, "point index out of range");
    return {coords_.data() + i * dim_, dim_};
  }

  /// Euclidean distance between two points.
  double distance(std::size_t i, std::size_t j) const {
    auto a = point(i);
    auto b = point(j);
    double sq = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) sq += (a[d] - b[d]) * (a[d] - b[d]);
    return std::sqrt(sq);
  }

  std::span<const std::size_t> boundary() const { return boundary_; }
  bool has_boundary() const { return !boundary_.empty(); }
  bool is_boundary(std::size_t i) const {
    return std::binary_search(boundary_.begin(), boundary_.end(), i);
  }

  const std::optional<GridGeometry>& grid() const { return grid_; }

  /// Neighbor pairs used by Lipschitz constraints. Builders that know their
  /// topology record it; otherwise every pair of points is returned.
  std::vector<PointPair> neighbor_pairs() const {
    if (neighbors_) return *neighbors_;
    require_coords();
    std::vector<PointPair> all;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j) all.emplace_back(i, j);
    return all;
  }

  /// Smallest distance between two distinct points (grid spacing on grids).
  double min_spacing() const {
    require_coords();
    if (grid_) {
      double h = grid_->spacing[0];
      if (grid_->dim == 2) h = std::min(h, grid_->spacing[1]);
      return h;
    }
    double best = HUGE_VAL;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j) {
        double d = distance(i, j);
        if (d > 0.0) best = std::min(best, d);
      }
    return best;
  }

  /// Index of the point closest to `x` (ties go to the lowest index).
  std::size_t nearest_point(std::span<const double> x) const {
    require_coords();
    if (x.size() != dim_) throw Error(ErrorKind::SizeMismatch, "query point has wrong dimension");
    if (grid_) {
      std::array<std::size_t, 2> idx{0, 0};
      for (std::size_t d = 0; d < grid_->dim; ++d) {
        double t = std::floor((x[d] - grid_->lower[d]) / grid_->spacing[d]);
        t = std::clamp(t, 0.0, static_cast<double>(grid_->counts[d] - 1));
        idx[d] = static_cast<std::size_t>(t);
      }
      return idx[0] + grid_->counts[0] * idx[1];
    }
    std::size_t best = 0;
    double best_sq = HUGE_VAL;
    for (std::size_t i = 0; i < size(); ++i) {
      double sq = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        double diff = coords_[i * dim_ + d] - x[d];
        sq += diff * diff;
      }
      if (sq < best_sq) {
        best_sq = sq;
        best = i;
      }
    }
    return best;
  }

  /// Same geometry, every mass multiplied by `factor` > 0.
  MeasureSpace with_scaled_mass(double factor) const {
    if (!(factor > 0.0)) throw Error(ErrorKind::InvalidRange, "mass scale must be positive");
    MeasureSpace s = *this;
    for (double& m : s.mass_) m *= factor;
    return s;
  }

  /// Same geometry with replacement masses.
  MeasureSpace with_masses(std::vector<double> mass) const {
    if (mass.size() != size()) throw Error(ErrorKind::SizeMismatch, "mass vector has wrong length");
    MeasureSpace s = *this;
    auto rebuilt = create(std::move(mass), {}, {}, kind_);
    s.mass_ = std::move(rebuilt.mass_);
    return s;
  }

  void set_neighbors(std::vector<PointPair> pairs) {
    for (auto [a, b] : pairs) {
      if (a >= size() || b >= size()) throw Error(ErrorKind::BadIndex, "neighbor index out of range");
    }
    neighbors_ = std::move(pairs);
  }
  void set_grid(GridGeometry g) { grid_ = g; }

 private:
  void require_coords() const {
    if (!has_coords()) throw Error(ErrorKind::NoCoords, "space has no coordinates");
  }

  std::vector<double> mass_;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<std::size_t> boundary_;
  std::optional<std::vector<PointPair>> neighbors_;
  std::optional<GridGeometry> grid_;
  std::string kind_ = "explicit";
};

/// n equal cells on [a, b], points at cell centers, endpoints flagged as boundary.
inline MeasureSpace grid_1d(double a, double b, std::size_t n) {
  if (!(a < b) || n == 0) throw Error(ErrorKind::InvalidRange, "grid_1d needs a < b and n >= 1");
  const double h = (b - a) / static_cast<double>(n);
  std::vector<double> mass(n, h);
  std::vector<std::vector<double>> coords(n);
  for (std::size_t i = 0; i < n; ++i) coords[i] = {a + (static_cast<double>(i) + 0.5) * h};
  std::vector<std::size_t> boundary{0, n - 1};
  auto s = MeasureSpace::create(std::move(mass), std::move(coords), std::move(boundary), "grid1d");
  std::vector<PointPair> nb;
  for (std::size_t i = 0; i + 1 < n; ++i) nb.emplace_back(i, i + 1);
  s.set_neighbors(std::move(nb));
  GridGeometry g;
  g.dim = 1;
  g.lower = {a, 0.0};
  g.spacing = {h, 1.0};
  g.counts = {n, 1};
  s.set_grid(g);
  return s;
}

/// nx*ny cells on [a,b]x[c,d], row-major with x fastest; the outer ring is boundary.
inline MeasureSpace grid_2d(std::array<double, 4> rect, std::size_t nx, std::size_t ny) {
  const auto [a, b, c, d] = rect;
  if (!(a < b) || !(c < d) || nx == 0 || ny == 0) {
    throw Error(ErrorKind::InvalidRange, "grid_2d needs a < b, c < d, nx, ny >= 1");
  }
  const double hx = (b - a) / static_cast<double>(nx);
  const double hy = (d - c) / static_cast<double>(ny);
  const std::size_t n = nx * ny;
  std::vector<double> mass(n, hx * hy);
  std::vector<std::vector<double>> coords(n);
  std::vector<std::size_t> boundary;
  std::vector<PointPair> nb;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = i + nx * j;
      coords[k] = {a + (static_cast<double>(i) + 0.5) * hx, c + (static_cast<double>(j) + 0.5) * hy};
      if (i == 0 || j == 0 || i + 1 == nx || j + 1 == ny) boundary.push_back(k);
      if (i + 1 < nx) nb.emplace_back(k, k + 1);
      if (j + 1 < ny) nb.emplace_back(k, k + nx);
    }
  }
  auto s = MeasureSpace::create(std::move(mass), std::move(coords), std::move(boundary), "grid2d");
  s.set_neighbors(std::move(nb));
  GridGeometry g;
  g.dim = 2;
  g.lower = {a, c};
  g.spacing = {hx, hy};
  g.counts = {nx, ny};
  s.set_grid(g);
  return s;
}

struct DoublingReport {
  double value = 1.0;
  std::size_t argmax_point = 0;
  double argmax_radius = 0.0;
  /// (point, radius) pairs skipped because m(B(x,r)) was zero.
  std::vector<std::pair<std::size_t, double>> skipped;
};

/// max over points x and the given radii of m(B(x,2r)) / m(B(x,r)), closed balls.
inline DoublingReport doubling_constant(const MeasureSpace& s, std::span<const double> radii) {
  if (!s.has_coords()) throw Error(ErrorKind::NoCoords, "doubling_constant needs coordinates");
  for (double r : radii) {
    if (!(r > 0.0)) throw Error(ErrorKind::InvalidRange, "radii must be positive");
  }
  DoublingReport rep;
  rep.value = 0.0;
  bool any = false;
  const std::size_t n = s.size();
  std::vector<std::pair<double, double>> dist_mass(n);
  std::vector<double> prefix(n + 1);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) dist_mass[y] = {s.distance(x, y), s.mass(y)};
    std::sort(dist_mass.begin(), dist_mass.end());
    prefix[0] = 0.0;
    for (std::size_t y = 0; y < n; ++y) prefix[y + 1] = prefix[y] + dist_mass[y].second;
    auto ball = [&](double r) {
      auto it = std::upper_bound(dist_mass.begin(), dist_mass.end(), r,
                                 [](double v, const std::pair<double, double>& e) { return v < e.first; });
      return prefix[static_cast<std::size_t>(it - dist_mass.begin())];
    };
    for (double r : radii) {
      const double inner = ball(r);
      if (!(inner > 0.0)) {
        rep.skipped.emplace_back(x, r);
        continue;
      }
      const double ratio = ball(2.0 * r) / inner;
      if (!any || ratio > rep.value) {
        rep.value = ratio;
        rep.argmax_point = x;
        rep.argmax_radius = r;
        any = true;
      }
    }
  }
  if (!any) rep.value = 1.0;
  return rep;
}

}  // namespace modlab
