#pragma once

// Planar convex hulls for brute-force Minkowski-sum membership. Test-only.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace reach::testing {

using Point2 = Eigen::Vector2d;

inline double cross2(const Point2& o, const Point2& a, const Point2& b) {
  return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 1e-15) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 1e-15) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// Every subset sum of the scaled generators: the vertices of the zonotope are among these.
inline std::vector<Point2> subset_sums(const std::vector<Point2>& gens) {
  std::vector<Point2> sums{Point2::Zero()};
  for (const Point2& g : gens) {
    const std::size_t count = sums.size();
    for (std::size_t i = 0; i < count; ++i) sums.push_back(sums[i] + g);
  }
  return sums;
}

inline double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

struct HullQuery {
  bool inside = false;
  double boundary_distance = std::numeric_limits<double>::infinity();
};

inline HullQuery query_hull(const std::vector<Point2>& hull, const Point2& p) {
  HullQuery q;
  const std::size_t n = hull.size();
  if (n == 1) {
    q.boundary_distance = (p - hull[0]).norm();
    return q;
  }
  for (std::size_t i = 0; i < n; ++i) {
    q.boundary_distance = std::min(q.boundary_distance, segment_distance(p, hull[i], hull[(i + 1) % n]));
  }
  if (n < 3) return q;
  q.inside = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (cross2(hull[i], hull[(i + 1) % n], p) < 0.0) q.inside = false;
  }
  return q;
}

}  // namespace reach::testing
