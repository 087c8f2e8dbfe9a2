#pragma once

#include <cmath>
#include <vector>

namespace ivg {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

using PointSet = std::vector<Point2>;

inline Point2 centroid(const PointSet& pts) {
  Point2 c;
  if (pts.empty()) return c;
  for (const auto& p : pts) c = c + p;
  return c * (1.0 / static_cast<double>(pts.size()));
}

struct Rect {
  double x = 0.0;  // left
  double y = 0.0;  // top
  double width = 0.0;
  double height = 0.0;

  // Strict overlap: rectangles that only touch do not intersect.
  bool intersects(const Rect& o) const {
    return x < o.x + o.width && o.x < x + width && y < o.y + o.height && o.y < y + height;
  }
};

}  // namespace ivg
