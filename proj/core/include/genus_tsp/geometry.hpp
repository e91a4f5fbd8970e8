#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace gts {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }
};

inline double dist(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

// Axis-aligned square, identified by its lower-left corner and side.
struct Rect {
  double x = 0.0;  // lower-left corner
  double y = 0.0;
  double side = 0.0;

  double x2() const { return x + side; }
  double y2() const { return y + side; }
  bool contains_strict(const Vec2& p) const {
    return p.x > x && p.x < x2() && p.y > y && p.y < y2();
  }
  bool contains_closed(const Vec2& p) const {
    return p.x >= x && p.x <= x2() && p.y >= y && p.y <= y2();
  }
  bool on_boundary(const Vec2& p, double tol = 1e-12) const;
  Vec2 center() const { return {x + side / 2, y + side / 2}; }
  Vec2 corner(int k) const;  // k=0 lower-left, counterclockwise
};

// True iff the open segment (a,b) meets the open interior of r.
// Touching the boundary (including sliding along an edge) does not count.
bool segment_hits_rect_interior(const Vec2& a, const Vec2& b, const Rect& r);

// Closest distance between two closed segments.
double segment_segment_distance(const Vec2& a0, const Vec2& a1,
                                const Vec2& b0, const Vec2& b1);

// Proper or touching intersection point of two segments, if unique.
std::optional<Vec2> segment_intersection(const Vec2& a0, const Vec2& a1,
                                         const Vec2& b0, const Vec2& b1);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

// Length of an Euclidean minimum spanning tree over pts (O(n^2) Prim).
double mst_length(const std::vector<Vec2>& pts);

}  // namespace gts
