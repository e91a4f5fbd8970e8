#include "genus_tsp/geometry.hpp"

#include <algorithm>
#include <limits>

namespace gts {

bool Rect::on_boundary(const Vec2& p, double tol) const {
  if (p.x < x - tol || p.x > x2() + tol || p.y < y - tol || p.y > y2() + tol)
    return false;
  return std::abs(p.x - x) <= tol || std::abs(p.x - x2()) <= tol ||
         std::abs(p.y - y) <= tol || std::abs(p.y - y2()) <= tol;
}

Vec2 Rect::corner(int k) const {
  switch (k & 3) {
    case 0: return {x, y};
    case 1: return {x2(), y};
    case 2: return {x2(), y2()};
    default: return {x, y2()};
  }
}

bool segment_hits_rect_interior(const Vec2& a, const Vec2& b, const Rect& r) {
  // Liang-Barsky clip of segment a + t(b-a), t in [0,1], against the closed
  // rectangle; the segment meets the open interior iff the clipped interval
  // is nondegenerate and its midpoint is strictly inside (rules out pure
  // boundary grazing).
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  auto clip = [&](double p, double q) {
    // p*t <= q
    if (p == 0.0) return q >= 0.0;
    double t = q / p;
    if (p < 0.0) {
      if (t > t1) return false;
      if (t > t0) t0 = t;
    } else {
      if (t < t0) return false;
      if (t < t1) t1 = t;
    }
    return true;
  };
  if (!clip(-dx, a.x - r.x)) return false;
  if (!clip(dx, r.x2() - a.x)) return false;
  if (!clip(-dy, a.y - r.y)) return false;
  if (!clip(dy, r.y2() - a.y)) return false;
  if (t1 - t0 <= 0.0) return false;
  double tm = 0.5 * (t0 + t1);
  Vec2 m{a.x + tm * dx, a.y + tm * dy};
  return r.contains_strict(m);
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 d = b - a;
  double len2 = d.norm2();
  if (len2 == 0.0) return dist(p, a);
  double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return dist(p, a + d * t);
}

std::optional<Vec2> segment_intersection(const Vec2& a0, const Vec2& a1,
                                         const Vec2& b0, const Vec2& b1) {
  Vec2 r = a1 - a0, s = b1 - b0;
  double denom = r.x * s.y - r.y * s.x;
  if (denom == 0.0) return std::nullopt;  // parallel or collinear
  Vec2 qp = b0 - a0;
  double t = (qp.x * s.y - qp.y * s.x) / denom;
  double u = (qp.x * r.y - qp.y * r.x) / denom;
  if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return a0 + r * t;
}

double segment_segment_distance(const Vec2& a0, const Vec2& a1,
                                const Vec2& b0, const Vec2& b1) {
  if (segment_intersection(a0, a1, b0, b1)) return 0.0;
  double d = point_segment_distance(a0, b0, b1);
  d = std::min(d, point_segment_distance(a1, b0, b1));
  d = std::min(d, point_segment_distance(b0, a0, a1));
  d = std::min(d, point_segment_distance(b1, a0, a1));
  return d;
}

double mst_length(const std::vector<Vec2>& pts) {
  size_t n = pts.size();
  if (n < 2) return 0.0;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<char> used(n, 0);
  best[0] = 0.0;
  double total = 0.0;
  for (size_t it = 0; it < n; ++it) {
    size_t u = n;
    double bu = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i)
      if (!used[i] && best[i] < bu) { bu = best[i]; u = i; }
    used[u] = 1;
    total += bu;
    for (size_t v = 0; v < n; ++v)
      if (!used[v]) best[v] = std::min(best[v], dist(pts[u], pts[v]));
  }
  return total;
}

}  // namespace gts
