#include "genus_tsp/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace gts {

double segment_surface_length(const Surface& s, const Vec2& a, const Vec2& b,
                              const QuadratureSpec& quad) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double flat2 = dx * dx + dy * dy;
  if (flat2 == 0.0) return 0.0;
  double sum = 0.0;
  const double inv = 1.0 / static_cast<double>(quad.t_q);
  for (long n = 0; n < quad.t_q; ++n) {
    double u = n * inv;
    auto e = s.field->eval(a.x + dx * u, a.y + dy * u);
    double slope = e.fx * dx + e.fy * dy;
    sum += std::sqrt(flat2 + slope * slope);
  }
  return sum * inv;
}

double quad_error_bound(const QuadratureSpec& quad, double m2) {
  return std::pow(10.0, -quad.k_digits) * static_cast<double>(quad.t_q) +
         3.0 * m2 / static_cast<double>(quad.t_q) + 1e-9;
}

namespace {
bool is_hop(const BasePoint& a, const BasePoint& b) {
  return a.tag && b.tag && a.tag->pair == b.tag->pair &&
         a.tag->rim != b.tag->rim && std::abs(a.tag->arc - b.tag->arc) <= 1e-9;
}
}  // namespace

double path_surface_length(const Surface& s, const PolygonalPath& path,
                           const QuadratureSpec& quad) {
  double total = 0.0;
  for (size_t i = 0; i + 1 < path.pts.size(); ++i) {
    if (is_hop(path.pts[i], path.pts[i + 1])) continue;
    total += segment_surface_length(s, path.pts[i].p, path.pts[i + 1].p, quad);
  }
  return total;
}

double snap_error_bound(double m1, double m2, int s) {
  double c = m1 + m2;
  return std::sqrt(16.0 + 8.0 * c * c) / static_cast<double>(s);
}

PolygonalPath route_around(const BaseSpace& bs, const Vec2& a, const Vec2& b) {
  std::vector<Vec2> nodes{a, b};
  for (const auto& wp : bs.wormholes)
    for (const Rect* r : {&wp.rim1, &wp.rim2})
      for (int k = 0; k < 4; ++k) nodes.push_back(r->corner(k));
  const size_t n = nodes.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(n, inf);
  std::vector<int> prev(n, -1);
  std::vector<char> done(n, 0);
  d[0] = 0.0;
  for (size_t it = 0; it < n; ++it) {
    size_t u = n;
    double du = inf;
    for (size_t i = 0; i < n; ++i)
      if (!done[i] && d[i] < du) { du = d[i]; u = i; }
    if (u == n) break;
    done[u] = 1;
    if (u == 1) break;
    for (size_t v = 0; v < n; ++v) {
      if (done[v]) continue;
      if (!segment_exists(bs, nodes[u], nodes[v])) continue;
      double nd = du + dist(nodes[u], nodes[v]);
      if (nd < d[v]) { d[v] = nd; prev[v] = static_cast<int>(u); }
    }
  }
  if (d[1] == inf)
    throw InvalidSpaceError("route_around: endpoints are disconnected");
  std::vector<Vec2> rev;
  for (int v = 1; v != -1; v = prev[static_cast<size_t>(v)])
    rev.push_back(nodes[static_cast<size_t>(v)]);
  PolygonalPath out;
  for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
    BasePoint bp(*it);
    bp.tag = rim_tag_of(bs, *it);
    out.pts.push_back(bp);
  }
  return out;
}

PolygonalPath snap_path(const BaseSpace& bs, const GridSpec& grid,
                        const PolygonalPath& path) {
  std::vector<BasePoint> snapped;
  snapped.reserve(path.pts.size());
  for (const auto& bp : path.pts) {
    if (bp.tag) {
      snapped.push_back(bp);
    } else {
      snapped.push_back(snap_to_grid(bs, grid, bp.p));
    }
  }
  PolygonalPath out;
  for (size_t i = 0; i < snapped.size(); ++i) {
    if (i == 0) {
      out.pts.push_back(snapped[i]);
      continue;
    }
    const BasePoint& prev = out.pts.back();
    const BasePoint& cur = snapped[i];
    if (is_hop(path.pts[i - 1], path.pts[i]) ||
        segment_exists(bs, prev.p, cur.p)) {
      out.pts.push_back(cur);
      continue;
    }
    PolygonalPath detour = route_around(bs, prev.p, cur.p);
    for (size_t k = 1; k < detour.pts.size(); ++k)
      out.pts.push_back(detour.pts[k]);
  }
  return out;
}

}  // namespace gts
