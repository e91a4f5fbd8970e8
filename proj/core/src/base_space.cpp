#include "genus_tsp/base_space.hpp"

#include <algorithm>
#include <cmath>

namespace gts {

namespace {
constexpr double kMinRimSide = 1e-9;
constexpr double kTol = 1e-12;

bool rects_disjoint(const Rect& a, const Rect& b) {
  return a.x2() < b.x || b.x2() < a.x || a.y2() < b.y || b.y2() < a.y;
}
}  // namespace

void validate(const BaseSpace& bs) {
  if (bs.side <= 0.0) throw InvalidSpaceError("base square side must be positive");
  std::vector<Rect> all;
  for (size_t i = 0; i < bs.wormholes.size(); ++i) {
    const auto& wp = bs.wormholes[i];
    if (std::abs(wp.rim1.side - wp.rim2.side) > kTol)
      throw InvalidSpaceError("rim pair " + std::to_string(i) +
                              " has unequal side lengths");
    for (const Rect* r : {&wp.rim1, &wp.rim2}) {
      if (r->side < kMinRimSide)
        throw InvalidSpaceError("rim side below representable minimum 1e-9");
      if (r->x <= 0.0 || r->y <= 0.0 || r->x2() >= bs.side || r->y2() >= bs.side)
        throw InvalidSpaceError("rim square not strictly inside the base square");
      all.push_back(*r);
    }
  }
  for (size_t i = 0; i < all.size(); ++i)
    for (size_t j = i + 1; j < all.size(); ++j)
      if (!rects_disjoint(all[i], all[j]))
        throw InvalidSpaceError("rim squares overlap or touch");
}

Vec2 rim_arc_point(const Rect& r, double s) {
  double perim = 4.0 * r.side;
  s = std::fmod(s, perim);
  if (s < 0.0) s += perim;
  if (s < r.side) return {r.x + s, r.y};
  s -= r.side;
  if (s < r.side) return {r.x2(), r.y + s};
  s -= r.side;
  if (s < r.side) return {r.x2() - s, r.y2()};
  s -= r.side;
  return {r.x, r.y2() - s};
}

double rim_arc_param(const Rect& r, const Vec2& p) {
  // Distances to each side; project onto the closest one.
  double db = std::abs(p.y - r.y);
  double dr = std::abs(p.x - r.x2());
  double dt = std::abs(p.y - r.y2());
  double dl = std::abs(p.x - r.x);
  double m = std::min({db, dr, dt, dl});
  double s;
  if (m == db)
    s = std::clamp(p.x - r.x, 0.0, r.side);
  else if (m == dr)
    s = r.side + std::clamp(p.y - r.y, 0.0, r.side);
  else if (m == dt)
    s = 2.0 * r.side + std::clamp(r.x2() - p.x, 0.0, r.side);
  else
    s = 3.0 * r.side + std::clamp(r.y2() - p.y, 0.0, r.side);
  double perim = 4.0 * r.side;
  if (s >= perim) s -= perim;
  return s;
}

std::vector<Vec2> rim_corner_walk(const Rect& rect, double s0, double s1) {
  double period = 4.0 * rect.side;
  double fwd = std::fmod(s1 - s0 + period, period);
  std::vector<Vec2> out;
  if (fwd <= period - fwd) {
    double c = std::ceil(s0 / rect.side) * rect.side;
    for (; c < s0 + fwd - 1e-15; c += rect.side)
      if (c > s0 + 1e-15) out.push_back(rim_arc_point(rect, std::fmod(c, period)));
  } else {
    double back = period - fwd;
    double c = std::floor(s0 / rect.side) * rect.side;
    for (; c > s0 - back + 1e-15; c -= rect.side)
      if (c < s0 - 1e-15)
        out.push_back(rim_arc_point(rect, std::fmod(c + period, period)));
  }
  return out;
}

std::optional<RimTag> rim_tag_of(const BaseSpace& bs, const Vec2& p, double tol) {
  for (size_t i = 0; i < bs.wormholes.size(); ++i) {
    const auto& wp = bs.wormholes[i];
    if (wp.rim1.on_boundary(p, tol))
      return RimTag{static_cast<int>(i), 0, rim_arc_param(wp.rim1, p)};
    if (wp.rim2.on_boundary(p, tol))
      return RimTag{static_cast<int>(i), 1, rim_arc_param(wp.rim2, p)};
  }
  return std::nullopt;
}

BasePoint identify_rim_point(const BaseSpace& bs, const BasePoint& bp) {
  if (!bp.tag) throw InvalidSpaceError("identify_rim_point: point has no rim tag");
  const auto& wp = bs.wormholes.at(static_cast<size_t>(bp.tag->pair));
  const Rect& other = bp.tag->rim == 0 ? wp.rim2 : wp.rim1;
  BasePoint out(rim_arc_point(other, bp.tag->arc));
  out.tag = RimTag{bp.tag->pair, 1 - bp.tag->rim, bp.tag->arc};
  return out;
}

bool point_valid(const BaseSpace& bs, const Vec2& p) {
  if (p.x < -kTol || p.x > bs.side + kTol || p.y < -kTol || p.y > bs.side + kTol)
    return false;
  for (const auto& wp : bs.wormholes)
    if (wp.rim1.contains_strict(p) || wp.rim2.contains_strict(p)) return false;
  return true;
}

bool segment_exists(const BaseSpace& bs, const Vec2& a, const Vec2& b) {
  if (!point_valid(bs, a) || !point_valid(bs, b)) return false;
  for (const auto& wp : bs.wormholes) {
    if (segment_hits_rect_interior(a, b, wp.rim1)) return false;
    if (segment_hits_rect_interior(a, b, wp.rim2)) return false;
  }
  return true;
}

std::vector<BasePoint> grid_points(const BaseSpace& bs, const GridSpec& grid) {
  const int t = grid.t;
  const double h = 1.0 / t;
  std::vector<BasePoint> out;
  const long kmax = static_cast<long>(std::floor(bs.side * t + kTol));
  for (long k = 0; k <= kmax; ++k) {
    for (long l = 0; l <= kmax; ++l) {
      Vec2 p{k * h, l * h};
      if (!point_valid(bs, p)) continue;
      BasePoint bp(p);
      bp.tag = rim_tag_of(bs, p);
      out.push_back(bp);
    }
  }
  // Grid-line crossings of each rim boundary.
  auto add_rim_crossings = [&](const Rect& r, int pair, int which) {
    auto add = [&](Vec2 p) {
      BasePoint bp(p);
      bp.tag = RimTag{pair, which, rim_arc_param(r, p)};
      out.push_back(bp);
    };
    for (long k = static_cast<long>(std::ceil(r.x / h - kTol));
         k * h <= r.x2() + kTol; ++k) {
      double x = k * h;
      if (x < r.x - kTol) continue;
      add({x, r.y});
      add({x, r.y2()});
    }
    for (long l = static_cast<long>(std::ceil(r.y / h - kTol));
         l * h <= r.y2() + kTol; ++l) {
      double y = l * h;
      if (y < r.y - kTol) continue;
      add({r.x, y});
      add({r.x2(), y});
    }
  };
  for (size_t i = 0; i < bs.wormholes.size(); ++i) {
    add_rim_crossings(bs.wormholes[i].rim1, static_cast<int>(i), 0);
    add_rim_crossings(bs.wormholes[i].rim2, static_cast<int>(i), 1);
  }
  std::sort(out.begin(), out.end(), [](const BasePoint& a, const BasePoint& b) {
    if (a.p.x != b.p.x) return a.p.x < b.p.x;
    return a.p.y < b.p.y;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const BasePoint& a, const BasePoint& b) {
                          return std::abs(a.p.x - b.p.x) <= kTol &&
                                 std::abs(a.p.y - b.p.y) <= kTol;
                        }),
            out.end());
  return out;
}

namespace {
bool is_rim_hop(const BasePoint& a, const BasePoint& b) {
  return a.tag && b.tag && a.tag->pair == b.tag->pair &&
         a.tag->rim != b.tag->rim && std::abs(a.tag->arc - b.tag->arc) <= 1e-9;
}
}  // namespace

double len_base(const BaseSpace& bs, const PolygonalPath& path) {
  double total = 0.0;
  for (size_t i = 0; i + 1 < path.pts.size(); ++i) {
    const BasePoint& a = path.pts[i];
    const BasePoint& b = path.pts[i + 1];
    if (is_rim_hop(a, b)) continue;
    if (!segment_exists(bs, a.p, b.p))
      throw InvalidSpaceError("len_base: segment leaves the space");
    total += dist(a.p, b.p);
  }
  return total;
}

BasePoint snap_to_grid(const BaseSpace& bs, const GridSpec& grid, const Vec2& p) {
  const double h = 1.0 / grid.t;
  const long kmax = static_cast<long>(std::floor(bs.side * grid.t + kTol));
  auto clampk = [&](long k) { return std::clamp(k, 0L, kmax); };
  long kx0 = clampk(static_cast<long>(std::floor(p.x / h)));
  long ky0 = clampk(static_cast<long>(std::floor(p.y / h)));
  long kx1 = clampk(kx0 + 1), ky1 = clampk(ky0 + 1);
  const BasePoint* best = nullptr;
  std::vector<BasePoint> cands;
  for (long kx : {kx0, kx1})
    for (long ky : {ky0, ky1}) cands.emplace_back(kx * h, ky * h);
  double bd = 0.0;
  for (auto& c : cands) {
    if (!point_valid(bs, c.p)) continue;
    double d = dist(c.p, p);
    if (!best || d < bd - kTol ||
        (d < bd + kTol && (c.p.x < best->p.x ||
                           (c.p.x == best->p.x && c.p.y < best->p.y)))) {
      best = &c;
      bd = d;
    }
  }
  if (!best)
    throw NoValidNeighborError("snap_to_grid: all four cell corners invalid");
  BasePoint out = *best;
  out.tag = rim_tag_of(bs, out.p);
  return out;
}

long crossings_count(const PolygonalPath& path, int t) {
  const double tol = 1e-12;
  long total = 0;
  // Split at rim hops: a hop is identification, not travel.
  size_t start = 0;
  std::vector<std::pair<size_t, size_t>> runs;
  for (size_t i = 0; i + 1 < path.pts.size(); ++i) {
    if (is_rim_hop(path.pts[i], path.pts[i + 1])) {
      runs.emplace_back(start, i);
      start = i + 1;
    }
  }
  runs.emplace_back(start, path.pts.size() - 1);

  auto count_axis = [&](size_t lo, size_t hi, bool vertical) {
    if (hi <= lo) return;
    double mn = 1e300, mx = -1e300;
    for (size_t i = lo; i <= hi; ++i) {
      double c = vertical ? path.pts[i].p.x : path.pts[i].p.y;
      mn = std::min(mn, c);
      mx = std::max(mx, c);
    }
    long jlo = static_cast<long>(std::floor(mn * t - tol));
    long jhi = static_cast<long>(std::ceil(mx * t + tol));
    for (long j = jlo; j <= jhi; ++j) {
      double v = static_cast<double>(j) / t;
      int last = 0;
      for (size_t i = lo; i <= hi; ++i) {
        double c = vertical ? path.pts[i].p.x : path.pts[i].p.y;
        int s = std::abs(c - v) <= tol ? 0 : (c > v ? 1 : -1);
        if (s == 0) continue;
        if (last != 0 && s != last) ++total;
        last = s;
      }
    }
  };
  for (auto [lo, hi] : runs) {
    count_axis(lo, hi, true);
    count_axis(lo, hi, false);
  }
  return total;
}

}  // namespace gts
