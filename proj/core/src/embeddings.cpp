#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>

#include "genus_tsp/embeddings.hpp"
#include "genus_tsp/geodesic.hpp"

namespace gts {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_hop(const BasePoint& a, const BasePoint& b) {
  return a.tag && b.tag && a.tag->pair == b.tag->pair &&
         a.tag->rim != b.tag->rim && std::abs(a.tag->arc - b.tag->arc) <= 1e-9;
}

}  // namespace

double Sleeve::spine_distance(const Vec2& p) const {
  const auto& pts = spine.pts;
  if (pts.empty()) return kInf;
  if (pts.size() == 1) return dist(p, pts[0].p);
  double best = kInf;
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    if (is_hop(pts[k], pts[k + 1])) continue;
    best = std::min(best, point_segment_distance(p, pts[k].p, pts[k + 1].p));
  }
  return best;
}

// ---------------------------------------------------------------- SleeveField

SleeveField::SleeveField(std::vector<Sleeve> sleeves, double kernel_radius,
                         double max_value, std::vector<PlateauBump> bumps,
                         double outer_radius)
    : sleeves_(std::move(sleeves)),
      kernel_(kernel_radius),
      quad_(kernel_, 16, 24),
      max_value_(max_value),
      outer_radius_(outer_radius),
      bumps_(std::move(bumps)) {
  refresh_bounds();
}

void SleeveField::refresh_bounds() {
  m1_ = max_value_ * kernel_.abs_grad_integral();
  m2_ = max_value_ * kernel_.abs_hess_integral();
  for (const auto& b : bumps_) {
    m1_ += b.grad_bound();
    m2_ += b.hess_bound();
  }
}

double SleeveField::complex_distance(const Vec2& p) const {
  double best = kInf;
  for (const auto& s : sleeves_) best = std::min(best, s.spine_distance(p));
  return best;
}

double SleeveField::wall_value(double x, double y) const {
  Vec2 p{x, y};
  double dmin = kInf;
  for (const auto& s : sleeves_) {
    double d = s.spine_distance(p);
    if (d <= s.width) return 0.0;
    dmin = std::min(dmin, d);
  }
  if (outer_radius_ > 0.0 && dmin > outer_radius_) return 0.0;
  return max_value_;
}

FieldEval SleeveField::eval(double x, double y) const {
  Vec2 p{x, y};
  double R = kernel_.radius();
  double din = kInf;    // min over sleeves of (spine distance - width)
  double dspine = kInf; // min spine distance
  for (const auto& s : sleeves_) {
    double d = s.spine_distance(p);
    din = std::min(din, d - s.width);
    dspine = std::min(dspine, d);
  }
  FieldEval out;
  if (din <= -R || (outer_radius_ > 0.0 && dspine >= outer_radius_ + R)) {
    // kernel support entirely inside a zero region
  } else if (din >= R &&
             (outer_radius_ <= 0.0 || dspine <= outer_radius_ - R)) {
    out.f = max_value_;
  } else {
    out = quad_.convolve(
        p, [this](double qx, double qy) { return wall_value(qx, qy); });
  }
  for (const auto& b : bumps_) {
    if (dist(p, b.center) >= b.r) continue;
    FieldEval be = b.eval(x, y);
    out.f += be.f;
    out.fx += be.fx;
    out.fy += be.fy;
    out.fxx += be.fxx;
    out.fxy += be.fxy;
    out.fyy += be.fyy;
  }
  return out;
}

nlohmann::json SleeveField::to_json() const {
  nlohmann::json sleeves = nlohmann::json::array();
  for (const auto& s : sleeves_) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& bp : s.spine.pts) {
      nlohmann::json p{{"x", bp.p.x}, {"y", bp.p.y}};
      if (bp.tag)
        p["tag"] = {{"pair", bp.tag->pair},
                    {"rim", bp.tag->rim},
                    {"arc", bp.tag->arc}};
      else
        p["tag"] = nullptr;
      pts.push_back(p);
    }
    sleeves.push_back({{"spine", pts}, {"width", s.width}});
  }
  nlohmann::json bumps = nlohmann::json::array();
  for (const auto& b : bumps_)
    bumps.push_back({{"cx", b.center.x},
                     {"cy", b.center.y},
                     {"a", b.a},
                     {"r", b.r},
                     {"height", b.height}});
  return {{"type", "sleeve_convolution"},
          {"params",
           {{"sleeves", sleeves},
            {"kernel_radius", kernel_.radius()},
            {"max_value", max_value_},
            {"outer_radius", outer_radius_},
            {"plateau_bumps", bumps}}}};
}

std::shared_ptr<SleeveField> SleeveField::from_json(const nlohmann::json& j) {
  const auto& p = j.at("params");
  std::vector<Sleeve> sleeves;
  for (const auto& sj : p.at("sleeves")) {
    Sleeve s;
    s.width = sj.at("width").get<double>();
    for (const auto& pj : sj.at("spine")) {
      BasePoint bp(pj.at("x").get<double>(), pj.at("y").get<double>());
      if (!pj.at("tag").is_null()) {
        RimTag tag;
        tag.pair = pj["tag"].at("pair").get<int>();
        tag.rim = pj["tag"].at("rim").get<int>();
        tag.arc = pj["tag"].at("arc").get<double>();
        bp.tag = tag;
      }
      s.spine.pts.push_back(bp);
    }
    sleeves.push_back(std::move(s));
  }
  std::vector<PlateauBump> bumps;
  for (const auto& bj : p.at("plateau_bumps")) {
    PlateauBump b;
    b.center = {bj.at("cx").get<double>(), bj.at("cy").get<double>()};
    b.a = bj.at("a").get<double>();
    b.r = bj.at("r").get<double>();
    b.height = bj.at("height").get<double>();
    bumps.push_back(b);
  }
  return std::make_shared<SleeveField>(
      std::move(sleeves), p.at("kernel_radius").get<double>(),
      p.at("max_value").get<double>(), std::move(bumps),
      p.at("outer_radius").get<double>());
}

// ------------------------------------------------------------- CompositeField

CompositeField::CompositeField(std::vector<Cell> cells)
    : cells_(std::move(cells)) {
  for (const auto& c : cells_) {
    m1_ += c.field->m1();
    m2_ += c.field->m2() / c.scale;
  }
}

FieldEval CompositeField::eval(double x, double y) const {
  FieldEval out;
  for (const auto& c : cells_) {
    double lx = (x - c.offset.x) / c.scale;
    double ly = (y - c.offset.y) / c.scale;
    if (lx < -1.0 || lx > 2.0 || ly < -1.0 || ly > 2.0) continue;
    FieldEval e = c.field->eval(lx, ly);
    out.f += c.scale * e.f;
    out.fx += e.fx;
    out.fy += e.fy;
    out.fxx += e.fxx / c.scale;
    out.fxy += e.fxy / c.scale;
    out.fyy += e.fyy / c.scale;
  }
  return out;
}

nlohmann::json CompositeField::to_json() const {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : cells_)
    cells.push_back({{"ox", c.offset.x},
                     {"oy", c.offset.y},
                     {"scale", c.scale},
                     {"field", c.field->to_json()}});
  return {{"type", "composite"}, {"params", {{"cells", cells}}}};
}

std::shared_ptr<CompositeField> CompositeField::from_json(
    const nlohmann::json& j) {
  std::vector<Cell> cells;
  for (const auto& cj : j.at("params").at("cells")) {
    Cell c;
    c.offset = {cj.at("ox").get<double>(), cj.at("oy").get<double>()};
    c.scale = cj.at("scale").get<double>();
    c.field = field_from_json(cj.at("field"));
    cells.push_back(std::move(c));
  }
  return std::make_shared<CompositeField>(std::move(cells));
}

std::shared_ptr<const HeightField> field_from_json(const nlohmann::json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "sleeve_convolution") return SleeveField::from_json(j);
  if (type == "composite") return CompositeField::from_json(j);
  auto basic = basic_field_from_json(j);
  if (basic) return basic;
  throw std::runtime_error("unknown height field type: " + type);
}

// --------------------------------------------------- sleeve geodesic graphs

namespace {

struct CalEdge {
  int a, b;
  double w = 0.0;
  bool hop = false;
  bool near_bump = false;
};

struct CalGraph {
  std::vector<BasePoint> nodes;
  std::vector<CalEdge> edges;
  int src = -1, dst = -1;
};

// Graph confined to one route's sleeve: spine samples everywhere, plus side
// rows inside the refinement disk (where the bump calibration needs lateral
// freedom). Hop edges have weight 0.
CalGraph build_cal_graph(const BaseSpace& base, const RouteSpine& rs) {
  CalGraph g;
  const auto& pts = rs.spine.pts;
  double beta = rs.width > 0.0 ? rs.width : 0.01;
  double coarse = 4.0 * beta;
  double fine = beta;
  auto in_refine = [&](const Vec2& p) {
    return rs.refine_radius > 0.0 &&
           dist(p, rs.refine_center) <= rs.refine_radius;
  };
  auto push = [&](const BasePoint& bp) {
    g.nodes.push_back(bp);
    return static_cast<int>(g.nodes.size()) - 1;
  };
  g.src = push(pts.front());
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    const BasePoint& a = pts[k];
    const BasePoint& b = pts[k + 1];
    if (is_hop(a, b)) {
      push(b);
      continue;
    }
    double len = dist(a.p, b.p);
    // subdivide; step depends on whether the sample is in the refine disk
    double pos = 0.0;
    while (pos < len - 1e-12) {
      Vec2 here = a.p + (b.p - a.p) * (pos / len);
      double step = in_refine(here) ? fine : coarse;
      pos = std::min(len, pos + step);
      Vec2 q = a.p + (b.p - a.p) * (pos / len);
      if (pos >= len - 1e-12) {
        push(b);
      } else {
        push(BasePoint(q));
        if (in_refine(q)) {
          Vec2 d = b.p - a.p;
          Vec2 nrm{-d.y / len, d.x / len};
          for (double off : {-beta / 2.0, beta / 2.0}) {
            Vec2 side = q + nrm * off;
            if (point_valid(base, side)) push(BasePoint(side));
          }
        }
      }
    }
  }
  g.dst = static_cast<int>(g.nodes.size()) - 1;
  // edges: geometric neighbors plus rim hops
  double prune = 2.6 * coarse;
  for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
    for (int j = i + 1; j < static_cast<int>(g.nodes.size()); ++j) {
      const BasePoint& a = g.nodes[i];
      const BasePoint& b = g.nodes[j];
      if (is_hop(a, b) || is_hop(b, a)) {
        g.edges.push_back({i, j, 0.0, true, false});
        continue;
      }
      if (std::abs(a.p.x - b.p.x) > prune || std::abs(a.p.y - b.p.y) > prune)
        continue;
      double len = dist(a.p, b.p);
      if (len <= 1e-15) continue;
      if (!segment_exists(base, a.p, b.p)) continue;
      bool nb = rs.refine_radius > 0.0 &&
                (in_refine(a.p) || in_refine(b.p));
      g.edges.push_back({i, j, 0.0, false, nb});
    }
  }
  return g;
}

void weigh_edges(CalGraph& g, const Surface& surf, const QuadratureSpec& quad,
                 bool only_near_bump) {
  for (auto& e : g.edges) {
    if (e.hop) continue;
    if (only_near_bump && !e.near_bump) continue;
    e.w = segment_surface_length(surf, g.nodes[e.a].p, g.nodes[e.b].p, quad);
  }
}

double cal_dijkstra(const CalGraph& g) {
  size_t n = g.nodes.size();
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const auto& e : g.edges) {
    adj[e.a].push_back({e.b, e.w});
    adj[e.b].push_back({e.a, e.w});
  }
  std::vector<double> dst(n, kInf);
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
  dst[g.src] = 0.0;
  pq.push({0.0, g.src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dst[u] + 1e-18) continue;
    if (u == g.dst) break;
    for (auto [v, w] : adj[u]) {
      double nd = d + w;
      if (nd < dst[v] - 1e-18) {
        dst[v] = nd;
        pq.push({nd, v});
      }
    }
  }
  return dst[g.dst];
}

const RouteSpine* find_route(const EmbeddingResult& res, int i, int j) {
  for (const auto& r : res.routes)
    if ((r.i == i && r.j == j) || (r.i == j && r.j == i)) return &r;
  return nullptr;
}

}  // namespace

double measure_surface_distance(const EmbeddingResult& res, int i, int j) {
  if (i == j) return 0.0;
  const RouteSpine* rs = find_route(res, i, j);
  if (!rs) throw std::runtime_error("no route spine for requested pair");
  CalGraph g = build_cal_graph(res.surface.base, *rs);
  QuadratureSpec quad;
  quad.t_q = 32;
  weigh_edges(g, res.surface, quad, false);
  return cal_dijkstra(g);
}

// -------------------------------------------------------------- embed_general

namespace {

struct Crossing {
  Vec2 x;
  int hop_route;   // route index that jumps through the wormhole
  int pass_route;  // route index passing straight through
};

struct Layout {
  std::vector<Vec2> cities;
  std::vector<std::pair<int, int>> route_ends;
  std::vector<Crossing> crossings;
  double msep = 0.0;  // min separation among cities and crossings
};

std::optional<Layout> try_layout(const FiniteMetric& metric, std::mt19937& rng) {
  int n = metric.n;
  Layout L;
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double two_pi = 2.0 * std::acos(-1.0);
  for (int i = 0; i < n; ++i) {
    double ang = two_pi * i / n + U(rng) * two_pi / (4.0 * n);
    L.cities.push_back(
        {0.5 + 0.45 * std::cos(ang), 0.5 + 0.45 * std::sin(ang)});
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) L.route_ends.push_back({i, j});

  auto route_seg = [&](int r) {
    return std::pair<Vec2, Vec2>{L.cities[L.route_ends[r].first],
                                 L.cities[L.route_ends[r].second]};
  };
  int nr = static_cast<int>(L.route_ends.size());
  for (int r = 0; r < nr; ++r) {
    for (int s = r + 1; s < nr; ++s) {
      auto [i, j] = L.route_ends[r];
      auto [k, l] = L.route_ends[s];
      if (i == k || i == l || j == k || j == l) continue;
      auto [a, b] = route_seg(r);
      auto [c, d] = route_seg(s);
      auto hit = segment_intersection(a, b, c, d);
      if (!hit) continue;
      // crossing angle margin
      Vec2 u = b - a, v = d - c;
      double cr = std::abs(u.x * v.y - u.y * v.x) / (u.norm() * v.norm());
      if (cr < 0.2) return std::nullopt;
      L.crossings.push_back({*hit, r, s});
    }
  }
  // separation among special points
  std::vector<Vec2> specials = L.cities;
  for (const auto& c : L.crossings) specials.push_back(c.x);
  L.msep = kInf;
  for (size_t a = 0; a < specials.size(); ++a)
    for (size_t b = a + 1; b < specials.size(); ++b)
      L.msep = std::min(L.msep, dist(specials[a], specials[b]));
  if (L.msep < 0.03) return std::nullopt;
  // non-incident city/route clearance
  for (int r = 0; r < nr; ++r) {
    auto [a, b] = route_seg(r);
    for (int i = 0; i < n; ++i) {
      if (i == L.route_ends[r].first || i == L.route_ends[r].second) continue;
      if (point_segment_distance(L.cities[i], a, b) < 0.02)
        return std::nullopt;
    }
  }
  return L;
}

// Clearance: min distance between spine segments of different routes, with
// segments near a shared city trimmed away.
double spine_clearance(const std::vector<RouteSpine>& routes,
                       const std::vector<Vec2>& cities, double trim) {
  double a = kInf;
  int dbg_r = -1, dbg_s = -1, dbg_k = -1, dbg_l = -1;
  for (size_t r = 0; r < routes.size(); ++r) {
    for (size_t s = r + 1; s < routes.size(); ++s) {
      int shared = -1;
      for (int c : {routes[r].i, routes[r].j})
        if (c == routes[s].i || c == routes[s].j) shared = c;
      const auto& pr = routes[r].spine.pts;
      const auto& ps = routes[s].spine.pts;
      for (size_t k = 0; k + 1 < pr.size(); ++k) {
        if (is_hop(pr[k], pr[k + 1])) continue;
        for (size_t l = 0; l + 1 < ps.size(); ++l) {
          if (is_hop(ps[l], ps[l + 1])) continue;
          if (shared >= 0) {
            // sample-based distance excluding the shared-city ball
            const Vec2 cc = cities[shared];
            for (int q = 0; q <= 32; ++q) {
              Vec2 p = pr[k].p + (pr[k + 1].p - pr[k].p) * (q / 32.0);
              if (dist(p, cc) < trim) continue;
              double d = point_segment_distance(p, ps[l].p, ps[l + 1].p);
              if (dist(p, cc) + d < trim) continue;
              if (std::max(d, 1e-12) < a) {
                a = std::max(d, 1e-12);
                dbg_r = r; dbg_s = s; dbg_k = k; dbg_l = l;
              }
            }
          } else {
            double d = segment_segment_distance(pr[k].p, pr[k + 1].p,
                                                ps[l].p, ps[l + 1].p);
            if (d < a) {
              a = d;
              dbg_r = r; dbg_s = s; dbg_k = k; dbg_l = l;
            }
          }
        }
      }
    }
  }
  if (std::getenv("GTS_EMB_DEBUG") && dbg_r >= 0) {
    const auto& pa = routes[dbg_r].spine.pts;
    const auto& pb = routes[dbg_s].spine.pts;
    std::fprintf(stderr,
                 "clearance %.3e routes (%d,%d)x(%d,%d) seg %d (%.4f,%.4f)-"
                 "(%.4f,%.4f) seg %d (%.4f,%.4f)-(%.4f,%.4f)\n",
                 a, routes[dbg_r].i, routes[dbg_r].j, routes[dbg_s].i,
                 routes[dbg_s].j, dbg_k, pa[dbg_k].p.x, pa[dbg_k].p.y,
                 pa[dbg_k + 1].p.x, pa[dbg_k + 1].p.y, dbg_l, pb[dbg_l].p.x,
                 pb[dbg_l].p.y, pb[dbg_l + 1].p.x, pb[dbg_l + 1].p.y);
  }
  return a;
}

}  // namespace

namespace detail {

EmbeddingResult embed_general_impl(const FiniteMetric& metric, unsigned seed,
                                   double outer_radius) {
  validate(metric);
  int n = metric.n;
  EmbeddingResult res;
  if (n == 1) {
    res.cities = {{0.5, 0.5}};
    return res;
  }
  double alpha = metric.min_distance() / std::sqrt(2.0);
  res.alpha = alpha;
  res.tau = 1e-3;

  std::string last_error = "layout failed";
  for (int attempt = 0; attempt < 50; ++attempt) {
    std::mt19937 rng(seed * 1000u + static_cast<unsigned>(attempt));
    auto lay = try_layout(metric, rng);
    if (!lay) continue;
    try {
      Layout& L = *lay;
      double delta = std::min(0.02, L.msep / 6.0);
      const double w = 1e-6;  // wormhole square side at route crossings

      // wormholes and modified spines
      BaseSpace base;
      std::vector<RouteSpine> routes(L.route_ends.size());
      // crossings per route, ordered along the route
      for (size_t r = 0; r < L.route_ends.size(); ++r) {
        routes[r].i = L.route_ends[r].first;
        routes[r].j = L.route_ends[r].second;
      }
      std::vector<std::vector<std::pair<double, int>>> hops_on(
          L.route_ends.size());
      std::vector<std::pair<Rect, Rect>> cross_holes;
      for (const auto& cr : L.crossings) {
        Vec2 a = L.cities[L.route_ends[cr.hop_route].first];
        Vec2 b = L.cities[L.route_ends[cr.hop_route].second];
        Vec2 u = (b - a) * (1.0 / dist(a, b));
        Vec2 c1 = cr.x - u * delta;
        Vec2 c2 = cr.x + u * delta;
        Rect sq1{c1.x - w / 2, c1.y - w / 2, w};
        Rect sq2{c2.x - w / 2, c2.y - w / 2, w};
        int hole_idx = static_cast<int>(cross_holes.size());
        cross_holes.push_back({sq1, sq2});
        double tpos = (cr.x - a).dot(u);
        hops_on[cr.hop_route].push_back({tpos, hole_idx});
        base.wormholes.push_back({sq1, sq2});
      }
      validate(base);

      for (size_t r = 0; r < L.route_ends.size(); ++r) {
        Vec2 a = L.cities[routes[r].i];
        Vec2 b = L.cities[routes[r].j];
        double len = dist(a, b);
        Vec2 u = (b - a) * (1.0 / len);
        auto& spine = routes[r].spine.pts;
        spine.push_back(BasePoint(a));
        std::sort(hops_on[r].begin(), hops_on[r].end());
        for (auto [tpos, hidx] : hops_on[r]) {
          const Rect& sq1 = cross_holes[hidx].first;
          const Rect& sq2 = cross_holes[hidx].second;
          // entry/exit of the route line on sq1
          Vec2 c1 = sq1.center();
          // solve |(c1 + s*u) - line|: the line passes through c1, so entry
          // and exit are c1 -/+ h*u with h the half-chord of the square
          auto half_chord = [&](const Rect& sq, const Vec2& dir) {
            double hx = dir.x != 0.0 ? (sq.side / 2) / std::abs(dir.x) : kInf;
            double hy = dir.y != 0.0 ? (sq.side / 2) / std::abs(dir.y) : kInf;
            return std::min(hx, hy);
          };
          double h = half_chord(sq1, u);
          Vec2 e1 = c1 - u * h;   // toward the city
          Vec2 f1 = c1 + u * h;   // toward the crossing: hop here
          double s_e1 = rim_arc_param(sq1, e1);
          double s_f1 = rim_arc_param(sq1, f1);
          spine.push_back(BasePoint(e1));
          for (const Vec2& c : rim_corner_walk(sq1, s_e1, s_f1))
            spine.push_back(BasePoint(c));
          BasePoint hop1(f1);
          hop1.tag = RimTag{static_cast<int>(hidx), 0, s_f1};
          spine.push_back(hop1);
          Vec2 t2 = sq2.center() + (f1 - c1);  // same arc on the twin rim
          BasePoint hop2(t2);
          hop2.tag = RimTag{static_cast<int>(hidx), 1, s_f1};
          spine.push_back(hop2);
        }
        spine.push_back(BasePoint(b));
      }

      // clearance, sleeve width, kernel radius, wall height
      double a_clear = spine_clearance(routes, L.cities, L.msep / 4.0);
      if (!(a_clear > 1e-4)) throw LayoutFailureError("clearance too small");
      // A single route has unbounded clearance and sparse layouts (n <= 3)
      // a very large one; narrower sleeves are always admissible and leave
      // room for the calibration bump.
      double beta = std::min(a_clear / 3.0, 0.02);
      double R = 0.9 * beta / 2.0;
      double tmax = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          tmax = std::max(tmax, metric.at(i, j) / alpha);
      double H = tmax + 1.0;

      std::vector<Sleeve> sleeves;
      for (auto& r : routes) {
        r.width = beta;
        sleeves.push_back({r.spine, beta});
      }

      // bump placement: per route, the spine point farthest from everything
      // else (other spines, all cities)
      std::vector<PlateauBump> bumps(routes.size());
      for (size_t r = 0; r < routes.size(); ++r) {
        double best_score = -kInf;
        Vec2 best_pt{};
        const auto& pts = routes[r].spine.pts;
        for (size_t k = 0; k + 1 < pts.size(); ++k) {
          if (is_hop(pts[k], pts[k + 1])) continue;
          double len = dist(pts[k].p, pts[k + 1].p);
          int cnt = std::max(2, static_cast<int>(len / 0.01));
          for (int q = 1; q < cnt; ++q) {
            Vec2 p = pts[k].p + (pts[k + 1].p - pts[k].p) * (double(q) / cnt);
            double score = kInf;
            for (size_t s = 0; s < sleeves.size(); ++s)
              if (s != r) score = std::min(score, sleeves[s].spine_distance(p));
            for (const auto& c : L.cities) score = std::min(score, dist(p, c));
            if (score > best_score) {
              best_score = score;
              best_pt = p;
            }
          }
        }
        double r_b = std::min(0.4 * best_score, best_score - 3.0 * (beta + R));
        if (!(r_b > 3.0 * (beta + R)))
          throw LayoutFailureError("no room for a calibration bump");
        double a_b = std::max(1.5 * (beta + R), 0.45 * r_b);
        if (a_b > 0.8 * r_b)
          throw LayoutFailureError("bump plateau does not fit");
        bumps[r] = PlateauBump{best_pt, a_b, r_b, 0.0};
        routes[r].refine_center = best_pt;
        routes[r].refine_radius = r_b + 4.0 * R;
      }

      auto field = std::make_shared<SleeveField>(sleeves, R, H, bumps,
                                                 outer_radius);
      Surface surf{base, field};

      // calibration: per-route bisection of the bump height against the
      // sleeve-graph geodesic
      res.cities = L.cities;
      res.routes = routes;
      res.clearance = a_clear;
      res.certificates.clear();
      QuadratureSpec quad;
      quad.t_q = 32;
      for (size_t r = 0; r < routes.size(); ++r) {
        double target = metric.at(routes[r].i, routes[r].j) / alpha;
        double tol = res.tau * target;
        CalGraph g = build_cal_graph(base, routes[r]);
        auto measure = [&](double h) {
          field->mutable_bumps()[r].height = h;
          weigh_edges(g, surf, quad, h != 0.0 || false);
          return cal_dijkstra(g);
        };
        field->mutable_bumps()[r].height = 0.0;
        weigh_edges(g, surf, quad, false);
        double base_len = cal_dijkstra(g);
        if (base_len >= target - tol / 2) {
          if (base_len > target + tol)
            throw LayoutFailureError("route longer than its target");
          res.certificates.push_back({routes[r].i, routes[r].j, target,
                                      base_len});
          continue;
        }
        double hi = std::max((target - base_len) / 2.0, beta);
        double mhi = measure(hi);
        int guard = 0;
        while (mhi < target && ++guard < 60) {
          hi *= 2.0;
          mhi = measure(hi);
        }
        if (mhi < target) throw LayoutFailureError("bump cannot reach target");
        double lo = 0.0, best_h = hi, best_m = mhi;
        for (int it = 0; it < 60; ++it) {
          double mid = (lo + hi) / 2.0;
          double mm = measure(mid);
          if (std::abs(mm - target) < std::abs(best_m - target)) {
            best_h = mid;
            best_m = mm;
          }
          if (std::abs(mm - target) <= 0.2 * tol) break;
          (mm < target ? lo : hi) = mid;
        }
        if (std::abs(best_m - target) > tol)
          throw LayoutFailureError("bump calibration did not converge");
        field->mutable_bumps()[r].height = best_h;
        res.certificates.push_back({routes[r].i, routes[r].j, target, best_m});
      }
      field->refresh_bounds();
      res.surface = surf;
      return res;
    } catch (const LayoutFailureError& e) {
      last_error = e.what();
      continue;
    }
  }
  throw LayoutFailureError(last_error);
}

}  // namespace detail

EmbeddingResult embed_general(const FiniteMetric& metric, unsigned seed) {
  return detail::embed_general_impl(metric, seed, 0.0);
}

EmbeddingResult embed_general_unnormalized(const FiniteMetric& metric,
                                           unsigned seed) {
  EmbeddingResult in = embed_general(metric, seed);
  double alpha = in.alpha;
  if (alpha < 1.0 - 1e-9)
    throw LayoutFailureError(
        "unnormalized wrap needs alpha >= 1 (min distance >= sqrt(2))");
  double k = 1.0 / alpha;
  EmbeddingResult out;
  out.alpha = alpha * alpha;
  out.tau = in.tau;
  out.clearance = in.clearance * k;
  auto scale_pt = [&](const Vec2& p) { return p * k; };
  BaseSpace base;
  for (const auto& wp : in.surface.base.wormholes) {
    Rect r1{wp.rim1.x * k, wp.rim1.y * k, wp.rim1.side * k};
    Rect r2{wp.rim2.x * k, wp.rim2.y * k, wp.rim2.side * k};
    base.wormholes.push_back({r1, r2});
  }
  validate(base);
  auto field = std::make_shared<CompositeField>(std::vector<CompositeField::Cell>{
      {{0.0, 0.0}, k, in.surface.field}});
  out.surface = Surface{base, field};
  for (const auto& c : in.cities) out.cities.push_back(scale_pt(c));
  for (const auto& r : in.routes) {
    RouteSpine rs;
    rs.i = r.i;
    rs.j = r.j;
    rs.width = r.width * k;
    rs.refine_center = scale_pt(r.refine_center);
    rs.refine_radius = r.refine_radius * k;
    for (const auto& bp : r.spine.pts) {
      BasePoint q(scale_pt(bp.p));
      if (bp.tag) q.tag = RimTag{bp.tag->pair, bp.tag->rim, bp.tag->arc * k};
      rs.spine.pts.push_back(q);
    }
    out.routes.push_back(std::move(rs));
  }
  for (const auto& c : in.certificates)
    out.certificates.push_back({c.i, c.j, c.target * k, c.measured * k});
  return out;
}

double second_derivative_rescale_bound(double m2, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma must lie in (0, 1]");
  return m2 / gamma;
}

// -------------------------------------------------------------- embed_uniform

EmbeddingResult embed_uniform(int n, double c1) {
  if (n < 2) throw PackingFailureError("uniform embedding needs n >= 2");
  if (c1 <= 0.0) c1 = 3.0 / (4.0 * n);
  double rho = c1 / 2.0;
  const double w = 1e-5;  // wormhole square side
  const double rc = 0.33;
  const double two_pi = 2.0 * std::acos(-1.0);

  EmbeddingResult res;
  for (int i = 0; i < n; ++i) {
    double ang = two_pi * i / n;
    res.cities.push_back(
        {0.5 + rc * std::cos(ang), 0.5 + rc * std::sin(ang)});
  }
  // ring packing guard (cannot trip for the default c1)
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (dist(res.cities[i], res.cities[j]) < 2.0 * (rho + 2.0 * w))
        throw PackingFailureError("city rings overlap");

  // direction slots: both ends of a pair use the same absolute direction, so
  // the rim translation maps the near contact point to the near contact point
  const double s2 = 1.0 / std::sqrt(2.0);
  const std::vector<Vec2> dirs = {{1, 0},    {0, 1},   {-1, 0},  {0, -1},
                                  {s2, s2},  {-s2, s2}, {-s2, -s2}, {s2, -s2}};
  std::vector<std::vector<int>> used(n);
  BaseSpace base;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      int slot = -1;
      for (int s = 0; s < static_cast<int>(dirs.size()); ++s) {
        bool free_ = true;
        for (int u : used[i])
          if (u == s) free_ = false;
        for (int u : used[j])
          if (u == s) free_ = false;
        if (free_) {
          slot = s;
          break;
        }
      }
      if (slot < 0)
        throw PackingFailureError("out of direction slots (n too large)");
      used[i].push_back(slot);
      used[j].push_back(slot);
      const Vec2& u = dirs[slot];
      // anchor the square's corner on the contact point exactly, so the rim
      // passes through it bit-for-bit
      auto square_at = [&](const Vec2& contact) {
        double x = u.x > 0.1 ? contact.x : contact.x - w;
        double y = u.y > 0.1 ? contact.y : contact.y - w;
        bool diagonal = slot >= 4;
        if (!diagonal) {
          if (std::abs(u.x) > 0.5) y = contact.y - w / 2;
          if (std::abs(u.y) > 0.5) x = contact.x - w / 2;
        }
        return Rect{x, y, w};
      };
      Rect sq1 = square_at(res.cities[i] + u * rho);
      Rect sq2 = square_at(res.cities[j] + u * rho);
      int pair_idx = static_cast<int>(base.wormholes.size());
      base.wormholes.push_back({sq1, sq2});

      Vec2 contact1 = res.cities[i] + u * rho;
      Vec2 contact2 = res.cities[j] + u * rho;
      double arc = rim_arc_param(sq1, contact1);
      RouteSpine rs;
      rs.i = i;
      rs.j = j;
      rs.width = std::min(0.05, rho / 2.0);
      rs.spine.pts.push_back(BasePoint(res.cities[i]));
      BasePoint h1(contact1);
      h1.tag = RimTag{pair_idx, 0, arc};
      rs.spine.pts.push_back(h1);
      BasePoint h2(contact2);
      h2.tag = RimTag{pair_idx, 1, arc};
      rs.spine.pts.push_back(h2);
      rs.spine.pts.push_back(BasePoint(res.cities[j]));
      res.routes.push_back(std::move(rs));
    }
  }
  validate(base);
  res.surface = Surface{base, std::make_shared<ZeroField>()};
  res.alpha = 1.0;
  res.clearance = 0.03;
  res.tau = 0.0;
  for (const auto& r : res.routes)
    res.certificates.push_back(
        {r.i, r.j, c1, measure_surface_distance(res, r.i, r.j)});
  return res;
}

long long kl_bound(int m, double C) {
  int e = static_cast<int>(std::ceil(std::log2(14.0 * (1.0 + C) / C)));
  double v = std::pow(static_cast<double>(m), e);
  if (v > 9e18) return std::numeric_limits<long long>::max();
  return static_cast<long long>(std::llround(v));
}

TourBoundReport ensure_embedding_tour_bound(const EmbeddingResult& res) {
  TourBoundReport rep;
  size_t n = res.cities.size();
  if (n < 2) return rep;
  // distance matrix from the certificates when complete, else base Euclidean
  std::vector<double> d(n * n, 0.0);
  bool complete = res.certificates.size() == n * (n - 1) / 2;
  if (complete) {
    for (const auto& c : res.certificates) {
      d[c.i * n + c.j] = c.measured;
      d[c.j * n + c.i] = c.measured;
    }
  } else {
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) d[i * n + j] = dist(res.cities[i], res.cities[j]);
  }
  // Prim MST over the matrix
  std::vector<double> key(n, kInf);
  std::vector<char> in(n, 0);
  key[0] = 0.0;
  double mst = 0.0;
  for (size_t it = 0; it < n; ++it) {
    size_t best = n;
    for (size_t v = 0; v < n; ++v)
      if (!in[v] && (best == n || key[v] < key[best])) best = v;
    in[best] = 1;
    mst += key[best];
    for (size_t v = 0; v < n; ++v)
      if (!in[v]) key[v] = std::min(key[v], d[best * n + v]);
  }
  rep.double_tree_length = 2.0 * mst;
  rep.certified = rep.double_tree_length >= 1.0;
  return rep;
}

}  // namespace gts
