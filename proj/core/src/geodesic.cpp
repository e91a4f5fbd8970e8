#include "genus_tsp/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <thread>

namespace gts {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

long long quantize(double v) { return std::llround(v * 1e9); }
using PosKey = std::pair<long long, long long>;
PosKey pos_key(const Vec2& p) { return {quantize(p.x), quantize(p.y)}; }
}  // namespace

int choose_t_for_epsilon(double m1, double m2, double eps) {
  double c = m1 + m2;
  double a = 3.0 * std::sqrt(16.0 + 8.0 * c * c) / eps;
  double b = 3.0 * m2 / eps;
  return static_cast<int>(std::ceil(std::max(a, b)));
}

int env_worker_count() {
  const char* s = std::getenv("GENUS_TSP_WORKERS");
  if (!s) return 1;
  int v = std::atoi(s);
  return v >= 1 ? v : 1;
}

GridGraph build_grid_graph(const Surface& s, const GridSpec& grid,
                           const QuadratureSpec& quad,
                           const GridGraphOptions& opts) {
  GridGraph g;
  g.surface = s;
  g.t = grid.t;
  g.quad = quad;

  std::vector<BasePoint> raw = grid_points(s.base, grid);
  if (opts.include_rim_anchors) {
    for (size_t i = 0; i < s.base.wormholes.size(); ++i) {
      const auto& wp = s.base.wormholes[i];
      for (int which = 0; which < 2; ++which) {
        const Rect& r = which == 0 ? wp.rim1 : wp.rim2;
        for (int k = 0; k < 8; ++k) {
          // Corners and side midpoints, counterclockwise.
          double arc = k * r.side / 2.0;
          BasePoint bp(rim_arc_point(r, arc));
          bp.tag = RimTag{static_cast<int>(i), which, arc};
          raw.push_back(bp);
        }
      }
    }
  }

  // Merge identified rim twins into single nodes.
  std::map<PosKey, size_t> node_of;
  auto add_point = [&](const BasePoint& bp) {
    std::vector<BasePoint> reps{bp};
    if (bp.tag) {
      BasePoint twin = identify_rim_point(s.base, bp);
      if (pos_key(twin.p) != pos_key(bp.p)) reps.push_back(twin);
    }
    size_t found = g.nodes.size();
    for (const auto& r : reps) {
      auto it = node_of.find(pos_key(r.p));
      if (it != node_of.end()) { found = it->second; break; }
    }
    if (found == g.nodes.size()) g.nodes.emplace_back();
    GraphNode& node = g.nodes[found];
    for (const auto& r : reps) {
      PosKey k = pos_key(r.p);
      if (!node_of.count(k)) {
        node_of[k] = found;
        node.reps.push_back(r);
      }
    }
  };
  for (const auto& bp : raw) add_point(bp);
  g.first_extra = g.nodes.size();
  for (const auto& bp : opts.extra_points) {
    BasePoint q = bp;
    if (!q.tag) q.tag = rim_tag_of(s.base, q.p);
    // Extra points are always fresh nodes unless they coincide exactly.
    auto it = node_of.find(pos_key(q.p));
    if (it != node_of.end() && it->second >= g.first_extra) {
      // duplicate extra point: share the node
      continue;
    }
    add_point(q);
  }

  const size_t n = g.nodes.size();
  g.w.assign(n * n, kInf);
  int workers = std::max(1, opts.workers);
  auto fill_rows = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      g.w[i * n + i] = 0.0;
      for (size_t j = i + 1; j < n; ++j) {
        double best = kInf;
        for (const auto& ri : g.nodes[i].reps) {
          for (const auto& rj : g.nodes[j].reps) {
            if (opts.prune_linf > 0.0 &&
                std::max(std::abs(ri.p.x - rj.p.x),
                         std::abs(ri.p.y - rj.p.y)) > opts.prune_linf)
              continue;
            if (!segment_exists(s.base, ri.p, rj.p)) continue;
            best = std::min(best,
                            segment_surface_length(s, ri.p, rj.p, quad));
          }
        }
        g.w[i * n + j] = best;
        g.w[j * n + i] = best;
      }
    }
  };
  if (workers == 1 || n < 64) {
    fill_rows(0, n);
  } else {
    std::vector<std::thread> pool;
    size_t chunk = (n + workers - 1) / workers;
    for (int k = 0; k < workers; ++k) {
      size_t lo = std::min(n, k * chunk), hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(fill_rows, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return g;
}

std::vector<double> dijkstra_from(const GridGraph& g, size_t src) {
  const size_t n = g.size();
  std::vector<double> d(n, kInf);
  std::vector<char> done(n, 0);
  d[src] = 0.0;
  for (size_t it = 0; it < n; ++it) {
    size_t u = n;
    double du = kInf;
    for (size_t i = 0; i < n; ++i)
      if (!done[i] && d[i] < du) { du = d[i]; u = i; }
    if (u == n) break;
    done[u] = 1;
    const double* row = &g.w[u * n];
    for (size_t v = 0; v < n; ++v)
      if (!done[v] && row[v] < kInf && du + row[v] < d[v]) d[v] = du + row[v];
  }
  return d;
}

namespace {
std::vector<double> floyd_warshall(const GridGraph& g) {
  const size_t n = g.size();
  std::vector<double> d = g.w;
  for (size_t k = 0; k < n; ++k) {
    const double* dk = &d[k * n];
    for (size_t i = 0; i < n; ++i) {
      double dik = d[i * n + k];
      if (dik == kInf) continue;
      double* di = &d[i * n];
      for (size_t j = 0; j < n; ++j) {
        double via = dik + dk[j];
        if (via < di[j]) di[j] = via;
      }
    }
  }
  return d;
}
}  // namespace

DistanceTable all_pairs_distances(const GridGraph& g,
                                  const std::vector<size_t>& queries,
                                  double epsilon, bool cross_check) {
  const size_t n = g.size();
  const size_t q = queries.size();
  DistanceTable table;
  table.query_nodes = queries;
  table.t = g.t;
  table.t_q = g.quad.t_q;
  table.epsilon = epsilon;
  table.d.assign(q * q, 0.0);

  std::vector<std::vector<double>> rows(q);
  for (size_t i = 0; i < q; ++i) rows[i] = dijkstra_from(g, queries[i]);
  for (size_t i = 0; i < q; ++i)
    for (size_t j = 0; j < q; ++j) table.d[i * q + j] = rows[i][queries[j]];

  if (cross_check && n <= 1200) {
    std::vector<double> fw = floyd_warshall(g);
    for (size_t i = 0; i < q; ++i)
      for (size_t j = 0; j < q; ++j) {
        double a = table.d[i * q + j];
        double b = fw[queries[i] * n + queries[j]];
        bool both_inf = (a == kInf && b == kInf);
        if (!both_inf && std::abs(a - b) > 1e-12)
          throw std::runtime_error(
              "all_pairs_distances: solver cross-check mismatch");
      }
  }
  for (double v : table.d)
    if (v == kInf)
      throw DisconnectedQueryError("all_pairs_distances: query disconnected");
  return table;
}

PolygonalPath shortest_path_witness(const GridGraph& g, size_t u, size_t v) {
  const size_t n = g.size();
  std::vector<double> d(n, kInf);
  std::vector<size_t> prev(n, n);
  std::vector<char> done(n, 0);
  d[u] = 0.0;
  for (size_t it = 0; it < n; ++it) {
    size_t x = n;
    double dx = kInf;
    for (size_t i = 0; i < n; ++i)
      if (!done[i] && d[i] < dx) { dx = d[i]; x = i; }
    if (x == n) break;
    done[x] = 1;
    if (x == v) break;
    const double* row = &g.w[x * n];
    for (size_t y = 0; y < n; ++y)
      if (!done[y] && row[y] < kInf && dx + row[y] < d[y]) {
        d[y] = dx + row[y];
        prev[y] = x;
      }
  }
  if (d[v] == kInf)
    throw DisconnectedQueryError("shortest_path_witness: disconnected");
  std::vector<size_t> chain;
  for (size_t x = v;; x = prev[x]) {
    chain.push_back(x);
    if (x == u) break;
  }
  std::reverse(chain.begin(), chain.end());

  // Realize each edge by its best representative pair, inserting explicit
  // rim hops when consecutive edges use different representatives.
  auto best_reps = [&](size_t i, size_t j) -> std::pair<BasePoint, BasePoint> {
    double best = kInf;
    std::pair<BasePoint, BasePoint> out{g.nodes[i].reps[0], g.nodes[j].reps[0]};
    for (const auto& ri : g.nodes[i].reps)
      for (const auto& rj : g.nodes[j].reps) {
        if (!segment_exists(g.surface.base, ri.p, rj.p)) continue;
        double len = segment_surface_length(g.surface, ri.p, rj.p, g.quad);
        if (len < best) { best = len; out = {ri, rj}; }
      }
    return out;
  };
  PolygonalPath path;
  for (size_t k = 0; k + 1 < chain.size(); ++k) {
    auto [a, b] = best_reps(chain[k], chain[k + 1]);
    if (path.pts.empty()) {
      path.pts.push_back(a);
    } else if (pos_key(path.pts.back().p) != pos_key(a.p)) {
      path.pts.push_back(a);  // hop within the node
    }
    path.pts.push_back(b);
  }
  if (path.pts.empty()) path.pts.push_back(g.nodes[u].reps[0]);
  return path;
}

}  // namespace gts
