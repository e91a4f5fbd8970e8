#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "genus_tsp/embeddings.hpp"
#include "genus_tsp/metric.hpp"

namespace gts {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Cluster {
  std::vector<int> pts;        // original point ids
  int rep = -1;                // original point id; a rep of one child too
  std::vector<int> children;   // cluster ids; empty for singleton leaves
  int depth = 0;
};

// Single-linkage split: connect pairs closer than frac * diam, return the
// components. A cluster that refuses to split becomes a flat cell.
std::vector<std::vector<int>> split_cluster(const FiniteMetric& d,
                                            const std::vector<int>& pts) {
  int k = static_cast<int>(pts.size());
  double diam = 0.0;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      diam = std::max(diam, d.at(pts[a], pts[b]));
  for (double frac : {0.2, 0.1, 0.05}) {
    std::vector<int> comp(k, -1);
    int nc = 0;
    for (int a = 0; a < k; ++a) {
      if (comp[a] >= 0) continue;
      comp[a] = nc;
      std::vector<int> stack{a};
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < k; ++v)
          if (comp[v] < 0 && d.at(pts[u], pts[v]) < frac * diam) {
            comp[v] = nc;
            stack.push_back(v);
          }
      }
      ++nc;
    }
    if (nc >= 2) {
      std::vector<std::vector<int>> out(nc);
      for (int a = 0; a < k; ++a) out[comp[a]].push_back(pts[a]);
      return out;
    }
  }
  std::vector<std::vector<int>> out;
  for (int a = 0; a < k; ++a) out.push_back({pts[a]});
  return out;
}

struct CellInfo {
  int cluster = -1;
  EmbeddingResult local;        // general embedding of the child reps
  std::vector<int> city_of;     // child index -> local city index (identity)
  Vec2 offset;                  // physical = offset + scale * local
  double scale = 1.0;
  double beta = 0.0;            // local sleeve width
};

// Direction from a city that stays clear of every incident spine ray: the
// bisector of the widest angular gap.
Vec2 gap_direction(const EmbeddingResult& local, int city, double* gap_out) {
  std::vector<double> angs;
  const Vec2 c = local.cities[city];
  for (const auto& r : local.routes) {
    int other = r.i == city ? r.j : (r.j == city ? r.i : -1);
    if (other < 0) continue;
    Vec2 d = local.cities[other] - c;
    angs.push_back(std::atan2(d.y, d.x));
  }
  const double two_pi = 2.0 * std::acos(-1.0);
  if (angs.empty()) {
    if (gap_out) *gap_out = two_pi;
    Vec2 inward = Vec2{0.5, 0.5} - c;
    double nn = inward.norm();
    return nn > 1e-12 ? inward * (1.0 / nn) : Vec2{1.0, 0.0};
  }
  std::sort(angs.begin(), angs.end());
  double best_gap = -1.0, best_mid = 0.0;
  for (size_t a = 0; a < angs.size(); ++a) {
    double next = a + 1 < angs.size() ? angs[a + 1] : angs[0] + two_pi;
    double gap = next - angs[a];
    if (gap > best_gap) {
      best_gap = gap;
      best_mid = angs[a] + gap / 2.0;
    }
  }
  if (gap_out) *gap_out = best_gap;
  return {std::cos(best_mid), std::sin(best_mid)};
}

}  // namespace

EmbeddingResult embed_doubling(const FiniteMetric& metric, int m, double C,
                               unsigned seed) {
  validate(metric);
  if (m < 2) throw std::invalid_argument("net size parameter m must be >= 2");
  if (!(C > 0.0)) throw std::invalid_argument("C must be positive");
  int n = metric.n;
  if (n < 2) throw std::invalid_argument("doubling embedding needs n >= 2");

  // --- cluster tree ---------------------------------------------------------
  std::vector<Cluster> tree;
  {
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    tree.push_back({all, -1, {}, 0});
    for (size_t c = 0; c < tree.size(); ++c) {
      if (tree[c].pts.size() == 1) {
        tree[c].rep = tree[c].pts[0];
        continue;
      }
      auto parts = split_cluster(metric, tree[c].pts);
      for (auto& part : parts) {
        int id = static_cast<int>(tree.size());
        tree[c].children.push_back(id);
        tree.push_back({std::move(part), -1, {}, tree[c].depth + 1});
      }
    }
    // reps bottom-up: a cluster inherits the rep of its first child
    for (size_t c = tree.size(); c-- > 0;)
      if (!tree[c].children.empty()) tree[c].rep = tree[tree[c].children[0]].rep;
  }

  int depth = 0;
  long long net_max = 0;
  for (const auto& c : tree) {
    depth = std::max(depth, c.depth);
    net_max = std::max(net_max, static_cast<long long>(c.children.size()));
  }
  long long kl = kl_bound(m, C);
  if (net_max > kl)
    throw PackingFailureError("cluster branching " + std::to_string(net_max) +
                              " exceeds the net-size bound " +
                              std::to_string(kl));
  double theta = (4.0 + 4.0 * C) / (4.0 + 3.0 * C);
  int depth_cap = static_cast<int>(std::ceil(
                      std::log(2.0 * metric.max_distance() /
                               metric.min_distance()) /
                      std::log(theta))) +
                  1;
  if (depth > depth_cap)
    throw RecursionBudgetError("cluster tree depth " + std::to_string(depth) +
                               " exceeds the recursion budget " +
                               std::to_string(depth_cap));

  // --- one general embedding per internal cluster ---------------------------
  std::vector<CellInfo> cells;          // aligned with internal clusters
  std::vector<int> cell_of(tree.size(), -1);
  for (size_t c = 0; c < tree.size(); ++c) {
    if (tree[c].children.empty()) continue;
    CellInfo cell;
    cell.cluster = static_cast<int>(c);
    FiniteMetric sub;
    sub.n = static_cast<int>(tree[c].children.size());
    sub.d.assign(static_cast<size_t>(sub.n) * sub.n, 0.0);
    for (int a = 0; a < sub.n; ++a)
      for (int b = 0; b < sub.n; ++b)
        sub.at(a, b) = metric.at(tree[tree[c].children[a]].rep,
                                 tree[tree[c].children[b]].rep);
    cell.local = detail::embed_general_impl(sub, seed + static_cast<unsigned>(c),
                                            0.25);
    cell.beta = cell.local.routes.empty() ? 0.05 : cell.local.routes[0].width;
    cell_of[c] = static_cast<int>(cells.size());
    cells.push_back(std::move(cell));
  }

  // --- physical placement ----------------------------------------------------
  // Scales are forced: scale(cell) = alpha_local(cell) / alpha_root, so a
  // distance measured inside any cell converts to the original metric with the
  // single global factor alpha_root.
  double alpha_root = cells[0].local.alpha;
  cells[0].offset = {0.0, 0.0};
  cells[0].scale = 1.0;
  // walk the tree top-down; stash the socket geometry per child cell
  struct Socket {
    Vec2 parent_anchor;  // physical point next to the parent city
    Vec2 child_anchor;   // physical point next to the child's rep city
    double conn = 0.0;   // Euclidean connector slack, both sides
    int wormhole = -1;   // merge wormhole index in the composed base space
    Vec2 q1, q2;         // rim centers: parent side, child side
    Vec2 dir, cdir;      // unit offsets from city / rep toward the rims
    double w1 = 0.0;     // rim side
  };
  std::vector<Socket> socket_of(cells.size());
  std::vector<int> wh_start(cells.size(), 0);  // cell wormholes begin here
  BaseSpace base;
  std::vector<CompositeField::Cell> fcells;
  auto add_cell_geometry = [&](const CellInfo& cell) {
    for (const auto& wp : cell.local.surface.base.wormholes) {
      auto scale_rect = [&](const Rect& r) {
        return Rect{cell.offset.x + cell.scale * r.x,
                    cell.offset.y + cell.scale * r.y, cell.scale * r.side};
      };
      base.wormholes.push_back({scale_rect(wp.rim1), scale_rect(wp.rim2)});
    }
    fcells.push_back({cell.offset, cell.scale, cell.local.surface.field});
  };

  for (size_t ci = 0; ci < cells.size(); ++ci) {
    CellInfo& cell = cells[ci];
    const Cluster& K = tree[cell.cluster];
    wh_start[ci] = static_cast<int>(base.wormholes.size());
    add_cell_geometry(cell);
    for (size_t a = 0; a < K.children.size(); ++a) {
      int child = K.children[a];
      if (tree[child].children.empty()) continue;  // singleton: city only
      CellInfo& sub = cells[cell_of[child]];
      sub.scale = sub.local.alpha / alpha_root;
      // the parent field is exactly zero within (width - kernel) = 0.55*beta
      // of the city; the child cell and its field support must stay inside
      double limit = 0.2 * cell.beta * cell.scale;
      if (sub.scale > limit)
        throw LayoutFailureError(
            "child cell does not fit the zero pocket at its representative "
            "(cell side " + std::to_string(sub.scale) + " > pocket " +
            std::to_string(limit) +
            "): cluster separations must dominate cluster spreads");
      double gap = 0.0;
      Vec2 dir = gap_direction(cell.local, static_cast<int>(a), &gap);
      double D = 0.3 * cell.beta;  // local units in the parent cell
      if (D * std::sin(std::min(gap / 2.0, 1.5)) * cell.scale <
          0.75 * sub.scale * std::sqrt(2.0))
        throw LayoutFailureError("no angular gap for the child cell socket");
      Vec2 city_phys = cell.offset + cell.local.cities[a] * cell.scale;
      Vec2 center = city_phys + dir * (D * cell.scale);
      sub.offset = center - Vec2{sub.scale / 2.0, sub.scale / 2.0};

      // merge wormhole: a rim beside the parent city, its twin beside the
      // child's rep city inside the child cell
      double w1 = std::min({1e-6, 0.02 * cell.beta * cell.scale,
                            0.02 * sub.beta * sub.scale});
      Vec2 q1 = city_phys + dir * (3.0 * w1 + w1 / 2.0);
      Rect rim1{q1.x - w1 / 2, q1.y - w1 / 2, w1};
      // the child's rep is child city 0 by construction
      double cgap = 0.0;
      Vec2 cdir = gap_direction(sub.local, 0, &cgap);
      Vec2 rep_phys = sub.offset + sub.local.cities[0] * sub.scale;
      Vec2 q2 = rep_phys + cdir * (0.1 * sub.beta * sub.scale);
      Rect rim2{q2.x - w1 / 2, q2.y - w1 / 2, w1};
      Socket s;
      s.parent_anchor = city_phys;
      s.child_anchor = rep_phys;
      s.conn = dist(city_phys, q1) + dist(rep_phys, q2) + 2.0 * w1;
      s.wormhole = static_cast<int>(base.wormholes.size());
      s.q1 = q1;
      s.q2 = q2;
      s.dir = dir;
      s.cdir = cdir;
      s.w1 = w1;
      base.wormholes.push_back({rim1, rim2});
      socket_of[cell_of[child]] = s;
    }
  }
  validate(base);

  // --- composed result -------------------------------------------------------
  EmbeddingResult res;
  res.surface = Surface{base, std::make_shared<CompositeField>(fcells)};
  res.alpha = alpha_root;
  res.tau = cells[0].local.tau;
  res.clearance = kInf;
  for (const auto& cell : cells)
    res.clearance =
        std::min(res.clearance, cell.local.clearance * cell.scale);
  res.recursion_depth = depth;
  res.max_net_size = net_max;

  // physical city positions: each point is a city of the cell owning it as a
  // child rep (every leaf is a singleton child of exactly one cluster)
  res.cities.assign(n, Vec2{});
  std::vector<int> home_cell(n, -1), home_slot(n, -1);
  for (size_t ci = 0; ci < cells.size(); ++ci) {
    const Cluster& K = tree[cells[ci].cluster];
    for (size_t a = 0; a < K.children.size(); ++a) {
      int child = K.children[a];
      if (!tree[child].children.empty()) continue;
      int pt = tree[child].rep;
      home_cell[pt] = static_cast<int>(ci);
      home_slot[pt] = static_cast<int>(a);
      res.cities[pt] =
          cells[ci].offset + cells[ci].local.cities[a] * cells[ci].scale;
    }
  }

  // composed measurements: climb from each point to the pair's lowest common
  // cluster, crossing a merge wormhole per level, then across that one cell
  auto cell_leg = [&](int ci, int slot_a, int slot_b) {
    if (slot_a == slot_b) return 0.0;
    for (const auto& cert : cells[ci].local.certificates)
      if ((cert.i == slot_a && cert.j == slot_b) ||
          (cert.i == slot_b && cert.j == slot_a))
        return cert.measured * cells[ci].scale;
    throw std::runtime_error("missing local certificate");
  };
  // chain of (cell, slot) from a point up to the root cell
  auto chain_of = [&](int pt) {
    std::vector<std::pair<int, int>> chain;  // cell id, city slot within it
    int ci = home_cell[pt];
    int slot = home_slot[pt];
    for (;;) {
      chain.push_back({ci, slot});
      int cluster = cells[ci].cluster;
      if (cluster == 0) break;
      // find the parent cluster and this cluster's slot inside it
      int parent = -1, pslot = -1;
      for (size_t c = 0; c < tree.size(); ++c) {
        const auto& ch = tree[c].children;
        for (size_t a = 0; a < ch.size(); ++a)
          if (ch[a] == cluster) {
            parent = static_cast<int>(c);
            pslot = static_cast<int>(a);
          }
      }
      ci = cell_of[parent];
      slot = pslot;
    }
    return chain;
  };
  // route spines in physical coordinates, so pairwise surface distances are
  // measurable on the composed surface: cell-local calibrated routes mapped
  // by offset/scale, stitched with a hop through each merge wormhole
  auto half_chord = [](const Rect& sq, const Vec2& u) {
    double hx = u.x != 0.0 ? (sq.side / 2) / std::abs(u.x) : kInf;
    double hy = u.y != 0.0 ? (sq.side / 2) / std::abs(u.y) : kInf;
    return std::min(hx, hy);
  };
  auto append = [](std::vector<BasePoint>& out, std::vector<BasePoint> seg) {
    for (auto& bp : seg) {
      if (!out.empty() && !bp.tag && !out.back().tag &&
          dist(out.back().p, bp.p) < 1e-15)
        continue;
      out.push_back(std::move(bp));
    }
  };
  auto local_leg = [&](int ci, int sa0, int sb0) {
    std::vector<BasePoint> out;
    if (sa0 == sb0) return out;
    const CellInfo& cell = cells[ci];
    for (const auto& r : cell.local.routes) {
      if (!((r.i == sa0 && r.j == sb0) || (r.i == sb0 && r.j == sa0)))
        continue;
      bool rev = r.i != sa0;
      const auto& src = r.spine.pts;
      for (size_t k = 0; k < src.size(); ++k) {
        const BasePoint& bp = src[rev ? src.size() - 1 - k : k];
        BasePoint q(cell.offset + bp.p * cell.scale);
        if (bp.tag)
          q.tag = RimTag{wh_start[ci] + bp.tag->pair, bp.tag->rim,
                         bp.tag->arc * cell.scale};
        out.push_back(q);
      }
      return out;
    }
    throw std::runtime_error("missing local route");
  };
  // child rep -> merge-wormhole hop -> parent city (reversed when !up)
  auto socket_leg = [&](int ci, bool up) {
    const Socket& s = socket_of[ci];
    const auto& wp = base.wormholes[s.wormhole];
    std::vector<BasePoint> out;
    out.push_back(BasePoint(s.child_anchor));
    Vec2 p2 = s.q2 - s.cdir * half_chord(wp.rim2, s.cdir);
    double arc = rim_arc_param(wp.rim2, p2);
    BasePoint h2(p2);
    h2.tag = RimTag{s.wormhole, 1, arc};
    out.push_back(h2);
    BasePoint h1(p2 + (s.q1 - s.q2));  // rims are translates: same arc
    h1.tag = RimTag{s.wormhole, 0, arc};
    out.push_back(h1);
    Vec2 x1 = s.q1 - s.dir * half_chord(wp.rim1, s.dir);
    for (const Vec2& c :
         rim_corner_walk(wp.rim1, arc, rim_arc_param(wp.rim1, x1)))
      out.push_back(BasePoint(c));
    out.push_back(BasePoint(x1));
    out.push_back(BasePoint(s.parent_anchor));
    if (!up) std::reverse(out.begin(), out.end());
    return out;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      auto ca = chain_of(i);  // home cell first, root cell last
      auto cb = chain_of(j);
      // deepest cell the chains share; both chains end at the root cell
      size_t sa = ca.size() - 1, sb = cb.size() - 1;
      while (sa > 0 && sb > 0 && ca[sa - 1].first == cb[sb - 1].first) {
        --sa;
        --sb;
      }
      double total = 0.0;
      auto up_cost = [&](const std::vector<std::pair<int, int>>& chain,
                         size_t stop) {
        double s = 0.0;
        for (size_t k = 0; k < stop; ++k) {
          // inside cell k: from the entry city to the cell's rep (slot 0)
          s += cell_leg(chain[k].first, chain[k].second, 0);
          s += socket_of[chain[k].first].conn;
        }
        return s;
      };
      total += up_cost(ca, sa);
      total += up_cost(cb, sb);
      total += cell_leg(ca[sa].first, ca[sa].second, cb[sb].second);
      res.certificates.push_back(
          {i, j, metric.at(i, j) / alpha_root, total});

      RouteSpine rs;
      rs.i = i;
      rs.j = j;
      rs.width = cells[ca[sa].first].beta * cells[ca[sa].first].scale;
      std::vector<BasePoint> pts{BasePoint(res.cities[i])};
      for (size_t k = 0; k < sa; ++k) {
        append(pts, local_leg(ca[k].first, ca[k].second, 0));
        append(pts, socket_leg(ca[k].first, true));
      }
      append(pts, local_leg(ca[sa].first, ca[sa].second, cb[sb].second));
      for (size_t k = sb; k-- > 0;) {
        append(pts, socket_leg(cb[k].first, false));
        append(pts, local_leg(cb[k].first, 0, cb[k].second));
      }
      rs.spine.pts = std::move(pts);
      res.routes.push_back(std::move(rs));
    }
  }
  return res;
}

}  // namespace gts
