#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>

#include "genus_tsp/ptas.hpp"

// Multipath dynamic program over one shifted dissection.
//
// The dissection lives in shifted coordinates u = (x - shift) mod 1, where it
// is a plain quadtree on [0,1)^2. Every square is combined from its four
// children in two stages: bottom/top halves are each merged from two sibling
// squares along the shared vertical edge, then the two halves are merged
// along the horizontal midline. Each merge enumerates the crossing multiset
// on the shared boundary (at portal positions, at most r per edge) and the
// pairings on both sides, composing them into the parent pairing.
//
// Keys are canonical multisets of endpoint pairs (portal position codes), so
// pairings that only permute identical crossings share one table entry.
// Values are memoized together with the pruning cap they were computed
// under: a value below its cap is exact, otherwise it only certifies
// "no configuration below cap".

namespace gts {
namespace detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kFullMatchLimit = 6;  // exhaustive pairings up to this many ends

using Code = uint32_t;                       // edge * 4096 + pos
using KeyPair = std::pair<Code, Code>;
using Key = std::vector<KeyPair>;            // sorted, each pair normalized

// Polygonal region boundary in u-space; edge i runs corners[i] ->
// corners[i+1] counterclockwise with portal positions k/(m+1), k = 0..m
// (position m+1 is the next edge's position 0).
struct URegion {
  std::vector<Vec2> corners;
  int m = 1;

  int edges() const { return static_cast<int>(corners.size()); }
  Vec2 point(int edge, int pos) const {
    const Vec2& a = corners[edge];
    const Vec2& b = corners[(edge + 1) % edges()];
    double f = static_cast<double>(pos) / (m + 1);
    return a + (b - a) * f;
  }
  Code code(int edge, int pos) const {
    if (pos == m + 1) { edge = (edge + 1) % edges(); pos = 0; }
    return static_cast<Code>(edge) * 4096 + static_cast<Code>(pos);
  }
  Vec2 point_of(Code c) const {
    return point(static_cast<int>(c / 4096), static_cast<int>(c % 4096));
  }
  double rank(Code c) const {
    return static_cast<double>(c / 4096) * (m + 2) +
           static_cast<double>(c % 4096);
  }
  // Locates a boundary point; returns the code or nullopt.
  std::optional<Code> locate(const Vec2& u) const {
    for (int e = 0; e < edges(); ++e) {
      const Vec2& a = corners[e];
      const Vec2& b = corners[(e + 1) % edges()];
      Vec2 d = b - a;
      double len2 = d.norm2();
      double f = (u - a).dot(d) / len2;
      if (f < -1e-9 || f > 1.0 + 1e-9) continue;
      Vec2 proj = a + d * f;
      if (dist(proj, u) > 1e-9) continue;
      double fp = f * (m + 1);
      int pos = static_cast<int>(std::lround(fp));
      if (std::abs(fp - pos) > 1e-6) continue;
      return code(e, pos);
    }
    return std::nullopt;
  }
};

struct QtSquare {
  double u0 = 0.0, v0 = 0.0, size = 1.0;
  int depth = 0;
  std::vector<int> cities;
  std::array<int, 4> child{-1, -1, -1, -1};  // SW, SE, NW, NE
  bool leaf = true;
};

// One path endpoint in a merge.
struct EP {
  Vec2 u;
  int parent_flat = -1;  // index into the flattened parent key, or -1
  int mid = -1;          // index into the midline multiset, or -1
  int pid = -1;          // merge-wide point id (distance matrix index)
  Code code = 0;         // boundary code in this EP's side geometry
  double rank = 0.0;
};

struct Segment {
  std::vector<Vec2> pts;     // x-space waypoints, endpoints included
  std::vector<int> cities;   // visited city indices in order
};

struct MergeChoice {
  int kase = -1;  // 0 merge, 1 descend child A, 2 descend child B, 3 leaf
  std::vector<EP> epA, epB;
  std::vector<std::pair<int, int>> pairsA, pairsB;
  Key keyA, keyB;
  std::vector<std::pair<int, bool>> mapA, mapB;  // pair -> (key index, flip)
  int leaf_pair = -1;
  std::vector<int> leaf_order;
};

struct Entry {
  double value = kInf;
  double cap = 0.0;  // value < cap means exact
  MergeChoice choice;
};

class Solver {
 public:
  Solver(const TspInstance& inst, const PtasParams& params, int sa, int sb,
         PortalOracle& oracle, const SolveBudget& budget, DpStats* stats)
      : inst_(inst),
        params_(params),
        m_(static_cast<int>(params.m)),
        r_(static_cast<int>(params.r)),
        oracle_(oracle),
        budget_(budget),
        stats_(stats),
        start_(std::chrono::steady_clock::now()) {
    shift_ = {static_cast<double>(sa) / params.t,
              static_cast<double>(sb) / params.t};
    if (m_ > 64) throw BudgetExceededError("portal count m too large for DP");
    build_tree();
    prepare_oracle();
  }

  Tour solve(double cap) {
    Tour tour;
    tour.length = kInf;
    const int n = static_cast<int>(inst_.cities.size());
    if (n <= 1) {
      tour.length = 0.0;
      tour.city_cycle_length = 0.0;
      if (n == 1) tour.order = {0};
      return tour;
    }
    double v = closed_value(0, cap);
    finish_stats();
    if (v >= cap || v == kInf) return tour;
    Segment loop = expand_closed(0);
    tour.length = v;
    tour.order = loop.cities;
    double walk = 0.0;
    for (size_t i = 0; i + 1 < loop.pts.size(); ++i)
      walk += oracle_.d(loop.pts[i], loop.pts[i + 1]);
    walk += oracle_.d(loop.pts.back(), loop.pts.front());
    if (std::abs(walk - v) > 1e-9 * std::max(1.0, std::abs(v)) + 1e-9)
      throw std::runtime_error("DP reconstruction does not reproduce cost");
    double cyc = 0.0;
    for (size_t i = 0; i < tour.order.size(); ++i)
      cyc += oracle_.d(inst_.cities[tour.order[i]],
                       inst_.cities[tour.order[(i + 1) % tour.order.size()]]);
    tour.city_cycle_length = cyc;
    return tour;
  }

 private:
  const TspInstance& inst_;
  PtasParams params_;
  int m_, r_;
  PortalOracle& oracle_;
  SolveBudget budget_;
  DpStats* stats_;
  std::chrono::steady_clock::time_point start_;
  Vec2 shift_;
  std::vector<QtSquare> tree_;
  long long work_ = 0;

  // memoization: open square / open half (0 bottom, 1 top) / closed square /
  // closed half keyed per tree node
  std::vector<std::map<Key, Entry>> open_sq_;
  std::vector<std::array<std::map<Key, Entry>, 2>> open_half_;
  std::vector<std::array<std::optional<Entry>, 3>> closed_;  // [sq][0]=sq,1=B,2=T

  Vec2 to_u(const Vec2& x) const {
    auto wrap = [](double v) {
      v = std::fmod(v, 1.0);
      return v < 0.0 ? v + 1.0 : v;
    };
    return {wrap(x.x - shift_.x), wrap(x.y - shift_.y)};
  }
  Vec2 to_x(const Vec2& u) const {
    auto wrap = [](double v) {
      v = std::fmod(v, 1.0);
      return v < 0.0 ? v + 1.0 : v;
    };
    return {wrap(u.x + shift_.x), wrap(u.y + shift_.y)};
  }

  long long cnt_merge_ = 0, cnt_inst_ = 0, cnt_complete_ = 0,
            cnt_value_ = 0, cnt_memo_hit_ = 0;

  void trace_dump() const {
    if (!std::getenv("GTS_DP_TRACE")) return;
    size_t entries = 0;
    for (const auto& m : open_sq_) entries += m.size();
    for (const auto& a : open_half_) entries += a[0].size() + a[1].size();
    std::fprintf(stderr,
                 "[dp] work=%lld merge=%lld inst=%lld complete=%lld "
                 "value=%lld memo_hit=%lld open_entries=%zu\n",
                 work_, cnt_merge_, cnt_inst_, cnt_complete_, cnt_value_,
                 cnt_memo_hit_, entries);
  }

  void tick(long long units = 1) {
    work_ += units;
    if ((work_ & 1023) == 0) {
      double sec = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start_)
                       .count();
      if (sec > budget_.max_seconds) {
        trace_dump();
        throw BudgetExceededError("DP wall-clock budget exceeded");
      }
    }
    if (work_ > budget_.max_states * 64) {
      trace_dump();
      throw BudgetExceededError("DP state budget exceeded");
    }
  }

  void finish_stats() {
    if (!stats_) return;
    stats_->states += work_;
    stats_->seconds += std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start_)
                           .count();
  }

  void build_tree() {
    std::vector<Vec2> cu;
    for (const auto& c : inst_.cities) cu.push_back(to_u(c));
    tree_.push_back(QtSquare{});
    for (size_t i = 0; i < cu.size(); ++i)
      tree_[0].cities.push_back(static_cast<int>(i));
    // subdivide while a square holds >= 2 distinct city positions
    for (size_t idx = 0; idx < tree_.size(); ++idx) {
      QtSquare sq = tree_[idx];
      bool split = false;
      for (size_t a = 0; a < sq.cities.size() && !split; ++a)
        for (size_t b = a + 1; b < sq.cities.size() && !split; ++b)
          if (dist(cu[sq.cities[a]], cu[sq.cities[b]]) > 1e-12) split = true;
      if (!split || sq.depth >= 40) continue;
      tree_[idx].leaf = false;
      double h = sq.size / 2.0;
      std::array<QtSquare, 4> ch;
      for (int q = 0; q < 4; ++q) {
        ch[q].u0 = sq.u0 + (q % 2) * h;
        ch[q].v0 = sq.v0 + (q / 2) * h;
        ch[q].size = h;
        ch[q].depth = sq.depth + 1;
      }
      for (int ci : sq.cities) {
        const Vec2& p = cu[ci];
        int qx = p.x >= sq.u0 + h ? 1 : 0;
        int qy = p.y >= sq.v0 + h ? 1 : 0;
        ch[qx + 2 * qy].cities.push_back(ci);
      }
      for (int q = 0; q < 4; ++q) {
        tree_[idx].child[q] = static_cast<int>(tree_.size());
        tree_.push_back(ch[q]);
      }
    }
    open_sq_.resize(tree_.size());
    open_half_.resize(tree_.size());
    closed_.resize(tree_.size());
    city_u_ = std::move(cu);
  }
  std::vector<Vec2> city_u_;

  void prepare_oracle() {
    std::vector<Vec2> pts = inst_.cities;
    for (const auto& sq : tree_) {
      URegion g = square_geom(sq);
      for (int e = 0; e < 4; ++e)
        for (int k = 0; k <= m_; ++k) pts.push_back(to_x(g.point(e, k)));
    }
    oracle_.prepare(pts);
  }

  URegion square_geom(const QtSquare& s) const {
    URegion g;
    g.m = m_;
    double a = s.u0, b = s.v0, sz = s.size;
    g.corners = {{a, b}, {a + sz, b}, {a + sz, b + sz}, {a, b + sz}};
    return g;
  }
  // half 0 = bottom (children SW=0, SE=1), half 1 = top (NW=2, NE=3)
  URegion half_geom(const QtSquare& s, int half) const {
    URegion g;
    g.m = m_;
    double a = s.u0, sz = s.size, h = sz / 2.0;
    double b = s.v0 + (half == 1 ? h : 0.0);
    g.corners = {{a, b},          {a + h, b},     {a + sz, b},
                 {a + sz, b + h}, {a + h, b + h}, {a, b + h}};
    return g;
  }

  double pair_dist(const Vec2& ua, const Vec2& ub) {
    return oracle_.d(to_x(ua), to_x(ub));
  }

  // ---- closed-form regions ----

  double key_direct_sum(const Key& key, const URegion& g) {
    double s = 0.0;
    for (const auto& [a, b] : key) s += pair_dist(g.point_of(a), g.point_of(b));
    return s;
  }

  // Lower bound for an open region: every required pair costs at least its
  // direct distance, and some path must additionally detour through each
  // city (take the single worst city, cheapest-insertion style).
  double open_lb(const Key& key, const URegion& g,
                 const std::vector<int>& cities) {
    std::vector<std::pair<Vec2, Vec2>> ends;
    double s = 0.0;
    for (const auto& [a, b] : key) {
      ends.push_back({g.point_of(a), g.point_of(b)});
      s += pair_dist(ends.back().first, ends.back().second);
    }
    double worst = 0.0;
    for (int c : cities) {
      Vec2 cu = to_u(inst_.cities[c]);
      double det = kInf;
      for (const auto& [a, b] : ends)
        det = std::min(det,
                       pair_dist(a, cu) + pair_dist(cu, b) - pair_dist(a, b));
      worst = std::max(worst, det);
    }
    return s + worst;
  }

  // Distinct city positions (u) with their member city indices.
  std::vector<std::pair<Vec2, std::vector<int>>> city_groups(
      const std::vector<int>& cities) {
    std::vector<std::pair<Vec2, std::vector<int>>> out;
    for (int ci : cities) {
      bool found = false;
      for (auto& [p, lst] : out)
        if (dist(p, city_u_[ci]) <= 1e-12) {
          lst.push_back(ci);
          found = true;
          break;
        }
      if (!found) out.push_back({city_u_[ci], {ci}});
    }
    return out;
  }

  // Optimal placement of the (rare, tiny) set of city groups into the key's
  // paths. Returns value and fills choice.
  double leaf_value(const Key& key, const URegion& g,
                    const std::vector<int>& cities, MergeChoice* choice) {
    auto groups = city_groups(cities);
    if (key.empty()) return groups.empty() ? 0.0 : kInf;
    double base = key_direct_sum(key, g);
    if (groups.empty()) {
      if (choice) choice->kase = 3;
      return base;
    }
    if (groups.size() == 1) {
      double best = kInf;
      int bestp = -1;
      for (size_t i = 0; i < key.size(); ++i) {
        Vec2 a = g.point_of(key[i].first), b = g.point_of(key[i].second);
        double delta = pair_dist(a, groups[0].first) +
                       pair_dist(groups[0].first, b) - pair_dist(a, b);
        if (delta < best) { best = delta; bestp = static_cast<int>(i); }
      }
      if (choice) {
        choice->kase = 3;
        choice->leaf_pair = bestp;
        choice->leaf_order = {0};
      }
      return base + best;
    }
    if (groups.size() > 5)
      throw BudgetExceededError("leaf with too many distinct city positions");
    // brute force: insert all groups, in some order, into one pair
    // (multi-group leaves only arise at the depth guard; keep them simple by
    // routing all groups through the best single path in the best order)
    std::vector<int> perm(groups.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    double best = kInf;
    int bestp = -1;
    std::vector<int> bestperm;
    std::sort(perm.begin(), perm.end());
    do {
      for (size_t i = 0; i < key.size(); ++i) {
        Vec2 a = g.point_of(key[i].first), b = g.point_of(key[i].second);
        double len = pair_dist(a, groups[perm[0]].first);
        for (size_t k = 0; k + 1 < perm.size(); ++k)
          len += pair_dist(groups[perm[k]].first, groups[perm[k + 1]].first);
        len += pair_dist(groups[perm.back()].first, b);
        double delta = len - pair_dist(a, b);
        if (delta < best) { best = delta; bestp = static_cast<int>(i);
          bestperm = perm; }
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (choice) {
      choice->kase = 3;
      choice->leaf_pair = bestp;
      choice->leaf_order = bestperm;
    }
    return base + best;
  }

  // ---- generic merge ----

  struct Side {
    URegion geom;
    std::vector<int> cities;  // city indices inside
    // child value callback: (key, cap) -> value
    std::function<double(const Key&, double)> value;
  };

  // Midline slot: point + cap group.
  struct MidSlot {
    Vec2 u;
    int group;
  };

  // On-the-fly merge enumeration. Chains grow from parent endpoints and
  // create midline crossings on demand, so a search prefix is shared by
  // every crossing multiset that extends it and infeasible pairings are
  // never materialized. Candidates come nearest-first; half
  // nearest-potential-partner weights for endpoints still awaiting their
  // edge plus per-side city detour floors give an additive bound against
  // the incumbent.
  struct MergeEnum {
    Solver& S;
    Side& A;
    Side& B;
    bool closed;
    double cap;
    Entry* entry;
    double best = kInf;

    // static per merge
    int n_pu = 0, n_slots = 0, group_cap = 0, max_total = 0;
    std::vector<Vec2> pts{};     // pid -> u point (parents, slots, cities)
    std::vector<double> D{};     // pairwise oracle distances
    std::vector<int> side_of{};  // parent flat -> side (0 = A, 1 = B)
    std::vector<Code> pcode{};   // parent flat -> code in its side's geometry
    std::vector<double> prank{};
    std::vector<std::array<Code, 2>> scode{};  // slot codes per side
    std::vector<std::array<double, 2>> srank{};
    std::vector<char> usable{};  // slot lies on both side boundaries
    std::vector<int> sgroup{};   // slot -> cap group
    std::vector<std::array<double, 2>> wslot{};  // monotone weight per side
    std::vector<double> wpar{};                  // parent endpoint weight
    double base = 0.0;  // city detour floors, both sides
    std::vector<std::vector<int>> snbr{};  // per pid: usable slots nearest-first
    std::array<int, 2> ep_limit{0, 0};
    std::array<char, 2> has_cities{0, 0};

    // search state
    std::array<std::vector<EP>, 2> eps{};  // creation order
    std::array<std::vector<std::pair<int, int>>, 2> pairs{};
    std::array<std::array<int, 16>, 2> edge_cnt{};
    std::vector<int> gcnt{};       // instances per cap group
    std::vector<int> inst_slot{};  // crossing instance -> slot
    std::vector<int> flat_ep{};    // parent flat -> EP index on its side
    double sum = 0.0;  // direct cost of the pairs picked so far
    double rem = 0.0;  // weights of endpoints still awaiting their pair
    int s0 = 0;        // closed: minimal slot allowed (canonical start)

    double d(int a, int b) const {
      return D[static_cast<size_t>(a) * pts.size() + b];
    }

    void run() {
      rem = base;
      for (int f = 0; f < n_pu; ++f) rem += wpar[f];
      if (rem >= std::min(cap, best)) return;
      flat_ep.assign(n_pu, -1);
      for (int f = 0; f < n_pu; ++f) {
        int side = side_of[f];
        int edge = static_cast<int>(pcode[f] / 4096);
        if (edge >= 16 || ++edge_cnt[side][edge] > S.r_) return;
        EP e;
        e.u = pts[f];
        e.parent_flat = f;
        e.pid = f;
        e.code = pcode[f];
        e.rank = prank[f];
        flat_ep[f] = static_cast<int>(eps[side].size());
        eps[side].push_back(e);
      }
      if (static_cast<int>(eps[0].size()) > ep_limit[0] ||
          static_cast<int>(eps[1].size()) > ep_limit[1])
        return;
      if (closed) {
        // the cycle must cross the midline; start it at its smallest slot
        for (int s = 0; s < n_slots; ++s) {
          if (!usable[s]) continue;
          s0 = s;
          if (!push_instance(s)) continue;
          int a = static_cast<int>(eps[0].size()) - 1;
          int b = static_cast<int>(eps[1].size()) - 1;
          rem += wslot[s][1];  // the twin waits as the cycle's target
          extend(0, a, 1, b, 0);
          rem -= wslot[s][1];
          pop_instance(s);
        }
      } else {
        start_chain(0);
      }
    }

    // crossing-instance bookkeeping; returns false if caps forbid it
    bool push_instance(int s) {
      if (static_cast<int>(inst_slot.size()) >= max_total) return false;
      if (gcnt[sgroup[s]] >= group_cap) return false;
      int e0 = static_cast<int>(scode[s][0] / 4096);
      int e1 = static_cast<int>(scode[s][1] / 4096);
      if (edge_cnt[0][e0] >= S.r_ || edge_cnt[1][e1] >= S.r_) return false;
      if (static_cast<int>(eps[0].size()) >= ep_limit[0] ||
          static_cast<int>(eps[1].size()) >= ep_limit[1])
        return false;
      int inst = static_cast<int>(inst_slot.size());
      for (int side = 0; side < 2; ++side) {
        EP e;
        e.u = pts[n_pu + s];
        e.mid = inst;
        e.pid = n_pu + s;
        e.code = scode[s][side];
        e.rank = srank[s][side];
        eps[side].push_back(e);
      }
      ++edge_cnt[0][e0];
      ++edge_cnt[1][e1];
      ++gcnt[sgroup[s]];
      inst_slot.push_back(s);
      return true;
    }

    void pop_instance(int s) {
      inst_slot.pop_back();
      --gcnt[sgroup[s]];
      --edge_cnt[0][static_cast<int>(scode[s][0] / 4096)];
      --edge_cnt[1][static_cast<int>(scode[s][1] / 4096)];
      eps[0].pop_back();
      eps[1].pop_back();
    }

    void start_chain(int pk) {
      if (2 * pk == n_pu) {
        complete();
        return;
      }
      int f = 2 * pk;
      rem -= wpar[f];
      extend(side_of[f], flat_ep[f], side_of[f + 1], flat_ep[f + 1], pk);
      rem += wpar[f];
    }

    // noncrossing check in boundary-rank space; small sides may cross
    bool cross_ok(int side, double ra, double rb, int nsize) const {
      if (nsize <= kFullMatchLimit) return true;
      double lo = std::min(ra, rb), hi = std::max(ra, rb);
      for (const auto& [x, y] : pairs[side]) {
        double rx = eps[side][x].rank, ry = eps[side][y].rank;
        bool xin = rx > lo && rx < hi;
        bool yin = ry > lo && ry < hi;
        if (xin != yin) return false;
      }
      return true;
    }

    double ep_w(int side, int i) const {
      const EP& e = eps[side][i];
      return e.parent_flat >= 0 ? wpar[e.parent_flat]
                                : wslot[inst_slot[e.mid]][side];
    }

    // Grow the chain at `cur`; it must end at (tside, tidx). Pairing with a
    // fresh crossing instance continues on the twin side immediately, so
    // every instance endpoint is consumed the moment it exists.
    void extend(int side, int cur, int tside, int tidx, int pk) {
      S.tick();
      const int cpid = eps[side][cur].pid;
      const int curmid = eps[side][cur].mid;
      const double ra = eps[side][cur].rank;
      const bool tgt_here = side == tside;
      const double dt = tgt_here ? d(cpid, eps[tside][tidx].pid) : kInf;
      bool tgt_done = false;
      auto try_target = [&]() {
        tgt_done = true;
        double wt = ep_w(tside, tidx);
        if (sum + dt + rem - wt >= std::min(cap, best)) return;
        if (!cross_ok(side, ra, eps[side][tidx].rank,
                      static_cast<int>(eps[side].size())))
          return;
        pairs[side].push_back({std::min(cur, tidx), std::max(cur, tidx)});
        sum += dt;
        rem -= wt;
        if (closed)
          complete();
        else
          start_chain(pk + 1);
        rem += wt;
        sum -= dt;
        pairs[side].pop_back();
      };
      const int other = 1 - side;
      // A chain that just crossed into a city-free side has nothing to
      // serve there: its pairs are priced at plain direct distance, so
      // re-crossing anywhere only lengthens the route. Head straight for
      // the target.
      const bool stuck = !has_cities[side] && curmid >= 0;
      static const std::vector<int> kNone;
      for (int s : stuck ? kNone : snbr[cpid]) {
        double ds = d(cpid, n_pu + s);
        if (tgt_here && !tgt_done && dt <= ds) try_target();
        double bound = std::min(cap, best);
        if (sum + ds + rem >= bound) break;  // nearest-first: rest fail too
        if (closed && s < s0) continue;
        if (sum + ds + wslot[s][other] + rem >= bound) continue;
        if (!cross_ok(side, ra, srank[s][side],
                      static_cast<int>(eps[side].size()) + 1))
          continue;
        if (!push_instance(s)) continue;
        ++S.cnt_inst_;
        int ni = static_cast<int>(eps[side].size()) - 1;
        int twin = static_cast<int>(eps[other].size()) - 1;
        pairs[side].push_back({std::min(cur, ni), std::max(cur, ni)});
        sum += ds;
        extend(other, twin, tside, tidx, pk);
        sum -= ds;
        pairs[side].pop_back();
        pop_instance(s);
      }
      if (tgt_here && !tgt_done) try_target();
    }

    void complete() {
      ++S.cnt_complete_;
      double bound = std::min(cap, best);
      if (sum + base >= bound) return;
      Key keyA, keyB;
      std::vector<std::pair<int, bool>> mapA, mapB;
      S.build_child_key(eps[0], to_match(pairs[0], eps[0].size()), &keyA,
                        &mapA);
      S.build_child_key(eps[1], to_match(pairs[1], eps[1].size()), &keyB,
                        &mapB);
      // bound each side by the other side's lower bound (including the
      // detours its cities force), not just its direct pair sum
      double lbB;
      if (B.cities.empty()) {
        lbB = 0.0;
        for (const auto& [i, j] : pairs[1])
          lbB += d(eps[1][i].pid, eps[1][j].pid);
      } else {
        lbB = S.open_lb(keyB, B.geom, B.cities);
      }
      if (!A.cities.empty() &&
          S.open_lb(keyA, A.geom, A.cities) + lbB >= bound)
        return;
      double vA = A.value(keyA, bound - lbB);
      S.tick(4);
      if (vA + lbB >= bound) return;
      double vB = B.value(keyB, bound - vA);
      S.tick(4);
      double total = vA + vB;
      if (total < bound && total < best) {
        best = total;
        if (entry) {
          entry->choice.kase = 0;
          entry->choice.epA = eps[0];
          entry->choice.epB = eps[1];
          // normalize to the order build_child_key enumerates (ascending
          // smaller endpoint) so map indices line up at reconstruction
          entry->choice.pairsA = pairs[0];
          entry->choice.pairsB = pairs[1];
          std::sort(entry->choice.pairsA.begin(), entry->choice.pairsA.end());
          std::sort(entry->choice.pairsB.begin(), entry->choice.pairsB.end());
          entry->choice.keyA = keyA;
          entry->choice.keyB = keyB;
          entry->choice.mapA = mapA;
          entry->choice.mapB = mapB;
        }
      }
    }

    static std::vector<int> to_match(
        const std::vector<std::pair<int, int>>& pairs, size_t q) {
      std::vector<int> m(q, -1);
      for (const auto& [i, j] : pairs) {
        m[i] = j;
        m[j] = i;
      }
      return m;
    }
  };

  // Prices the cheapest composition of the two sides realizing parent_key
  // (open) or a single covering cycle (closed). Returns best value below cap.
  double merge(const Key& parent_key, const URegion* parent_geom, Side& A,
               Side& B, const std::vector<MidSlot>& slots, int group_cap,
               bool closed, double cap, Entry* entry) {
    ++cnt_merge_;
    MergeEnum me{*this, A, B, closed, cap, entry};
    for (const auto& [a, b] : parent_key) {
      me.pts.push_back(parent_geom->point_of(a));
      me.pts.push_back(parent_geom->point_of(b));
    }
    me.n_pu = static_cast<int>(me.pts.size());
    me.n_slots = static_cast<int>(slots.size());
    me.group_cap = group_cap;
    me.max_total = 4 * r_;
    me.side_of.assign(me.n_pu, 0);
    me.pcode.resize(me.n_pu);
    me.prank.resize(me.n_pu);
    for (int i = 0; i < me.n_pu; ++i) {
      std::optional<Code> c;
      if ((c = A.geom.locate(me.pts[i]))) {
        me.side_of[i] = 0;
        me.prank[i] = A.geom.rank(*c);
      } else if ((c = B.geom.locate(me.pts[i]))) {
        me.side_of[i] = 1;
        me.prank[i] = B.geom.rank(*c);
      } else {
        return kInf;  // malformed
      }
      me.pcode[i] = *c;
    }
    me.scode.resize(slots.size());
    me.srank.resize(slots.size());
    me.usable.assign(slots.size(), 1);
    me.sgroup.resize(slots.size());
    int ngroups = 0;
    for (size_t s = 0; s < slots.size(); ++s) {
      me.sgroup[s] = slots[s].group;
      ngroups = std::max(ngroups, slots[s].group + 1);
      me.pts.push_back(slots[s].u);
      for (int side = 0; side < 2; ++side) {
        const URegion& g = side == 0 ? A.geom : B.geom;
        auto c = g.locate(slots[s].u);
        if (!c) {
          me.usable[s] = 0;
          break;
        }
        me.scode[s][side] = *c;
        me.srank[s][side] = g.rank(*c);
      }
    }
    me.gcnt.assign(std::max(ngroups, 1), 0);
    std::array<std::vector<int>, 2> citypids;
    for (int side = 0; side < 2; ++side)
      for (int c : (side == 0 ? A : B).cities) {
        citypids[side].push_back(static_cast<int>(me.pts.size()));
        me.pts.push_back(to_u(inst_.cities[c]));
      }
    const int np = static_cast<int>(me.pts.size());
    me.D.resize(static_cast<size_t>(np) * np, 0.0);
    for (int i = 0; i < np; ++i)
      for (int j = i + 1; j < np; ++j)
        me.D[static_cast<size_t>(i) * np + j] =
            me.D[static_cast<size_t>(j) * np + i] =
                pair_dist(me.pts[i], me.pts[j]);
    tick(static_cast<long long>(np) * np);
    me.has_cities = {A.cities.empty() ? char(0) : char(1),
                     B.cities.empty() ? char(0) : char(1)};
    me.ep_limit = {std::max(4, A.geom.edges()) * r_,
                   std::max(4, B.geom.edges()) * r_};

    // Potential partner points per side: parent endpoints plus every usable
    // slot. Realized endpoint sets are subsets, so nearest-potential-partner
    // weights lower-bound realized matching edges (half per endpoint).
    std::array<std::vector<int>, 2> cand;
    for (int i = 0; i < me.n_pu; ++i) cand[me.side_of[i]].push_back(i);
    for (size_t s = 0; s < slots.size(); ++s)
      if (me.usable[s])
        for (int side = 0; side < 2; ++side)
          cand[side].push_back(me.n_pu + static_cast<int>(s));
    auto half_nearest = [&](int pid, int side) {
      double m = kInf;
      for (int q : cand[side])
        if (q != pid) m = std::min(m, me.d(pid, q));
      return m < kInf ? 0.5 * m : 0.0;
    };
    me.wpar.resize(me.n_pu);
    for (int i = 0; i < me.n_pu; ++i)
      me.wpar[i] = half_nearest(i, me.side_of[i]);
    // each side's worst city forces at least its cheapest possible detour,
    // additive with the direct pair sums
    auto slack_floor = [&](const std::vector<int>& city_pids, int side) {
      double worst = 0.0;
      for (int c : city_pids) {
        double m = kInf;
        const auto& cs = cand[side];
        for (size_t i = 0; i < cs.size() && m > 0.0; ++i)
          for (size_t j = i + 1; j < cs.size(); ++j)
            m = std::min(
                m, me.d(cs[i], c) + me.d(c, cs[j]) - me.d(cs[i], cs[j]));
        if (m < kInf) worst = std::max(worst, m);
      }
      return worst;
    };
    me.base = slack_floor(citypids[0], 0) + slack_floor(citypids[1], 1);
    me.wslot.assign(slots.size(), {0.0, 0.0});
    for (size_t s = 0; s < slots.size(); ++s) {
      if (!me.usable[s]) continue;
      int pid = me.n_pu + static_cast<int>(s);
      // a city-free side never pays for a slot paired with itself (such
      // pairings are dominated), so every copy there costs its weight; a
      // side with cities may absorb copies into zero-length hops
      if (A.cities.empty()) me.wslot[s][0] = half_nearest(pid, 0);
      if (B.cities.empty()) me.wslot[s][1] = half_nearest(pid, 1);
    }
    // nearest-first crossing candidates for every point a chain can sit on
    me.snbr.assign(np, {});
    for (int p = 0; p < me.n_pu + me.n_slots; ++p) {
      auto& o = me.snbr[p];
      for (int s = 0; s < me.n_slots; ++s)
        if (me.usable[s]) o.push_back(s);
      std::sort(o.begin(), o.end(), [&](int x, int y) {
        return me.d(p, me.n_pu + x) < me.d(p, me.n_pu + y);
      });
    }
    me.run();
    return me.best;
  }

  void build_child_key(const std::vector<EP>& eps, const std::vector<int>& m,
                       Key* key, std::vector<std::pair<int, bool>>* map) {
    struct Item {
      KeyPair p;
      int pair_idx;
      bool flipped;
    };
    std::vector<Item> items;
    int pi = 0;
    for (int i = 0; i < static_cast<int>(m.size()); ++i) {
      if (m[i] <= i) continue;
      Code ca = eps[i].code;
      Code cb = eps[m[i]].code;
      bool flip = cb < ca;
      items.push_back({{std::min(ca, cb), std::max(ca, cb)}, pi, flip});
      ++pi;
    }
    std::stable_sort(items.begin(), items.end(),
                     [](const Item& x, const Item& y) { return x.p < y.p; });
    key->clear();
    map->assign(items.size(), {0, false});
    for (size_t k = 0; k < items.size(); ++k) {
      key->push_back(items[k].p);
      (*map)[items[k].pair_idx] = {static_cast<int>(k), items[k].flipped};
    }
  }

  // ---- region values ----

  double memo_lookup(std::map<Key, Entry>& memo, const Key& key, double cap,
                     bool* hit, Entry** slot) {
    ++cnt_value_;
    auto it = memo.find(key);
    if (it != memo.end()) {
      Entry& e = it->second;
      if (e.value < e.cap) { ++cnt_memo_hit_; *hit = true; *slot = &e; return e.value; }
      if (cap <= e.cap) { ++cnt_memo_hit_; *hit = true; *slot = &e; return kInf; }
    }
    *hit = false;
    Entry& e = memo[key];
    *slot = &e;
    tick(8);
    return 0.0;
  }

  double open_square(int sqi, const Key& key, double cap) {
    if (cap <= 0.0) return kInf;
    const QtSquare& sq = tree_[sqi];
    URegion g = square_geom(sq);
    if (sq.cities.empty()) return key.empty() ? 0.0 : key_direct_sum(key, g);
    if (key.empty()) return kInf;  // cities but no path
    bool hit = false;
    Entry* e = nullptr;
    double v = memo_lookup(open_sq_[sqi], key, cap, &hit, &e);
    if (hit) return v;
    if (open_lb(key, g, sq.cities) >= cap) {
      e->value = kInf;
      e->cap = cap;
      return kInf;
    }
    if (sq.leaf) {
      e->value = leaf_value(key, g, sq.cities, &e->choice);
      e->cap = kInf;
      return e->value;
    }
    double best = merge_square(sqi, key, g, cap, e, /*closed=*/false);
    e->value = best;
    e->cap = cap;
    return best;
  }

  double open_half(int sqi, int half, const Key& key, double cap) {
    if (cap <= 0.0) return kInf;
    const QtSquare& sq = tree_[sqi];
    URegion g = half_geom(sq, half);
    int cA = sq.child[half == 0 ? 0 : 2];
    int cB = sq.child[half == 0 ? 1 : 3];
    bool empty = tree_[cA].cities.empty() && tree_[cB].cities.empty();
    if (empty) return key.empty() ? 0.0 : key_direct_sum(key, g);
    if (key.empty()) return kInf;
    bool hit = false;
    Entry* e = nullptr;
    double v = memo_lookup(open_half_[sqi][half], key, cap, &hit, &e);
    if (hit) return v;
    std::vector<int> hc = tree_[cA].cities;
    hc.insert(hc.end(), tree_[cB].cities.begin(), tree_[cB].cities.end());
    if (open_lb(key, g, hc) >= cap) {
      e->value = kInf;
      e->cap = cap;
      return kInf;
    }
    double best = merge_half(sqi, half, key, g, cap, e, /*closed=*/false);
    e->value = best;
    e->cap = cap;
    return best;
  }

  std::vector<MidSlot> square_mid_slots(const QtSquare& sq) {
    // horizontal midline: interior portal positions of the two lower edges
    // of the top half (left piece group 0, right piece + center group 1)
    std::vector<MidSlot> slots;
    URegion t = half_geom(sq, 1);
    for (int k = 1; k <= m_; ++k) slots.push_back({t.point(0, k), 0});
    slots.push_back({t.point(1, 0), 1});
    for (int k = 1; k <= m_; ++k) slots.push_back({t.point(1, k), 1});
    return slots;
  }

  std::vector<MidSlot> half_mid_slots(const QtSquare& sq, int half) {
    // vertical shared edge between the two children of this half
    std::vector<MidSlot> slots;
    int cA = sq.child[half == 0 ? 0 : 2];
    URegion a = square_geom(tree_[cA]);
    for (int k = 1; k <= m_; ++k) slots.push_back({a.point(1, k), 0});
    return slots;
  }

  double merge_square(int sqi, const Key& key, const URegion& g, double cap,
                      Entry* e, bool closed) {
    const QtSquare& sq = tree_[sqi];
    Side A, B;
    A.geom = half_geom(sq, 0);
    B.geom = half_geom(sq, 1);
    A.cities.insert(A.cities.end(), tree_[sq.child[0]].cities.begin(),
                    tree_[sq.child[0]].cities.end());
    A.cities.insert(A.cities.end(), tree_[sq.child[1]].cities.begin(),
                    tree_[sq.child[1]].cities.end());
    B.cities.insert(B.cities.end(), tree_[sq.child[2]].cities.begin(),
                    tree_[sq.child[2]].cities.end());
    B.cities.insert(B.cities.end(), tree_[sq.child[3]].cities.begin(),
                    tree_[sq.child[3]].cities.end());
    A.value = [this, sqi](const Key& k, double c) {
      return open_half(sqi, 0, k, c);
    };
    B.value = [this, sqi](const Key& k, double c) {
      return open_half(sqi, 1, k, c);
    };
    return merge(key, &g, A, B, square_mid_slots(sq), r_, closed, cap, e);
  }

  double merge_half(int sqi, int half, const Key& key, const URegion& g,
                    double cap, Entry* e, bool closed) {
    const QtSquare& sq = tree_[sqi];
    int cA = sq.child[half == 0 ? 0 : 2];
    int cB = sq.child[half == 0 ? 1 : 3];
    Side A, B;
    A.geom = square_geom(tree_[cA]);
    B.geom = square_geom(tree_[cB]);
    A.cities = tree_[cA].cities;
    B.cities = tree_[cB].cities;
    A.value = [this, cA](const Key& k, double c) {
      return open_square(cA, k, c);
    };
    B.value = [this, cB](const Key& k, double c) {
      return open_square(cB, k, c);
    };
    return merge(key, &g, A, B, half_mid_slots(sq, half), r_, closed, cap, e);
  }

  double closed_value(int sqi, double cap) {
    if (cap <= 0.0) return kInf;
    const QtSquare& sq = tree_[sqi];
    auto groups = city_groups(sq.cities);
    if (groups.size() <= 1) {
      auto& slot = closed_[sqi][0];
      Entry e;
      e.value = 0.0;
      e.cap = kInf;
      e.choice.kase = 3;
      slot = e;
      return 0.0;
    }
    auto& slot = closed_[sqi][0];
    if (slot && slot->value < slot->cap) return slot->value;
    if (slot && cap <= slot->cap) return kInf;
    Entry e;
    double best = kInf;
    if (sq.leaf) {
      // tiny exact tour over the distinct positions (depth-guard case)
      best = closed_brute(groups, &e);
    } else {
      // all cities in one half: close the tour lower down
      std::vector<int> halfA, halfB;
      halfA.insert(halfA.end(), tree_[sq.child[0]].cities.begin(),
                   tree_[sq.child[0]].cities.end());
      halfA.insert(halfA.end(), tree_[sq.child[1]].cities.begin(),
                   tree_[sq.child[1]].cities.end());
      halfB.insert(halfB.end(), tree_[sq.child[2]].cities.begin(),
                   tree_[sq.child[2]].cities.end());
      halfB.insert(halfB.end(), tree_[sq.child[3]].cities.begin(),
                   tree_[sq.child[3]].cities.end());
      bool inA = halfB.empty();
      bool inB = halfA.empty();
      if (inA) {
        double v = closed_half(sqi, 0, std::min(cap, best));
        if (v < best) { best = v; e.choice.kase = 1; }
      }
      if (inB) {
        double v = closed_half(sqi, 1, std::min(cap, best));
        if (v < best) { best = v; e.choice.kase = 2; }
      }
      Entry me;
      URegion g = square_geom(sq);
      double v = merge_square(sqi, Key{}, g, std::min(cap, best), &me, true);
      if (v < best) { best = v; e = me; e.choice.kase = 0; }
    }
    e.value = best;
    e.cap = cap;
    if (e.choice.kase == 1 || e.choice.kase == 2) {
      double tmp = e.value;
      MergeChoice keep = e.choice;
      e = Entry{};
      e.value = tmp;
      e.cap = cap;
      e.choice = keep;
    }
    slot = e;
    return best;
  }

  double closed_half(int sqi, int half, double cap) {
    if (cap <= 0.0) return kInf;
    const QtSquare& sq = tree_[sqi];
    int cA = sq.child[half == 0 ? 0 : 2];
    int cB = sq.child[half == 0 ? 1 : 3];
    auto& slot = closed_[sqi][1 + half];
    if (slot && slot->value < slot->cap) return slot->value;
    if (slot && cap <= slot->cap) return kInf;
    Entry e;
    double best = kInf;
    if (tree_[cB].cities.empty()) {
      double v = closed_value(cA, cap);
      if (v < best) { best = v; e.choice.kase = 1; }
    }
    if (tree_[cA].cities.empty()) {
      double v = closed_value(cB, std::min(cap, best));
      if (v < best) { best = v; e.choice.kase = 2; }
    }
    Entry me;
    URegion g = half_geom(sq, half);
    double v = merge_half(sqi, half, Key{}, g, std::min(cap, best), &me, true);
    if (v < best) { best = v; e = me; e.choice.kase = 0; }
    e.value = best;
    e.cap = cap;
    slot = e;
    return best;
  }

  double closed_brute(
      const std::vector<std::pair<Vec2, std::vector<int>>>& groups, Entry* e) {
    std::vector<int> perm(groups.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    double best = kInf;
    std::vector<int> bestperm;
    do {
      double len = 0.0;
      for (size_t i = 0; i < perm.size(); ++i)
        len += pair_dist(groups[perm[i]].first,
                         groups[perm[(i + 1) % perm.size()]].first);
      if (len < best) { best = len; bestperm = perm; }
    } while (std::next_permutation(perm.begin() + 1, perm.end()));
    e->choice.kase = 3;
    e->choice.leaf_order = bestperm;
    return best;
  }

  // ---- reconstruction ----

  Segment expand_pair_leaf(const Key& key, const URegion& g,
                           const std::vector<int>& cities,
                           const MergeChoice& ch, int pair_idx) {
    Segment seg;
    Vec2 a = g.point_of(key[pair_idx].first);
    Vec2 b = g.point_of(key[pair_idx].second);
    seg.pts.push_back(to_x(a));
    if (pair_idx == ch.leaf_pair) {
      auto groups = city_groups(cities);
      for (int gi : ch.leaf_order) {
        seg.pts.push_back(to_x(groups[gi].first));
        for (int ci : groups[gi].second) seg.cities.push_back(ci);
      }
    }
    seg.pts.push_back(to_x(b));
    return seg;
  }

  std::vector<Segment> expand_open_generic(const Key& key,
                                           const URegion& g,
                                           const Entry& e, int sqi, int kind,
                                           int half) {
    // kind 0 = square, 1 = half
    const QtSquare& sq = tree_[sqi];
    if (e.choice.kase == 3) {
      std::vector<Segment> out;
      for (size_t i = 0; i < key.size(); ++i)
        out.push_back(expand_pair_leaf(key, g, sq.cities, e.choice,
                                       static_cast<int>(i)));
      return out;
    }
    // merge case: recursively expand both sides, then stitch chains
    auto side_segments = [&](int side) -> std::vector<Segment> {
      const Key& ck = side == 0 ? e.choice.keyA : e.choice.keyB;
      if (kind == 0) {
        return expand_open_half(sqi, side, ck);
      }
      int child = sq.child[(half == 0 ? 0 : 2) + side];
      return expand_open_square(child, ck);
    };
    std::vector<Segment> segsA = side_segments(0);
    std::vector<Segment> segsB = side_segments(1);
    return stitch_open(key, e.choice, segsA, segsB);
  }

  // Walks parent chains through the two sides.
  std::vector<Segment> stitch_open(const Key& key, const MergeChoice& ch,
                                   std::vector<Segment>& segsA,
                                   std::vector<Segment>& segsB) {
    std::vector<Segment> out(key.size());
    // locate, per side, each endpoint's pair index and end
    auto find_pair = [&](const std::vector<std::pair<int, int>>& pairs,
                         int local) -> std::pair<int, int> {
      for (size_t k = 0; k < pairs.size(); ++k) {
        if (pairs[k].first == local) return {static_cast<int>(k), 0};
        if (pairs[k].second == local) return {static_cast<int>(k), 1};
      }
      return {-1, -1};
    };
    auto local_of_parent = [&](int side, int flat) {
      const auto& eps = side == 0 ? ch.epA : ch.epB;
      for (size_t i = 0; i < eps.size(); ++i)
        if (eps[i].parent_flat == flat) return static_cast<int>(i);
      return -1;
    };
    auto local_of_mid = [&](int side, int mid) {
      const auto& eps = side == 0 ? ch.epA : ch.epB;
      for (size_t i = 0; i < eps.size(); ++i)
        if (eps[i].mid == mid) return static_cast<int>(i);
      return -1;
    };
    auto seg_for = [&](int side, int pair_idx, bool reversed) -> Segment {
      const auto& mp = side == 0 ? ch.mapA : ch.mapB;
      auto& segs = side == 0 ? segsA : segsB;
      auto [kidx, flip] = mp[pair_idx];
      Segment s = segs[kidx];
      if (reversed != flip) {
        std::reverse(s.pts.begin(), s.pts.end());
        std::reverse(s.cities.begin(), s.cities.end());
      }
      return s;
    };
    for (size_t kp = 0; kp < key.size(); ++kp) {
      int flat = static_cast<int>(2 * kp);
      // find the side holding this endpoint
      int side = local_of_parent(0, flat) >= 0 ? 0 : 1;
      int local = local_of_parent(side, flat);
      Segment acc;
      while (true) {
        const auto& pairs = side == 0 ? ch.pairsA : ch.pairsB;
        auto [pidx, end] = find_pair(pairs, local);
        int other = end == 0 ? pairs[pidx].second : pairs[pidx].first;
        Segment s = seg_for(side, pidx, end == 1);
        append_segment(&acc, s);
        const auto& eps = side == 0 ? ch.epA : ch.epB;
        const EP& oe = eps[other];
        if (oe.parent_flat >= 0) break;  // chain finished at a parent end
        side = 1 - side;
        local = local_of_mid(side, oe.mid);
      }
      out[kp] = acc;
    }
    return out;
  }

  static void append_segment(Segment* acc, const Segment& s) {
    size_t start = 0;
    if (!acc->pts.empty() && !s.pts.empty() &&
        dist(acc->pts.back(), s.pts.front()) <= 1e-12)
      start = 1;
    for (size_t i = start; i < s.pts.size(); ++i) acc->pts.push_back(s.pts[i]);
    for (int c : s.cities) acc->cities.push_back(c);
  }

  std::vector<Segment> expand_open_square(int sqi, const Key& key) {
    const QtSquare& sq = tree_[sqi];
    URegion g = square_geom(sq);
    if (sq.cities.empty()) {
      std::vector<Segment> out;
      for (const auto& [a, b] : key) {
        Segment s;
        s.pts = {to_x(g.point_of(a)), to_x(g.point_of(b))};
        out.push_back(s);
      }
      return out;
    }
    const Entry& e = open_sq_[sqi].at(key);
    return expand_open_generic(key, g, e, sqi, 0, -1);
  }

  std::vector<Segment> expand_open_half(int sqi, int half, const Key& key) {
    const QtSquare& sq = tree_[sqi];
    URegion g = half_geom(sq, half);
    int cA = sq.child[half == 0 ? 0 : 2];
    int cB = sq.child[half == 0 ? 1 : 3];
    if (tree_[cA].cities.empty() && tree_[cB].cities.empty()) {
      std::vector<Segment> out;
      for (const auto& [a, b] : key) {
        Segment s;
        s.pts = {to_x(g.point_of(a)), to_x(g.point_of(b))};
        out.push_back(s);
      }
      return out;
    }
    const Entry& e = open_half_[sqi][half].at(key);
    return expand_open_generic(key, g, e, sqi, 1, half);
  }

  Segment expand_closed(int sqi) {
    const QtSquare& sq = tree_[sqi];
    const Entry& e = *closed_[sqi][0];
    auto groups = city_groups(sq.cities);
    Segment out;
    if (e.choice.kase == 3) {
      std::vector<int> order = e.choice.leaf_order;
      if (order.empty())
        for (size_t i = 0; i < groups.size(); ++i)
          order.push_back(static_cast<int>(i));
      for (int gi : order) {
        out.pts.push_back(to_x(groups[gi].first));
        for (int ci : groups[gi].second) out.cities.push_back(ci);
      }
      return out;
    }
    if (e.choice.kase == 1) return expand_closed_half(sqi, 0);
    if (e.choice.kase == 2) return expand_closed_half(sqi, 1);
    // crossing cycle: expand both halves and walk the single cycle
    std::vector<Segment> segsA = expand_open_half(sqi, 0, e.choice.keyA);
    std::vector<Segment> segsB = expand_open_half(sqi, 1, e.choice.keyB);
    return stitch_closed(e.choice, segsA, segsB);
  }

  Segment expand_closed_half(int sqi, int half) {
    const QtSquare& sq = tree_[sqi];
    const Entry& e = *closed_[sqi][1 + half];
    int cA = sq.child[half == 0 ? 0 : 2];
    int cB = sq.child[half == 0 ? 1 : 3];
    if (e.choice.kase == 1) return expand_closed(cA);
    if (e.choice.kase == 2) return expand_closed(cB);
    std::vector<Segment> segsA = expand_open_square(cA, e.choice.keyA);
    std::vector<Segment> segsB = expand_open_square(cB, e.choice.keyB);
    return stitch_closed(e.choice, segsA, segsB);
  }

  Segment stitch_closed(const MergeChoice& ch, std::vector<Segment>& segsA,
                        std::vector<Segment>& segsB) {
    Segment acc;
    auto local_of_mid = [&](int side, int mid) {
      const auto& eps = side == 0 ? ch.epA : ch.epB;
      for (size_t i = 0; i < eps.size(); ++i)
        if (eps[i].mid == mid) return static_cast<int>(i);
      return -1;
    };
    auto find_pair = [&](const std::vector<std::pair<int, int>>& pairs,
                         int local) -> std::pair<int, int> {
      for (size_t k = 0; k < pairs.size(); ++k) {
        if (pairs[k].first == local) return {static_cast<int>(k), 0};
        if (pairs[k].second == local) return {static_cast<int>(k), 1};
      }
      return {-1, -1};
    };
    auto seg_for = [&](int side, int pair_idx, bool reversed) -> Segment {
      const auto& mp = side == 0 ? ch.mapA : ch.mapB;
      auto& segs = side == 0 ? segsA : segsB;
      auto [kidx, flip] = mp[pair_idx];
      Segment s = segs[kidx];
      if (reversed != flip) {
        std::reverse(s.pts.begin(), s.pts.end());
        std::reverse(s.cities.begin(), s.cities.end());
      }
      return s;
    };
    // start from mid 0 on side A
    int side = 0;
    int local = local_of_mid(0, 0);
    int start_mid = 0;
    std::vector<std::vector<char>> used(2);
    used[0].assign(ch.pairsA.size(), 0);
    used[1].assign(ch.pairsB.size(), 0);
    while (true) {
      const auto& pairs = side == 0 ? ch.pairsA : ch.pairsB;
      auto [pidx, end] = find_pair(pairs, local);
      if (used[side][pidx]) break;
      used[side][pidx] = 1;
      int other = end == 0 ? pairs[pidx].second : pairs[pidx].first;
      Segment s = seg_for(side, pidx, end == 1);
      append_segment(&acc, s);
      const auto& eps = side == 0 ? ch.epA : ch.epB;
      int mid = eps[other].mid;
      if (mid == start_mid && side == 1) break;
      side = 1 - side;
      local = local_of_mid(side, mid);
    }
    // drop the duplicated closing waypoint if present
    if (acc.pts.size() > 1 && dist(acc.pts.front(), acc.pts.back()) <= 1e-12)
      acc.pts.pop_back();
    return acc;
  }
};

}  // namespace

Tour dp_solve(const TspInstance& inst, const PtasParams& params, int shift_a,
              int shift_b, PortalOracle& oracle, const SolveBudget& budget,
              DpStats* stats, double cap) {
  Solver solver(inst, params, shift_a, shift_b, oracle, budget, stats);
  Tour t = solver.solve(cap);
  t.shift_a = shift_a;
  t.shift_b = shift_b;
  return t;
}

}  // namespace detail
}  // namespace gts
