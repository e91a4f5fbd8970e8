#include "genus_tsp/ptas.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace gts {

namespace detail {
// Implemented in ptas_dp.cpp. Returns length = infinity if no configuration
// below cap exists.
Tour dp_solve(const TspInstance& inst, const PtasParams& params, int shift_a,
              int shift_b, PortalOracle& oracle, const SolveBudget& budget,
              DpStats* stats, double cap);
}  // namespace detail

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

int ceil_pow2_exponent(double v) {
  int e = 0;
  while (std::ldexp(1.0, e) < v) ++e;
  return e;
}

// Nearest-neighbor start plus 2-opt, used only to seed pruning caps.
double heuristic_tour(PortalOracle& oracle, const std::vector<Vec2>& cities) {
  const int n = static_cast<int>(cities.size());
  if (n < 2) return 0.0;
  std::vector<int> order;
  std::vector<char> used(n, 0);
  order.push_back(0);
  used[0] = 1;
  while (static_cast<int>(order.size()) < n) {
    int cur = order.back(), best = -1;
    double bd = kInf;
    for (int j = 0; j < n; ++j)
      if (!used[j]) {
        double d = oracle.d(cities[cur], cities[j]);
        if (d < bd) { bd = d; best = j; }
      }
    order.push_back(best);
    used[best] = 1;
  }
  auto tour_len = [&](const std::vector<int>& o) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += oracle.d(cities[o[i]], cities[o[(i + 1) % n]]);
    return s;
  };
  bool improved = true;
  while (improved) {
    improved = false;
    for (int i = 0; i < n - 1 && !improved; ++i)
      for (int j = i + 1; j < n && !improved; ++j) {
        std::vector<int> cand = order;
        std::reverse(cand.begin() + i, cand.begin() + j + 1);
        if (tour_len(cand) < tour_len(order) - 1e-12) {
          order = cand;
          improved = true;
        }
      }
  }
  return tour_len(order);
}

Tour solve_with_cap_ladder(const TspInstance& inst, const PtasParams& params,
                           int a, int b, PortalOracle& oracle,
                           const SolveBudget& budget, DpStats* stats) {
  double h = heuristic_tour(oracle, inst.cities);
  // Start barely above the heuristic: failed attempts with a tight cap are
  // cheap (everything prunes), successful ones certify near-optimality.
  for (double mult : {1.02, 1.1, 1.5, 3.0, 6.0}) {
    double cap = h > 0.0 ? mult * h + 1e-9 : kInf;
    Tour t = detail::dp_solve(inst, params, a, b, oracle, budget, stats, cap);
    if (t.length < kInf) return t;
    if (cap == kInf) break;
  }
  return detail::dp_solve(inst, params, a, b, oracle, budget, stats, kInf);
}

}  // namespace

PtasParams compute_params(int n, double C, double m1, double m2,
                          PtasParams::Mode mode, long long state_budget) {
  if (C <= 1.0)
    throw InfeasibleTheoryParamsError("compute_params needs C > 1");
  PtasParams p;
  p.mode = mode;
  if (mode == PtasParams::Mode::engineering) return p;
  double slope = std::sqrt(16.0 + 8.0 * (m1 + m2) * (m1 + m2));
  p.t = 1 << ceil_pow2_exponent(8.0 * C * slope);
  p.s = static_cast<long long>(std::llround(120.0 * PtasParams::g_bar * C * p.t));
  p.r = p.s + 4;
  p.m = static_cast<long long>(
      std::ceil(2.0 * static_cast<double>(p.s) * (1.0 + m1) * std::log2(p.t)));
  double nm = static_cast<double>(n) + static_cast<double>(p.m);
  p.eps1 = 1.0 / (32.0 * nm * nm * C);
  p.t1 = std::max<long long>(
      static_cast<long long>(std::ceil(3.0 * slope / p.eps1)),
      static_cast<long long>(std::ceil(3.0 * m2 / p.eps1)));
  if (p.m * p.r > state_budget)
    throw InfeasibleTheoryParamsError(
        "theory-mode m*r exceeds the configured state budget");
  return p;
}

PtasParams engineering_params(int n, double C, int m, int r, int t) {
  if (m < 1 || r < 2)
    throw InfeasibleTheoryParamsError("engineering mode needs m >= 1, r >= 2");
  PtasParams p;
  p.mode = PtasParams::Mode::engineering;
  p.m = m;
  p.r = r;
  p.t = t;
  double nm = static_cast<double>(n) + static_cast<double>(m);
  p.eps1 = 1.0 / (32.0 * nm * nm * C);
  p.t1 = 0;
  return p;
}

struct GraphOracle::Impl {
  GridGraph graph;
  std::vector<double> dist;  // full node-to-node matrix
  std::map<std::pair<long long, long long>, size_t> node_of;
};

GraphOracle::GraphOracle(Surface s, GridSpec grid, QuadratureSpec quad,
                         double epsilon)
    : surface_(std::move(s)), grid_(grid), quad_(quad), eps_(epsilon) {}

void GraphOracle::prepare(const std::vector<Vec2>& pts) {
  impl_ = std::make_shared<Impl>();
  GridGraphOptions opts;
  opts.workers = env_worker_count();
  for (const auto& p : pts) opts.extra_points.emplace_back(p);
  impl_->graph = build_grid_graph(surface_, grid_, quad_, opts);
  const size_t n = impl_->graph.size();
  std::vector<size_t> all(n);
  for (size_t i = 0; i < n; ++i) all[i] = i;
  DistanceTable t = all_pairs_distances(impl_->graph, all, eps_, n <= 400);
  impl_->dist = std::move(t.d);
  for (size_t i = 0; i < n; ++i)
    for (const auto& rep : impl_->graph.nodes[i].reps)
      impl_->node_of[{std::llround(rep.p.x * 1e9),
                      std::llround(rep.p.y * 1e9)}] = i;
}

double GraphOracle::d(const Vec2& a, const Vec2& b) const {
  auto find = [&](const Vec2& p) {
    auto it = impl_->node_of.find(
        {std::llround(p.x * 1e9), std::llround(p.y * 1e9)});
    if (it == impl_->node_of.end())
      throw DisconnectedQueryError("GraphOracle: unprepared query point");
    return it->second;
  };
  size_t i = find(a), j = find(b);
  return impl_->dist[i * impl_->graph.size() + j];
}

Tour solve_single_shift(const TspInstance& inst, const PtasParams& params,
                        int shift_a, int shift_b, PortalOracle& oracle,
                        const SolveBudget& budget, DpStats* stats) {
  return solve_with_cap_ladder(inst, params, shift_a, shift_b, oracle, budget,
                               stats);
}

Tour solve_randomized(const TspInstance& inst, const PtasParams& params,
                      PortalOracle& oracle, uint64_t seed,
                      const SolveBudget& budget, DpStats* stats) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, params.t - 1);
  int a = pick(rng), b = pick(rng);
  return solve_with_cap_ladder(inst, params, a, b, oracle, budget, stats);
}

Tour solve_derandomized(const TspInstance& inst, const PtasParams& params,
                        PortalOracle& oracle, const SolveBudget& budget,
                        DpStats* stats) {
  Tour best;
  best.length = kInf;
  const auto t0 = std::chrono::steady_clock::now();
  auto remaining = [&] {
    return budget.max_seconds - std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
  };
  for (int a = 0; a < params.t; ++a) {
    for (int b = 0; b < params.t; ++b) {
      double left = remaining();
      if (left <= 0.0) break;
      SolveBudget slice = budget;
      // the budget covers all shifts together; once a tour is in hand no
      // single shift may hog the remainder
      slice.max_seconds =
          best.length == kInf ? left : std::min(left, budget.max_seconds / 8);
      try {
        Tour t;
        if (best.length == kInf) {
          t = solve_with_cap_ladder(inst, params, a, b, oracle, slice, stats);
        } else {
          t = detail::dp_solve(inst, params, a, b, oracle, slice, stats,
                               best.length);
        }
        if (t.length < best.length) best = t;
      } catch (const BudgetExceededError&) {
        // this shift ran out of its slice; the incumbent (if any) stands
      }
    }
  }
  if (best.length == kInf)
    throw BudgetExceededError("no shift finished within the solve budget");
  return best;
}

double held_karp(const FiniteMetric& m, std::vector<int>* tour) {
  const int n = m.n;
  if (n > 20) throw InvalidMetricError("held_karp guarded to n <= 20");
  if (n == 1) {
    if (tour) *tour = {0};
    return 0.0;
  }
  const int full = 1 << (n - 1);  // subsets of {1..n-1}
  std::vector<double> dp(static_cast<size_t>(full) * (n - 1), kInf);
  std::vector<int> par(static_cast<size_t>(full) * (n - 1), -1);
  for (int j = 1; j < n; ++j)
    dp[static_cast<size_t>(1 << (j - 1)) * (n - 1) + (j - 1)] = m.at(0, j);
  for (int mask = 1; mask < full; ++mask) {
    for (int j = 1; j < n; ++j) {
      if (!(mask >> (j - 1) & 1)) continue;
      double cur = dp[static_cast<size_t>(mask) * (n - 1) + (j - 1)];
      if (cur == kInf) continue;
      for (int k = 1; k < n; ++k) {
        if (mask >> (k - 1) & 1) continue;
        int nm = mask | 1 << (k - 1);
        double nv = cur + m.at(j, k);
        size_t idx = static_cast<size_t>(nm) * (n - 1) + (k - 1);
        if (nv < dp[idx]) {
          dp[idx] = nv;
          par[idx] = j;
        }
      }
    }
  }
  double best = kInf;
  int bestj = -1;
  for (int j = 1; j < n; ++j) {
    double v = dp[static_cast<size_t>(full - 1) * (n - 1) + (j - 1)] + m.at(j, 0);
    if (v < best) { best = v; bestj = j; }
  }
  if (tour) {
    std::vector<int> rev;
    int mask = full - 1, j = bestj;
    while (j != -1) {
      rev.push_back(j);
      int pj = par[static_cast<size_t>(mask) * (n - 1) + (j - 1)];
      mask &= ~(1 << (j - 1));
      j = pj;
    }
    rev.push_back(0);
    std::reverse(rev.begin(), rev.end());
    *tour = rev;
  }
  return best;
}

LowerBoundCert ensure_lower_bound(PortalOracle& oracle,
                                  const std::vector<Vec2>& cities) {
  const int n = static_cast<int>(cities.size());
  LowerBoundCert cert;
  if (n < 2) return cert;
  // Prim MST over oracle distances, then the doubled-tree preorder tour.
  std::vector<double> best(n, kInf);
  std::vector<int> par(n, -1);
  std::vector<char> used(n, 0);
  best[0] = 0.0;
  std::vector<std::vector<int>> adj(n);
  for (int it = 0; it < n; ++it) {
    int u = -1;
    double bu = kInf;
    for (int i = 0; i < n; ++i)
      if (!used[i] && best[i] < bu) { bu = best[i]; u = i; }
    used[u] = 1;
    if (par[u] >= 0) {
      adj[par[u]].push_back(u);
      adj[u].push_back(par[u]);
    }
    for (int v = 0; v < n; ++v)
      if (!used[v]) {
        double d = oracle.d(cities[u], cities[v]);
        if (d < best[v]) { best[v] = d; par[v] = u; }
      }
  }
  std::vector<int> order;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (seen[u]) continue;
    seen[u] = 1;
    order.push_back(u);
    for (auto it = adj[u].rbegin(); it != adj[u].rend(); ++it)
      stack.push_back(*it);
  }
  double len = 0.0;
  for (int i = 0; i < n; ++i)
    len += oracle.d(cities[order[i]], cities[order[(i + 1) % n]]);
  cert.double_tree_length = len;
  cert.opt_lower_bound = len / 2.0;
  cert.certified = len >= 1.0;
  return cert;
}

}  // namespace gts
