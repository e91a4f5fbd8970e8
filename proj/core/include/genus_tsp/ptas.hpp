#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "genus_tsp/geodesic.hpp"
#include "genus_tsp/metric.hpp"
#include "genus_tsp/surface.hpp"

namespace gts {

struct BudgetExceededError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleTheoryParamsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// TSP instance on a surface. C controls the target ratio 1 + 1/C.
struct TspInstance {
  Surface surface;
  std::vector<Vec2> cities;
  double C = 2.0;
};

struct PtasParams {
  enum class Mode { theory, engineering };
  Mode mode = Mode::engineering;
  int t = 8;            // shift lattice denominator (power of two)
  long long s = 0;      // patching granularity (theory mode)
  long long r = 4;      // max crossings per square edge
  long long m = 4;      // portals per edge (besides corners)
  double eps1 = 0.0;    // portal distance accuracy
  long long t1 = 0;     // grid denominator realizing eps1
  static constexpr int g_bar = 6;  // patching constant's genus parameter
};

// Theory-mode parameters from the structure/patching constants; engineering
// mode takes user-chosen (m, r, t). Throws InfeasibleTheoryParamsError when
// theory-mode m*r exceeds state_budget.
PtasParams compute_params(int n, double C, double m1, double m2,
                          PtasParams::Mode mode,
                          long long state_budget = 10'000'000);
PtasParams engineering_params(int n, double C, int m, int r, int t);

struct SolveBudget {
  long long max_states = 10'000'000;
  double max_seconds = 600.0;
};

// Point-to-point distances used for all DP path segments.
class PortalOracle {
 public:
  virtual ~PortalOracle() = default;
  // Called once with every point the solver may query.
  virtual void prepare(const std::vector<Vec2>& pts) = 0;
  virtual double d(const Vec2& a, const Vec2& b) const = 0;
  virtual double epsilon() const = 0;
};

// Exact oracle for flat genus-zero surfaces.
class EuclideanOracle final : public PortalOracle {
 public:
  void prepare(const std::vector<Vec2>&) override {}
  double d(const Vec2& a, const Vec2& b) const override { return dist(a, b); }
  double epsilon() const override { return 0.0; }
};

// Geodesic-graph oracle for general surfaces.
class GraphOracle final : public PortalOracle {
 public:
  GraphOracle(Surface s, GridSpec grid, QuadratureSpec quad, double epsilon);
  void prepare(const std::vector<Vec2>& pts) override;
  double d(const Vec2& a, const Vec2& b) const override;
  double epsilon() const override { return eps_; }

 private:
  Surface surface_;
  GridSpec grid_;
  QuadratureSpec quad_;
  double eps_;
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

struct Tour {
  std::vector<int> order;         // visiting order of city indices
  double length = 0.0;            // DP cost of the portal-respecting tour
  double city_cycle_length = 0.0; // plain cyclic sum over consecutive cities
  int shift_a = 0;                // shift numerators over /t
  int shift_b = 0;
};

struct DpStats {
  long long states = 0;
  double seconds = 0.0;
};

/// Dynamic program over one shifted dissection. cap: configurations whose
// value provably exceeds it are pruned; pass infinity for a full evaluation.
Tour solve_single_shift(const TspInstance& inst, const PtasParams& params,
                        int shift_a, int shift_b, PortalOracle& oracle,
                        const SolveBudget& budget = {},
                        DpStats* stats = nullptr);

Tour solve_randomized(const TspInstance& inst, const PtasParams& params,
                      PortalOracle& oracle, uint64_t seed,
                      const SolveBudget& budget = {},
                      DpStats* stats = nullptr);

// Minimum over all t^2 shifts.
Tour solve_derandomized(const TspInstance& inst, const PtasParams& params,
                        PortalOracle& oracle, const SolveBudget& budget = {},
                        DpStats* stats = nullptr);

// Exact baseline, bitmask dynamic program; guarded to n <= 20.
double held_karp(const FiniteMetric& m, std::vector<int>* tour = nullptr);

struct LowerBoundCert {
  double double_tree_length = 0.0;  // doubled-MST preorder tour estimate
  double opt_lower_bound = 0.0;     // estimate / 2
  bool certified = false;           // opt_lower_bound >= 1/2
};

// Double-tree 2-approximation used to certify OPT >= 1/2.
LowerBoundCert ensure_lower_bound(PortalOracle& oracle,
                                  const std::vector<Vec2>& cities);

}  // namespace gts
