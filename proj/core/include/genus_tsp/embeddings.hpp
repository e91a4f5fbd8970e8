#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "genus_tsp/bump.hpp"
#include "genus_tsp/metric.hpp"
#include "genus_tsp/surface.hpp"

namespace gts {

struct LayoutFailureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PackingFailureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RecursionBudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Width-beta neighborhood of a polygonal spine. Rim hops inside the spine
// contribute no geometry; membership is plain segment distance.
struct Sleeve {
  PolygonalPath spine;
  double width = 0.0;

  double spine_distance(const Vec2& p) const;
};

// Height field S + bumps where S = psi_R * S' and S' is the piecewise
// constant "wall" field: 0 within `width` of any spine, `max_value` at
// distance in (width, outer_radius] of the spine complex, 0 beyond
// outer_radius (outer_radius = infinity gives walls everywhere).
class SleeveField final : public HeightField {
 public:
  SleeveField(std::vector<Sleeve> sleeves, double kernel_radius,
              double max_value, std::vector<PlateauBump> bumps,
              double outer_radius = 0.0 /* <=0 means unbounded */);

  FieldEval eval(double x, double y) const override;
  double m1() const override { return m1_; }
  double m2() const override { return m2_; }
  std::string type() const override { return "sleeve_convolution"; }
  nlohmann::json to_json() const override;

  const std::vector<Sleeve>& sleeves() const { return sleeves_; }
  const std::vector<PlateauBump>& bumps() const { return bumps_; }
  std::vector<PlateauBump>& mutable_bumps() { return bumps_; }
  double kernel_radius() const { return kernel_.radius(); }
  double max_value() const { return max_value_; }
  void refresh_bounds();  // recompute m1/m2 after editing bumps

  static std::shared_ptr<SleeveField> from_json(const nlohmann::json& j);

 private:
  double wall_value(double x, double y) const;  // the S' field
  double complex_distance(const Vec2& p) const;

  std::vector<Sleeve> sleeves_;
  PsiKernel kernel_;
  KernelQuadrature quad_;
  double max_value_;
  double outer_radius_;
  std::vector<PlateauBump> bumps_;
  double m1_ = 0.0, m2_ = 0.0;
};

// Sum of rescaled child fields: f(p) = sum_k scale_k * f_k((p - off_k) / scale_k).
class CompositeField final : public HeightField {
 public:
  struct Cell {
    Vec2 offset;
    double scale = 1.0;
    std::shared_ptr<const HeightField> field;
  };

  explicit CompositeField(std::vector<Cell> cells);

  FieldEval eval(double x, double y) const override;
  double m1() const override { return m1_; }
  double m2() const override { return m2_; }
  std::string type() const override { return "composite"; }
  nlohmann::json to_json() const override;
  const std::vector<Cell>& cells() const { return cells_; }

  static std::shared_ptr<CompositeField> from_json(const nlohmann::json& j);

 private:
  std::vector<Cell> cells_;
  double m1_ = 0.0, m2_ = 0.0;
};

// Full height-field deserializer (zero, bump_sum, sleeve_convolution,
// composite).
std::shared_ptr<const HeightField> field_from_json(const nlohmann::json& j);

struct PairCertificate {
  int i = 0, j = 0;
  double target = 0.0;    // intended surface distance
  double measured = 0.0;  // geodesic measurement on the emitted surface
};

struct RouteSpine {
  int i = 0, j = 0;
  PolygonalPath spine;  // tagged at wormhole rims so hops apply
  double width = 0.0;   // sleeve width used for measurement node placement
  // Region needing dense off-spine nodes (around the calibrated bump).
  Vec2 refine_center;
  double refine_radius = 0.0;
};

struct EmbeddingResult {
  Surface surface;
  std::vector<Vec2> cities;
  double alpha = 1.0;       // d_n ~ alpha * d_surface
  double clearance = 0.0;   // min spine separation a
  double tau = 0.0;         // per-pair calibration tolerance (relative)
  std::vector<PairCertificate> certificates;
  std::vector<RouteSpine> routes;
  int recursion_depth = 0;      // doubling embedding only
  long long max_net_size = 0;   // doubling embedding only
};

// Measures the surface distance between cities i and j with a geodesic graph
// confined to the pair's route sleeve (dense spine samples plus side rows).
double measure_surface_distance(const EmbeddingResult& res, int i, int j);

// Realize an arbitrary valid metric: perturbed-circle layout, straight
// routes, wormhole pairs at route crossings, convolved wall field, one
// calibrated plateau bump per pair.
EmbeddingResult embed_general(const FiniteMetric& metric, unsigned seed = 1);

// Wraps embed_general, shrinking the domain and field by 1/alpha with
// constant extension, so alpha^2 * d_surface tracks d_n. Requires alpha >= 1.
EmbeddingResult embed_general_unnormalized(const FiniteMetric& metric,
                                           unsigned seed = 1);

// Second-derivative bound of a gamma-stretch of a field with bound M2.
double second_derivative_rescale_bound(double m2, double gamma);

// Uniform metric on n points at distance c1 (default 3/(4n)): n circles of
// radius c1/2 with one wormhole pair per city pair; f = 0; all distances
// exactly c1 by construction.
EmbeddingResult embed_uniform(int n, double c1 = -1.0);

// Printed bound on the per-level net size, m^ceil(log2(14(1+C)/C)).
long long kl_bound(int m, double C);

/// Hierarchical (1+C)-distortion embedding of a doubling metric: greedy net
// tree, one general embedding per internal cluster scaled into a socket at
// its representative, duplicate representations merged by tiny wormholes.
EmbeddingResult embed_doubling(const FiniteMetric& metric, int m, double C,
                               unsigned seed = 1);

struct TourBoundReport {
  double double_tree_length = 0.0;
  bool certified = false;
};

// Double-tree estimate of the base-space tour over the placed cities;
// certified iff the estimate reaches 1 (2-approximation => OPT >= 1/2).
TourBoundReport ensure_embedding_tour_bound(const EmbeddingResult& res);

namespace detail {
// embed_general with bounded walls (wall plateau limited to outer_radius
// around the spine complex); outer_radius <= 0 keeps walls unbounded.
EmbeddingResult embed_general_impl(const FiniteMetric& metric, unsigned seed,
                                   double outer_radius);
}  // namespace detail

}  // namespace gts
