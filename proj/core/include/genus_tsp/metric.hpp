#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "genus_tsp/geometry.hpp"

namespace gts {

struct InvalidMetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Finite metric space given by a full distance matrix.
struct FiniteMetric {
  int n = 0;
  std::vector<double> d;  // row-major n x n
  std::vector<std::string> labels;

  double at(int i, int j) const { return d[static_cast<size_t>(i) * n + j]; }
  double& at(int i, int j) { return d[static_cast<size_t>(i) * n + j]; }

  double min_distance() const;  // over i != j
  double max_distance() const;

  nlohmann::json to_json() const;
  static FiniteMetric from_json(const nlohmann::json& j);
};

// Symmetry must hold exactly, diagonal must be zero, off-diagonal entries
// positive, triangle inequality within 1e-9 slack. Throws otherwise.
void validate(const FiniteMetric& m);

FiniteMetric uniform_metric(int n, double c);
FiniteMetric euclidean_point_metric(const std::vector<Vec2>& pts);

double aspect_ratio(const FiniteMetric& m);  // max/min distance

struct FloorTransformReport {
  double c0 = 0.0;        // 10*C
  double cbar = 0.0;      // 1/C0
  double threshold = 0.0; // entries at or below were raised
  double raised_to = 0.0;
  int raised_count = 0;
};

// Raises every off-diagonal entry <= (cbar/n)*maxd to (cbar/(n+1))*maxd,
// with C0 = 10*C and cbar = 1/C0. Result is validated; aspect ratio is then
// at most 10*C*(n+1).
FiniteMetric floor_transform(const FiniteMetric& m, double C,
                             FloorTransformReport* report = nullptr);

// Smallest integer k such that every ball B(x, 2r) is covered by k balls of
// radius r, checked exhaustively over all center/radius combinations.
// Exponential in n; guarded to n <= 64.
int doubling_constant(const FiniteMetric& m);

}  // namespace gts
