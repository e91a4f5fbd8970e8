#pragma once

#include <vector>

#include "genus_tsp/surface.hpp"

namespace gts {

struct DisconnectedQueryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Smallest denominator certifying approximation eps against bounds M1, M2.
int choose_t_for_epsilon(double m1, double m2, double eps);

// One graph node: a point of the space. Rim points carry two planar
// representatives (the point and its identified twin).
struct GraphNode {
  std::vector<BasePoint> reps;
};

struct GridGraphOptions {
  // Exact extra nodes (cities, waypoints); appended after the grid nodes.
  std::vector<BasePoint> extra_points;
  // Always include rim corners and rim side midpoints as nodes, so that tiny
  // wormholes are reachable at any lattice resolution.
  bool include_rim_anchors = true;
  // If > 0, only node pairs within this L-infinity distance get an edge.
  double prune_linf = 0.0;
  int workers = 1;
};

struct GridGraph {
  Surface surface;
  int t = 1;
  QuadratureSpec quad;
  std::vector<GraphNode> nodes;
  size_t first_extra = 0;  // index of the first extra node
  std::vector<double> w;   // dense symmetric weights; infinity = no edge

  size_t size() const { return nodes.size(); }
  double weight(size_t i, size_t j) const { return w[i * nodes.size() + j]; }
};

GridGraph build_grid_graph(const Surface& s, const GridSpec& grid,
                           const QuadratureSpec& quad,
                           const GridGraphOptions& opts = {});

struct DistanceTable {
  std::vector<size_t> query_nodes;
  std::vector<double> d;  // row-major, query x query
  int t = 1;
  long t_q = 0;
  double epsilon = 0.0;  // distance certificate

  double at(size_t i, size_t j) const { return d[i * query_nodes.size() + j]; }
};

std::vector<double> dijkstra_from(const GridGraph& g, size_t src);

// Distances between the given query nodes. Runs repeated Dijkstra and, when
// the graph is small enough, also Floyd-Warshall; the two must agree within
// 1e-12 or the call throws. epsilon combines snapping, quadrature, and
// rounding slack for the caller's record.
DistanceTable all_pairs_distances(const GridGraph& g,
                                  const std::vector<size_t>& queries,
                                  double epsilon, bool cross_check = true);

// Shortest path as an explicit polyline including zero-cost rim hops; its
// path_surface_length reproduces the graph distance.
PolygonalPath shortest_path_witness(const GridGraph& g, size_t u, size_t v);

// Worker count from GENUS_TSP_WORKERS (default 1).
int env_worker_count();

}  // namespace gts
