#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "genus_tsp/geometry.hpp"

namespace gts {

struct InvalidSpaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoValidNeighborError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One pair of identified square rims ("wormhole"). Both squares have equal
// side length; the open interiors are removed from the base square and the
// two boundaries are glued pointwise by translation: the point at arc
// parameter s on rim1 (measured counterclockwise from the lower-left corner)
// is the same point of the space as arc parameter s on rim2.
struct WormholePair {
  Rect rim1;
  Rect rim2;
};

struct BaseSpace {
  double side = 1.0;  // base square [0,side]^2
  std::vector<WormholePair> wormholes;

  int genus() const { return static_cast<int>(wormholes.size()); }
};

struct RimTag {
  int pair = -1;
  int rim = 0;       // 0 = rim1, 1 = rim2
  double arc = 0.0;  // counterclockwise arc length from lower-left corner
};

struct BasePoint {
  Vec2 p;
  std::optional<RimTag> tag;

  BasePoint() = default;
  BasePoint(double x, double y) : p(x, y) {}
  explicit BasePoint(Vec2 v) : p(v) {}
};

// Breakpoint sequence. Consecutive breakpoints that are the two sides of one
// rim identification (same pair, opposite rims, equal arc parameter) form a
// zero-length hop; every other consecutive pair must be a straight segment
// avoiding all removed interiors.
struct PolygonalPath {
  std::vector<BasePoint> pts;
};

// Grid A_t: lattice spacing side/t' with t' = t (denominator on the unit
// square). Lattice coordinates are stored as integer multiples of 1/t.
struct GridSpec {
  int t = 1;
};

// Throws InvalidSpaceError if the wormhole squares are not pairwise equal in
// side per pair, not strictly inside the base square, overlapping, or smaller
// than the representable minimum side 1e-9.
void validate(const BaseSpace& bs);

// Point at counterclockwise arc parameter s on the boundary of r,
// s in [0, 4*side), starting at the lower-left corner.
Vec2 rim_arc_point(const Rect& r, double s);

// Inverse of rim_arc_point for a point on (or numerically near) the boundary.
double rim_arc_param(const Rect& r, const Vec2& p);

// Corners of `rect` walked along the rim from arc s0 to arc s1 the short way.
std::vector<Vec2> rim_corner_walk(const Rect& rect, double s0, double s1);

// The rim tag of p if it lies on some rim boundary (within tol), else none.
std::optional<RimTag> rim_tag_of(const BaseSpace& bs, const Vec2& p,
                                 double tol = 1e-12);

// The identified twin of a rim point: same arc parameter on the other rim of
// the same pair. Throws InvalidSpaceError if bp carries no rim tag.
BasePoint identify_rim_point(const BaseSpace& bs, const BasePoint& bp);

// True iff p lies in the base square and in no removed open interior.
bool point_valid(const BaseSpace& bs, const Vec2& p);

// True iff the straight segment a--b stays in the space: the open segment
// meets no removed interior. Grazing a rim (touching or sliding along the
// boundary) is allowed.
bool segment_exists(const BaseSpace& bs, const Vec2& a, const Vec2& b);

// All valid lattice points (k/t, l/t) plus, for each wormhole rim, the points
// where grid lines cross the rim boundary. Rim points carry their tag.
// Deterministic order: lexicographic by (x, y).
std::vector<BasePoint> grid_points(const BaseSpace& bs, const GridSpec& grid);

// Total base-space length: straight segments plus zero-cost rim hops.
// Throws InvalidSpaceError if a non-hop segment does not exist.
double len_base(const BaseSpace& bs, const PolygonalPath& path);

// Nearest valid lattice point among the four cell corners surrounding p,
// ties broken lexicographically by (x, y). Throws NoValidNeighborError when
// all four are invalid. Displacement is at most sqrt(2)/t when it succeeds.
BasePoint snap_to_grid(const BaseSpace& bs, const GridSpec& grid,
                       const Vec2& p);

// Number of crossings of the grid lines {x=k/t} and {y=l/t} by the path.
// A transversal crossing in a segment interior counts once; a breakpoint on
// a grid line counts once iff the path strictly changes side of that line;
// a tangential touch counts zero.
long crossings_count(const PolygonalPath& path, int t);

}  // namespace gts
