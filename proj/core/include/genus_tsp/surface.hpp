#pragma once

#include <memory>

#include "genus_tsp/base_space.hpp"
#include "genus_tsp/height_field.hpp"

namespace gts {

// Height-field surface over a wormhole base space.
struct Surface {
  BaseSpace base;
  std::shared_ptr<const HeightField> field;

  Surface() : field(std::make_shared<ZeroField>()) {}
  Surface(BaseSpace b, std::shared_ptr<const HeightField> f)
      : base(std::move(b)), field(std::move(f)) {}
};

// Rectangle-method sampling of one segment: t_q left-endpoint samples, each
// function evaluation trusted to k_digits decimal digits.
struct QuadratureSpec {
  long t_q = 100;
  int k_digits = 9;
};

// Rectangle-method length of the straight segment a--b lifted to the surface:
//   sum_{n=0}^{t_q-1} (1/t_q) * sqrt(dx^2 + dy^2 + (fx*dx + fy*dy)^2)
// with the gradient sampled at a + (b-a)*n/t_q and (dx,dy) = b-a.
double segment_surface_length(const Surface& s, const Vec2& a, const Vec2& b,
                              const QuadratureSpec& quad);

// Guaranteed bound on |rectangle sum - true length| for one segment.
double quad_error_bound(const QuadratureSpec& quad, double m2);

// Lifted length of a polygonal path; rim hops cost zero.
double path_surface_length(const Surface& s, const PolygonalPath& path,
                           const QuadratureSpec& quad);

// Surface-length change bound for snapping a path onto the grid A_s.
double snap_error_bound(double m1, double m2, int s);

// Snaps every untagged breakpoint to A_t (rim-tagged breakpoints stay put);
// whenever a snapped segment would cut through a removed interior, a detour
// around the offending rim(s) is inserted via a corner visibility graph.
PolygonalPath snap_path(const BaseSpace& bs, const GridSpec& grid,
                        const PolygonalPath& path);

// Shortest polyline from a to b through {a, b} + all rim corners, using only
// existing segments. Used for snap detours; throws InvalidSpaceError when no
// such route exists.
PolygonalPath route_around(const BaseSpace& bs, const Vec2& a, const Vec2& b);

}  // namespace gts
