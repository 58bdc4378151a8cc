#pragma once

#include <vector>

#include "mvrecon/mesh.hpp"
#include "mvrecon/types.hpp"

namespace mvr {

/// Signed solid angle of triangle (a, b, c) seen from the origin, in
/// steradians (van Oosterom & Strackee). Positive when the triangle winds
/// counter-clockwise as seen from the origin.
double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c);

/// Generalized winding number of `point` with respect to the mesh: the sum of
/// face solid angles over 4*pi. Exactly summed over every face; 1 inside a
/// closed outward-oriented surface, 0 outside, and >= 1 where overlapping
/// closed parts stack, which is what makes it a robust inside test for
/// self-intersecting meshes.
double winding_number(const TriangleMesh& mesh, const Vec3& point);

/// Batch evaluation (chunked in parallel; results independent of worker count).
std::vector<double> winding_numbers(const TriangleMesh& mesh, const std::vector<Vec3>& points);

inline bool winding_inside(double w) { return w >= 0.5; }

}  // namespace mvr
