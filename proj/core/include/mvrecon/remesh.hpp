#pragma once

#include <cstdint>

#include "mvrecon/mesh.hpp"

namespace mvr {

/// Knobs of the periodic mesh clean-up pass. Lengths of zero mean "derive
/// from the mesh": the target from the mean edge length, the absolute
/// collapse threshold from 1e-6 x the bounding-box diagonal.
struct RemeshConfig {
  double target_edge_len = 0.0;
  int vertex_budget = 2500;
  double short_edge_abs = 0.0;
  double obtuse_max_angle_pass1 = 150.0;  // degrees
  int obtuse_pass1_iters = 100;
  double obtuse_max_angle_pass2 = 179.0;
  int obtuse_pass2_iters = 5;
  int mc_resolution = 96;  // grid used when the surface must be re-extracted

  void validate() const;
};

/// Repairs faces with area < 1e-12 x bbox-diagonal^2: needles (one tiny
/// edge) collapse it, caps (a vertex on the opposite edge) flip the long
/// edge so the collinear corner becomes a proper corner of the neighbor.
/// Faces that cannot be repaired in place are dropped.
TriangleMesh remove_degenerated_triangles(const TriangleMesh& mesh);

/// Splits every edge longer than 4/3 x target at its midpoint, repeatedly,
/// until none remains. Colors are not carried over.
TriangleMesh split_long_edges(const TriangleMesh& mesh, double target_len);

/// Collapses edges shorter than min_len to their midpoint. A collapse is
/// skipped when it would break the link condition, flip a surviving face's
/// normal, or (with preserve_feature) move a vertex that touches an edge
/// with dihedral angle > 60 degrees; if only one endpoint is such a feature
/// vertex the other is pulled into it instead. A positive max_new_len also
/// skips collapses that would create an edge longer than that, which keeps
/// collapsing from undoing a prior split pass. Merged vertices are dropped.
TriangleMesh collapse_short_edges(const TriangleMesh& mesh, double min_len, bool preserve_feature,
                                  double max_new_len = 0.0);

/// Removes interior angles above max_angle_deg by flipping the edge opposite
/// the obtuse corner when that strictly reduces the local maximum angle, and
/// otherwise splitting it at the foot of the obtuse vertex. Runs up to
/// max_iters sweeps.
TriangleMesh remove_obtuse_triangles(const TriangleMesh& mesh, double max_angle_deg,
                                     int max_iters);

/// Rebuilds the surface enclosing the winding-number >= 1/2 region on an
/// mc_resolution grid over the dilated bounding box. Output is watertight
/// and free of self-intersections; the genus may change (unions merge,
/// handles appear or close). Throws "surface vanished" when the extracted
/// surface is empty.
TriangleMesh extract_outer_surface(const TriangleMesh& mesh, int mc_resolution);

/// Keeps the first face of every unordered vertex triple.
TriangleMesh remove_duplicated_faces(const TriangleMesh& mesh);

/// Drops vertices referenced by no face and compacts indices (and colors).
TriangleMesh remove_isolated_vertices(const TriangleMesh& mesh);

/// Number of unordered pairs of faces that share no vertex index yet
/// properly intersect (grid-accelerated triangle-triangle sweep).
std::int64_t count_self_intersections(const TriangleMesh& mesh);

/// Early-out variant of the sweep.
bool has_self_intersections(const TriangleMesh& mesh);

/// The full clean-up sequence: degenerate removal, long-edge split, absolute
/// then relative short-edge collapse (feature-preserving), first obtuse pass,
/// surface re-extraction when the mesh is not watertight / self-intersects /
/// hides nested shells, duplicate-face removal, second obtuse pass, and
/// isolated-vertex removal. While the result exceeds vertex_budget the
/// target edge length grows by 1.2x and the sequence repeats (at most 8
/// rounds). Output never carries colors: they are a function of position and
/// must be re-queried by the caller. Nothing here participates in gradients.
TriangleMesh remesh(const TriangleMesh& mesh, const RemeshConfig& cfg);

}  // namespace mvr
