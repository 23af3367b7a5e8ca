#pragma once

#include <vector>

#include "linecalib/cloud_features.hpp"
#include "linecalib/geometry.hpp"

namespace linecalib {

/// Three line correspondences (two parallel lanes and one pole) between the
/// image and the cloud. Cloud lines are in the LiDAR frame; `frame` maps them
/// into the ground-parallel frame where lanes run along x and the pole along z.
struct P3LProblem {
  Line2D image_lane1;
  Line2D image_lane2;
  Line2D image_pole;
  Line3D cloud_lane1;
  Line3D cloud_lane2;
  Line3D cloud_pole;
  GroundParallelFrame frame;
  Intrinsics intrinsics;

  /// Throws Error(kInvalidArgument) unless cloud lanes lie within 2 degrees of
  /// the G x-axis and the pole within 15 degrees of the G z-axis.
  void validate() const;
};

/// Perspective-3-lines solve under the parallel-lane reduction.
///
/// The camera rotation is written R_G^C = R' Rot(X, alpha) Rot(Z, beta) where
/// R' has the pole's back-projected normal as its first column, which makes the
/// pole constraint hold for every (alpha, beta). The two lane constraints
///   n_i . (R_G^C e_x) = 0,  i = 1, 2
/// are linear in (cos alpha, sin alpha) after eliminating beta, and then linear
/// in (cos beta, sin beta); each has an antipodal pair of unit-circle roots,
/// giving up to four rotations. The translation solves n_i . (R p_i + t) = 0 for
/// one point per line. Candidates that put a line point behind the camera are
/// dropped, as are all candidates when the normal matrix has condition > 1e6.
///
/// Throws Error(kDegenerateNormals) when the three normals are rank deficient
/// and Error(kNoSolution) when every candidate is dropped.
std::vector<Extrinsic> solve_p3l(const P3LProblem& problem);

}  // namespace linecalib
