#pragma once

#include "fgm/core.hpp"
#include "fgm/mesh.hpp"

namespace fgm {

/// Volumetric moments of the enclosed solid plus the wrench-equivalence
/// matrices used to map external wrenches to linear body-force fields.
struct GeometricMoments {
  double volume = 0.0;
  Vec3 centroid = Vec3::Zero();        // integral of x / volume
  Mat3 second_moment = Mat3::Zero();   // integral of x x^T
  Eigen::Matrix<double, 3, 9> T_mat;   // [T_1 T_2 T_3], T_k = integral of x_k [x]_cross
  Eigen::Matrix<double, 9, 9> M_mat;   // second_moment (Kronecker) I_3
};

/// Exact polyhedral moments by divergence-theorem reduction of the monomial
/// volume integrals to per-triangle surface terms.
GeometricMoments compute_moments(const SurfaceMesh& mesh);

}  // namespace fgm
