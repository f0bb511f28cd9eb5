#pragma once

#include <vector>

#include "fgm/core.hpp"
#include "fgm/mesh.hpp"
#include "fgm/moments.hpp"

namespace fgm {

/// Linear body-force field g(x) = g0 + grad_g * x.
struct BodyForceField {
  Vec3 g0 = Vec3::Zero();
  Mat3 grad_g = Mat3::Zero();

  Vec3 at(const Vec3& x) const { return g0 + grad_g * x; }
  /// Parameter layout (g0, columns of grad_g), as consumed by the BEM maps.
  Eigen::Matrix<double, 12, 1> params() const {
    Eigen::Matrix<double, 12, 1> p;
    p.head<3>() = g0;
    for (int c = 0; c < 3; ++c) p.segment<3>(3 + 3 * c) = grad_g.col(c);
    return p;
  }
};

struct WrenchMetric {
  Mat6 W = Mat6::Identity();
  Mat6 sqrtW = Mat6::Identity();
};

struct FrictionModel {
  double theta = 0.5;
};

/// External wrench balanced by the given contact forces:
/// w = -sum_i (f_i ; x_i cross f_i).
Wrench wrench_of_contacts(const std::vector<Vec3>& forces,
                          const std::vector<ContactPoint>& contacts);

/// ||(I - n n^T) f|| - theta * n^T f; <= 0 inside the friction cone.
double friction_residual(const Vec3& f, const Vec3& n, double theta);

/// Least-squares linear body force reproducing the wrench through the
/// moments; g0 = w_f / |Omega|, grad_g from the constrained minimum of
/// the integral of ||grad_g x||^2.
BodyForceField body_force_from_wrench(const Wrench& w, const GeometricMoments& moments);

/// The 12x6 matrix sending w to the body-force parameters of
/// body_force_from_wrench (block diagonal in the force/torque split).
Eigen::Matrix<double, 12, 6> body_force_matrix(const GeometricMoments& moments);

/// Symmetric PSD square root via spectral decomposition; negative
/// eigenvalues within tolerance are clamped to zero.
WrenchMetric metric_sqrt(const Mat6& W);

}  // namespace fgm
