#include "fgm/wrench.hpp"

#include <Eigen/Eigenvalues>

namespace fgm {

Wrench wrench_of_contacts(const std::vector<Vec3>& forces,
                          const std::vector<ContactPoint>& contacts) {
  if (forces.size() != contacts.size())
    fail(ErrorCode::LengthMismatch, "forces and contacts differ in length");
  Wrench w = Wrench::Zero();
  for (std::size_t i = 0; i < forces.size(); ++i) {
    w.head<3>() -= forces[i];
    w.tail<3>() -= contacts[i].position.cross(forces[i]);
  }
  return w;
}

double friction_residual(const Vec3& f, const Vec3& n, double theta) {
  if (std::abs(n.norm() - 1.0) > 1e-9)
    fail(ErrorCode::NonUnitNormal, "contact normal must be unit length");
  Vec3 tangential = f - n * n.dot(f);
  return tangential.norm() - theta * n.dot(f);
}

Eigen::Matrix<double, 12, 6> body_force_matrix(const GeometricMoments& moments) {
  Eigen::Matrix<double, 12, 6> G = Eigen::Matrix<double, 12, 6>::Zero();
  G.block<3, 3>(0, 0) = Mat3::Identity() / moments.volume;

  // grad-g columns = M^{-1} T^T (T M^{-1} T^T)^{-1} * torque
  Eigen::Matrix<double, 9, 9> Minv = moments.M_mat.inverse();
  Eigen::Matrix<double, 9, 3> MiTt = Minv * moments.T_mat.transpose();
  Mat3 TMT = moments.T_mat * MiTt;
  Eigen::JacobiSVD<Mat3> svd(TMT);
  double cond = svd.singularValues()(0) / std::max(svd.singularValues()(2), 1e-300);
  if (cond > 1e12) fail(ErrorCode::SingularMoments, "T M^-1 T^T condition > 1e12");
  G.block<9, 3>(3, 3) = MiTt * TMT.inverse();
  return G;
}

BodyForceField body_force_from_wrench(const Wrench& w, const GeometricMoments& moments) {
  Eigen::Matrix<double, 12, 6> G = body_force_matrix(moments);
  Eigen::Matrix<double, 12, 1> p = G * w;
  BodyForceField g;
  g.g0 = p.head<3>();
  for (int c = 0; c < 3; ++c) g.grad_g.col(c) = p.segment<3>(3 + 3 * c);

  // Posterior: the field must reproduce the wrench through the moments.
  Wrench achieved;
  achieved.head<3>() = moments.volume * g.g0 + g.grad_g * (moments.volume * moments.centroid);
  Eigen::Matrix<double, 9, 1> cols;
  for (int c = 0; c < 3; ++c) cols.segment<3>(3 * c) = g.grad_g.col(c);
  achieved.tail<3>() = moments.T_mat * cols;
  // Torque of the constant part vanishes because the centroid is the origin.
  achieved.tail<3>() += (moments.volume * moments.centroid).cross(g.g0);
  double rel = (achieved - w).norm() / std::max(1.0, w.norm());
  if (rel > 1e-9)
    fail(ErrorCode::SingularMoments, "wrench reproduction residual " + std::to_string(rel));
  return g;
}

WrenchMetric metric_sqrt(const Mat6& W) {
  if ((W - W.transpose()).norm() > 1e-12 * std::max(1.0, W.norm()))
    fail(ErrorCode::NotSymmetric, "metric tensor not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat6> es(W);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, W.norm()))
    fail(ErrorCode::NotSymmetric, "metric tensor has negative eigenvalues");
  Vec6 lam = es.eigenvalues().cwiseMax(0.0);
  WrenchMetric m;
  m.W = W;
  m.sqrtW = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  return m;
}

}  // namespace fgm
