#include "fgm/conic.hpp"

namespace fgm {

void ConicProgram::set_objective(const VecX& c) {
  if (c.size() != n_) fail(ErrorCode::InvalidArgument, "objective size mismatch");
  c_ = c;
}

void ConicProgram::add_equality(const VecX& row, double rhs) {
  if (row.size() != n_) fail(ErrorCode::InvalidArgument, "equality row size mismatch");
  eq_rows_.conservativeResize(eq_rows_.rows() + 1, n_);
  eq_rows_.row(eq_rows_.rows() - 1) = row.transpose();
  eq_rhs_.conservativeResize(eq_rhs_.size() + 1);
  eq_rhs_[eq_rhs_.size() - 1] = rhs;
}

void ConicProgram::add_soc(const MatX& rows, const VecX& offset) {
  if (rows.cols() != n_ || rows.rows() != offset.size() || rows.rows() < 2)
    fail(ErrorCode::InvalidArgument, "bad SOC block shape");
  soc_.push_back({rows, offset});
}

void ConicProgram::add_psd_interval(const Eigen::Matrix<double, 6, Eigen::Dynamic>& rows,
                                    const Vec6& offset, double bound) {
  if (rows.cols() != n_) fail(ErrorCode::InvalidArgument, "bad PSD block shape");
  if (bound <= 0) fail(ErrorCode::InvalidArgument, "PSD interval bound must be positive");
  psd_.push_back({rows, offset, bound});
}

void ConicProgram::add_friction_cone(int f_index, const Vec3& n, double theta) {
  if (std::abs(n.norm() - 1.0) > 1e-9) fail(ErrorCode::NonUnitNormal, "friction normal");
  if (theta < 0) fail(ErrorCode::InvalidArgument, "theta >= 0 required");
  // Tangent basis of the plane orthogonal to n.
  Vec3 a = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 t1 = (a - n * n.dot(a)).normalized();
  Vec3 t2 = n.cross(t1);
  MatX rows = MatX::Zero(3, n_);
  rows.block<1, 3>(0, f_index) = theta * n.transpose();
  rows.block<1, 3>(1, f_index) = t1.transpose();
  rows.block<1, 3>(2, f_index) = t2.transpose();
  soc_.push_back({rows, VecX::Zero(3)});
}

}  // namespace fgm
