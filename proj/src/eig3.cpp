#include "fgm/eig3.hpp"

#include <Eigen/Eigenvalues>

namespace fgm {

Eig3 eig_sym3(const Mat3& m) {
  if ((m - m.transpose()).norm() > 1e-10 * std::max(1.0, m.norm()))
    fail(ErrorCode::NotSymmetric, "eig_sym3 input not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (m + m.transpose()));
  Eig3 out;
  // Eigen returns ascending; flip to descending.
  for (int k = 0; k < 3; ++k) {
    out.values[k] = es.eigenvalues()[2 - k];
    out.vectors.col(k) = es.eigenvectors().col(2 - k);
  }
  return out;
}

double spectral_abs3(const Mat3& m) {
  Eig3 e = eig_sym3(m);
  return std::max(std::abs(e.values[0]), std::abs(e.values[2]));
}

Vec6 svec(const Mat3& m) {
  const double s2 = std::sqrt(2.0);
  Vec6 v;
  v << m(0, 0), m(1, 1), m(2, 2), s2 * m(0, 1), s2 * m(0, 2), s2 * m(1, 2);
  return v;
}

Mat3 smat(const Vec6& v) {
  const double is2 = 1.0 / std::sqrt(2.0);
  Mat3 m;
  m << v[0], is2 * v[3], is2 * v[4],
       is2 * v[3], v[1], is2 * v[5],
       is2 * v[4], is2 * v[5], v[2];
  return m;
}

}  // namespace fgm
