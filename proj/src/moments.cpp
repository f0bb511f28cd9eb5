#include "fgm/moments.hpp"

#include <Eigen/Eigenvalues>

namespace fgm {

GeometricMoments compute_moments(const SurfaceMesh& mesh) {
  // Signed tetrahedra to the origin. For the tetra (0,p,q,r) with signed
  // volume V = det(p,q,r)/6:
  //   integral x     = V (p+q+r)/4
  //   integral x x^T = V/20 (p p^T + q q^T + r r^T + s s^T),  s = p+q+r
  double vol = 0.0;
  Vec3 m1 = Vec3::Zero();
  Mat3 m2 = Mat3::Zero();
  for (const auto& t : mesh.triangles()) {
    const Vec3 &p = mesh.vertex(t[0]), &q = mesh.vertex(t[1]), &r = mesh.vertex(t[2]);
    double v = p.dot(q.cross(r)) / 6.0;
    Vec3 s = p + q + r;
    vol += v;
    m1 += v * s / 4.0;
    m2 += v / 20.0 * (p * p.transpose() + q * q.transpose() + r * r.transpose() +
                      s * s.transpose());
  }
  if (vol <= 1e-14) fail(ErrorCode::DegenerateMesh, "volume <= 1e-14");

  GeometricMoments gm;
  gm.volume = vol;
  gm.centroid = m1 / vol;
  gm.second_moment = 0.5 * (m2 + m2.transpose());

  // (T_k)_{il} = eps_{ijl} Sigma_{jk}: torque of the linear part of a body
  // force field is T * (stacked columns of grad g).
  const Mat3& S = gm.second_moment;
  for (int k = 0; k < 3; ++k) {
    Mat3 Tk = Mat3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int l = 0; l < 3; ++l)
        for (int j = 0; j < 3; ++j) {
          // eps_{ijl}
          double eps = 0.0;
          if (i != j && j != l && i != l)
            eps = ((j - i + 3) % 3 == 1 && (l - j + 3) % 3 == 1) ? 1.0 : -1.0;
          Tk(i, l) += eps * S(j, k);
        }
    gm.T_mat.block<3, 3>(0, 3 * k) = Tk;
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      gm.M_mat.block<3, 3>(3 * a, 3 * b) = S(a, b) * Mat3::Identity();

  Eigen::SelfAdjointEigenSolver<Mat3> es(S);
  if (es.eigenvalues().minCoeff() <= 0)
    fail(ErrorCode::SingularMoments, "second moment not positive definite");
  return gm;
}

}  // namespace fgm
