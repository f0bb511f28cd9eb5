#pragma once

#include "fgm/core.hpp"

namespace fgm {

struct Eig3 {
  Vec3 values;   // descending
  Mat3 vectors;  // columns match values
};

/// Symmetric 3x3 eigensolve, eigenvalues descending.
Eig3 eig_sym3(const Mat3& m);

/// Largest absolute eigenvalue of a symmetric 3x3 (the spectral norm).
double spectral_abs3(const Mat3& m);

/// Symmetric-matrix vectorization with sqrt(2)-scaled off-diagonals, an
/// isometry between sym3 and R^6: svec = (m11, m22, m33, s2*m12, s2*m13, s2*m23).
Vec6 svec(const Mat3& m);
Mat3 smat(const Vec6& v);

}  // namespace fgm
