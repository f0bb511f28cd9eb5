#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/LU>

#include "fgm/core.hpp"
#include "fgm/mesh.hpp"
#include "fgm/wrench.hpp"

namespace fgm {

struct MaterialParams {
  double mu = 0.0;        // shear modulus
  double lambda = 0.0;    // second Lame parameter
  double nu = 0.33;       // Poisson ratio
  double sigma_max = 1.0; // tensile stress bound
  double E = 1.0;         // Young's modulus (bookkeeping)

  static MaterialParams from_nu(double nu, double E = 1.0, double sigma_max = 1.0);
};

/// Kelvin fundamental displacement U(r) = [(3-4nu) I + rhat rhat^T] /
/// (16 pi mu (1-nu) |r|).
Mat3 kelvin_solution(const Vec3& rvec, const MaterialParams& m);

/// Gradient of the Kelvin displacement column field U(.)c with respect to
/// the field point; used by the manufactured-solution oracle.
Mat3 kelvin_gradient(const Vec3& rvec, const Vec3& c, const MaterialParams& m);

/// Stress tensor of the Kelvin field U(.)c at offset rvec from the source.
Mat3 kelvin_stress(const Vec3& rvec, const Vec3& c, const MaterialParams& m);

/// Integrand of the regularized double-layer operator applied to a linear
/// displacement patch: evaluates the three kernel terms at distance rvec
/// from the collocation point, for a patch with normal n_y. Returns the
/// 3x3 kernel acting on the local Guenter derivative data; O(1/r^2) decay
/// overall. Exposed for kernel-level tests.
struct TractionKernelTerms {
  Mat3 U_term;       // 2 mu U(r), applied to the Guenter vector of u
  double inv_4pi_r;  // 1/(4 pi r), applied to the same vector
  double laplace_dipole;  // n_y . grad(1/(4 pi r)), applied to u itself
};
TractionKernelTerms traction_kernel(const Vec3& rvec, const Vec3& n_y,
                                    const MaterialParams& m);

/// Factorized boundary system (D + C with rigid-mode constraints) plus the
/// assembled load matrices.
class BemSystem {
 public:
  int triangle_count() const { return K_; }
  int vertex_count() const { return V_; }
  int contact_count() const { return N_; }

  const MatX& D_mat() const { return D_; }
  const std::vector<Mat3>& C_blocks() const { return C_; }
  const MatX& A_mat() const { return A_; }
  const MatX& B_mat() const { return B_; }
  const Eigen::Matrix<double, Eigen::Dynamic, 6>& rigid_constraints() const {
    return Rt_;
  }

  /// Vertex displacements under a linear body force and contact forces.
  /// Loads must be in global equilibrium.
  VecX solve_displacements(const BodyForceField& g, const std::vector<Vec3>& f) const;

  /// Solve with an arbitrary collocation right-hand side (3V), used by the
  /// general-traction verification path.
  VecX solve_rhs(const VecX& rhs) const;

  /// Collocation right-hand side of a general traction field t(x, n), via
  /// the single-layer quadrature (verification path).
  VecX traction_rhs(
      const std::function<Vec3(const Vec3&, const Vec3&)>& traction) const;

  friend BemSystem assemble_system(const SurfaceMesh&, const MaterialParams&,
                                   const std::vector<ContactPoint>&);

 private:
  int K_ = 0, V_ = 0, N_ = 0;
  const SurfaceMesh* mesh_ = nullptr;
  MaterialParams material_;
  std::vector<ContactPoint> contacts_;
  GeometricMoments moments_;
  MatX D_;               // 3V x 3V, true double-layer matrix
  std::vector<Mat3> C_;  // per-vertex integral-free blocks
  MatX A_;               // 3V x 12
  MatX B_;               // 3V x 3N
  Eigen::Matrix<double, Eigen::Dynamic, 6> Rt_;  // rigid constraint columns
  std::shared_ptr<Eigen::PartialPivLU<MatX>> lu_;  // saddle factorization
  double constraint_scale_ = 1.0;
};

BemSystem assemble_system(const SurfaceMesh& mesh, const MaterialParams& material,
                          const std::vector<ContactPoint>& contacts);

/// Per-triangle stress recovery from vertex displacements and the hosted
/// contact traction t_j (force/area, zero on unloaded triangles).
Mat3 recover_stress(const SurfaceMesh& mesh, const VecX& u,
                    const std::vector<Vec3>& f,
                    const std::vector<ContactPoint>& contacts,
                    const MaterialParams& material, int j);

/// Precomputed linear maps from loads to stacked per-triangle stresses:
/// rows 9j..9j+8 hold the column-stacked 3x3 stress of triangle j.
struct StressMaps {
  MatX A_cal;  // 9K x 12
  MatX B_cal;  // 9K x 3N
  int K = 0;
  int N = 0;

  Mat3 stress_at(int j, const Eigen::Matrix<double, 12, 1>& g_params,
                 const VecX& f_stacked) const;
};

StressMaps build_stress_maps(const BemSystem& system, const SurfaceMesh& mesh,
                             const MaterialParams& material,
                             const std::vector<ContactPoint>& contacts);

}  // namespace fgm
