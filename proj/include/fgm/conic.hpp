#pragma once

#include <optional>
#include <vector>

#include "fgm/core.hpp"
#include "fgm/eig3.hpp"

namespace fgm {

/// Linear objective, dense linear equalities, second-order cone blocks on
/// affine maps, and symmetric 3x3 interval blocks -sigma_max I <= smat(Cx+d)
/// <= sigma_max I. Stress blocks enter through svec coordinates.
class ConicProgram {
 public:
  explicit ConicProgram(int num_vars) : n_(num_vars) {}

  int num_vars() const { return n_; }

  /// Objective is maximized.
  void set_objective(const VecX& c);

  void add_equality(const VecX& row, double rhs);
  /// rows * x + offset must lie in SOC(dim): first entry >= norm of rest.
  void add_soc(const MatX& rows, const VecX& offset);
  /// svec(sigma) = rows * x + offset; -bound I <= sigma <= bound I.
  void add_psd_interval(const Eigen::Matrix<double, 6, Eigen::Dynamic>& rows,
                        const Vec6& offset, double bound);

  /// Convenience: friction cone ||(I-nn^T)f|| <= theta n^T f on a 3-variable
  /// slice, entered as a 3-row SOC over a tangent basis.
  void add_friction_cone(int f_index, const Vec3& n, double theta);

  const VecX& objective() const { return c_; }

  struct SocBlock {
    MatX rows;
    VecX offset;
  };
  struct PsdIntervalBlock {
    Eigen::Matrix<double, 6, Eigen::Dynamic> rows;
    Vec6 offset;
    double bound;
  };

  const std::vector<SocBlock>& soc_blocks() const { return soc_; }
  const std::vector<PsdIntervalBlock>& psd_blocks() const { return psd_; }
  const MatX& eq_matrix() const { return eq_rows_; }
  const VecX& eq_rhs() const { return eq_rhs_; }

 private:
  int n_;
  VecX c_;
  MatX eq_rows_;  // grows by rows
  VecX eq_rhs_;
  std::vector<SocBlock> soc_;
  std::vector<PsdIntervalBlock> psd_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit };

struct Solution {
  SolveStatus status = SolveStatus::IterLimit;
  VecX x;          // primal values in the caller's variable numbering
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  /// Improving feasible direction when status == Unbounded.
  std::optional<VecX> ray;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 200;
  bool verbose = false;
};

/// Primal-dual path following (Mehrotra predictor-corrector, NT scaling)
/// on the homogeneous self-dual embedding. Equality-fixed and
/// equality-defined variables are eliminated in presolve.
Solution solve_conic(const ConicProgram& program, const SolverOptions& opts = {});

}  // namespace fgm
