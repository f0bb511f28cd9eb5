#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fgm/conic.hpp"

namespace fgm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Cone blocks of the reduced problem: slack s = Qv + q, with K one of
//   SOC(m):  s0 >= ||s_bar||
//   PSD3:    smat(s) >= 0 in svec coordinates (dimension 6, degree 3)
// Each block owns its Nesterov-Todd scaling state.
// ---------------------------------------------------------------------------

struct Block {
  enum Kind { Soc, Psd } kind;
  MatX Q;  // m_b x n
  VecX q;  // m_b

  int dim() const { return int(q.size()); }
  int degree() const { return kind == Psd ? 3 : 1; }

  VecX identity() const {
    VecX e = VecX::Zero(dim());
    if (kind == Soc) {
      e[0] = 1.0;
    } else {
      e[0] = e[1] = e[2] = 1.0;
    }
    return e;
  }

  // Margin to the cone boundary, positive strictly inside.
  double interior_margin(const VecX& s) const {
    if (kind == Soc) return s[0] - s.tail(s.size() - 1).norm();
    return eig_sym3(smat(s)).values[2];
  }

  // Largest alpha with s + alpha d still in the cone (s strictly inside).
  double max_step(const VecX& s, const VecX& d) const {
    if (kind == Soc) {
      const auto sb = s.tail(s.size() - 1);
      const auto db = d.tail(d.size() - 1);
      double a = d[0] * d[0] - db.squaredNorm();
      double b = 2.0 * (s[0] * d[0] - sb.dot(db));
      double c = s[0] * s[0] - sb.squaredNorm();
      if (c <= 0) return 0.0;
      double best = kInf;
      if (std::abs(a) < 1e-300) {
        if (b < 0) best = -c / b;
      } else {
        double disc = b * b - 4 * a * c;
        if (disc >= 0) {
          double sq = std::sqrt(disc);
          for (double r : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)})
            if (r > 0) best = std::min(best, r);
        }
      }
      if (d[0] < 0) best = std::min(best, -s[0] / d[0]);
      return best;
    }
    Eigen::LLT<Mat3> llt(smat(s));
    if (llt.info() != Eigen::Success) return 0.0;
    Mat3 Li = Mat3(llt.matrixL()).inverse();
    Mat3 M = Li * smat(d) * Li.transpose();
    double lmin = eig_sym3(0.5 * (M + M.transpose())).values[2];
    return lmin >= 0 ? kInf : -1.0 / lmin;
  }

  VecX jprod(const VecX& x, const VecX& y) const {
    VecX out(dim());
    if (kind == Soc) {
      out[0] = x.dot(y);
      out.tail(dim() - 1) = x[0] * y.tail(dim() - 1) + y[0] * x.tail(dim() - 1);
    } else {
      Mat3 X = smat(x), Y = smat(y);
      out = svec(0.5 * (X * Y + Y * X));
    }
    return out;
  }

  // Solve lambda o u = d for u, with the NT scaled point lambda.
  VecX jdiv_lambda(const VecX& d) const {
    VecX u(dim());
    if (kind == Soc) {
      double l0 = lambda[0];
      const auto lb = lambda.tail(dim() - 1);
      double det = l0 * l0 - lb.squaredNorm();
      if (det <= 0 || l0 <= 0) fail(ErrorCode::NumericalFailure, "SOC lambda singular");
      u[0] = (l0 * d[0] - lb.dot(d.tail(dim() - 1))) / det;
      u.tail(dim() - 1) = (d.tail(dim() - 1) - u[0] * lb) / l0;
    } else {
      // lambda is diagonal by construction of the scaling.
      Mat3 D = smat(d);
      Mat3 U;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double den = lam_diag[i] + lam_diag[j];
          if (den <= 0) fail(ErrorCode::NumericalFailure, "PSD lambda singular");
          U(i, j) = 2.0 * D(i, j) / den;
        }
      u = svec(0.5 * (U + U.transpose()));
    }
    return u;
  }

  // NT scaling state. SOC: W symmetric with parameters (eta, wbar).
  // PSD: W(u) = svec(r^T smat(u) r), lambda = svec(diag(lam_diag)).
  double eta = 1.0;
  VecX wbar;
  Mat3 r = Mat3::Identity(), rinv = Mat3::Identity();
  Vec3 lam_diag = Vec3::Ones();
  VecX lambda;  // W z = W^{-T} s = lambda

  VecX apply_soc_core(const VecX& x, double sign, double scale) const {
    const int m = dim();
    VecX y(m);
    const auto wb = wbar.tail(m - 1);
    double w0 = wbar[0];
    const auto xb = x.tail(m - 1);
    y[0] = scale * (w0 * x[0] + sign * wb.dot(xb));
    y.tail(m - 1) = scale * (sign * wb * x[0] + xb + wb * (wb.dot(xb) / (1.0 + w0)));
    return y;
  }

  VecX apply_W(const VecX& x) const {
    if (kind == Soc) return apply_soc_core(x, +1.0, eta);
    return svec(r.transpose() * smat(x) * r);
  }
  VecX apply_WT(const VecX& x) const {
    if (kind == Soc) return apply_soc_core(x, +1.0, eta);
    return svec(r * smat(x) * r.transpose());
  }
  VecX apply_Winv(const VecX& x) const {
    if (kind == Soc) return apply_soc_core(x, -1.0, 1.0 / eta);
    return svec(rinv.transpose() * smat(x) * rinv);
  }
  VecX apply_WinvT(const VecX& x) const {
    if (kind == Soc) return apply_soc_core(x, -1.0, 1.0 / eta);
    return svec(rinv * smat(x) * rinv.transpose());
  }

  void compute_scaling(const VecX& s, const VecX& z) {
    if (kind == Soc) {
      const int m = dim();
      double ss = s[0] * s[0] - s.tail(m - 1).squaredNorm();
      double zz = z[0] * z[0] - z.tail(m - 1).squaredNorm();
      if (ss <= 0 || zz <= 0) fail(ErrorCode::NumericalFailure, "SOC iterate left cone");
      VecX sb = s / std::sqrt(ss), zb = z / std::sqrt(zz);
      double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
      wbar = VecX(m);
      wbar[0] = (sb[0] + zb[0]) / (2 * gamma);
      wbar.tail(m - 1) = (sb.tail(m - 1) - zb.tail(m - 1)) / (2 * gamma);
      eta = std::pow(ss / zz, 0.25);
      lambda = apply_W(z);
    } else {
      Eigen::LLT<Mat3> ls(smat(s)), lz(smat(z));
      if (ls.info() != Eigen::Success || lz.info() != Eigen::Success)
        fail(ErrorCode::NumericalFailure, "PSD iterate left cone");
      Mat3 L1 = ls.matrixL(), L2 = lz.matrixL();
      Eigen::JacobiSVD<Mat3> svd(Mat3(L2.transpose() * L1),
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
      Vec3 sig = svd.singularValues();
      if (sig.minCoeff() <= 0) fail(ErrorCode::NumericalFailure, "PSD scaling singular");
      r = L1 * svd.matrixV() * sig.cwiseSqrt().cwiseInverse().asDiagonal();
      rinv = sig.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() *
             L1.triangularView<Eigen::Lower>().solve(Mat3::Identity());
      lam_diag = sig;
      lambda = svec(Mat3(sig.asDiagonal()));
    }
  }
};

// Reduced standard form: minimize cr.v with Qv + q in K; x = x_part + N v.
struct Reduced {
  int n = 0;
  VecX cr;
  std::vector<Block> blocks;
  VecX x_part;
  MatX N;
  double obj_offset = 0.0;
  bool infeasible = false;
};

Reduced presolve(const ConicProgram& prog) {
  const int n = prog.num_vars();
  Reduced red;
  MatX A = prog.eq_matrix();
  VecX b = prog.eq_rhs();
  const int p = int(A.rows());

  std::vector<int> pivot_col;
  std::vector<bool> is_pivot(n, false);
  double scale = std::max(A.size() ? A.cwiseAbs().maxCoeff() : 0.0, 1.0);
  int rank = 0;
  for (int row = 0; row < p; ++row) {
    int best_c = -1, best_r = -1;
    double best_v = 0.0;
    for (int r2 = rank; r2 < p; ++r2)
      for (int c = 0; c < n; ++c)
        if (!is_pivot[c] && std::abs(A(r2, c)) > best_v) {
          best_v = std::abs(A(r2, c));
          best_r = r2;
          best_c = c;
        }
    if (best_v <= 1e-12 * scale) break;
    A.row(rank).swap(A.row(best_r));
    std::swap(b[rank], b[best_r]);
    double piv = A(rank, best_c);
    A.row(rank) /= piv;
    b[rank] /= piv;
    for (int r2 = 0; r2 < p; ++r2) {
      if (r2 == rank) continue;
      double f = A(r2, best_c);
      if (f != 0.0) {
        A.row(r2) -= f * A.row(rank);
        b[r2] -= f * b[rank];
      }
    }
    pivot_col.push_back(best_c);
    is_pivot[best_c] = true;
    ++rank;
  }
  for (int r2 = rank; r2 < p; ++r2)
    if (std::abs(b[r2]) > 1e-9 * std::max(1.0, scale)) {
      red.infeasible = true;
      return red;
    }

  std::vector<int> free_cols;
  for (int c = 0; c < n; ++c)
    if (!is_pivot[c]) free_cols.push_back(c);
  const int nf = int(free_cols.size());

  red.x_part = VecX::Zero(n);
  for (int r2 = 0; r2 < rank; ++r2) red.x_part[pivot_col[r2]] = b[r2];
  red.N = MatX::Zero(n, nf);
  for (int k = 0; k < nf; ++k) {
    red.N(free_cols[k], k) = 1.0;
    for (int r2 = 0; r2 < rank; ++r2) red.N(pivot_col[r2], k) = -A(r2, free_cols[k]);
  }
  if (nf > 0) {
    Eigen::HouseholderQR<MatX> qr(red.N);
    red.N = qr.householderQ() * MatX::Identity(n, nf);
  }
  red.n = nf;

  const VecX& c = prog.objective();
  if (c.size() != n) fail(ErrorCode::InvalidArgument, "objective not set");
  red.obj_offset = c.dot(red.x_part);
  red.cr = red.N.transpose() * c;

  auto push = [&](Block&& blk) {
    if (blk.Q.size() == 0 ||
        blk.Q.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, blk.q.cwiseAbs().maxCoeff())) {
      if (blk.interior_margin(blk.q) < -1e-9) red.infeasible = true;
      return;  // constant block
    }
    // Per-block equilibration; scalar scaling of (Q, q) keeps the same
    // feasible set for either cone type.
    double sc = std::max(blk.Q.cwiseAbs().maxCoeff(), blk.q.cwiseAbs().maxCoeff());
    if (sc > 1.0) {
      blk.Q /= sc;
      blk.q /= sc;
    }
    red.blocks.push_back(std::move(blk));
  };

  for (const auto& s : prog.soc_blocks()) {
    Block blk;
    blk.kind = Block::Soc;
    blk.Q = s.rows * red.N;
    blk.q = s.rows * red.x_part + s.offset;
    push(std::move(blk));
  }
  const Vec6 eye = svec(Mat3::Identity());
  for (const auto& pb : prog.psd_blocks()) {
    Vec6 base_q = pb.rows * red.x_part + pb.offset;
    MatX base_Q = pb.rows * red.N;
    for (double sgn : {1.0, -1.0}) {
      // sigma_max I - sgn * sigma(x) >= 0
      Block blk;
      blk.kind = Block::Psd;
      blk.Q = -sgn * base_Q;
      blk.q = pb.bound * eye - sgn * base_q;
      push(std::move(blk));
    }
  }
  return red;
}

}  // namespace

Solution solve_conic(const ConicProgram& prog, const SolverOptions& opts) {
  Reduced red = presolve(prog);
  Solution sol;
  sol.x = VecX::Zero(prog.num_vars());

  if (red.infeasible) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }

  const int n = red.n;
  int m = 0, theta = 0;
  for (const auto& b : red.blocks) {
    m += b.dim();
    theta += b.degree();
  }

  MatX G(m, std::max(n, 1));
  VecX h(m);
  {
    int at = 0;
    for (const auto& b : red.blocks) {
      G.block(at, 0, b.dim(), n) = -b.Q;
      h.segment(at, b.dim()) = b.q;
      at += b.dim();
    }
  }
  const VecX c = -red.cr;  // internal form minimizes

  auto finish_optimal = [&](const VecX& v, double tau) {
    sol.x = red.x_part + red.N * (v / tau);
    sol.objective = prog.objective().dot(sol.x);
    sol.status = SolveStatus::Optimal;
  };

  if (n == 0) {
    finish_optimal(VecX::Zero(0), 1.0);
    return sol;
  }
  if (m == 0) {
    if (c.norm() <= 1e-14) {
      finish_optimal(VecX::Zero(n), 1.0);
    } else {
      sol.status = SolveStatus::Unbounded;
      VecX ray = red.N * (-c / c.norm());
      sol.ray = ray;
    }
    return sol;
  }

  auto& blocks = red.blocks;
  auto for_each_block = [&](auto&& fn) {
    int at = 0;
    for (auto& b : blocks) {
      fn(b, at);
      at += b.dim();
    }
  };

  VecX v = VecX::Zero(n), z(m), s(m);
  double tau = 1.0, kappa = 1.0;
  for_each_block([&](Block& b, int at) {
    s.segment(at, b.dim()) = b.identity();
    z.segment(at, b.dim()) = b.identity();
  });

  const double hn = std::max(1.0, h.norm());
  const double cn = std::max(1.0, c.norm());
  double reg = 1e-10;

  VecX best_x;
  double best_res = kInf;

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    VecX r_dual = G.transpose() * z + c * tau;
    VecX r_prim = s + G * v - h * tau;
    double r_gap = kappa + c.dot(v) + h.dot(z);
    double mu = (s.dot(z) + tau * kappa) / (theta + 1);

    double pcost = c.dot(v) / tau;
    double gap_abs = s.dot(z) / (tau * tau);
    double relgap = gap_abs / std::max(1.0, std::abs(pcost));
    double pres = r_prim.norm() / (tau * hn);
    double dres = r_dual.norm() / (tau * cn);

    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.gap = relgap;
    sol.iterations = iter;

    if (opts.verbose)
      std::fprintf(stderr,
                   "it %3d  obj %+.8e  pres %.2e  dres %.2e  gap %.2e  tau %.2e  kap %.2e\n",
                   iter, -(pcost + 0.0) - 0.0, pres, dres, relgap, tau, kappa);

    if (pres <= opts.tol && dres <= opts.tol &&
        (relgap <= opts.tol || gap_abs <= 0.01 * opts.tol)) {
      finish_optimal(v, tau);
      return sol;
    }
    if (pres + dres + relgap < best_res) {
      best_res = pres + dres + relgap;
      best_x = red.x_part + red.N * (v / tau);
    }

    double hz = h.dot(z);
    if (hz < -1e-10) {
      VecX nz = z / (-hz);
      if ((G.transpose() * nz).norm() <= opts.tol * cn) {
        sol.status = SolveStatus::Infeasible;
        return sol;
      }
    }
    double cv = c.dot(v);
    if (cv < -1e-10) {
      VecX nv = v / (-cv);
      VecX ns = s / (-cv);
      if ((G * nv + ns).norm() <= 1e3 * opts.tol * std::max(1.0, nv.norm())) {
        sol.status = SolveStatus::Unbounded;
        VecX ray = red.N * nv;
        double rn = ray.norm();
        sol.ray = rn > 0 ? VecX(ray / rn) : ray;
        return sol;
      }
    }
    if (iter == opts.max_iter) break;

    for_each_block([&](Block& b, int at) {
      b.compute_scaling(s.segment(at, b.dim()), z.segment(at, b.dim()));
    });

    // Scaled cone matrix Ghat = W^{-T} G (blockwise), Tikhonov rows appended.
    // The KKT reduction Ghat^T Ghat dv = b1 + Ghat^T W^{-T} b2 is solved
    // through a QR of [Ghat; sqrt(reg) I], which keeps the conditioning at
    // kappa(Ghat) instead of its square.
    MatX Ghat(m + n, n);
    for_each_block([&](Block& b, int at) {
      for (int col = 0; col < n; ++col)
        Ghat.block(at, col, b.dim(), 1) = b.apply_WinvT(G.block(at, col, b.dim(), 1));
    });
    Ghat.bottomRows(n) = std::sqrt(reg) * MatX::Identity(n, n);
    Eigen::HouseholderQR<MatX> qr(Ghat);
    MatX R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    double rmin = R.diagonal().cwiseAbs().minCoeff();
    if (!(rmin > 0) || !std::isfinite(rmin))
      fail(ErrorCode::NumericalFailure, "KKT factorization failed");

    auto apply_WinvT_all = [&](const VecX& x) {
      VecX y(m);
      for_each_block([&](Block& b, int at) {
        y.segment(at, b.dim()) = b.apply_WinvT(x.segment(at, b.dim()));
      });
      return y;
    };
    auto apply_Winv_all = [&](const VecX& x) {
      VecX y(m);
      for_each_block([&](Block& b, int at) {
        y.segment(at, b.dim()) = b.apply_Winv(x.segment(at, b.dim()));
      });
      return y;
    };
    auto normal_solve = [&](const VecX& rhs) {  // (Ghat^T Ghat) x = rhs
      VecX t = R.transpose().triangularView<Eigen::Lower>().solve(rhs);
      return VecX(R.triangularView<Eigen::Upper>().solve(t));
    };
    auto kkt_solve = [&](const VecX& b1, const VecX& b2, VecX& dv, VecX& dz) {
      VecX b2hat = apply_WinvT_all(b2);
      VecX rhs = b1 + Ghat.topRows(m).transpose() * b2hat;
      dv = normal_solve(rhs);
      for (int pass = 0; pass < 2; ++pass) {
        VecX resid = rhs - Ghat.topRows(m).transpose() * (Ghat.topRows(m) * dv) - reg * dv;
        dv += normal_solve(resid);
      }
      dz = apply_Winv_all(Ghat.topRows(m) * dv - b2hat);
    };

    VecX dv2, dz2;
    kkt_solve(-c, h, dv2, dz2);
    double denom = -kappa / tau + c.dot(dv2) + h.dot(dz2);
    if (std::abs(denom) < 1e-300) fail(ErrorCode::NumericalFailure, "tau pivot vanished");

    auto direction = [&](double eta_rhs, const VecX& dcomp, double dtk, VecX& dv,
                         VecX& dz, VecX& ds, double& dtau, double& dkap) {
      VecX Wtu(m);
      for_each_block([&](Block& b, int at) {
        VecX u = b.jdiv_lambda(dcomp.segment(at, b.dim()));
        Wtu.segment(at, b.dim()) = b.apply_WT(u);
      });
      VecX b1 = -eta_rhs * r_dual;
      VecX b2 = -eta_rhs * r_prim - Wtu;
      VecX dv1, dz1;
      kkt_solve(b1, b2, dv1, dz1);
      double num = -eta_rhs * r_gap - dtk / tau - c.dot(dv1) - h.dot(dz1);
      dtau = num / denom;
      dv = dv1 + dtau * dv2;
      dz = dz1 + dtau * dz2;
      // Recover ds and dkap from the residual equations rather than the
      // scaled complementarity; keeps the primal/gap channels exact even
      // when W is nearly singular at the boundary.
      ds = -eta_rhs * r_prim - G * dv + h * dtau;
      dkap = -eta_rhs * r_gap - c.dot(dv) - h.dot(dz);
    };

    auto max_step_all = [&](const VecX& ds, const VecX& dz, double dtau, double dkap) {
      double a = kInf;
      for_each_block([&](Block& b, int at) {
        a = std::min(a, b.max_step(s.segment(at, b.dim()), ds.segment(at, b.dim())));
        a = std::min(a, b.max_step(z.segment(at, b.dim()), dz.segment(at, b.dim())));
      });
      if (dtau < 0) a = std::min(a, -tau / dtau);
      if (dkap < 0) a = std::min(a, -kappa / dkap);
      return a;
    };

    // Predictor.
    VecX dcomp_aff(m);
    for_each_block([&](Block& b, int at) {
      dcomp_aff.segment(at, b.dim()) = -b.jprod(b.lambda, b.lambda);
    });
    VecX dv_a, dz_a, ds_a;
    double dtau_a, dkap_a;
    direction(1.0, dcomp_aff, -tau * kappa, dv_a, dz_a, ds_a, dtau_a, dkap_a);
    double alpha_aff = std::min(1.0, max_step_all(ds_a, dz_a, dtau_a, dkap_a));

    double mu_aff = ((s + alpha_aff * ds_a).dot(z + alpha_aff * dz_a) +
                     (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkap_a)) /
                    (theta + 1);
    double sigma = std::clamp(std::pow(std::max(0.0, mu_aff / mu), 3.0), 1e-8, 0.999);

    // Corrector.
    VecX dcomp(m);
    for_each_block([&](Block& b, int at) {
      VecX ws = b.apply_WinvT(ds_a.segment(at, b.dim()));
      VecX wz = b.apply_W(dz_a.segment(at, b.dim()));
      dcomp.segment(at, b.dim()) =
          -b.jprod(b.lambda, b.lambda) - b.jprod(ws, wz) + sigma * mu * b.identity();
    });
    double dtk = -tau * kappa - dtau_a * dkap_a + sigma * mu;
    VecX dv, dz, ds;
    double dtau, dkap;
    direction(1.0 - sigma, dcomp, dtk, dv, dz, ds, dtau, dkap);

    double alpha = std::min(1.0, 0.99 * max_step_all(ds, dz, dtau, dkap));
    if (!(alpha > 0) || !std::isfinite(alpha))
      fail(ErrorCode::NumericalFailure, "step length collapsed");

    v += alpha * dv;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkap;
  }

  sol.status = SolveStatus::IterLimit;
  if (best_x.size()) {
    sol.x = best_x;
    sol.objective = prog.objective().dot(sol.x);
  }
  return sol;
}

}  // namespace fgm
