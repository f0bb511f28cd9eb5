#include "fgm/bem.hpp"

#include <Eigen/SVD>
#include <atomic>
#include <cmath>
#include <thread>

#include "fgm/moments.hpp"

namespace fgm {

MaterialParams MaterialParams::from_nu(double nu, double E, double sigma_max) {
  if (!(nu > -1.0 && nu < 0.5)) fail(ErrorCode::InvalidArgument, "nu outside (-1, 0.5)");
  if (!(E > 0) || !(sigma_max > 0))
    fail(ErrorCode::InvalidArgument, "E and sigma_max must be positive");
  MaterialParams m;
  m.nu = nu;
  m.E = E;
  m.sigma_max = sigma_max;
  m.mu = E / (2.0 * (1.0 + nu));
  m.lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  return m;
}

Mat3 kelvin_solution(const Vec3& rvec, const MaterialParams& m) {
  double r = rvec.norm();
  if (r <= 0) fail(ErrorCode::ZeroRadius, "kelvin_solution at zero radius");
  Vec3 rh = rvec / r;
  double a = 1.0 / (16.0 * M_PI * m.mu * (1.0 - m.nu) * r);
  return a * ((3.0 - 4.0 * m.nu) * Mat3::Identity() + rh * rh.transpose());
}

Mat3 kelvin_gradient(const Vec3& rvec, const Vec3& c, const MaterialParams& m) {
  double r = rvec.norm();
  if (r <= 0) fail(ErrorCode::ZeroRadius, "kelvin_gradient at zero radius");
  double a = 1.0 / (16.0 * M_PI * m.mu * (1.0 - m.nu));
  double r3 = r * r * r, r5 = r3 * r * r;
  Mat3 J;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k) {
        double t = -(3.0 - 4.0 * m.nu) * (i == k ? 1.0 : 0.0) * rvec[j] / r3;
        t += ((i == j ? 1.0 : 0.0) * rvec[k] + (k == j ? 1.0 : 0.0) * rvec[i]) / r3;
        t -= 3.0 * rvec[i] * rvec[k] * rvec[j] / r5;
        v += t * c[k];
      }
      J(i, j) = a * v;
    }
  return J;
}

Mat3 kelvin_stress(const Vec3& rvec, const Vec3& c, const MaterialParams& m) {
  Mat3 J = kelvin_gradient(rvec, c, m);
  Mat3 eps = 0.5 * (J + J.transpose());
  return 2.0 * m.mu * eps + m.lambda * eps.trace() * Mat3::Identity();
}

TractionKernelTerms traction_kernel(const Vec3& rvec, const Vec3& n_y,
                                    const MaterialParams& m) {
  double r = rvec.norm();
  if (r <= 0) fail(ErrorCode::ZeroRadius, "traction_kernel at zero radius");
  if (std::abs(n_y.norm() - 1.0) > 1e-9) fail(ErrorCode::NonUnitNormal, "patch normal");
  TractionKernelTerms t;
  t.U_term = 2.0 * m.mu * kelvin_solution(rvec, m);
  t.inv_4pi_r = 1.0 / (4.0 * M_PI * r);
  // grad_x (1/4 pi r) with r = |x - x*|: -(x - x*) / (4 pi r^3).
  t.laplace_dipole = -n_y.dot(rvec) / (4.0 * M_PI * r * r * r);
  return t;
}

namespace {

struct TriQuadPoint {
  Vec3 pos;
  double w;       // absolute weight (includes area factors)
  Vec3 bary;      // shape-function values
};

// Gauss-Legendre nodes/weights on [0,1] by Newton iteration.
void gauss01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
      }
      double dp = n * (t * p0 - p1) / (t * t - 1.0);
      double dt = p0 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
      }
      double dp = n * (t * p0 - p1) / (t * t - 1.0);
      x[i] = 0.5 * (1.0 + t);
      w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
  }
}

// Symmetric 7-point degree-5 rule, barycentric (weights sum to 1).
const double kW7[3] = {0.225, 0.132394152788506, 0.125939180544827};
const double kA7[2] = {0.059715871789770, 0.797426985353087};
const double kB7[2] = {0.470142064105115, 0.101286507323456};

void rule7(const Vec3& p0, const Vec3& p1, const Vec3& p2, double area,
           std::vector<TriQuadPoint>& out) {
  auto emit = [&](double b0, double b1, double b2, double w) {
    out.push_back({b0 * p0 + b1 * p1 + b2 * p2, w * area, Vec3(b0, b1, b2)});
  };
  emit(1.0 / 3, 1.0 / 3, 1.0 / 3, kW7[0]);
  for (int g = 0; g < 2; ++g) {
    double a = kA7[g], b = kB7[g];
    emit(a, b, b, kW7[g + 1]);
    emit(b, a, b, kW7[g + 1]);
    emit(b, b, a, kW7[g + 1]);
  }
}

// Collapsed-square n x n rule (25 points at n=5).
void rule_collapsed(int n, const Vec3& p0, const Vec3& p1, const Vec3& p2, double area,
                    std::vector<TriQuadPoint>& out) {
  static thread_local std::vector<double> gx, gw;
  static thread_local int cached_n = -1;
  if (cached_n != n) {
    gauss01(n, gx, gw);
    cached_n = n;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double u = gx[i], v = gx[j];
      double b1 = u, b2 = v * (1.0 - u);
      double b0 = 1.0 - b1 - b2;
      double jac = (1.0 - u);
      out.push_back({b0 * p0 + b1 * p1 + b2 * p2, gw[i] * gw[j] * jac * 2.0 * area,
                     Vec3(b0, b1, b2)});
    }
}

// Duffy rule concentrating at vertex `corner` of the triangle.
void rule_duffy(int n, const Vec3& p0, const Vec3& p1, const Vec3& p2, double area,
                int corner, std::vector<TriQuadPoint>& out) {
  static thread_local std::vector<double> gx, gw;
  static thread_local int cached_n = -1;
  if (cached_n != n) {
    gauss01(n, gx, gw);
    cached_n = n;
  }
  Vec3 a = p0, b = p1, c = p2;
  int ia = 0, ib = 1, ic = 2;
  if (corner == 1) {
    a = p1; b = p2; c = p0; ia = 1; ib = 2; ic = 0;
  } else if (corner == 2) {
    a = p2; b = p0; c = p1; ia = 2; ib = 0; ic = 1;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double xi = gx[i], eta = gx[j];
      // point = a + xi * ((b - a) + eta * (c - b)); jacobian 2 A xi
      Vec3 pos = a + xi * ((b - a) + eta * (c - b));
      double bb = xi * (1.0 - eta);  // weight of vertex b
      double bc = xi * eta;          // weight of vertex c
      double ba = 1.0 - bb - bc;
      Vec3 bary;
      bary[ia] = ba;
      bary[ib] = bb;
      bary[ic] = bc;
      out.push_back({pos, gw[i] * gw[j] * 2.0 * area * xi, bary});
    }
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Conservative lower bound: distance to the plane clipped by vertex
  // distances; adequate for quadrature-tier selection.
  double dv = std::min({(p - a).norm(), (p - b).norm(), (p - c).norm()});
  return dv;
}

struct TriGeom {
  Vec3 p[3];
  Vec3 m;         // unit normal
  double area;
  double diam;
  Vec3 grad[3];   // surface gradients of the shape functions
  std::array<int, 3> verts;
};

std::vector<TriGeom> build_tri_geom(const SurfaceMesh& mesh) {
  std::vector<TriGeom> tg(mesh.triangle_count());
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    TriGeom& t = tg[j];
    t.verts = mesh.triangle(j);
    for (int k = 0; k < 3; ++k) t.p[k] = mesh.vertex(t.verts[k]);
    t.m = mesh.normal(j);
    t.area = mesh.area(j);
    t.diam = std::max({(t.p[1] - t.p[0]).norm(), (t.p[2] - t.p[1]).norm(),
                       (t.p[0] - t.p[2]).norm()});
    for (int b = 0; b < 3; ++b) {
      Vec3 opp = t.p[(b + 2) % 3] - t.p[(b + 1) % 3];
      t.grad[b] = t.m.cross(opp) / (2.0 * t.area);
    }
  }
  return tg;
}

// Quadrature points for the pair (collocation x*, triangle), escalating
// with proximity; Duffy when x* is one of the triangle's vertices.
void pair_quadrature(const TriGeom& t, const Vec3& xstar, int incident_corner,
                     std::vector<TriQuadPoint>& out, int depth = 0) {
  if (incident_corner >= 0) {
    rule_duffy(8, t.p[0], t.p[1], t.p[2], t.area, incident_corner, out);
    return;
  }
  double d = point_triangle_distance(xstar, t.p[0], t.p[1], t.p[2]);
  if (d >= 2.0 * t.diam) {
    rule7(t.p[0], t.p[1], t.p[2], t.area, out);
    return;
  }
  if (d >= 0.6 * t.diam || depth >= 2) {
    rule_collapsed(5, t.p[0], t.p[1], t.p[2], t.area, out);
    return;
  }
  // Very close but not incident: split at edge midpoints and recurse.
  Vec3 m01 = 0.5 * (t.p[0] + t.p[1]);
  Vec3 m12 = 0.5 * (t.p[1] + t.p[2]);
  Vec3 m20 = 0.5 * (t.p[2] + t.p[0]);
  const Vec3 subs[4][3] = {{t.p[0], m01, m20}, {m01, t.p[1], m12},
                           {m20, m12, t.p[2]}, {m01, m12, m20}};
  for (auto& sub : subs) {
    TriGeom st = t;
    st.p[0] = sub[0];
    st.p[1] = sub[1];
    st.p[2] = sub[2];
    st.area = 0.5 * (sub[1] - sub[0]).cross(sub[2] - sub[0]).norm();
    st.diam = std::max({(sub[1] - sub[0]).norm(), (sub[2] - sub[1]).norm(),
                        (sub[0] - sub[2]).norm()});
    std::vector<TriQuadPoint> pts;
    pair_quadrature(st, xstar, -1, pts, depth + 1);
    // Rewrite barycentrics with respect to the parent triangle.
    for (auto& qp : pts) {
      Vec3 rel = qp.pos - t.p[0];
      Vec3 e1 = t.p[1] - t.p[0], e2 = t.p[2] - t.p[0];
      double d11 = e1.dot(e1), d12 = e1.dot(e2), d22 = e2.dot(e2);
      double r1 = rel.dot(e1), r2 = rel.dot(e2);
      double det = d11 * d22 - d12 * d12;
      double b1 = (d22 * r1 - d12 * r2) / det;
      double b2 = (d11 * r2 - d12 * r1) / det;
      qp.bary = Vec3(1.0 - b1 - b2, b1, b2);
      out.push_back(qp);
    }
  }
}

// Arc quadrature of the boundary correction produced when the Guenter
// terms are moved onto the displacement over the punctured surface: the
// limit is a finite 3x3 matrix per collocation vertex, integrated over the
// unit fan arcs of the incident triangles.
Mat3 line_correction(const SurfaceMesh& mesh, const std::vector<TriGeom>& tg, int v,
                     const MaterialParams& mat) {
  std::vector<int> fan;
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    const auto& t = mesh.triangle(j);
    if (t[0] == v || t[1] == v || t[2] == v) fan.push_back(j);
  }
  const Vec3 xstar = mesh.vertex(v);
  static const int kArcN = 16;
  static std::vector<double> ax, aw;
  if (ax.empty()) gauss01(kArcN, ax, aw);

  double beta = 1.0 / (16.0 * M_PI * mat.mu * (1.0 - mat.nu));
  Mat3 lam = Mat3::Zero();
  for (int j : fan) {
    const TriGeom& t = tg[j];
    int kv = 0;
    while (t.verts[kv] != v) ++kv;
    Vec3 ea = (t.p[(kv + 1) % 3] - xstar).normalized();
    Vec3 eb_raw = t.p[(kv + 2) % 3] - xstar;
    double alpha = std::acos(std::clamp(ea.dot(eb_raw.normalized()), -1.0, 1.0));
    Vec3 e2 = (eb_raw - ea * ea.dot(eb_raw)).normalized();
    for (int q = 0; q < kArcN; ++q) {
      double th = alpha * ax[q];
      double w = alpha * aw[q];
      Vec3 rh = std::cos(th) * ea + std::sin(th) * e2;
      Vec3 tau = -t.m.cross(rh);
      Mat3 U1 = beta * ((3.0 - 4.0 * mat.nu) * Mat3::Identity() + rh * rh.transpose());
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) {
          double term1 = 0.0;
          for (int jj = 0; jj < 3; ++jj) {
            Vec3 cross = Vec3::Unit(jj).cross(Vec3::Unit(k));
            term1 += U1(jj, i) * cross.dot(tau);
          }
          double term2 = Vec3::Unit(k).cross(Vec3::Unit(i)).dot(tau) / (4.0 * M_PI);
          lam(i, k) += w * (2.0 * mat.mu * term1 + term2);
        }
    }
  }
  return lam;
}

void parallel_rows(int count, const std::function<void(int, int)>& body) {
  int workers = std::min(worker_count(), count);
  if (workers <= 1) {
    body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk, hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(body, lo, hi);
  }
  for (auto& th : pool) th.join();
}

}  // namespace

BemSystem assemble_system(const SurfaceMesh& mesh, const MaterialParams& material,
                          const std::vector<ContactPoint>& contacts) {
  const int V = mesh.vertex_count();
  const int K = mesh.triangle_count();
  const int N = int(contacts.size());
  for (const auto& c : contacts) {
    if (c.triangle < 0 || c.triangle >= K)
      fail(ErrorCode::InvalidArgument, "contact host triangle out of range");
    for (int k = 0; k < 3; ++k)
      if ((mesh.vertex(mesh.triangle(c.triangle)[k]) - c.position).norm() <
          1e-6 * mesh.bbox_diag())
        fail(ErrorCode::InvalidArgument, "contact coincides with a mesh vertex");
  }

  BemSystem sys;
  sys.K_ = K;
  sys.V_ = V;
  sys.N_ = N;
  sys.mesh_ = &mesh;
  sys.material_ = material;
  sys.contacts_ = contacts;
  sys.moments_ = compute_moments(mesh);
  sys.D_ = MatX::Zero(3 * V, 3 * V);
  sys.C_.assign(V, Mat3::Zero());
  sys.A_ = MatX::Zero(3 * V, 12);
  sys.B_ = MatX::Zero(3 * V, 3 * N);

  std::vector<TriGeom> tg = build_tri_geom(mesh);
  const double kappa = (material.lambda + material.mu) / (material.lambda + 2.0 * material.mu);
  const double inv8pimu = 1.0 / (8.0 * M_PI * material.mu);
  const double rfloor = 1e-9 * mesh.bbox_diag();

  parallel_rows(V, [&](int v_lo, int v_hi) {
    std::vector<TriQuadPoint> pts;
    for (int v = v_lo; v < v_hi; ++v) {
      const Vec3 xstar = mesh.vertex(v);
      for (int j = 0; j < K; ++j) {
        const TriGeom& t = tg[j];
        int corner = -1;
        for (int k = 0; k < 3; ++k)
          if (t.verts[k] == v) corner = k;
        pts.clear();
        pair_quadrature(t, xstar, corner, pts);

        Mat3 IU = Mat3::Zero();
        double Ir = 0.0;
        Vec3 tb = Vec3::Zero();  // integral of phi_b / (4 pi r^3)
        Eigen::Matrix<double, 3, 12> Arow = Eigen::Matrix<double, 3, 12>::Zero();
        double hstar = t.m.dot(t.p[0] - xstar);
        bool flat_incident = std::abs(hstar) < 1e-14 * mesh.bbox_diag();

        for (const auto& qp : pts) {
          Vec3 rvec = qp.pos - xstar;
          double r = std::max(rvec.norm(), rfloor);
          Vec3 rh = rvec / r;
          // Double-layer pieces.
          IU += qp.w / (16.0 * M_PI * material.mu * (1.0 - material.nu) * r) *
                ((3.0 - 4.0 * material.nu) * Mat3::Identity() + rh * rh.transpose());
          Ir += qp.w / (4.0 * M_PI * r);
          if (!flat_incident)
            tb += qp.w / (4.0 * M_PI * r * r * r) * qp.bary;
          // Body-force pieces: columns for g0 = e_c and grad g = e_c e_d^T.
          double rdm = rh.dot(t.m);
          for (int ccol = 0; ccol < 3; ++ccol) {
            Vec3 col = Vec3::Zero();
            col[ccol] += rdm;
            col -= kappa * t.m[ccol] * rh;
            Arow.col(ccol) += qp.w * inv8pimu * col;
          }
          for (int d = 0; d < 3; ++d) {
            double xd = qp.pos[d];
            for (int ccol = 0; ccol < 3; ++ccol) {
              Vec3 col = Vec3::Zero();
              col[ccol] += xd * rdm - r * t.m[d];
              col -= kappa * (xd * t.m[ccol] * rh);
              if (ccol == d) col += kappa * r * t.m;
              Arow.col(3 + 3 * d + ccol) += qp.w * inv8pimu * col;
            }
          }
        }
        sys.A_.block<3, 12>(3 * v, 0) += Arow;

        Mat3 core = 2.0 * material.mu * IU - Ir * Mat3::Identity();
        for (int b = 0; b < 3; ++b) {
          int vb = t.verts[b];
          double qb = flat_incident ? 0.0 : -hstar * tb[b];
          for (int k = 0; k < 3; ++k) {
            Vec3 gv = t.m[k] * t.grad[b] - t.grad[b][k] * t.m;
            Vec3 col = core * gv;
            col[k] += qb;
            sys.D_.block<3, 1>(3 * v, 3 * vb + k) += col;
          }
        }
      }

      // Contact point-force columns.
      for (int i = 0; i < N; ++i) {
        Vec3 rvec = contacts[i].position - xstar;
        double r = rvec.norm();
        if (r < rfloor) rvec = rvec.normalized() * rfloor;
        sys.B_.block<3, 3>(3 * v, 3 * i) = kelvin_solution(rvec, material);
      }

      // Integral-free block and the line correction; the correction also
      // lands on the diagonal of D so the pair represents the same operator
      // split as the derivation.
      Mat3 lam = line_correction(mesh, tg, v, material);
      double phi = mesh.solid_angle(v);
      sys.C_[v] = (phi / (4.0 * M_PI)) * Mat3::Identity() - lam;
      sys.D_.block<3, 3>(3 * v, 3 * v) += lam;
    }
  });

  // Rigid-mode constraint columns and the saddle factorization.
  sys.Rt_.resize(3 * V, 6);
  for (int v = 0; v < V; ++v) {
    sys.Rt_.block<3, 3>(3 * v, 0) = Mat3::Identity();
    sys.Rt_.block<3, 3>(3 * v, 3) = skew(mesh.vertex(v)).transpose();
  }
  MatX sysmat(3 * V + 6, 3 * V + 6);
  sysmat.setZero();
  sysmat.topLeftCorner(3 * V, 3 * V) = sys.D_;
  for (int v = 0; v < V; ++v)
    sysmat.block<3, 3>(3 * v, 3 * v) += sys.C_[v];
  double scale = sysmat.topLeftCorner(3 * V, 3 * V).norm() / std::sqrt(6.0 * V);
  sys.constraint_scale_ = std::max(scale, 1e-12);
  sysmat.topRightCorner(3 * V, 6) = sys.constraint_scale_ * sys.Rt_;
  sysmat.bottomLeftCorner(6, 3 * V) = sys.constraint_scale_ * sys.Rt_.transpose();
  sys.lu_ = std::make_shared<Eigen::PartialPivLU<MatX>>(sysmat);
  // Cheap singularity screen: a vanishing pivot product means the saddle
  // regularization failed.
  double mind = sys.lu_->matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(mind > 0) || !std::isfinite(mind))
    fail(ErrorCode::SingularSystem, "saddle factorization has zero pivot");
  return sys;
}

VecX BemSystem::solve_rhs(const VecX& rhs) const {
  if (rhs.size() != 3 * V_) fail(ErrorCode::InvalidArgument, "rhs size");
  VecX full = VecX::Zero(3 * V_ + 6);
  full.head(3 * V_) = rhs;
  VecX sol = lu_->solve(full);
  return sol.head(3 * V_);
}

VecX BemSystem::solve_displacements(const BodyForceField& g,
                                    const std::vector<Vec3>& f) const {
  if (int(f.size()) != N_) fail(ErrorCode::LengthMismatch, "force count");
  // Global equilibrium of loads.
  Wrench total = Wrench::Zero();
  total.head<3>() = moments_.volume * g.g0 + g.grad_g * (moments_.volume * moments_.centroid);
  Eigen::Matrix<double, 9, 1> cols;
  for (int c = 0; c < 3; ++c) cols.segment<3>(3 * c) = g.grad_g.col(c);
  total.tail<3>() = moments_.T_mat * cols + (moments_.volume * moments_.centroid).cross(g.g0);
  double load_scale = total.norm();
  for (int i = 0; i < N_; ++i) {
    total.head<3>() += f[i];
    total.tail<3>() += contacts_[i].position.cross(f[i]);
    load_scale += f[i].norm();
  }
  if (total.norm() > 1e-8 * std::max(1.0, load_scale))
    fail(ErrorCode::NonEquilibrium,
         "load wrench residual " + std::to_string(total.norm()));

  VecX rhs = A_ * g.params();
  for (int i = 0; i < N_; ++i) rhs += B_.middleCols(3 * i, 3) * f[i];
  return solve_rhs(rhs);
}

VecX BemSystem::traction_rhs(
    const std::function<Vec3(const Vec3&, const Vec3&)>& traction) const {
  const SurfaceMesh& mesh = *mesh_;
  std::vector<TriGeom> tg = build_tri_geom(mesh);
  VecX rhs = VecX::Zero(3 * V_);
  parallel_rows(V_, [&](int v_lo, int v_hi) {
    std::vector<TriQuadPoint> pts;
    for (int v = v_lo; v < v_hi; ++v) {
      const Vec3 xstar = mesh.vertex(v);
      Vec3 acc_zero = Vec3::Zero();
      for (int j = 0; j < int(tg.size()); ++j) {
        const TriGeom& t = tg[j];
        int corner = -1;
        for (int k = 0; k < 3; ++k)
          if (t.verts[k] == v) corner = k;
        pts.clear();
        pair_quadrature(t, xstar, corner, pts);
        for (const auto& qp : pts) {
          Vec3 rvec = qp.pos - xstar;
          rhs.segment<3>(3 * v) +=
              qp.w * (kelvin_solution(rvec, material_) * traction(qp.pos, t.m));
        }
      }
      (void)acc_zero;
    }
  });
  return rhs;
}

Mat3 recover_stress(const SurfaceMesh& mesh, const VecX& u, const std::vector<Vec3>& f,
                    const std::vector<ContactPoint>& contacts,
                    const MaterialParams& material, int j) {
  const auto& tri = mesh.triangle(j);
  Vec3 p0 = mesh.vertex(tri[0]), p1 = mesh.vertex(tri[1]), p2 = mesh.vertex(tri[2]);
  Vec3 e1 = p1 - p0, e2 = p2 - p0;
  Vec3 m = mesh.normal(j);

  Mat3 basis;
  basis.col(0) = e1;
  basis.col(1) = e2;
  basis.col(2) = m;
  Eigen::JacobiSVD<Mat3> svd(basis);
  double cond = svd.singularValues()(0) / std::max(svd.singularValues()(2), 1e-300);
  if (cond > 1e10) fail(ErrorCode::DegenerateTriangle, "edge matrix condition > 1e10");

  Vec3 t = Vec3::Zero();
  for (std::size_t i = 0; i < contacts.size(); ++i)
    if (contacts[i].triangle == j) t += f[i] / mesh.area(j);

  Vec3 du1 = u.segment<3>(3 * tri[1]) - u.segment<3>(3 * tri[0]);
  Vec3 du2 = u.segment<3>(3 * tri[2]) - u.segment<3>(3 * tri[0]);

  // 9 unknowns J(i,d), row-major; edge rows then the traction closure.
  Eigen::Matrix<double, 9, 9> Amat = Eigen::Matrix<double, 9, 9>::Zero();
  Eigen::Matrix<double, 9, 1> b;
  for (int i = 0; i < 3; ++i) {
    for (int d = 0; d < 3; ++d) {
      Amat(i, 3 * i + d) = e1[d];
      Amat(3 + i, 3 * i + d) = e2[d];
    }
    b[i] = du1[i];
    b[3 + i] = du2[i];
  }
  for (int i = 0; i < 3; ++i) {
    for (int d = 0; d < 3; ++d) {
      Amat(6 + i, 3 * i + d) += material.mu * m[d];   // mu J n
      Amat(6 + i, 3 * d + i) += material.mu * m[d];   // mu J^T n
    }
    for (int d = 0; d < 3; ++d) Amat(6 + i, 3 * d + d) += material.lambda * m[i];
    b[6 + i] = t[i];
  }
  Eigen::Matrix<double, 9, 1> jv = Amat.partialPivLu().solve(b);
  Mat3 J;
  for (int i = 0; i < 3; ++i)
    for (int d = 0; d < 3; ++d) J(i, d) = jv[3 * i + d];
  Mat3 sigma = material.mu * (J + J.transpose()) +
               material.lambda * J.trace() * Mat3::Identity();
  return 0.5 * (sigma + sigma.transpose());
}

Mat3 StressMaps::stress_at(int j, const Eigen::Matrix<double, 12, 1>& g_params,
                           const VecX& f_stacked) const {
  Eigen::Matrix<double, 9, 1> col = A_cal.middleRows(9 * j, 9) * g_params;
  if (f_stacked.size()) col += B_cal.middleRows(9 * j, 9) * f_stacked;
  Mat3 s;
  for (int c = 0; c < 3; ++c) s.col(c) = col.segment<3>(3 * c);
  return 0.5 * (s + s.transpose());
}

StressMaps build_stress_maps(const BemSystem& system, const SurfaceMesh& mesh,
                             const MaterialParams& material,
                             const std::vector<ContactPoint>& contacts) {
  const int K = mesh.triangle_count();
  const int N = int(contacts.size());
  StressMaps maps;
  maps.K = K;
  maps.N = N;
  maps.A_cal = MatX::Zero(9 * K, 12);
  maps.B_cal = MatX::Zero(9 * K, 3 * N);

  // Displacement responses to the 12 + 3N unit loads share one factorization.
  MatX U_all(3 * mesh.vertex_count(), 12 + 3 * N);
  MatX rhs_all(3 * mesh.vertex_count(), 12 + 3 * N);
  rhs_all << system.A_mat(), system.B_mat();
  for (int c = 0; c < 12 + 3 * N; ++c) U_all.col(c) = system.solve_rhs(rhs_all.col(c));

  for (int j = 0; j < K; ++j) {
    const auto& tri = mesh.triangle(j);
    Vec3 p0 = mesh.vertex(tri[0]), p1 = mesh.vertex(tri[1]), p2 = mesh.vertex(tri[2]);
    Vec3 e1 = p1 - p0, e2 = p2 - p0;
    Vec3 m = mesh.normal(j);

    Eigen::Matrix<double, 9, 9> Amat = Eigen::Matrix<double, 9, 9>::Zero();
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 3; ++d) {
        Amat(i, 3 * i + d) = e1[d];
        Amat(3 + i, 3 * i + d) = e2[d];
      }
    for (int i = 0; i < 3; ++i) {
      for (int d = 0; d < 3; ++d) {
        Amat(6 + i, 3 * i + d) += material.mu * m[d];
        Amat(6 + i, 3 * d + i) += material.mu * m[d];
      }
      for (int d = 0; d < 3; ++d) Amat(6 + i, 3 * d + d) += material.lambda * m[i];
    }
    Eigen::Matrix<double, 9, 9> Ainv = Amat.fullPivLu().inverse();

    // Constitutive map J(9) -> column-stacked sigma(9).
    Eigen::Matrix<double, 9, 9> Con = Eigen::Matrix<double, 9, 9>::Zero();
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 3; ++r) {
        // sigma(r,c) = mu (J(r,c) + J(c,r)) + lambda delta_rc tr(J)
        Con(3 * c + r, 3 * r + c) += material.mu;
        Con(3 * c + r, 3 * c + r) += material.mu;
        if (r == c)
          for (int d = 0; d < 3; ++d) Con(3 * c + r, 3 * d + d) += material.lambda;
      }
    Eigen::Matrix<double, 9, 9> L = Con * Ainv;

    // rhs(9) = (du1; du2; t): assemble from displacement columns.
    auto accumulate = [&](int col_out, const VecX& ucol, const Vec3& tvec, bool to_A) {
      Eigen::Matrix<double, 9, 1> rhs;
      rhs.segment<3>(0) = ucol.segment<3>(3 * tri[1]) - ucol.segment<3>(3 * tri[0]);
      rhs.segment<3>(3) = ucol.segment<3>(3 * tri[2]) - ucol.segment<3>(3 * tri[0]);
      rhs.segment<3>(6) = tvec;
      Eigen::Matrix<double, 9, 1> sig = L * rhs;
      if (to_A)
        maps.A_cal.block<9, 1>(9 * j, col_out) = sig;
      else
        maps.B_cal.block<9, 1>(9 * j, col_out) = sig;
    };
    for (int c = 0; c < 12; ++c) accumulate(c, U_all.col(c), Vec3::Zero(), true);
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < 3; ++k) {
        Vec3 tvec = Vec3::Zero();
        if (contacts[i].triangle == j) tvec = Vec3::Unit(k) / mesh.area(j);
        accumulate(3 * i + k, U_all.col(12 + 3 * i + k), tvec, false);
      }
  }
  return maps;
}

}  // namespace fgm
