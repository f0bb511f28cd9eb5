#include <doctest.h>

#include "fgm/bem.hpp"
#include "fgm/shapes.hpp"

using namespace fgm;

namespace {

// Full traction kernel of the Kelvin field (columnwise), the classical
// O(1/r^2) double-layer kernel used for decay/parity checks.
Mat3 full_traction_kernel(const Vec3& rvec, const Vec3& n, const MaterialParams& m) {
  Mat3 T;
  for (int k = 0; k < 3; ++k) T.col(k) = kelvin_stress(rvec, Vec3::Unit(k), m) * n;
  return T;
}

// Best-fit rigid motion removal: minimizes ||u + t + w x x - target||^2.
VecX remove_rigid(const SurfaceMesh& mesh, const VecX& u, const VecX& target) {
  const int V = mesh.vertex_count();
  MatX A(3 * V, 6);
  for (int v = 0; v < V; ++v) {
    A.block<3, 3>(3 * v, 0) = Mat3::Identity();
    A.block<3, 3>(3 * v, 3) = -skew(mesh.vertex(v));
  }
  VecX rhs = target - u;
  Eigen::Matrix<double, 6, 1> p =
      (A.transpose() * A).ldlt().solve(A.transpose() * rhs);
  return u + A * p;
}

double manufactured_error(int level, const MaterialParams& mat) {
  SurfaceMesh mesh = shapes::icosphere(level);
  double circ = 0.0;
  for (const auto& v : mesh.vertices()) circ = std::max(circ, v.norm());
  Vec3 src = 1.5 * circ * Vec3(0.3, -0.5, 0.8).normalized();
  Vec3 c(0.7, 0.4, -0.5);

  BemSystem sys = assemble_system(mesh, mat, {});
  VecX rhs = sys.traction_rhs([&](const Vec3& x, const Vec3& n) {
    return Vec3(kelvin_stress(x - src, c, mat) * n);
  });
  VecX u = sys.solve_rhs(rhs);

  VecX target(3 * mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v)
    target.segment<3>(3 * v) = kelvin_solution(mesh.vertex(v) - src, mat) * c;
  VecX fitted = remove_rigid(mesh, u, target);
  return (fitted - target).norm() / target.norm();
}

}  // namespace

TEST_SUITE_BEGIN("fast");

TEST_CASE("material parameters from nu") {
  MaterialParams m = MaterialParams::from_nu(0.33);
  CHECK(m.mu == doctest::Approx(1.0 / (2.0 * 1.33)).epsilon(1e-14));
  CHECK(m.lambda == doctest::Approx(0.33 / (1.33 * 0.34)).epsilon(1e-12));
  CHECK_THROWS_AS(MaterialParams::from_nu(0.5), Error);
  // Near-incompressible still constructs.
  CHECK(MaterialParams::from_nu(0.499).lambda > 100.0);
}

TEST_CASE("kelvin solution: anisotropy ratio, parity, 1/r scaling") {
  MaterialParams m = MaterialParams::from_nu(0.33);
  Vec3 r = 0.37 * Vec3::UnitX();
  Mat3 U = kelvin_solution(r, m);
  // Along the axis: U11/U22 = (3-4nu+1)/(3-4nu).
  CHECK(U(0, 0) / U(1, 1) == doctest::Approx((3 - 4 * 0.33 + 1) / (3 - 4 * 0.33)).epsilon(1e-12));
  CHECK((U - U.transpose()).norm() <= 1e-15);

  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    Vec3 rv = rng.gaussian3();
    CHECK((kelvin_solution(rv, m) - kelvin_solution(-rv, m)).norm() <= 1e-14);
    CHECK((kelvin_solution(2 * rv, m) - 0.5 * kelvin_solution(rv, m)).norm() <=
          1e-12 * kelvin_solution(rv, m).norm());
  }
  CHECK_THROWS_AS(kelvin_solution(Vec3::Zero(), m), Error);
}

TEST_CASE("kelvin gradient matches finite differences") {
  MaterialParams m = MaterialParams::from_nu(0.33);
  Rng rng(5);
  for (int it = 0; it < 5; ++it) {
    Vec3 r = rng.gaussian3();
    if (r.norm() < 0.5) r = r.normalized();
    Vec3 c = rng.gaussian3();
    Mat3 J = kelvin_gradient(r, c, m);
    const double h = 1e-6;
    for (int d = 0; d < 3; ++d) {
      Vec3 up = kelvin_solution(r + h * Vec3::Unit(d), m) * c;
      Vec3 dn = kelvin_solution(r - h * Vec3::Unit(d), m) * c;
      Vec3 fd = (up - dn) / (2 * h);
      for (int i = 0; i < 3; ++i) CHECK(J(i, d) == doctest::Approx(fd[i]).epsilon(1e-5));
    }
  }
}

TEST_CASE("traction kernel: homogeneity, Guenter antisymmetry, finiteness") {
  MaterialParams m = MaterialParams::from_nu(0.33);
  Rng rng(7);
  for (int it = 0; it < 10; ++it) {
    Vec3 r = rng.gaussian3().normalized() * (0.2 + rng.uniform());
    Vec3 n = rng.gaussian3().normalized();
    Mat3 T1 = full_traction_kernel(r, n, m);
    Mat3 T2 = full_traction_kernel(2 * r, n, m);
    CHECK((T2 - 0.25 * T1).norm() <= 1e-10 * T1.norm());

    // Guenter matrix of any scalar kernel is antisymmetric.
    Vec3 grad = rng.gaussian3();
    Mat3 Mg = grad * n.transpose() - n * grad.transpose();
    CHECK((Mg + Mg.transpose()).norm() <= 1e-14);

    TractionKernelTerms terms = traction_kernel(r, n, m);
    CHECK(std::isfinite(terms.U_term.norm()));
    CHECK(std::isfinite(terms.inv_4pi_r));
    CHECK(std::isfinite(terms.laplace_dipole));
    // The Laplace dipole piece is the -2-homogeneous one.
    CHECK(traction_kernel(2 * r, n, m).laplace_dipole ==
          doctest::Approx(0.25 * terms.laplace_dipole).epsilon(1e-12));
  }
  CHECK_THROWS_AS(traction_kernel(Vec3::Zero(), Vec3::UnitZ(), m), Error);
}

TEST_CASE("recover_stress: rigid inputs, uniaxial stretch oracle") {
  SurfaceMesh mesh = shapes::icosphere(1);
  MaterialParams mat = MaterialParams::from_nu(0.33);
  const int V = mesh.vertex_count();

  VecX u = VecX::Zero(3 * V);
  Vec3 t0(0.3, -0.7, 0.2);
  for (int v = 0; v < V; ++v) u.segment<3>(3 * v) = t0;
  for (int j = 0; j < mesh.triangle_count(); ++j)
    CHECK(recover_stress(mesh, u, {}, {}, mat, j).norm() <= 1e-10);

  Vec3 omega(0.4, 0.1, -0.9);
  for (int v = 0; v < V; ++v) u.segment<3>(3 * v) = omega.cross(mesh.vertex(v));
  for (int j = 0; j < mesh.triangle_count(); ++j)
    CHECK(recover_stress(mesh, u, {}, {}, mat, j).norm() <= 1e-9);

  // Uniaxial stretch with the consistent boundary traction entered through
  // a synthetic contact on each host triangle.
  const double eps = 1e-3;
  for (int v = 0; v < V; ++v)
    u.segment<3>(3 * v) = Vec3(eps * mesh.vertex(v).x(), 0, 0);
  Mat3 sigma_expect = Mat3::Zero();
  sigma_expect(0, 0) = (2 * mat.mu + mat.lambda) * eps;
  sigma_expect(1, 1) = sigma_expect(2, 2) = mat.lambda * eps;
  for (int j : {0, 7, 33}) {
    ContactPoint cp;
    cp.position = mesh.centroid(j);
    cp.normal = -mesh.normal(j);
    cp.triangle = j;
    std::vector<Vec3> f{(sigma_expect * mesh.normal(j)) * mesh.area(j)};
    Mat3 sigma = recover_stress(mesh, u, f, {cp}, mat, j);
    CHECK((sigma - sigma_expect).norm() <= 1e-12 + 1e-9 * sigma_expect.norm());
  }
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("bem");

TEST_CASE("rigid motions are annihilated by D + C") {
  SurfaceMesh mesh = shapes::icosphere(2);
  MaterialParams mat = MaterialParams::from_nu(0.33);
  BemSystem sys = assemble_system(mesh, mat, {});
  const int V = mesh.vertex_count();

  MatX full = sys.D_mat();
  for (int v = 0; v < V; ++v) full.block<3, 3>(3 * v, 3 * v) += sys.C_blocks()[v];
  double op_norm = full.norm();

  for (int mode = 0; mode < 6; ++mode) {
    VecX u(3 * V);
    for (int v = 0; v < V; ++v) {
      if (mode < 3)
        u.segment<3>(3 * v) = Vec3::Unit(mode);
      else
        u.segment<3>(3 * v) = Vec3::Unit(mode - 3).cross(mesh.vertex(v));
    }
    double resid = (full * u).norm() / (op_norm * u.norm());
    CAPTURE(mode);
    CHECK(resid <= 1e-6);
  }
}

TEST_CASE("integral-free block at a flat interior vertex is I/2") {
  SurfaceMesh box = shapes::box(Vec3(0.4, 0.35, 0.3), 4);
  MaterialParams mat = MaterialParams::from_nu(0.33);
  BemSystem sys = assemble_system(box, mat, {});
  // Find a face-interior vertex: solid angle 2 pi.
  int flat = -1;
  for (int v = 0; v < box.vertex_count(); ++v)
    if (std::abs(box.solid_angle(v) - 2 * M_PI) < 1e-9) {
      flat = v;
      break;
    }
  REQUIRE(flat >= 0);
  Mat3 C = sys.C_blocks()[flat];
  CHECK((C - 0.5 * Mat3::Identity()).norm() <= 1e-8);

  // A corner vertex keeps phi/4pi = 1/8 on the diagonal plus a genuine
  // line-term correction.
  int corner = -1;
  for (int v = 0; v < box.vertex_count(); ++v)
    if (std::abs(box.solid_angle(v) - M_PI / 2) < 1e-9) {
      corner = v;
      break;
    }
  REQUIRE(corner >= 0);
  Mat3 Cc = sys.C_blocks()[corner];
  CHECK(std::abs(Cc.trace() / 3.0 - 0.125) <= 0.2);
}

TEST_CASE("far-field D blocks decay like 1/r^2") {
  SurfaceMesh mesh = shapes::icosphere(2);
  MaterialParams mat = MaterialParams::from_nu(0.33);
  BemSystem sys = assemble_system(mesh, mat, {});
  // Pick a vertex and compare column-block norms at two distances.
  int v0 = 0;
  Vec3 x0 = mesh.vertex(v0);
  int near_v = -1, far_v = -1;
  double dn = 1e9, df = 0.0;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (v == v0) continue;
    double d = (mesh.vertex(v) - x0).norm();
    if (d > 0.2 && d < dn) {
      dn = d;
      near_v = v;
    }
    if (d > df) {
      df = d;
      far_v = v;
    }
  }
  double bn = sys.D_mat().block<3, 3>(3 * v0, 3 * near_v).norm();
  double bf = sys.D_mat().block<3, 3>(3 * v0, 3 * far_v).norm();
  double expect_ratio = (df * df) / (dn * dn);
  CHECK(bn / bf > 0.2 * expect_ratio);
}

TEST_CASE("zero loads give zero displacements; solves are linear") {
  SurfaceMesh mesh = shapes::icosphere(2);
  MaterialParams mat = MaterialParams::from_nu(0.33);
  auto contacts = poisson_disk_contacts(mesh, 4, 5);
  BemSystem sys = assemble_system(mesh, mat, contacts);
  GeometricMoments gm = compute_moments(mesh);

  BodyForceField zero_g;
  std::vector<Vec3> zero_f(4, Vec3::Zero());
  CHECK(sys.solve_displacements(zero_g, zero_f).norm() <= 1e-12);

  // Random equilibrated load: w from contacts, g from w.
  Rng rng(11);
  std::vector<Vec3> f;
  for (int i = 0; i < 4; ++i) f.push_back(rng.gaussian3());
  Wrench w = wrench_of_contacts(f, contacts);
  BodyForceField g = body_force_from_wrench(w, gm);
  VecX u1 = sys.solve_displacements(g, f);

  BodyForceField g2;
  g2.g0 = 2.0 * g.g0;
  g2.grad_g = 2.0 * g.grad_g;
  std::vector<Vec3> f2;
  for (const auto& fi : f) f2.push_back(2.0 * fi);
  VecX u2 = sys.solve_displacements(g2, f2);
  CHECK((u2 - 2.0 * u1).norm() <= 1e-9 * u1.norm());

  // Rigid components pinned to zero by the constraints.
  Vec3 mean = Vec3::Zero();
  for (int v = 0; v < mesh.vertex_count(); ++v) mean += u1.segment<3>(3 * v);
  CHECK(mean.norm() <= 1e-8 * u1.norm());

  // Unbalanced loads are rejected.
  std::vector<Vec3> bad = f;
  bad[0] += Vec3(1, 0, 0);
  CHECK_THROWS_AS(sys.solve_displacements(g, bad), Error);
}

TEST_CASE("manufactured exterior Kelvin source at level 2") {
  MaterialParams mat = MaterialParams::from_nu(0.33);
  double err = manufactured_error(2, mat);
  CAPTURE(err);
  CHECK(err <= 0.05);
}

TEST_CASE("squeezed sphere: poles approach each other") {
  SurfaceMesh mesh = shapes::icosphere(2);
  MaterialParams mat = MaterialParams::from_nu(0.33);
  // Antipodal contacts near +-x.
  int jp = -1, jm = -1;
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    if (jp < 0 || mesh.centroid(j).x() > mesh.centroid(jp).x()) jp = j;
    if (jm < 0 || mesh.centroid(j).x() < mesh.centroid(jm).x()) jm = j;
  }
  auto make_contact = [&](int j) {
    ContactPoint c;
    c.position = mesh.point_at(j, 1.0 / 3, 1.0 / 3);
    c.normal = -mesh.normal(j);
    c.triangle = j;
    return c;
  };
  std::vector<ContactPoint> contacts{make_contact(jp), make_contact(jm)};
  BemSystem sys = assemble_system(mesh, mat, contacts);

  double mag = 0.1;
  std::vector<Vec3> f{mag * contacts[0].normal, mag * contacts[1].normal};
  // Forces along the inward normals of near-antipodal patches balance only
  // approximately; project out the net wrench through the body force.
  GeometricMoments gm = compute_moments(mesh);
  Wrench w = wrench_of_contacts(f, contacts);
  BodyForceField g = body_force_from_wrench(w, gm);
  VecX u = sys.solve_displacements(g, f);

  int vp = -1, vm = -1;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (vp < 0 || mesh.vertex(v).x() > mesh.vertex(vp).x()) vp = v;
    if (vm < 0 || mesh.vertex(v).x() < mesh.vertex(vm).x()) vm = v;
  }
  double approach = u.segment<3>(3 * vp).x() - u.segment<3>(3 * vm).x();
  CHECK(approach < 0);
}

TEST_CASE("stress maps reproduce recover_stress and scale correctly") {
  SurfaceMesh mesh = shapes::icosphere(2);
  MaterialParams mat = MaterialParams::from_nu(0.33);
  auto contacts = poisson_disk_contacts(mesh, 3, 9);
  BemSystem sys = assemble_system(mesh, mat, contacts);
  StressMaps maps = build_stress_maps(sys, mesh, mat, contacts);
  GeometricMoments gm = compute_moments(mesh);

  Rng rng(13);
  std::vector<Vec3> f;
  VecX fs(9);
  for (int i = 0; i < 3; ++i) {
    f.push_back(rng.gaussian3());
    fs.segment<3>(3 * i) = f.back();
  }
  Wrench w = wrench_of_contacts(f, contacts);
  BodyForceField g = body_force_from_wrench(w, gm);
  VecX u = sys.solve_displacements(g, f);

  double worst = 0.0;
  for (int j = 0; j < mesh.triangle_count(); ++j) {
    Mat3 direct = recover_stress(mesh, u, f, contacts, mat, j);
    Mat3 mapped = maps.stress_at(j, g.params(), fs);
    worst = std::max(worst, (direct - mapped).norm());
  }
  CHECK(worst <= 1e-9 * (1.0 + maps.A_cal.norm()));

  // Superposition is exact for linear maps.
  Eigen::Matrix<double, 12, 1> p1 = Eigen::Matrix<double, 12, 1>::Random();
  Eigen::Matrix<double, 12, 1> p2 = Eigen::Matrix<double, 12, 1>::Random();
  VecX q1 = VecX::Random(9), q2 = VecX::Random(9);
  for (int j : {0, 11, 200}) {
    Mat3 lhs = maps.stress_at(j, p1 + p2, q1 + q2);
    Mat3 rhs = maps.stress_at(j, p1, q1) + maps.stress_at(j, p2, q2);
    CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
  }

  // Rigid-motion nullity through the full pipeline: zero loads.
  VecX zero12 = VecX::Zero(12), zero9 = VecX::Zero(9);
  for (int j = 0; j < mesh.triangle_count(); ++j)
    CHECK(maps.stress_at(j, zero12, zero9).norm() <= 1e-8);

  // sigma_max plays no role in the maps (material-only dependence).
  MaterialParams mat2 = mat;
  mat2.sigma_max = 2.0 * mat.sigma_max;
  StressMaps maps2 = build_stress_maps(sys, mesh, mat2, contacts);
  CHECK((maps2.A_cal - maps.A_cal).norm() <= 1e-14 * maps.A_cal.norm());
  CHECK((maps2.B_cal - maps.B_cal).norm() <= 1e-14 * maps.B_cal.norm());
}

TEST_CASE("manufactured error decreases from level 2 to 3") {
  MaterialParams mat = MaterialParams::from_nu(0.33);
  double e2 = manufactured_error(2, mat);
  double e3 = manufactured_error(3, mat);
  CAPTURE(e2);
  CAPTURE(e3);
  CHECK(e3 < e2);
}

TEST_SUITE_END();
