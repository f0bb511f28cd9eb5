#include "fgm/shapes.hpp"

#include <cmath>
#include <map>

namespace fgm {
namespace shapes {

namespace {

// Weld duplicated vertices on a 1e-9 grid so face-seamed generators produce
// index-shared watertight meshes.
struct Welder {
  std::vector<Vec3> verts;
  std::map<std::array<long long, 3>, int> lookup;

  int add(const Vec3& p) {
    std::array<long long, 3> key;
    for (int k = 0; k < 3; ++k) key[k] = llround(p[k] * 1e9);
    auto it = lookup.find(key);
    if (it != lookup.end()) return it->second;
    int idx = int(verts.size());
    verts.push_back(p);
    lookup.emplace(key, idx);
    return idx;
  }
};

}  // namespace

SurfaceMesh icosphere(int subdivisions, double radius, bool normalize) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 m = (v[a] + v[b]).normalized();
      int idx = int(v.size());
      v.push_back(m);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> nf;
    nf.reserve(f.size() * 4);
    for (const auto& tri : f) {
      int ab = mid(tri[0], tri[1]), bc = mid(tri[1], tri[2]), ca = mid(tri[2], tri[0]);
      nf.push_back({tri[0], ab, ca});
      nf.push_back({tri[1], bc, ab});
      nf.push_back({tri[2], ca, bc});
      nf.push_back({ab, bc, ca});
    }
    f = std::move(nf);
  }
  for (auto& p : v) p *= radius;
  return SurfaceMesh(std::move(v), std::move(f), normalize);
}

SurfaceMesh box(const Vec3& half_extent, int res, bool normalize) {
  Welder w;
  std::vector<std::array<int, 3>> tris;
  // axis = face normal direction, sign = +-1
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign = -1; sign <= 1; sign += 2) {
      int u = (axis + 1) % 3, vdim = (axis + 2) % 3;
      for (int i = 0; i < res; ++i) {
        for (int j = 0; j < res; ++j) {
          auto corner = [&](int di, int dj) {
            Vec3 p;
            p[axis] = sign * half_extent[axis];
            p[u] = (-1.0 + 2.0 * (i + di) / res) * half_extent[u];
            p[vdim] = (-1.0 + 2.0 * (j + dj) / res) * half_extent[vdim];
            return w.add(p);
          };
          int c00 = corner(0, 0), c10 = corner(1, 0), c01 = corner(0, 1), c11 = corner(1, 1);
          if (sign > 0) {
            tris.push_back({c00, c10, c11});
            tris.push_back({c00, c11, c01});
          } else {
            tris.push_back({c00, c11, c10});
            tris.push_back({c00, c01, c11});
          }
        }
      }
    }
  }
  return SurfaceMesh(std::move(w.verts), std::move(tris), normalize);
}

SurfaceMesh octahedron(bool normalize) {
  std::vector<Vec3> v = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  std::vector<std::array<int, 3>> f = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                                       {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  return SurfaceMesh(std::move(v), std::move(f), normalize);
}

SurfaceMesh lofted_bar(const std::vector<Vec3>& stations, int segments_per_side,
                       int /*cap_res*/, bool normalize) {
  if (stations.size() < 2) fail(ErrorCode::InvalidArgument, "need >= 2 stations");
  const int m = segments_per_side;
  const int ring_n = 4 * m;

  // Perimeter parameterization of a rectangle with half extents (hy, hz),
  // counter-clockwise seen from +x.
  auto ring_point = [&](double x, double hy, double hz, int k) {
    int side = k / m;
    double t = double(k % m) / m;
    double y = 0, z = 0;
    switch (side) {
      case 0: y = -hy + 2 * hy * t; z = -hz; break;
      case 1: y = hy; z = -hz + 2 * hz * t; break;
      case 2: y = hy - 2 * hy * t; z = hz; break;
      default: y = -hy; z = hz - 2 * hz * t; break;
    }
    return Vec3(x, y, z);
  };

  Welder w;
  std::vector<std::array<int, 3>> tris;
  std::vector<int> prev_ring;
  for (std::size_t s = 0; s < stations.size(); ++s) {
    std::vector<int> ring(ring_n);
    for (int k = 0; k < ring_n; ++k)
      ring[k] = w.add(ring_point(stations[s].x(), stations[s].y(), stations[s].z(), k));
    if (s > 0) {
      for (int k = 0; k < ring_n; ++k) {
        int k1 = (k + 1) % ring_n;
        int a = prev_ring[k], b = prev_ring[k1], c = ring[k1], d = ring[k];
        // Outward orientation: ring CCW seen from +x, band advances in +x.
        tris.push_back({a, b, c});
        tris.push_back({a, c, d});
      }
    }
    prev_ring = ring;
  }
  // End caps as fans around the section center.
  {
    const auto& s0 = stations.front();
    int c0 = w.add(Vec3(s0.x(), 0, 0));
    for (int k = 0; k < ring_n; ++k) {
      int k1 = (k + 1) % ring_n;
      int a = w.add(ring_point(s0.x(), s0.y(), s0.z(), k));
      int b = w.add(ring_point(s0.x(), s0.y(), s0.z(), k1));
      tris.push_back({c0, b, a});  // outward -x
    }
    const auto& s1 = stations.back();
    int c1 = w.add(Vec3(s1.x(), 0, 0));
    for (int k = 0; k < ring_n; ++k) {
      int k1 = (k + 1) % ring_n;
      int a = w.add(ring_point(s1.x(), s1.y(), s1.z(), k));
      int b = w.add(ring_point(s1.x(), s1.y(), s1.z(), k1));
      tris.push_back({c1, a, b});  // outward +x
    }
  }
  return SurfaceMesh(std::move(w.verts), std::move(tris), normalize);
}

SurfaceMesh asymmetric_dumbbell(int refine, bool normalize) {
  const double a = 0.10;   // wide arm half-width
  const double h = 0.035;  // neck half-width
  std::vector<Vec3> base = {{-0.50, a, a},         {-0.10, a, a},
                            {-0.06, h, h},         {0.06, h, h},
                            {0.10, a / 2, a / 2},  {0.50, a / 2, a / 2}};
  // Subdivide bands along x so triangles stay reasonably shaped.
  const int m = 2 << (refine - 1);
  const double step = 0.08 / m;
  std::vector<Vec3> stations;
  for (std::size_t s = 0; s + 1 < base.size(); ++s) {
    const Vec3 &p = base[s], &q = base[s + 1];
    int n = std::max(1, int(std::ceil((q.x() - p.x()) / step)));
    for (int i = 0; i < n; ++i) stations.push_back(p + (q - p) * (double(i) / n));
  }
  stations.push_back(base.back());
  return lofted_bar(stations, m, 0, normalize);
}

}  // namespace shapes
}  // namespace fgm
