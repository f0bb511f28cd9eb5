#include "fgm/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fgm {

namespace {

std::string lower_ext(const std::string& path) {
  auto pos = path.find_last_of('.');
  if (pos == std::string::npos) return "";
  std::string ext = path.substr(pos + 1);
  for (auto& c : ext) c = char(std::tolower(c));
  return ext;
}

}  // namespace

SurfaceMesh::SurfaceMesh(std::vector<Vec3> vertices,
                         std::vector<std::array<int, 3>> triangles, bool do_normalize)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (vertices_.size() < 4 || triangles_.size() < 4)
    fail(ErrorCode::ParseError, "mesh needs at least 4 vertices and 4 triangles");
  for (const auto& t : triangles_)
    for (int k = 0; k < 3; ++k)
      if (t[k] < 0 || t[k] >= int(vertices_.size()))
        fail(ErrorCode::ParseError, "triangle index out of range");
  validate_and_orient();
  build_derived();
  if (do_normalize) {
    normalize();
    build_derived();
  }
}

void SurfaceMesh::validate_and_orient() {
  // Watertight 2-manifold: every undirected edge shared by exactly two
  // triangles, with opposite directions.
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : triangles_) {
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (a == b) fail(ErrorCode::ParseError, "degenerate triangle edge");
      directed[{a, b}]++;
    }
  }
  std::vector<std::pair<int, int>> bad;
  for (const auto& [e, c] : directed) {
    auto it = directed.find({e.second, e.first});
    int opp = it == directed.end() ? 0 : it->second;
    if (c != 1 || opp != 1) bad.push_back(e);
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << bad.size() << " offending edges:";
    for (std::size_t i = 0; i < bad.size() && i < 16; ++i)
      os << " (" << bad[i].first << "," << bad[i].second << ")";
    fail(ErrorCode::NotWatertight, os.str());
  }

  double vol = signed_volume();
  if (vol < 0) {
    for (auto& t : triangles_) std::swap(t[1], t[2]);
    vol = signed_volume();
    if (vol <= 0)
      fail(ErrorCode::InvertedOrientation,
           "signed volume not positive after orientation fix");
  }
}

double SurfaceMesh::signed_volume() const {
  double vol = 0.0;
  for (const auto& t : triangles_) {
    const Vec3 &p = vertices_[t[0]], &q = vertices_[t[1]], &r = vertices_[t[2]];
    vol += p.dot(q.cross(r)) / 6.0;
  }
  return vol;
}

void SurfaceMesh::build_derived() {
  const int K = triangle_count();
  normals_.resize(K);
  centroids_.resize(K);
  areas_.resize(K);
  total_area_ = 0.0;
  Vec3 lo = vertices_[0], hi = vertices_[0];
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  bbox_diag_ = (hi - lo).norm();
  for (int j = 0; j < K; ++j) {
    const auto& t = triangles_[j];
    const Vec3 &p = vertices_[t[0]], &q = vertices_[t[1]], &r = vertices_[t[2]];
    Vec3 c = (q - p).cross(r - p);
    double a2 = c.norm();
    if (a2 <= 1e-16 * bbox_diag_ * bbox_diag_)
      fail(ErrorCode::ParseError, "zero-area triangle " + std::to_string(j));
    normals_[j] = c / a2;
    areas_[j] = 0.5 * a2;
    centroids_[j] = (p + q + r) / 3.0;
    total_area_ += areas_[j];
  }
}

void SurfaceMesh::normalize() {
  // Center of mass of the enclosed solid, via divergence-theorem tetrahedra.
  double vol = 0.0;
  Vec3 m1 = Vec3::Zero();
  for (const auto& t : triangles_) {
    const Vec3 &p = vertices_[t[0]], &q = vertices_[t[1]], &r = vertices_[t[2]];
    double v = p.dot(q.cross(r)) / 6.0;
    vol += v;
    m1 += v * (p + q + r) / 4.0;
  }
  if (vol <= 1e-14) fail(ErrorCode::DegenerateMesh, "volume <= 1e-14");
  Vec3 com = m1 / vol;
  for (auto& v : vertices_) v -= com;

  Vec3 lo = vertices_[0], hi = vertices_[0];
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  double diag = (hi - lo).norm();
  if (diag <= 0) fail(ErrorCode::DegenerateMesh, "zero bounding box");
  for (auto& v : vertices_) v /= diag;
  scale_factor_ = diag;
}

std::vector<int> SurfaceMesh::vertex_fan(int v) const {
  if (v < 0 || v >= vertex_count()) fail(ErrorCode::InvalidArgument, "vertex index");
  std::vector<int> incident;
  for (int j = 0; j < triangle_count(); ++j) {
    const auto& t = triangles_[j];
    if (t[0] == v || t[1] == v || t[2] == v) incident.push_back(j);
  }
  if (incident.size() < 3)
    fail(ErrorCode::IsolatedVertex,
         "vertex " + std::to_string(v) + " has fewer than 3 incident triangles");
  // Order the fan by walking edge adjacency around v.
  auto others = [&](int j) {
    const auto& t = triangles_[j];
    for (int k = 0; k < 3; ++k)
      if (t[k] == v) return std::pair<int, int>{t[(k + 1) % 3], t[(k + 2) % 3]};
    return std::pair<int, int>{-1, -1};
  };
  std::vector<int> ordered{incident[0]};
  std::vector<bool> used(incident.size(), false);
  used[0] = true;
  int next_vert = others(incident[0]).second;
  for (std::size_t step = 1; step < incident.size(); ++step) {
    bool found = false;
    for (std::size_t i = 0; i < incident.size(); ++i) {
      if (used[i]) continue;
      auto [a, b] = others(incident[i]);
      if (a == next_vert) {
        ordered.push_back(incident[i]);
        used[i] = true;
        next_vert = b;
        found = true;
        break;
      }
    }
    if (!found) fail(ErrorCode::NotWatertight, "broken fan at vertex " + std::to_string(v));
  }
  return ordered;
}

double SurfaceMesh::solid_angle(int v) const {
  // Interior solid angle = sum of dihedral angles along incident edges
  // minus (n-2)*pi.
  std::vector<int> fan = vertex_fan(v);
  const int n = int(fan.size());
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    int ta = fan[i], tb = fan[(i + 1) % n];
    // Shared edge (v, e) between consecutive fan triangles.
    const auto& A = triangles_[ta];
    int e = -1;
    for (int k = 0; k < 3; ++k) {
      int cand = A[k];
      if (cand == v) continue;
      const auto& B = triangles_[tb];
      if (cand == B[0] || cand == B[1] || cand == B[2]) e = cand;
    }
    if (e < 0) fail(ErrorCode::NotWatertight, "fan adjacency failure");
    Vec3 edge = (vertices_[e] - vertices_[v]).normalized();
    const Vec3 &na = normals_[ta], &nb = normals_[tb];
    // Interior dihedral about the fan-ordered edge; ranges over (0, 2pi)
    // so reflex (concave) edges are handled.
    double s = edge.dot(na.cross(nb));
    double c = na.dot(nb);
    double dihedral = M_PI + std::atan2(s, c);
    sum += dihedral;
  }
  return sum - (n - 2) * M_PI;
}

std::uint64_t SurfaceMesh::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& v : vertices_) {
    double d[3] = {v.x(), v.y(), v.z()};
    mix(d, sizeof d);
  }
  for (const auto& t : triangles_) mix(t.data(), sizeof(int) * 3);
  return h;
}

SurfaceMesh SurfaceMesh::load(const std::string& path) {
  std::string ext = lower_ext(path);
  if (ext == "obj") return load(path, MeshFormat::OBJ);
  if (ext == "off") return load(path, MeshFormat::OFF);
  fail(ErrorCode::ParseError, "unknown mesh extension: " + path);
}

SurfaceMesh SurfaceMesh::load(const std::string& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + path);
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> tris;

  if (format == MeshFormat::OBJ) {
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string tag;
      ls >> tag;
      if (tag == "v") {
        Vec3 v;
        if (!(ls >> v.x() >> v.y() >> v.z()))
          fail(ErrorCode::ParseError, "bad vertex record: " + line);
        verts.push_back(v);
      } else if (tag == "f") {
        std::vector<int> idx;
        std::string tok;
        while (ls >> tok) {
          // "i", "i/j", "i/j/k" forms; take the vertex index.
          std::size_t slash = tok.find('/');
          std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
          int i = 0;
          try {
            i = std::stoi(head);
          } catch (...) {
            fail(ErrorCode::ParseError, "bad face record: " + line);
          }
          if (i < 0) i = int(verts.size()) + 1 + i;  // negative = relative
          idx.push_back(i - 1);
        }
        if (idx.size() != 3) fail(ErrorCode::ParseError, "non-triangle face: " + line);
        tris.push_back({idx[0], idx[1], idx[2]});
      }
    }
  } else {
    std::string header;
    in >> header;
    if (header != "OFF") fail(ErrorCode::ParseError, "missing OFF header");
    long nv = 0, nf = 0, ne = 0;
    if (!(in >> nv >> nf >> ne)) fail(ErrorCode::ParseError, "bad OFF counts");
    verts.resize(nv);
    for (long i = 0; i < nv; ++i)
      if (!(in >> verts[i].x() >> verts[i].y() >> verts[i].z()))
        fail(ErrorCode::ParseError, "bad OFF vertex " + std::to_string(i));
    for (long i = 0; i < nf; ++i) {
      int cnt;
      if (!(in >> cnt) || cnt != 3)
        fail(ErrorCode::ParseError, "OFF face " + std::to_string(i) + " is not a triangle");
      std::array<int, 3> t{};
      if (!(in >> t[0] >> t[1] >> t[2]))
        fail(ErrorCode::ParseError, "bad OFF face " + std::to_string(i));
      tris.push_back(t);
    }
  }
  return SurfaceMesh(std::move(verts), std::move(tris));
}

void save_off(const SurfaceMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "OFF\n" << mesh.vertex_count() << " " << mesh.triangle_count() << " 0\n";
  for (const auto& v : mesh.vertices()) out << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
}

void save_obj(const SurfaceMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  for (const auto& v : mesh.vertices()) out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : mesh.triangles())
    out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

std::vector<ContactPoint> poisson_disk_contacts(const SurfaceMesh& mesh, int N,
                                                std::uint64_t seed) {
  if (N < 1) fail(ErrorCode::InvalidArgument, "N >= 1 required");
  if (mesh.total_area() <= 0) fail(ErrorCode::InvalidArgument, "zero surface area");

  Rng rng(seed);
  const int K = mesh.triangle_count();
  std::vector<double> cum(K);
  double acc = 0.0;
  for (int j = 0; j < K; ++j) {
    acc += mesh.area(j);
    cum[j] = acc;
  }

  auto sample_point = [&](ContactPoint& cp) {
    double u = rng.uniform() * acc;
    int j = int(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (j >= K) j = K - 1;
    double b1 = rng.uniform(), b2 = rng.uniform();
    if (b1 + b2 > 1.0) {
      b1 = 1.0 - b1;
      b2 = 1.0 - b2;
    }
    // Keep strictly interior so contacts never coincide with mesh vertices.
    const double m = 0.05;
    b1 = m + (1.0 - 3.0 * m) * b1;
    b2 = m + (1.0 - 3.0 * m) * b2;
    cp.position = mesh.point_at(j, b1, b2);
    cp.normal = -mesh.normal(j);
    cp.triangle = j;
  };

  double r = 0.75 * std::sqrt(mesh.total_area() / double(N));
  const double r_floor = 1e-4 * mesh.bbox_diag();
  std::vector<ContactPoint> accepted;
  while (true) {
    accepted.clear();
    const long budget = 600L * N;
    long tries = 0;
    while (int(accepted.size()) < N && tries < budget) {
      ++tries;
      ContactPoint cp;
      sample_point(cp);
      bool ok = true;
      for (const auto& other : accepted)
        if ((other.position - cp.position).norm() < r) {
          ok = false;
          break;
        }
      if (ok) accepted.push_back(cp);
    }
    if (int(accepted.size()) == N) return accepted;
    r *= 0.92;
    if (r < r_floor)
      fail(ErrorCode::SamplingFailure,
           "radius annealed below 1e-4*diag before reaching N=" + std::to_string(N));
  }
}

std::string contacts_to_json(const std::vector<ContactPoint>& contacts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : contacts) {
    arr.push_back({{"position", {c.position.x(), c.position.y(), c.position.z()}},
                   {"normal", {c.normal.x(), c.normal.y(), c.normal.z()}},
                   {"triangle", c.triangle}});
  }
  return arr.dump(2);
}

std::vector<ContactPoint> contacts_from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::ParseError, std::string("contacts JSON: ") + e.what());
  }
  std::vector<ContactPoint> out;
  for (const auto& item : arr) {
    ContactPoint c;
    for (int k = 0; k < 3; ++k) {
      c.position[k] = item.at("position").at(k).get<double>();
      c.normal[k] = item.at("normal").at(k).get<double>();
    }
    c.triangle = item.at("triangle").get<int>();
    double nn = c.normal.norm();
    if (std::abs(nn - 1.0) > 1e-9) fail(ErrorCode::NonUnitNormal, "contact normal not unit");
    out.push_back(c);
  }
  return out;
}

}  // namespace fgm
