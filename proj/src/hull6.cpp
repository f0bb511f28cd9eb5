#include "fgm/hull6.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <map>
#include <sstream>

namespace fgm {

namespace {

// Deterministic per-index jitter used only when a facet's defining points
// are affinely degenerate (symbolic-perturbation tie rule).
Vec6 index_jitter(int idx) {
  std::uint64_t x = 0x9e3779b97f4a7c15ull * std::uint64_t(idx + 1);
  Vec6 v;
  for (int k = 0; k < 6; ++k) {
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    v[k] = double(x >> 11) * 0x1.0p-53 - 0.5;
  }
  return v;
}

}  // namespace

void WrenchHull::compute_plane(Facet& f, const Vec6& inside) {
  Eigen::Matrix<double, 5, 6> D;
  const Vec6& q0 = points_[f.vertices[0]];
  for (int i = 0; i < 5; ++i) D.row(i) = (points_[f.vertices[i + 1]] - q0).transpose();
  Eigen::JacobiSVD<Eigen::Matrix<double, 5, 6>> svd(D, Eigen::ComputeFullV);
  if (svd.singularValues()[4] <= 1e-12 * std::max(svd.singularValues()[0], 1e-30)) {
    // Degenerate support: perturb deterministically and refit.
    Eigen::Matrix<double, 5, 6> Dp = D;
    for (int i = 0; i < 5; ++i)
      Dp.row(i) += (1e-10 * diameter_) *
                   (index_jitter(f.vertices[i + 1]) - index_jitter(f.vertices[0])).transpose();
    svd.compute(Dp, Eigen::ComputeFullV);
  }
  Vec6 n = svd.matrixV().col(5);
  double b = 0.0;
  for (int i = 0; i < 6; ++i) b += n.dot(points_[f.vertices[i]]);
  b /= 6.0;
  if (n.dot(inside) > b) {
    n = -n;
    b = -b;
  }
  f.normal = n;
  f.offset = b;
}

int WrenchHull::new_facet_from(const std::array<int, 6>& verts, const Vec6& inside) {
  Facet f;
  f.vertices = verts;
  std::sort(f.vertices.begin(), f.vertices.end());
  f.neighbors.fill(-1);
  compute_plane(f, inside);
  facets_.push_back(f);
  return int(facets_.size()) - 1;
}

WrenchHull WrenchHull::init(const std::vector<Vec6>& pts) {
  if (pts.size() < 7) fail(ErrorCode::DegenerateSpan, "need at least 7 points");

  Vec6 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  double diam = std::max((hi - lo).norm(), 1e-30);

  // Greedy affinely independent seed: repeatedly take the point farthest
  // from the affine span of the chosen ones.
  std::vector<int> chosen{0};
  MatX basis(6, 0);
  while (chosen.size() < 7) {
    int best = -1;
    double best_d = 0.0;
    for (int i = 0; i < int(pts.size()); ++i) {
      Vec6 d = pts[i] - pts[chosen[0]];
      if (basis.cols() > 0) d -= basis * (basis.transpose() * d);
      double dist = d.norm();
      if (dist > best_d) {
        best_d = dist;
        best = i;
      }
    }
    if (best < 0 || best_d <= 1e-9 * diam)
      fail(ErrorCode::DegenerateSpan, "points do not affinely span 6D");
    Vec6 d = pts[best] - pts[chosen[0]];
    if (basis.cols() > 0) d -= basis * (basis.transpose() * d);
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = d / d.norm();
    chosen.push_back(best);
  }

  WrenchHull hull;
  hull.diameter_ = diam;
  hull.eps_ = 1e-9 * diam;
  for (int idx : chosen) hull.points_.push_back(pts[idx]);
  Vec6 centroid = Vec6::Zero();
  for (int i = 0; i < 7; ++i) centroid += hull.points_[i];
  centroid /= 7.0;
  hull.interior_ = centroid;

  for (int omit = 0; omit < 7; ++omit) {
    std::array<int, 6> verts{};
    int at = 0;
    for (int i = 0; i < 7; ++i)
      if (i != omit) verts[at++] = i;
    hull.new_facet_from(verts, centroid);
  }
  // Simplex adjacency: in the facet omitting vertex `omit`, the ridge that
  // drops vertex v leads to the facet omitting v; facet indices coincide
  // with omitted vertex indices here.
  for (int fa = 0; fa < 7; ++fa) {
    Facet& f = hull.facets_[fa];
    for (int k = 0; k < 6; ++k) f.neighbors[k] = f.vertices[k];
  }

  std::vector<bool> used(pts.size(), false);
  for (int idx : chosen) used[idx] = true;
  for (int i = 0; i < int(pts.size()); ++i)
    if (!used[i]) hull.add_point(pts[i]);
  return hull;
}

void WrenchHull::add_point(const Vec6& p) {
  const int pi = int(points_.size());

  std::vector<int> visible;
  for (int fi = 0; fi < int(facets_.size()); ++fi) {
    const Facet& f = facets_[fi];
    if (f.alive && f.normal.dot(p) > f.offset + eps_) visible.push_back(fi);
  }
  if (visible.empty()) return;  // inside or on the boundary: no-op

  points_.push_back(p);
  diameter_ = std::max(diameter_, (p - interior_).norm() * 2.0);
  eps_ = 1e-9 * diameter_;

  std::vector<char> is_visible(facets_.size(), 0);
  for (int fi : visible) is_visible[fi] = 1;

  std::map<std::array<int, 5>, std::pair<int, int>> open_ridges;  // key -> (facet, slot)
  int created = 0;
  for (int fi : visible) {
    // Copy: new_facet_from reallocates facets_.
    const std::array<int, 6> fv_verts = facets_[fi].vertices;
    const std::array<int, 6> fv_nbrs = facets_[fi].neighbors;
    for (int k = 0; k < 6; ++k) {
      int nb = fv_nbrs[k];
      if (nb < 0 || is_visible[nb]) continue;
      // Horizon ridge: fv_verts minus fv_verts[k], coned to the apex.
      std::array<int, 6> verts{};
      int at = 0;
      for (int i = 0; i < 6; ++i)
        if (i != k) verts[at++] = fv_verts[i];
      verts[5] = pi;
      int nf = new_facet_from(verts, interior_);
      ++created;

      int slot_pi = -1;
      for (int i = 0; i < 6; ++i)
        if (facets_[nf].vertices[i] == pi) slot_pi = i;
      facets_[nf].neighbors[slot_pi] = nb;
      Facet& hidden = facets_[nb];
      for (int i = 0; i < 6; ++i)
        if (hidden.neighbors[i] == fi) hidden.neighbors[i] = nf;

      for (int i = 0; i < 6; ++i) {
        if (i == slot_pi) continue;
        std::array<int, 5> key{};
        int a = 0;
        for (int j = 0; j < 6; ++j)
          if (j != i) key[a++] = facets_[nf].vertices[j];
        auto it = open_ridges.find(key);
        if (it == open_ridges.end()) {
          open_ridges.emplace(key, std::make_pair(nf, i));
        } else {
          facets_[nf].neighbors[i] = it->second.first;
          facets_[it->second.first].neighbors[it->second.second] = nf;
          open_ridges.erase(it);
        }
      }
    }
  }
  if (created == 0) fail(ErrorCode::NumericalFailure, "hull update found no horizon");
  for (int fi : visible) facets_[fi].alive = false;
}

std::vector<const WrenchHull::Facet*> WrenchHull::facets() const {
  std::vector<const Facet*> out;
  for (const auto& f : facets_)
    if (f.alive) out.push_back(&f);
  return out;
}

int WrenchHull::facet_count() const { return int(facets().size()); }

std::pair<double, Vec6> WrenchHull::min_face_distance() const {
  double r = std::numeric_limits<double>::infinity();
  Vec6 d = Vec6::Zero();
  for (const auto& f : facets_) {
    if (!f.alive) continue;
    if (f.offset < r) {
      r = f.offset;
      d = f.normal;
    }
  }
  if (!(r > eps_)) return {0.0, d};
  return {r, d};
}

bool WrenchHull::consistent() const {
  double tol = 10.0 * eps_;
  for (const auto& f : facets_) {
    if (!f.alive) continue;
    if (std::abs(f.normal.norm() - 1.0) > 1e-12) return false;
    for (const auto& p : points_)
      if (f.normal.dot(p) > f.offset + tol) return false;
  }
  return true;
}

std::string WrenchHull::debug_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"points\":[";
  for (std::size_t i = 0; i < points_.size(); ++i) {
    os << (i ? "," : "") << "[";
    for (int k = 0; k < 6; ++k) os << (k ? "," : "") << points_[i][k];
    os << "]";
  }
  os << "],\"facets\":[";
  bool first = true;
  for (const auto& f : facets_) {
    if (!f.alive) continue;
    if (!first) os << ",";
    first = false;
    os << "{\"normal\":[";
    for (int k = 0; k < 6; ++k) os << (k ? "," : "") << f.normal[k];
    os << "],\"offset\":" << f.offset << ",\"vertices\":[";
    for (int k = 0; k < 6; ++k) os << (k ? "," : "") << f.vertices[k];
    os << "]}";
  }
  os << "]}";
  return os.str();
}

}  // namespace fgm
