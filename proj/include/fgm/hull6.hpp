#pragma once

#include <array>
#include <vector>

#include "fgm/core.hpp"

namespace fgm {

/// Incremental 6D convex hull in V- and H-representation, beneath-beyond
/// with a floating-point tolerance and deterministic tie handling.
class WrenchHull {
 public:
  struct Facet {
    Vec6 normal;                  // unit outward
    double offset;                // normal . x <= offset
    std::array<int, 6> vertices;  // supporting vertex indices, sorted
    std::array<int, 6> neighbors; // across the ridge omitting vertices[k]
    bool alive = true;
  };

  /// Needs >= 7 points affinely spanning 6D.
  static WrenchHull init(const std::vector<Vec6>& points);

  /// Beneath-beyond insertion; points inside (or within tolerance of the
  /// boundary) leave the hull unchanged.
  void add_point(const Vec6& p);

  /// Distance from the origin to the nearest facet plane and that facet's
  /// normal; r = 0 with a violated facet normal when the origin is not
  /// strictly interior.
  std::pair<double, Vec6> min_face_distance() const;

  const std::vector<Vec6>& points() const { return points_; }
  std::vector<const Facet*> facets() const;
  int facet_count() const;
  const Vec6& interior_point() const { return interior_; }
  double tolerance() const { return eps_; }

  /// V/H consistency: every stored point satisfies every facet inequality
  /// within tolerance. Cheap enough to run in tests and after updates.
  bool consistent() const;

  std::string debug_json() const;

 private:
  WrenchHull() = default;
  int new_facet_from(const std::array<int, 6>& verts, const Vec6& inside);
  void compute_plane(Facet& f, const Vec6& inside);

  std::vector<Vec6> points_;
  std::vector<Facet> facets_;
  Vec6 interior_ = Vec6::Zero();
  double eps_ = 1e-9;
  double diameter_ = 1.0;
};

}  // namespace fgm
