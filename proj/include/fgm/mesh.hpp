#pragma once

#include <array>
#include <string>
#include <vector>

#include "fgm/core.hpp"

namespace fgm {

enum class MeshFormat { OBJ, OFF };

struct ContactPoint {
  Vec3 position;      // on the surface
  Vec3 normal;        // unit, inward-pointing (compression-positive)
  int triangle = -1;  // host triangle index
};

/// Watertight oriented triangle mesh, recentered to its center of mass and
/// scaled to unit bounding-box diagonal. Immutable after construction.
class SurfaceMesh {
 public:
  SurfaceMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles,
              bool normalize = true);

  static SurfaceMesh load(const std::string& path, MeshFormat format);
  static SurfaceMesh load(const std::string& path);  // format from extension

  int vertex_count() const { return int(vertices_.size()); }
  int triangle_count() const { return int(triangles_.size()); }
  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }

  const Vec3& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }
  const Vec3& normal(int t) const { return normals_[t]; }
  const Vec3& centroid(int t) const { return centroids_[t]; }
  double area(int t) const { return areas_[t]; }
  double total_area() const { return total_area_; }

  /// Original-to-normalized length ratio (1 when normalize=false).
  double scale_factor() const { return scale_factor_; }
  /// Bounding-box diagonal of the stored coordinates.
  double bbox_diag() const { return bbox_diag_; }

  /// Signed volume from the divergence theorem.
  double signed_volume() const;

  /// Triangles incident to a vertex, in fan order around it.
  std::vector<int> vertex_fan(int v) const;

  /// Interior solid angle at a vertex, in steradians.
  double solid_angle(int v) const;

  Vec3 point_at(int t, double b1, double b2) const {
    const auto& tri = triangles_[t];
    return (1.0 - b1 - b2) * vertices_[tri[0]] + b1 * vertices_[tri[1]] +
           b2 * vertices_[tri[2]];
  }

  /// FNV-1a over vertex and triangle bytes, for cache invalidation.
  std::uint64_t content_hash() const;

 private:
  void validate_and_orient();
  void build_derived();
  void normalize();

  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Vec3> normals_;
  std::vector<Vec3> centroids_;
  std::vector<double> areas_;
  double total_area_ = 0.0;
  double scale_factor_ = 1.0;
  double bbox_diag_ = 0.0;
};

void save_off(const SurfaceMesh& mesh, const std::string& path);
void save_obj(const SurfaceMesh& mesh, const std::string& path);

/// N surface points with pairwise separation >= an annealed Poisson radius,
/// deterministic per seed. Normals are the inward triangle normals.
std::vector<ContactPoint> poisson_disk_contacts(const SurfaceMesh& mesh, int N,
                                                std::uint64_t seed);

std::string contacts_to_json(const std::vector<ContactPoint>& contacts);
std::vector<ContactPoint> contacts_from_json(const std::string& text);

}  // namespace fgm
