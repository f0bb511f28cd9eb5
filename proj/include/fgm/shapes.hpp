#pragma once

#include "fgm/mesh.hpp"

namespace fgm {
namespace shapes {

/// Icosphere with `subdivisions` refinement levels (K = 20 * 4^subdivisions),
/// radius applied before the mesh normalization step.
SurfaceMesh icosphere(int subdivisions, double radius = 1.0, bool normalize = true);

/// Axis-aligned box, each face split into `res`^2 quads of two triangles.
SurfaceMesh box(const Vec3& half_extent, int res = 1, bool normalize = true);

SurfaceMesh octahedron(bool normalize = true);

/// Straight tube along x with rectangular cross-sections interpolated
/// between stations; end caps close it. Used for bar/dumbbell test shapes.
/// stations: list of (x, half_y, half_z), strictly increasing in x.
SurfaceMesh lofted_bar(const std::vector<Vec3>& stations, int segments_per_band,
                       int cap_res, bool normalize = true);

/// Two-arm dumbbell: wide arm (half-width a), neck, thin arm (half-width
/// a/2), symmetric station layout about x=0 except for the arm widths.
SurfaceMesh asymmetric_dumbbell(int refine = 1, bool normalize = true);

}  // namespace shapes
}  // namespace fgm
