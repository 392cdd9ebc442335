#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace phomo {

/// Delaunay triangulation of a planar point set (Bowyer-Watson with
/// walking point location). Triangles are counter-clockwise index triples
/// into the input. Duplicate points are skipped. Throws DegenerateHull when
/// fewer than three non-collinear points are given.
std::vector<std::array<int, 3>> delaunay_triangulate(
    const std::vector<Eigen::Vector2d>& points);

}  // namespace phomo
