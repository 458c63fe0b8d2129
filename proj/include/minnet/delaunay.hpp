#pragma once

#include <vector>

#include "minnet/geometry.hpp"

namespace minnet {

/// Sign of the signed area of (a, b, c): > 0 counterclockwise, < 0 clockwise,
/// 0 collinear. Statically filtered double evaluation with exact fallback.
int orient2d(const Vec2& a, const Vec2& b, const Vec2& c);

/// Sign of the incircle determinant for the counterclockwise triangle (a, b, c)
/// and query d: > 0 if d is strictly inside the circumcircle, 0 if cocircular.
int incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

/// Bowyer-Watson Delaunay triangulation. Points must be pairwise distinct and
/// not all collinear. Cocircular configurations never flip (ties broken by the
/// deterministic lexicographic insertion order), so output is reproducible.
std::vector<Triangle> delaunay_triangulate(const std::vector<Vec2>& points);

} // namespace minnet
