#pragma once

#include <array>
#include <vector>

#include "minnet/geometry.hpp"

namespace minnet {

/// Edges incident to a vertex in clockwise angular order (atan2 descending).
/// For boundary vertices the list starts just after the exterior gap, so
/// consecutive pairs always bound a common triangle.
struct VertexStar {
    int vertex = -1;
    bool boundary = false;
    std::vector<int> edge_indices;       // into Triangulation::edges
    std::vector<int> neighbors;          // other endpoint per edge
    std::vector<Vec2> unit_dirs;         // unit vectors leaving the vertex
    std::vector<double> lengths;
    int degree() const { return static_cast<int>(edge_indices.size()); }
};

/// One basic curve network B_{is}: supported on three consecutive edges of the
/// (possibly rotated) star of vertex i, value lambda_r * (1 - t/len_r) on
/// supporting edge r with t measured from the vertex.
struct BasicWindow {
    int vertex = -1;
    int window = 0;                   // s, 0-based within the rotated star order
    std::array<int, 3> edge_indices;  // supporting edges, star order
    std::array<int, 3> neighbors;
    std::array<double, 3> lambda;
    std::array<double, 3> lengths;
    std::array<bool, 3> from_lo;      // true if the vertex is the canonical low end
    double d = 0;                     // sum_r lambda_r (z_nbr - z_i) / len_r
};

struct BasicCurveNetworks {
    std::vector<BasicWindow> windows;     // all B_{is}, vertices in index order
    std::vector<VertexStar> stars;        // rotated stars actually used, per vertex
    int count() const { return static_cast<int>(windows.size()); }
};

/// Star of one vertex in clockwise order; boundary stars never wrap the gap.
VertexStar build_vertex_star(const Triangulation& tri, int vertex);

/// Solves lambda_1 u1 + lambda_2 u2 + lambda_3 u3 = 0, lambda_1+lambda_2+lambda_3 = 1
/// for three unit direction vectors. Throws SingularWindow if the 3x3 system is
/// singular (duplicate directions).
std::array<double, 3> solve_lambda(const Vec2& u1, const Vec2& u2, const Vec2& u3,
                                   int vertex = -1, int window = 0);

/// All basic curve networks for vertices of degree >= 3. The start edge of each
/// interior star is rotated until |lambda_1| > 1e-10 holds in every window;
/// boundary stars use the fixed boundary-respecting order and throw
/// StartEdgeChoiceFailed if some window has lambda_1 = 0.
BasicCurveNetworks build_basic_networks(const ScatteredData& data, const Triangulation& tri);

} // namespace minnet
