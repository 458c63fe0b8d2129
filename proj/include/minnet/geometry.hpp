#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "minnet/errors.hpp"

namespace minnet {

struct Vec2 {
    double x = 0, y = 0;
    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const;
};

struct Point3 {
    double x = 0, y = 0, z = 0;
    Vec2 xy() const { return {x, y}; }
};

/// Interpolation sites P_i = (x_i, y_i, z_i); projections V_i = (x_i, y_i)
/// must be pairwise distinct and not all collinear.
struct ScatteredData {
    std::vector<Point3> points;
    int size() const { return static_cast<int>(points.size()); }
};

struct Triangle {
    std::array<int, 3> v;
};

struct Edge {
    int lo = -1;        // canonical orientation runs lo -> hi, lo < hi
    int hi = -1;
    double length = 0;  // Euclidean length of the projected segment
    std::array<int, 2> tri{-1, -1}; // adjacent triangle indices, tri[1] = -1 on boundary
    bool boundary() const { return tri[1] < 0; }
};

struct Triangulation {
    std::vector<Vec2> vertices;
    std::vector<Triangle> triangles;
    std::vector<Edge> edges;
    std::vector<std::vector<int>> vertex_edges; // incident edge indices per vertex (unordered)
    bool boundary_convex = true;                // false => usable but flagged with a warning

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }
    int find_edge(int i, int j) const; // -1 if absent
    int degree(int i) const { return static_cast<int>(vertex_edges[i].size()); }
    int other_end(int edge_idx, int i) const {
        const Edge& e = edges[edge_idx];
        return e.lo == i ? e.hi : e.lo;
    }
};

struct EdgeJump {
    int edge = -1;    // index into Triangulation::edges (always an interior edge)
    double jump = 0;  // jump of the normal derivative of L across the edge, >= 0 iff convex
};

struct ConvexityReport {
    bool is_convex = false;
    bool is_strictly_convex = false;
    std::vector<EdgeJump> gradient_jumps; // one entry per interior edge
    std::vector<int> offending_edges;     // interior edges with a negative jump
    double tolerance = 0;                 // strictness threshold used for the jumps
};

/// Validates sizes, duplicate projections and global collinearity.
/// Throws TooFewPoints, DuplicateProjection or CollinearProjections.
void validate_scattered(const ScatteredData& data);

/// Builds the triangulation of the projections. With user triangles, validates
/// them (DegenerateTriangle, OverlappingTriangles, VertexMismatch); otherwise
/// computes the Delaunay triangulation (co-circular ties broken by lexicographic
/// vertex index). Derives edges, lengths, adjacency and the boundary convexity flag.
Triangulation build_triangulation(const ScatteredData& data,
                                  const std::vector<Triangle>& user_triangles = {});

/// Per-edge convexity of the piecewise linear interpolant over tri: the jump of
/// the gradient component normal to each interior edge. Strictness uses the
/// relative tolerance 1e-10 * max|z| / min edge length.
ConvexityReport check_convexity(const ScatteredData& data, const Triangulation& tri);

} // namespace minnet
