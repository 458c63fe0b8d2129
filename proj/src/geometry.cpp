#include "minnet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "minnet/delaunay.hpp"

namespace minnet {

double Vec2::norm() const { return std::hypot(x, y); }

int Triangulation::find_edge(int i, int j) const {
    if (i > j)
        std::swap(i, j);
    for (int e : vertex_edges[i])
        if (edges[e].lo == i && edges[e].hi == j)
            return e;
    return -1;
}

void validate_scattered(const ScatteredData& data) {
    const int n = data.size();
    if (n < 3)
        throw TooFewPoints(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (data.points[i].x == data.points[j].x && data.points[i].y == data.points[j].y)
                throw DuplicateProjection(i, j);
    bool noncollinear = false;
    for (int k = 2; k < n && !noncollinear; ++k)
        noncollinear = orient2d(data.points[0].xy(), data.points[1].xy(), data.points[k].xy()) != 0;
    if (!noncollinear)
        throw CollinearProjections();
}

namespace {

bool point_on_closed(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
    int o1 = orient2d(a, b, p), o2 = orient2d(b, c, p), o3 = orient2d(c, a, p);
    return o1 >= 0 && o2 >= 0 && o3 >= 0;
}

bool segments_cross(const Vec2& p, const Vec2& q, const Vec2& a, const Vec2& b) {
    int o1 = orient2d(p, q, a), o2 = orient2d(p, q, b);
    int o3 = orient2d(a, b, p), o4 = orient2d(a, b, q);
    return o1 * o2 < 0 && o3 * o4 < 0;
}

// Improper intersection of two validated CCW triangles: anything beyond a
// shared vertex or a shared full edge.
bool triangles_overlap(const std::array<Vec2, 3>& t1, const std::array<int, 3>& i1,
                       const std::array<Vec2, 3>& t2, const std::array<int, 3>& i2) {
    std::vector<int> shared;
    for (int a : i1)
        for (int b : i2)
            if (a == b)
                shared.push_back(a);
    if (shared.size() == 3)
        return true;
    if (shared.size() == 2) {
        // Must lie on opposite sides of the shared edge.
        Vec2 ea, eb, v1, v2;
        for (int k = 0; k < 3; ++k) {
            if (i1[k] != shared[0] && i1[k] != shared[1])
                v1 = t1[k];
            if (i2[k] != shared[0] && i2[k] != shared[1])
                v2 = t2[k];
        }
        for (int k = 0; k < 3; ++k)
            if (i1[k] == shared[0])
                ea = t1[k];
        for (int k = 0; k < 3; ++k)
            if (i1[k] == shared[1])
                eb = t1[k];
        int s1 = orient2d(ea, eb, v1), s2 = orient2d(ea, eb, v2);
        return s1 * s2 >= 0;
    }
    // 0 or 1 shared vertices: any non-shared vertex inside-or-on the other
    // triangle, or any proper edge crossing, is improper.
    for (int k = 0; k < 3; ++k) {
        bool is_shared = !shared.empty() && i1[k] == shared[0];
        if (!is_shared && point_on_closed(t1[k], t2[0], t2[1], t2[2]))
            return true;
        is_shared = !shared.empty() && i2[k] == shared[0];
        if (!is_shared && point_on_closed(t2[k], t1[0], t1[1], t1[2]))
            return true;
    }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (segments_cross(t1[a], t1[(a + 1) % 3], t2[b], t2[(b + 1) % 3]))
                return true;
    return false;
}

} // namespace

Triangulation build_triangulation(const ScatteredData& data,
                                  const std::vector<Triangle>& user_triangles) {
    validate_scattered(data);
    const int n = data.size();

    Triangulation tri;
    tri.vertices.reserve(n);
    for (const Point3& p : data.points)
        tri.vertices.push_back(p.xy());

    if (user_triangles.empty()) {
        tri.triangles = delaunay_triangulate(tri.vertices);
    } else {
        tri.triangles = user_triangles;
        std::vector<bool> used(n, false);
        for (int t = 0; t < static_cast<int>(tri.triangles.size()); ++t) {
            auto& v = tri.triangles[t].v;
            for (int idx : v)
                if (idx < 0 || idx >= n)
                    throw VertexMismatch("triangle " + std::to_string(t) +
                                         " references vertex out of range");
            if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2])
                throw DegenerateTriangle(t);
            int o = orient2d(tri.vertices[v[0]], tri.vertices[v[1]], tri.vertices[v[2]]);
            if (o == 0)
                throw DegenerateTriangle(t);
            if (o < 0)
                std::swap(v[1], v[2]); // normalize to CCW
            for (int idx : v)
                used[idx] = true;
        }
        for (int i = 0; i < n; ++i)
            if (!used[i])
                throw VertexMismatch("vertex " + std::to_string(i) +
                                     " is not referenced by any triangle");
        for (int a = 0; a < static_cast<int>(tri.triangles.size()); ++a)
            for (int b = a + 1; b < static_cast<int>(tri.triangles.size()); ++b) {
                std::array<Vec2, 3> ta{tri.vertices[tri.triangles[a].v[0]],
                                       tri.vertices[tri.triangles[a].v[1]],
                                       tri.vertices[tri.triangles[a].v[2]]};
                std::array<Vec2, 3> tb{tri.vertices[tri.triangles[b].v[0]],
                                       tri.vertices[tri.triangles[b].v[1]],
                                       tri.vertices[tri.triangles[b].v[2]]};
                if (triangles_overlap(ta, tri.triangles[a].v, tb, tri.triangles[b].v))
                    throw OverlappingTriangles(a, b);
            }
    }

    // Edges: canonical lo < hi, sorted lexicographically.
    std::map<std::pair<int, int>, std::array<int, 2>> edge_tris;
    for (int t = 0; t < static_cast<int>(tri.triangles.size()); ++t) {
        const auto& v = tri.triangles[t].v;
        for (int k = 0; k < 3; ++k) {
            int a = v[k], b = v[(k + 1) % 3];
            if (a > b)
                std::swap(a, b);
            auto [it, fresh] = edge_tris.try_emplace({a, b}, std::array<int, 2>{t, -1});
            if (!fresh)
                it->second[1] = t;
        }
    }
    tri.vertex_edges.assign(n, {});
    for (const auto& [key, adj] : edge_tris) {
        Edge e;
        e.lo = key.first;
        e.hi = key.second;
        e.length = (tri.vertices[e.hi] - tri.vertices[e.lo]).norm();
        e.tri = adj;
        int idx = tri.n_edges();
        tri.edges.push_back(e);
        tri.vertex_edges[e.lo].push_back(idx);
        tri.vertex_edges[e.hi].push_back(idx);
    }

    // Boundary convexity flag: single loop with no reflex turns.
    std::map<int, int> bnext; // directed boundary edges a -> b with interior on the left
    for (const Edge& e : tri.edges) {
        if (!e.boundary())
            continue;
        const auto& v = tri.triangles[e.tri[0]].v;
        for (int k = 0; k < 3; ++k)
            if ((v[k] == e.lo && v[(k + 1) % 3] == e.hi) || (v[k] == e.hi && v[(k + 1) % 3] == e.lo))
                bnext[v[k]] = v[(k + 1) % 3];
    }
    tri.boundary_convex = true;
    if (!bnext.empty()) {
        int start = bnext.begin()->first;
        std::set<int> seen;
        int v = start;
        do {
            seen.insert(v);
            int w = bnext.count(v) ? bnext[v] : -1;
            if (w < 0) {
                tri.boundary_convex = false;
                break;
            }
            int u = bnext.count(w) ? bnext[w] : -1;
            if (u < 0) {
                tri.boundary_convex = false;
                break;
            }
            if (orient2d(tri.vertices[v], tri.vertices[w], tri.vertices[u]) < 0)
                tri.boundary_convex = false;
            v = w;
        } while (v != start && tri.boundary_convex);
        if (seen.size() != bnext.size())
            tri.boundary_convex = false; // more than one boundary loop
    }
    return tri;
}

ConvexityReport check_convexity(const ScatteredData& data, const Triangulation& tri) {
    ConvexityReport rep;
    double zmax = 0, len_min = std::numeric_limits<double>::infinity();
    for (const Point3& p : data.points)
        zmax = std::max(zmax, std::abs(p.z));
    for (const Edge& e : tri.edges)
        len_min = std::min(len_min, e.length);
    rep.tolerance = 1e-10 * (zmax / len_min);

    auto gradient = [&](int t) -> Vec2 {
        const auto& v = tri.triangles[t].v;
        Vec2 p = tri.vertices[v[0]];
        Vec2 e1 = tri.vertices[v[1]] - p, e2 = tri.vertices[v[2]] - p;
        double r1 = data.points[v[1]].z - data.points[v[0]].z;
        double r2 = data.points[v[2]].z - data.points[v[0]].z;
        double det = e1.cross(e2);
        return {(r1 * e2.y - r2 * e1.y) / det, (e1.x * r2 - e2.x * r1) / det};
    };

    rep.is_convex = true;
    rep.is_strictly_convex = true;
    for (int ei = 0; ei < tri.n_edges(); ++ei) {
        const Edge& e = tri.edges[ei];
        if (e.boundary())
            continue;
        Vec2 g1 = gradient(e.tri[0]), g2 = gradient(e.tri[1]);
        Vec2 dir = tri.vertices[e.hi] - tri.vertices[e.lo];
        Vec2 nrm{-dir.y / e.length, dir.x / e.length};
        // Orient the normal from tri[0] toward tri[1] using tri[1]'s opposite vertex.
        int opp = -1;
        for (int idx : tri.triangles[e.tri[1]].v)
            if (idx != e.lo && idx != e.hi)
                opp = idx;
        Vec2 mid = (tri.vertices[e.lo] + tri.vertices[e.hi]) * 0.5;
        if (nrm.dot(tri.vertices[opp] - mid) < 0)
            nrm = nrm * -1.0;
        double jump = (g2 - g1).dot(nrm);
        rep.gradient_jumps.push_back({ei, jump});
        if (jump < -rep.tolerance) {
            rep.is_convex = false;
            rep.offending_edges.push_back(ei);
        }
        if (jump <= rep.tolerance)
            rep.is_strictly_convex = false;
    }
    if (!rep.is_convex)
        rep.is_strictly_convex = false;
    return rep;
}

} // namespace minnet
