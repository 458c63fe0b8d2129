#include "minnet/basis.hpp"

#include <algorithm>
#include <cmath>

namespace minnet {

namespace {

constexpr double kLambda1Min = 1e-10;
constexpr double kSingularDet = 1e-14;

bool pair_shares_triangle(const Triangulation& tri, int v, int nbr1, int nbr2) {
    for (const Triangle& t : tri.triangles) {
        bool has_v = false, has_1 = false, has_2 = false;
        for (int idx : t.v) {
            has_v |= idx == v;
            has_1 |= idx == nbr1;
            has_2 |= idx == nbr2;
        }
        if (has_v && has_1 && has_2)
            return true;
    }
    return false;
}

} // namespace

VertexStar build_vertex_star(const Triangulation& tri, int vertex) {
    VertexStar star;
    star.vertex = vertex;
    const auto& incident = tri.vertex_edges[vertex];
    const int m = static_cast<int>(incident.size());

    std::vector<int> idx(incident.begin(), incident.end());
    std::vector<double> angles(m);
    std::vector<int> nbr(m);
    for (int k = 0; k < m; ++k) {
        nbr[k] = tri.other_end(idx[k], vertex);
        Vec2 d = tri.vertices[nbr[k]] - tri.vertices[vertex];
        angles[k] = std::atan2(d.y, d.x);
    }
    std::vector<int> perm(m);
    for (int k = 0; k < m; ++k)
        perm[k] = k;
    std::sort(perm.begin(), perm.end(), [&](int a, int b) { return angles[a] > angles[b]; });

    star.boundary = false;
    for (int e : incident)
        star.boundary |= tri.edges[e].boundary();

    // Boundary stars must not wrap the exterior gap: rotate so the (unique)
    // consecutive pair without a common triangle sits between last and first.
    int rotate = 0;
    if (star.boundary && m >= 2) {
        for (int k = 0; k < m; ++k) {
            int a = perm[k], b = perm[(k + 1) % m];
            if (!pair_shares_triangle(tri, vertex, nbr[a], nbr[b])) {
                rotate = (k + 1) % m;
                break;
            }
        }
    }

    for (int k = 0; k < m; ++k) {
        int j = perm[(k + rotate) % m];
        int e = idx[j];
        star.edge_indices.push_back(e);
        star.neighbors.push_back(nbr[j]);
        star.lengths.push_back(tri.edges[e].length);
        Vec2 d = tri.vertices[nbr[j]] - tri.vertices[vertex];
        star.unit_dirs.push_back(d * (1.0 / tri.edges[e].length));
    }
    return star;
}

std::array<double, 3> solve_lambda(const Vec2& u1, const Vec2& u2, const Vec2& u3,
                                   int vertex, int window) {
    // Cramer on [u1 u2 u3; 1 1 1] lambda = (0, 0, 1).
    const double det = u1.x * (u2.y - u3.y) - u2.x * (u1.y - u3.y) + u3.x * (u1.y - u2.y);
    if (std::abs(det) < kSingularDet)
        throw SingularWindow(vertex, window);
    const double l1 = (u2.x * u3.y - u3.x * u2.y) / det;
    const double l2 = -(u1.x * u3.y - u3.x * u1.y) / det;
    const double l3 = (u1.x * u2.y - u2.x * u1.y) / det;
    return {l1, l2, l3};
}

BasicCurveNetworks build_basic_networks(const ScatteredData& data, const Triangulation& tri) {
    BasicCurveNetworks out;
    out.stars.resize(tri.n_vertices());

    for (int v = 0; v < tri.n_vertices(); ++v) {
        VertexStar star = build_vertex_star(tri, v);
        const int m = star.degree();
        out.stars[v] = star;
        if (m < 3)
            continue;

        auto lambdas_for = [&](const VertexStar& s) {
            std::vector<std::array<double, 3>> ls;
            for (int w = 0; w + 2 < m; ++w)
                ls.push_back(solve_lambda(s.unit_dirs[w], s.unit_dirs[w + 1], s.unit_dirs[w + 2],
                                          v, w));
            return ls;
        };
        auto acceptable = [&](const std::vector<std::array<double, 3>>& ls) {
            for (const auto& l : ls)
                if (std::abs(l[0]) <= kLambda1Min)
                    return false;
            return true;
        };
        auto rotated = [&](const VertexStar& s, int off) {
            VertexStar r = s;
            for (int k = 0; k < m; ++k) {
                int j = (k + off) % m;
                r.edge_indices[k] = s.edge_indices[j];
                r.neighbors[k] = s.neighbors[j];
                r.unit_dirs[k] = s.unit_dirs[j];
                r.lengths[k] = s.lengths[j];
            }
            return r;
        };

        std::vector<std::array<double, 3>> lambdas = lambdas_for(star);
        if (!acceptable(lambdas)) {
            if (star.boundary)
                throw StartEdgeChoiceFailed(v);
            bool found = false;
            for (int off = 1; off < m && !found; ++off) {
                VertexStar cand = rotated(star, off);
                auto ls = lambdas_for(cand);
                if (acceptable(ls)) {
                    star = cand;
                    lambdas = ls;
                    found = true;
                }
            }
            if (!found)
                throw StartEdgeChoiceFailed(v);
            out.stars[v] = star;
        }

        for (int w = 0; w + 2 < m; ++w) {
            BasicWindow bw;
            bw.vertex = v;
            bw.window = w;
            bw.lambda = lambdas[w];
            double d = 0;
            for (int r = 0; r < 3; ++r) {
                int e = star.edge_indices[w + r];
                bw.edge_indices[r] = e;
                bw.neighbors[r] = star.neighbors[w + r];
                bw.lengths[r] = star.lengths[w + r];
                bw.from_lo[r] = tri.edges[e].lo == v;
                d += bw.lambda[r] / bw.lengths[r] *
                     (data.points[bw.neighbors[r]].z - data.points[v].z);
            }
            bw.d = d;
            out.windows.push_back(bw);
        }
    }
    return out;
}

} // namespace minnet
