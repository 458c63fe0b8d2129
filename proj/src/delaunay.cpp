#include "minnet/delaunay.hpp"

#include <algorithm>
#include <array>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numeric>

#include "minnet/errors.hpp"

namespace minnet {

namespace {

using exact_float = boost::multiprecision::number<
    boost::multiprecision::backends::cpp_bin_float<340, boost::multiprecision::backends::digit_base_2>>;

int sign_of(const exact_float& v) { return v.sign(); }

// Static filter constants from the standard forward error analysis of the
// determinant evaluations.
constexpr double kOrientErr = 3.3306690738754716e-16;
constexpr double kIncircleErr = 1.1102230246251565e-14;

} // namespace

int orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double detleft = (a.x - c.x) * (b.y - c.y);
    const double detright = (a.y - c.y) * (b.x - c.x);
    const double det = detleft - detright;
    const double detsum = std::abs(detleft) + std::abs(detright);
    if (std::abs(det) > kOrientErr * detsum)
        return det > 0 ? 1 : -1;

    const exact_float acx = exact_float(a.x) - exact_float(c.x);
    const exact_float bcx = exact_float(b.x) - exact_float(c.x);
    const exact_float acy = exact_float(a.y) - exact_float(c.y);
    const exact_float bcy = exact_float(b.y) - exact_float(c.y);
    return sign_of(acx * bcy - acy * bcx);
}

int incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;

    const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
    const double cdxady = cdx * ady, adxcdy = adx * cdy;
    const double adxbdy = adx * bdy, bdxady = bdx * ady;
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;

    const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) +
                       clift * (adxbdy - bdxady);
    const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                             (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                             (std::abs(adxbdy) + std::abs(bdxady)) * clift;
    if (std::abs(det) > kIncircleErr * permanent)
        return det > 0 ? 1 : -1;

    const exact_float eadx = exact_float(a.x) - exact_float(d.x);
    const exact_float eady = exact_float(a.y) - exact_float(d.y);
    const exact_float ebdx = exact_float(b.x) - exact_float(d.x);
    const exact_float ebdy = exact_float(b.y) - exact_float(d.y);
    const exact_float ecdx = exact_float(c.x) - exact_float(d.x);
    const exact_float ecdy = exact_float(c.y) - exact_float(d.y);
    const exact_float ea = eadx * eadx + eady * eady;
    const exact_float eb = ebdx * ebdx + ebdy * ebdy;
    const exact_float ec = ecdx * ecdx + ecdy * ecdy;
    return sign_of(ea * (ebdx * ecdy - ecdx * ebdy) + eb * (ecdx * eady - eadx * ecdy) +
                   ec * (eadx * ebdy - ebdx * eady));
}

namespace {

struct Tri {
    std::array<int, 3> v;   // CCW
    std::array<int, 3> adj; // adj[k] across the edge opposite v[k]; -1 = hull
};

// Incremental construction in lexicographic insertion order: every new point is
// outside the current hull (never interior, never interior to a hull edge), so
// insertion connects visible hull edges and legalizes with Lawson flips.
struct Builder {
    const std::vector<Vec2>& pts;
    std::vector<Tri> tris;
    std::vector<int> next, prev, hull_tri; // hull_tri[v]: triangle on hull edge v -> next[v]

    explicit Builder(const std::vector<Vec2>& p)
        : pts(p), next(p.size(), -1), prev(p.size(), -1), hull_tri(p.size(), -1) {}

    int edge_slot(int t, int a, int b) const {
        for (int k = 0; k < 3; ++k) {
            int p = tris[t].v[(k + 1) % 3], q = tris[t].v[(k + 2) % 3];
            if ((p == a && q == b) || (p == b && q == a))
                return k;
        }
        return -1;
    }

    void link(int t, int a, int b, int other) {
        tris[t].adj[edge_slot(t, a, b)] = other;
        if (other >= 0)
            tris[other].adj[edge_slot(other, a, b)] = t;
        else if (next[a] == b)
            hull_tri[a] = t;
        else if (next[b] == a)
            hull_tri[b] = t;
    }

    void legalize(int t, int slot) {
        const int u = tris[t].adj[slot];
        if (u < 0)
            return;
        const int p = tris[t].v[slot];
        const int a = tris[t].v[(slot + 1) % 3];
        const int b = tris[t].v[(slot + 2) % 3];
        int q = -1;
        for (int k = 0; k < 3; ++k)
            if (tris[u].v[k] != a && tris[u].v[k] != b)
                q = tris[u].v[k];
        if (incircle(pts[p], pts[a], pts[b], pts[q]) <= 0)
            return;

        // Flip (a,b) -> (p,q): t becomes (p,a,q), u becomes (p,q,b).
        const int ta = tris[t].adj[(slot + 2) % 3];         // across (p,a)
        const int tb = tris[t].adj[(slot + 1) % 3];         // across (b,p)
        const int across_aq = tris[u].adj[edge_slot(u, a, q)];
        const int across_qb = tris[u].adj[edge_slot(u, q, b)];

        tris[t].v = {p, a, q};
        tris[u].v = {p, q, b};
        tris[t].adj = {-2, -2, -2};
        tris[u].adj = {-2, -2, -2};
        tris[t].adj[1] = u; // opposite a: edge (q,p)
        tris[u].adj[2] = t; // opposite b: edge (p,q)
        link(t, p, a, ta);
        link(t, a, q, across_aq);
        link(u, q, b, across_qb);
        link(u, b, p, tb);

        legalize(t, 0); // edge (a,q)
        legalize(u, 0); // edge (q,b)
    }
};

} // namespace

std::vector<Triangle> delaunay_triangulate(const std::vector<Vec2>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 3)
        throw TooFewPoints(n);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        if (points[i].x != points[j].x)
            return points[i].x < points[j].x;
        return points[i].y < points[j].y;
    });

    Builder bld(points);
    std::vector<int>& next = bld.next;
    std::vector<int>& prev = bld.prev;

    int k = 2;
    while (k < n && orient2d(points[order[0]], points[order[1]], points[order[k]]) == 0)
        ++k;
    if (k == n)
        throw CollinearProjections();

    const int pk = order[k];
    const int side = orient2d(points[order[0]], points[order[1]], points[pk]);

    // Hull loop (CCW) over the collinear chain plus pk.
    {
        std::vector<int> loop;
        if (side > 0) {
            for (int i = 0; i < k; ++i)
                loop.push_back(order[i]);
        } else {
            for (int i = k - 1; i >= 0; --i)
                loop.push_back(order[i]);
        }
        loop.push_back(pk);
        const int m = static_cast<int>(loop.size());
        for (int i = 0; i < m; ++i) {
            next[loop[i]] = loop[(i + 1) % m];
            prev[loop[(i + 1) % m]] = loop[i];
        }
    }

    // Fan triangles from pk over the chain.
    int prev_fan = -1;
    for (int i = 0; i + 1 < k; ++i) {
        const int a = order[i], b = order[i + 1];
        Tri t;
        t.v = side > 0 ? std::array<int, 3>{a, b, pk} : std::array<int, 3>{b, a, pk};
        t.adj = {-1, -1, -1};
        const int idx = static_cast<int>(bld.tris.size());
        bld.tris.push_back(t);
        if (prev_fan >= 0) {
            bld.tris[idx].adj[bld.edge_slot(idx, a, pk)] = prev_fan;
            bld.tris[prev_fan].adj[bld.edge_slot(prev_fan, a, pk)] = idx;
        }
        // Register hull edges of this fan triangle.
        for (int s = 0; s < 3; ++s) {
            if (bld.tris[idx].adj[s] < 0) {
                int e1 = bld.tris[idx].v[(s + 1) % 3], e2 = bld.tris[idx].v[(s + 2) % 3];
                if (next[e1] == e2)
                    bld.hull_tri[e1] = idx;
                else if (next[e2] == e1)
                    bld.hull_tri[e2] = idx;
            }
        }
        prev_fan = idx;
    }

    for (int m = k + 1; m < n; ++m) {
        const int p = order[m];
        int start = -1;
        {
            const int v0 = order[0]; // lex-min vertex is always on the hull
            int v = v0;
            do {
                if (orient2d(points[v], points[next[v]], points[p]) < 0) {
                    start = v;
                    break;
                }
                v = next[v];
            } while (v != v0);
        }
        if (start < 0)
            throw Error("delaunay: no visible hull edge");
        int first = start;
        while (orient2d(points[prev[first]], points[first], points[p]) < 0)
            first = prev[first];
        int last = next[start];
        while (orient2d(points[last], points[next[last]], points[p]) < 0)
            last = next[last];

        std::vector<int> new_tris;
        int prev_new = -1;
        for (int a = first; a != last; a = next[a]) {
            const int b = next[a];
            Tri t;
            t.v = {b, a, p};
            t.adj = {-1, -1, -1};
            const int idx = static_cast<int>(bld.tris.size());
            bld.tris.push_back(t);
            const int old_t = bld.hull_tri[a];
            bld.tris[idx].adj[bld.edge_slot(idx, a, b)] = old_t;
            if (old_t >= 0)
                bld.tris[old_t].adj[bld.edge_slot(old_t, a, b)] = idx;
            if (prev_new >= 0) {
                bld.tris[idx].adj[bld.edge_slot(idx, a, p)] = prev_new;
                bld.tris[prev_new].adj[bld.edge_slot(prev_new, a, p)] = idx;
            }
            prev_new = idx;
            new_tris.push_back(idx);
        }

        next[first] = p;
        prev[p] = first;
        next[p] = last;
        prev[last] = p;
        bld.hull_tri[first] = new_tris.front();
        bld.hull_tri[p] = new_tris.back();

        for (size_t i = 0; i < new_tris.size(); ++i) {
            const int idx = new_tris[i];
            int slot = -1;
            for (int s = 0; s < 3; ++s)
                if (bld.tris[idx].v[s] == p)
                    slot = s;
            bld.legalize(idx, slot);
        }
    }

    std::vector<Triangle> out;
    out.reserve(bld.tris.size());
    for (const Tri& t : bld.tris)
        out.push_back(Triangle{{t.v[0], t.v[1], t.v[2]}});
    for (Triangle& t : out) {
        int mi = 0;
        for (int i = 1; i < 3; ++i)
            if (t.v[i] < t.v[mi])
                mi = i;
        t.v = {t.v[mi], t.v[(mi + 1) % 3], t.v[(mi + 2) % 3]};
    }
    std::sort(out.begin(), out.end(),
              [](const Triangle& a, const Triangle& b) { return a.v < b.v; });
    return out;
}

} // namespace minnet
