#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <vector>

#include "minnet/basis.hpp"
#include "minnet/geometry.hpp"
#include "test_util.hpp"

using namespace minnet;

namespace {

std::array<double, 3> lambda_oracle(const Vec2& u1, const Vec2& u2, const Vec2& u3) {
    Eigen::Matrix3d M;
    M << u1.x, u2.x, u3.x, u1.y, u2.y, u3.y, 1, 1, 1;
    Eigen::Vector3d rhs(0, 0, 1);
    Eigen::Vector3d l = M.fullPivLu().solve(rhs);
    return {l[0], l[1], l[2]};
}

Vec2 unit_dir(const Triangulation& tri, const BasicWindow& w, int r) {
    Vec2 d = tri.vertices[w.neighbors[r]] - tri.vertices[w.vertex];
    return d * (1.0 / w.lengths[r]);
}

// Linear factor of window w on edge e in the canonical lo->hi parametrization.
void window_on_edge(const BasicWindow& w, int r, double* slope, double* intercept) {
    double c = w.lengths[r];
    if (w.from_lo[r]) {
        *slope = -w.lambda[r] / c;
        *intercept = w.lambda[r];
    } else {
        *slope = w.lambda[r] / c;
        *intercept = 0;
    }
}

Eigen::MatrixXd gram_matrix(const BasicCurveNetworks& basics, const Triangulation& tri) {
    const int n = basics.count();
    std::map<int, std::vector<std::pair<int, int>>> support; // edge -> (window, slot)
    for (int i = 0; i < n; ++i)
        for (int r = 0; r < 3; ++r)
            support[basics.windows[i].edge_indices[r]].push_back({i, r});
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [e, entries] : support) {
        double c = tri.edges[e].length;
        for (const auto& [i, ri] : entries)
            for (const auto& [j, rj] : entries) {
                double a1, b1, a2, b2;
                window_on_edge(basics.windows[i], ri, &a1, &b1);
                window_on_edge(basics.windows[j], rj, &a2, &b2);
                G(i, j) += a1 * a2 * c * c * c / 3 + (a1 * b2 + a2 * b1) * c * c / 2 + b1 * b2 * c;
            }
    }
    return G;
}

} // namespace

TEST_CASE("pyramid apex star: degree 3 at mutual 120 degrees") {
    ScatteredData d = testutil::pyramid_data();
    Triangulation tri = build_triangulation(d);
    VertexStar star = build_vertex_star(tri, 3);
    REQUIRE(star.degree() == 3);
    CHECK_FALSE(star.boundary);
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            CHECK(star.unit_dirs[a].dot(star.unit_dirs[b]) == doctest::Approx(-0.5).epsilon(1e-13));
    for (int k = 0; k + 1 < 3; ++k) {
        double ang0 = std::atan2(star.unit_dirs[k].y, star.unit_dirs[k].x);
        double ang1 = std::atan2(star.unit_dirs[k + 1].y, star.unit_dirs[k + 1].x);
        CHECK(ang0 > ang1);
    }
}

TEST_CASE("corner of a single triangle contributes no windows") {
    ScatteredData d;
    d.points = {{0, 0, 1}, {1, 0, 0}, {0, 1, 2}};
    Triangulation tri = build_triangulation(d);
    BasicCurveNetworks basics = build_basic_networks(d, tri);
    CHECK(basics.count() == 0);
    for (int v = 0; v < 3; ++v)
        CHECK(build_vertex_star(tri, v).degree() == 2);
}

TEST_CASE("interior vertex of a 5-wheel has 3 windows") {
    ScatteredData d;
    d.points.push_back({0, 0, 0});
    for (int k = 0; k < 5; ++k) {
        double a = 2 * 3.14159265358979323846 * k / 5;
        d.points.push_back({std::cos(a), std::sin(a), 1.0});
    }
    Triangulation tri = build_triangulation(d);
    VertexStar star = build_vertex_star(tri, 0);
    CHECK(star.degree() == 5);
    CHECK_FALSE(star.boundary);
    BasicCurveNetworks basics = build_basic_networks(d, tri);
    int center_windows = 0;
    for (const BasicWindow& w : basics.windows)
        center_windows += w.vertex == 0;
    CHECK(center_windows == 3);
}

TEST_CASE("solve_lambda: symmetric 120-degree window gives thirds") {
    Vec2 u1(1, 0);
    Vec2 u2(std::cos(2 * 3.14159265358979 / 3), std::sin(2 * 3.14159265358979 / 3));
    Vec2 u3(std::cos(-2 * 3.14159265358979 / 3), std::sin(-2 * 3.14159265358979 / 3));
    auto l = solve_lambda(u1, u2, u3);
    CHECK(l[0] == doctest::Approx(1.0 / 3).epsilon(1e-13));
    CHECK(l[1] == doctest::Approx(1.0 / 3).epsilon(1e-13));
    CHECK(l[2] == doctest::Approx(1.0 / 3).epsilon(1e-13));
}

TEST_CASE("solve_lambda: duplicate direction is singular") {
    CHECK_THROWS_AS(solve_lambda({1, 0}, {1, 0}, {0, 1}, 7, 2), SingularWindow);
    bool caught = false;
    try {
        solve_lambda({0, 1}, {0, 1}, {1, 0}, 7, 2);
    } catch (const SingularWindow& e) {
        caught = true;
        CHECK(e.vertex == 7);
        CHECK(e.window == 2);
    }
    CHECK(caught);
}

TEST_CASE("solve_lambda: antiparallel outer pair still solvable") {
    Vec2 u1(1, 0), u2(0, 1), u3(-1, 0);
    Eigen::Matrix3d M;
    M << u1.x, u2.x, u3.x, u1.y, u2.y, u3.y, 1, 1, 1;
    REQUIRE(M.fullPivLu().rank() == 3);
    auto l = solve_lambda(u1, u2, u3);
    CHECK(l[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(l[1] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(l[2] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("pyramid basics: lambda and d per window") {
    ScatteredData d = testutil::pyramid_data();
    Triangulation tri = build_triangulation(d);
    BasicCurveNetworks basics = build_basic_networks(d, tri);
    REQUIRE(basics.count() == 4);

    const double s3 = std::sqrt(3.0);

    const BasicWindow& w1 = basics.windows[0];
    CHECK(w1.vertex == 0);
    CHECK(w1.neighbors == std::array<int, 3>{2, 3, 1});
    CHECK(w1.lambda[0] == doctest::Approx(2 + s3).epsilon(1e-12));
    CHECK(w1.lambda[1] == doctest::Approx(-3 - 2 * s3).epsilon(1e-12));
    CHECK(w1.lambda[2] == doctest::Approx(2 + s3).epsilon(1e-12));
    CHECK(w1.d == doctest::Approx((3 * s3 + 6) / 2).epsilon(1e-12));

    const BasicWindow& w4 = basics.windows[3];
    CHECK(w4.vertex == 3);
    for (int r = 0; r < 3; ++r) {
        CHECK(w4.lambda[r] == doctest::Approx(1.0 / 3).epsilon(1e-12));
        CHECK(w4.lengths[r] == doctest::Approx(s3 / 3).epsilon(1e-13));
    }
    CHECK(w4.d == doctest::Approx(s3 / 2).epsilon(1e-12));
}

TEST_CASE("pyramid base window matches the dense solver") {
    ScatteredData d = testutil::pyramid_data();
    Triangulation tri = build_triangulation(d);
    BasicCurveNetworks basics = build_basic_networks(d, tri);
    for (const BasicWindow& w : basics.windows) {
        auto l = lambda_oracle(unit_dir(tri, w, 0), unit_dir(tri, w, 1), unit_dir(tri, w, 2));
        for (int r = 0; r < 3; ++r)
            CHECK(w.lambda[r] == doctest::Approx(l[r]).epsilon(1e-11));
    }
}

TEST_CASE("window invariants on random convex data") {
    for (unsigned seed : {3u, 21u, 42u}) {
        ScatteredData d = testutil::random_convex_data(10, seed);
        Triangulation tri = build_triangulation(d);
        BasicCurveNetworks basics = build_basic_networks(d, tri);
        REQUIRE(basics.count() > 0);
        for (const BasicWindow& w : basics.windows) {
            CHECK(std::abs(w.lambda[0] + w.lambda[1] + w.lambda[2] - 1) <= 1e-12);
            Vec2 s{0, 0};
            for (int r = 0; r < 3; ++r)
                s = s + unit_dir(tri, w, r) * w.lambda[r];
            double scale = std::max({1.0, std::abs(w.lambda[0]), std::abs(w.lambda[1]),
                                     std::abs(w.lambda[2])});
            CHECK(std::abs(s.x) <= 1e-12 * scale);
            CHECK(std::abs(s.y) <= 1e-12 * scale);
            CHECK(std::abs(w.lambda[0]) > 1e-10);
        }
    }
}

TEST_CASE("Gram matrix of the basics is symmetric positive definite") {
    for (unsigned seed : {6u, 18u, 29u}) {
        ScatteredData d = testutil::random_convex_data(9, seed);
        Triangulation tri = build_triangulation(d);
        BasicCurveNetworks basics = build_basic_networks(d, tri);
        Eigen::MatrixXd G = gram_matrix(basics, tri);
        CHECK((G - G.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * G.cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        CHECK(es.eigenvalues().minCoeff() > 0);
    }
}

TEST_CASE("d shifts and scales with the data") {
    ScatteredData d = testutil::random_convex_data(8, 33);
    Triangulation tri = build_triangulation(d);
    BasicCurveNetworks base = build_basic_networks(d, tri);

    ScatteredData shifted = d;
    for (auto& p : shifted.points)
        p.z += 17.5;
    BasicCurveNetworks bs = build_basic_networks(shifted, tri);
    for (int i = 0; i < base.count(); ++i)
        CHECK(bs.windows[i].d == doctest::Approx(base.windows[i].d).epsilon(1e-9));

    ScatteredData scaled = d;
    for (auto& p : scaled.points)
        p.z *= -2.5;
    BasicCurveNetworks bc = build_basic_networks(scaled, tri);
    for (int i = 0; i < base.count(); ++i)
        CHECK(bc.windows[i].d == doctest::Approx(-2.5 * base.windows[i].d).epsilon(1e-11));
}

TEST_CASE("affine data yields d = 0 in every window") {
    ScatteredData d = testutil::affine_data(9, 12);
    Triangulation tri = build_triangulation(d);
    BasicCurveNetworks basics = build_basic_networks(d, tri);
    REQUIRE(basics.count() > 0);
    for (const BasicWindow& w : basics.windows)
        CHECK(std::abs(w.d) <= 1e-10);
}

TEST_CASE("boundary star with a near-collinear window fails start selection") {
    ScatteredData d;
    d.points = {{0, 0, 0}, {-1, 1, 0}, {0, 1, 0}, {1e-12, -1, 0}};
    std::vector<Triangle> ts = {{{0, 1, 2}}, {{0, 2, 3}}};
    Triangulation tri = build_triangulation(d, ts);
    bool caught = false;
    try {
        build_basic_networks(d, tri);
    } catch (const StartEdgeChoiceFailed& e) {
        caught = true;
        CHECK(e.vertex == 0);
    }
    CHECK(caught);
}
