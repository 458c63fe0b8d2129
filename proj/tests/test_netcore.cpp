#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "minnet/basis.hpp"
#include "minnet/moments.hpp"
#include "minnet/netcore.hpp"
#include "test_util.hpp"

using namespace minnet;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

CurveNetwork pyramid_solution(const ScatteredData& d, const Triangulation& tri) {
    std::vector<SecondDerivModel> models(tri.n_edges(), PositivePartPower{0.0, 3.0, 1.0});
    return reconstruct(models, d, tri);
}

std::vector<SecondDerivModel> random_models(const Triangulation& tri, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_int_distribution<int> kind(0, 2);
    std::vector<SecondDerivModel> models;
    for (const Edge& e : tri.edges) {
        switch (kind(rng)) {
        case 0:
            models.push_back(ZeroModel{});
            break;
        case 1:
            models.push_back(PositivePartPower{2 * uni(rng) / e.length, uni(rng) + 1.1,
                                               0.5 + std::abs(uni(rng))});
            break;
        default:
            models.push_back(PiecewiseConstant{e.length * (0.5 + 0.4 * uni(rng)),
                                               std::abs(uni(rng)), std::abs(uni(rng))});
        }
    }
    return models;
}

// Integrate f over [lo,hi] when f may vary like |t-t_sing|^r with fractional
// r >= 0.5 at one marked endpoint; t = endpoint +- u^6 smooths the integrand.
template <typename F>
double integrate_piece(F f, double lo, double hi, bool singular_at_lo) {
    double len = hi - lo;
    if (len <= 0)
        return 0;
    auto g = [&](double s) {
        double u = std::pow(s, 6) * len;
        double t = singular_at_lo ? lo + u : hi - u;
        return f(t) * 6 * std::pow(s, 5) * len;
    };
    return testutil::simpson(g, 0, 1, 1e-13);
}

// Quadrature oracle for <F'', B> in the window's own orientation, splitting
// each edge integral at the model's kink so the pieces are one-sided smooth.
double inner_product_quad(const CurveNetwork& net, const BasicWindow& w) {
    double total = 0;
    for (int r = 0; r < 3; ++r) {
        int e = w.edge_indices[r];
        double c = w.lengths[r];
        bool from_lo = w.from_lo[r];
        auto f = [&](double t) {
            double tc = from_lo ? t : c - t;
            return evaluate(net, e, tc, 2) * w.lambda[r] * (1 - t / c);
        };
        double split = -1;
        const SecondDerivModel& m = net.edges[e].model;
        if (const auto* pp = std::get_if<PositivePartPower>(&m)) {
            if (pp->slope != 0)
                split = -pp->intercept / pp->slope;
        } else if (const auto* pc = std::get_if<PiecewiseConstant>(&m)) {
            split = pc->knot;
        }
        if (split > 0 && split < c) {
            double us = from_lo ? split : c - split;
            total += integrate_piece(f, 0, us, false);
            total += integrate_piece(f, us, c, true);
        } else {
            total += testutil::simpson(f, 0, c, 1e-13);
        }
    }
    return total;
}

} // namespace

TEST_CASE("pyramid solution: evaluation, derivatives, norms") {
    ScatteredData d = testutil::pyramid_data();
    Triangulation tri = build_triangulation(d);
    CurveNetwork net = pyramid_solution(d, tri);

    int base = tri.find_edge(0, 1);
    CHECK(net.edges[base].fprime0 == doctest::Approx(-1.5).epsilon(1e-13));
    CHECK(evaluate(net, base, 0.5, 0) == doctest::Approx(-0.375).epsilon(1e-13));

    int spoke = tri.find_edge(0, 3);
    double c = tri.edges[spoke].length;
    CHECK(net.edges[spoke].fprime0 == doctest::Approx(-std::sqrt(3.0)).epsilon(1e-13));
    CHECK(evaluate(net, spoke, c, 0) == doctest::Approx(-0.5).epsilon(1e-13));
    CHECK(evaluate(net, spoke, 0.3 * c, 2) == doctest::Approx(3.0).epsilon(1e-13));

    CHECK(norm_second_deriv(net, kInf) == doctest::Approx(3.0).epsilon(1e-13));
    double total_len = 3.0 + std::sqrt(3.0);
    CHECK(norm_second_deriv(net, 2.0) ==
          doctest::Approx(3.0 * std::sqrt(total_len)).epsilon(1e-12));
}

TEST_CASE("zero model edges are linear") {
    ScatteredData d;
    d.points = {{0, 0, 0}, {2, 0, 5}, {0, 1, 2}};
    Triangulation tri = build_triangulation(d);
    std::vector<SecondDerivModel> models(3, ZeroModel{});
    CurveNetwork net = reconstruct(models, d, tri);
    int e = tri.find_edge(0, 1);
    CHECK(net.edges[e].fprime0 == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(evaluate(net, e, 1.37, 0) == doctest::Approx(2.5 * 1.37).epsilon(1e-13));
    CHECK(evaluate(net, e, 0.6, 2) == 0.0);
    CHECK(norm_second_deriv(net, 2.0) == 0.0);
    CHECK(norm_second_deriv(net, kInf) == 0.0);
}

TEST_CASE("positive part power evaluates its kink") {
    CurveNetwork net;
    net.edges.push_back({0, 1, 1.0, 0.0, 0.0, 0.0, PositivePartPower{1.0, -0.5, 1.0}});
    CHECK(evaluate(net, 0, 0.75, 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(evaluate(net, 0, 0.25, 2) == 0.0);
}

TEST_CASE("evaluate rejects bad arguments") {
    ScatteredData d = testutil::pyramid_data();
    Triangulation tri = build_triangulation(d);
    CurveNetwork net = pyramid_solution(d, tri);
    CHECK_THROWS_AS(evaluate(net, 0, -0.01, 0), Error);
    CHECK_THROWS_AS(evaluate(net, 0, tri.edges[0].length + 0.01, 0), Error);
    CHECK_THROWS_AS(evaluate(net, 0, 0.5, 3), Error);
    CHECK_THROWS_AS(evaluate(net, 99, 0.5, 0), Error);
}

TEST_CASE("first derivative matches central differences") {
    ScatteredData d = testutil::random_convex_data(8, 19);
    Triangulation tri = build_triangulation(d);
    CurveNetwork net = reconstruct(random_models(tri, 7), d, tri);
    std::mt19937 rng(101);
    for (int e = 0; e < tri.n_edges(); ++e) {
        double c = tri.edges[e].length;
        double h = 1e-5 * c;
        std::uniform_real_distribution<double> uni(2 * h, c - 2 * h);
        for (int k = 0; k < 100; ++k) {
            double t = uni(rng);
            double fd = (evaluate(net, e, t + h, 0) - evaluate(net, e, t - h, 0)) / (2 * h);
            double an = evaluate(net, e, t, 1);
            CHECK(std::abs(fd - an) <= 2e-5 * std::max(1.0, std::abs(an)));
        }
    }
}

TEST_CASE("inner products against the pyramid basics reproduce d") {
    ScatteredData d = testutil::pyramid_data();
    Triangulation tri = build_triangulation(d);
    BasicCurveNetworks basics = build_basic_networks(d, tri);
    CurveNetwork net = pyramid_solution(d, tri);

    const double s3 = std::sqrt(3.0);
    CHECK(inner_product_basic(net, basics.windows[3]) ==
          doctest::Approx(s3 / 2).epsilon(1e-12));
    CHECK(inner_product_basic(net, basics.windows[0]) ==
          doctest::Approx((3 * s3 + 6) / 2).epsilon(1e-12));
}

TEST_CASE("inner product vanishes on zero support") {
    ScatteredData d = testutil::pyramid_data();
    Triangulation tri = build_triangulation(d);
    BasicCurveNetworks basics = build_basic_networks(d, tri);
    std::vector<SecondDerivModel> models(tri.n_edges(), ZeroModel{});
    CurveNetwork net = reconstruct(models, d, tri);
    for (const BasicWindow& w : basics.windows)
        CHECK(inner_product_basic(net, w) == 0.0);
}

TEST_CASE("inner product agrees with adaptive quadrature") {
    for (unsigned seed : {4u, 13u, 58u}) {
        ScatteredData d = testutil::random_convex_data(9, seed);
        Triangulation tri = build_triangulation(d);
        BasicCurveNetworks basics = build_basic_networks(d, tri);
        CurveNetwork net = reconstruct(random_models(tri, seed + 100), d, tri);
        for (const BasicWindow& w : basics.windows) {
            double ip = inner_product_basic(net, w);
            double quad = inner_product_quad(net, w);
            CHECK(std::abs(ip - quad) <= 1e-10 * std::max(1.0, std::abs(ip)));
        }
    }
}

TEST_CASE("pyramid residual families vanish") {
    ScatteredData d = testutil::pyramid_data();
    Triangulation tri = build_triangulation(d);
    BasicCurveNetworks basics = build_basic_networks(d, tri);
    CurveNetwork net = pyramid_solution(d, tri);
    Residuals res = residuals(net, d, basics);
    CHECK(res.max_smoothness <= 1e-12);
    CHECK(res.max_lemma4 <= 1e-12);
    CHECK(res.max_interpolation <= 1e-12);
    REQUIRE(res.smoothness.size() == 4);
    REQUIRE(res.lemma4.size() == 4);
    REQUIRE(res.interpolation.size() == 4);
}

TEST_CASE("all-zero network on affine data is residual free") {
    ScatteredData d = testutil::affine_data(9, 44);
    Triangulation tri = build_triangulation(d);
    BasicCurveNetworks basics = build_basic_networks(d, tri);
    std::vector<SecondDerivModel> models(tri.n_edges(), ZeroModel{});
    CurveNetwork net = reconstruct(models, d, tri);
    Residuals res = residuals(net, d, basics);
    CHECK(res.max_smoothness <= 1e-10);
    CHECK(res.max_lemma4 <= 1e-10);
    CHECK(res.max_interpolation <= 1e-12);
}

TEST_CASE("lemma4 residuals mirror smoothness residuals on interpolating networks") {
    for (unsigned seed : {8u, 31u, 70u}) {
        ScatteredData d = testutil::random_convex_data(10, seed);
        Triangulation tri = build_triangulation(d);
        BasicCurveNetworks basics = build_basic_networks(d, tri);
        CurveNetwork net = reconstruct(random_models(tri, seed + 5), d, tri);
        Residuals res = residuals(net, d, basics);
        double scale = 1;
        for (const BasicWindow& w : basics.windows)
            scale = std::max({scale, std::abs(w.d), std::abs(w.lambda[1])});
        for (size_t i = 0; i < res.lemma4.size(); ++i)
            CHECK(std::abs(res.lemma4[i].value + res.smoothness[i].value) <= 1e-10 * scale);
    }
}

TEST_CASE("reconstruct closes both interpolation conditions") {
    ScatteredData d = testutil::random_convex_data(10, 91);
    Triangulation tri = build_triangulation(d);
    CurveNetwork net = reconstruct(random_models(tri, 6), d, tri);
    double zmax = 0;
    for (const Point3& p : d.points)
        zmax = std::max(zmax, std::abs(p.z));
    for (int e = 0; e < tri.n_edges(); ++e) {
        CHECK(evaluate(net, e, 0, 0) == net.edges[e].z_lo);
        CHECK(std::abs(evaluate(net, e, tri.edges[e].length, 0) - net.edges[e].z_hi) <=
              1e-12 * std::max(1.0, zmax));
    }
}

TEST_CASE("apex edge reconstruction matches the closed form") {
    ScatteredData d = testutil::pyramid_data();
    Triangulation tri = build_triangulation(d);
    CurveNetwork net = pyramid_solution(d, tri);
    int spoke = tri.find_edge(1, 3);
    double c = tri.edges[spoke].length;
    for (double s : {0.1, 0.35, 0.62, 0.88}) {
        double t = s * c;
        CHECK(evaluate(net, spoke, t, 0) ==
              doctest::Approx(1.5 * t * t - std::sqrt(3.0) * t).epsilon(1e-12));
    }
}

TEST_CASE("p-norms decrease toward the sup norm") {
    ScatteredData d = testutil::pyramid_data();
    Triangulation tri = build_triangulation(d);
    CurveNetwork net = pyramid_solution(d, tri);
    double sup = norm_second_deriv(net, kInf);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 10; ++k) {
        double np = norm_second_deriv(net, std::pow(2.0, k));
        CHECK(std::abs(np - sup) < std::abs(prev - sup));
        prev = np;
    }
    CHECK(std::abs(prev - sup) < 0.2);
}

TEST_CASE("outgoing derivatives follow the orientation rule") {
    ScatteredData d = testutil::pyramid_data();
    Triangulation tri = build_triangulation(d);
    CurveNetwork net = pyramid_solution(d, tri);
    int e = tri.find_edge(0, 1);
    CHECK(outgoing_derivative(net, e, 0) == doctest::Approx(-1.5).epsilon(1e-13));
    CHECK(outgoing_derivative(net, e, 1) == doctest::Approx(-1.5).epsilon(1e-13));
    CHECK_THROWS_AS(outgoing_derivative(net, e, 3), Error);
}

TEST_CASE("positive_part_moment basics") {
    CHECK(positive_part_moment(1, 0, 1, 0, 1, 1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(positive_part_moment(1, -1, 1, 0, 1, 2) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(positive_part_moment(1, 0, 2, 0, 1, 1) == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(positive_part_moment(0, -1, 2, 1, 1, 5) == 0.0);
    CHECK(positive_part_moment(1, 1, 1, 0, 1, 0) == 0.0);
    CHECK_THROWS_AS(positive_part_moment(1, 0, -1, 0, 1, 1), Error);
    CHECK_THROWS_AS(positive_part_moment(1, 0, 1, 0, 1, -2), Error);
}

TEST_CASE("positive_part_moment agrees with quadrature") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        double slope = 2 * uni(rng);
        double intercept = 1.5 * uni(rng);
        double r = (k % 4 == 0) ? 0.0 : 0.3 + 1.7 * std::abs(uni(rng));
        double vs = uni(rng), vi = uni(rng);
        double c = 0.2 + 1.8 * std::abs(uni(rng));
        double closed = positive_part_moment(slope, intercept, r, vs, vi, c);
        auto f = [&](double t) {
            double x = slope * t + intercept;
            return (x > 0 ? std::pow(x, r) : 0.0) * (vs * t + vi);
        };
        double quad;
        double tk = slope != 0 ? -intercept / slope : -1;
        if (tk > 0 && tk < c)
            quad = integrate_piece(f, 0, tk, false) + integrate_piece(f, tk, c, true);
        else
            quad = testutil::simpson(f, 0, c, 1e-13);
        CHECK(std::abs(closed - quad) <= 1e-9 * std::max(1.0, std::abs(closed)));
    }
}

TEST_CASE("positive_part_moment2 agrees with quadrature") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        double slope = 2 * uni(rng);
        double intercept = 1.5 * uni(rng);
        double r = 0.2 + 1.5 * std::abs(uni(rng));
        double w2 = uni(rng), w1 = uni(rng), w0 = uni(rng);
        double c = 0.2 + 1.8 * std::abs(uni(rng));
        double closed = positive_part_moment2(slope, intercept, r, w2, w1, w0, c);
        auto f = [&](double t) {
            double x = slope * t + intercept;
            return (x > 0 ? std::pow(x, r) : 0.0) * (w2 * t * t + w1 * t + w0);
        };
        double quad;
        double tk = slope != 0 ? -intercept / slope : -1;
        if (tk > 0 && tk < c)
            quad = integrate_piece(f, 0, tk, false) + integrate_piece(f, tk, c, true);
        else
            quad = testutil::simpson(f, 0, c, 1e-13);
        CHECK(std::abs(closed - quad) <= 1e-9 * std::max(1.0, std::abs(closed)));
    }
}

TEST_CASE("near-constant arguments stay accurate") {
    // Tiny relative slope, where naive antiderivative differences cancel badly.
    for (double slope : {1e-6, -1e-6, 1e-9, 0.0}) {
        double closed = positive_part_moment(slope, 1.0, 1.5, 0.0, 1.0, 2.0);
        auto f = [&](double t) { return std::pow(slope * t + 1.0, 1.5); };
        double quad = testutil::simpson(f, 0, 2.0, 1e-14);
        CHECK(std::abs(closed - quad) <= 1e-11 * std::abs(quad));

        double closed2 = positive_part_moment2(slope, 3.0, 2.0, 0.4, -0.2, 1.0, 1.0);
        auto g = [&](double t) {
            return std::pow(slope * t + 3.0, 2.0) * (0.4 * t * t - 0.2 * t + 1.0);
        };
        double quad2 = testutil::simpson(g, 0, 1.0, 1e-14);
        CHECK(std::abs(closed2 - quad2) <= 1e-11 * std::abs(quad2));
    }
}
