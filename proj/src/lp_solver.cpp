#include "minnet/lp_solver.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include <Eigen/Dense>

#include "minnet/basis.hpp"

namespace minnet {

namespace {

struct Contribution {
    int window;
    double lambda;
    bool from_lo;
};

// For every edge, the basic networks supported on it.
std::vector<std::vector<Contribution>> support_table(const BasicCurveNetworks& basics,
                                                     const Triangulation& tri) {
    std::vector<std::vector<Contribution>> table(tri.n_edges());
    for (int w = 0; w < basics.count(); ++w) {
        const BasicWindow& win = basics.windows[w];
        for (int r = 0; r < 3; ++r)
            table[win.edge_indices[r]].push_back({w, win.lambda[r], win.from_lo[r]});
    }
    return table;
}

struct LinearWeight {
    double vs, vi; // value vs*t + vi in the canonical edge parametrization
};

LinearWeight basis_weight(const Contribution& c, double len) {
    if (c.from_lo)
        return {-c.lambda / len, c.lambda};
    return {c.lambda / len, 0.0};
}

// Endpoint values of h = sum alpha B on one edge.
void edge_endpoints(const std::vector<Contribution>& contribs, const Eigen::VectorXd& alpha,
                    double& mu_lo, double& mu_hi) {
    mu_lo = mu_hi = 0;
    for (const Contribution& c : contribs) {
        if (c.from_lo)
            mu_lo += c.lambda * alpha[c.window];
        else
            mu_hi += c.lambda * alpha[c.window];
    }
}

Eigen::VectorXd residual_vec(const std::vector<std::vector<Contribution>>& table,
                             const Triangulation& tri, const BasicCurveNetworks& basics,
                             const Eigen::VectorXd& alpha, double q) {
    Eigen::VectorXd g(basics.count());
    for (int w = 0; w < basics.count(); ++w)
        g[w] = -basics.windows[w].d;
    for (int e = 0; e < tri.n_edges(); ++e) {
        if (table[e].empty())
            continue;
        double mu_lo, mu_hi;
        edge_endpoints(table[e], alpha, mu_lo, mu_hi);
        if (mu_lo <= 0 && mu_hi <= 0)
            continue;
        const double c = tri.edges[e].length;
        const double slope = (mu_hi - mu_lo) / c;
        for (const Contribution& ct : table[e]) {
            LinearWeight lw = basis_weight(ct, c);
            g[ct.window] += positive_part_moment(slope, mu_lo, q - 1.0, lw.vs, lw.vi, c);
        }
    }
    return g;
}

// Convex objective whose gradient is the residual: (1/q) int h_+^q - alpha.d
double merit(const std::vector<std::vector<Contribution>>& table, const Triangulation& tri,
             const BasicCurveNetworks& basics, const Eigen::VectorXd& alpha, double q) {
    double val = 0;
    for (int w = 0; w < basics.count(); ++w)
        val -= alpha[w] * basics.windows[w].d;
    for (int e = 0; e < tri.n_edges(); ++e) {
        if (table[e].empty())
            continue;
        double mu_lo, mu_hi;
        edge_endpoints(table[e], alpha, mu_lo, mu_hi);
        if (mu_lo <= 0 && mu_hi <= 0)
            continue;
        const double c = tri.edges[e].length;
        val += positive_part_moment((mu_hi - mu_lo) / c, mu_lo, q, 0.0, 1.0, c) / q;
    }
    return val;
}

Eigen::MatrixXd jacobian(const std::vector<std::vector<Contribution>>& table,
                         const Triangulation& tri, const BasicCurveNetworks& basics,
                         const Eigen::VectorXd& alpha, double q) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(basics.count(), basics.count());
    for (int e = 0; e < tri.n_edges(); ++e) {
        if (table[e].empty())
            continue;
        double mu_lo, mu_hi;
        edge_endpoints(table[e], alpha, mu_lo, mu_hi);
        if (mu_lo <= 0 && mu_hi <= 0)
            continue;
        const double c = tri.edges[e].length;
        const double slope = (mu_hi - mu_lo) / c;
        const auto& cs = table[e];
        for (size_t i = 0; i < cs.size(); ++i) {
            LinearWeight a = basis_weight(cs[i], c);
            for (size_t j = i; j < cs.size(); ++j) {
                LinearWeight b = basis_weight(cs[j], c);
                double w2 = a.vs * b.vs;
                double w1 = a.vs * b.vi + a.vi * b.vs;
                double w0 = a.vi * b.vi;
                double val =
                    (q - 1.0) * positive_part_moment2(slope, mu_lo, q - 2.0, w2, w1, w0, c);
                J(cs[i].window, cs[j].window) += val;
                if (cs[i].window != cs[j].window)
                    J(cs[j].window, cs[i].window) += val;
            }
        }
    }
    return J;
}

// Gram warm start: solve int (sum alpha B) B = d without the positive part.
Eigen::VectorXd gram_start(const std::vector<std::vector<Contribution>>& table,
                           const Triangulation& tri, const BasicCurveNetworks& basics) {
    const int n = basics.count();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd d(n);
    for (int w = 0; w < n; ++w)
        d[w] = basics.windows[w].d;
    for (int e = 0; e < tri.n_edges(); ++e) {
        const double c = tri.edges[e].length;
        const auto& cs = table[e];
        for (size_t i = 0; i < cs.size(); ++i) {
            LinearWeight a = basis_weight(cs[i], c);
            for (size_t j = i; j < cs.size(); ++j) {
                LinearWeight b = basis_weight(cs[j], c);
                double w2 = a.vs * b.vs;
                double w1 = a.vs * b.vi + a.vi * b.vs;
                double w0 = a.vi * b.vi;
                double val = w2 * c * c * c / 3.0 + w1 * c * c / 2.0 + w0 * c;
                M(cs[i].window, cs[j].window) += val;
                if (cs[i].window != cs[j].window)
                    M(cs[j].window, cs[i].window) += val;
            }
        }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success)
        return Eigen::VectorXd::Zero(n);
    Eigen::VectorXd a0 = ldlt.solve(d);
    if (!a0.allFinite())
        return Eigen::VectorXd::Zero(n);
    return a0;
}

} // namespace

std::vector<double> newton_solve(const BasicCurveNetworks& basics, const Triangulation& tri,
                                 double p, const NewtonOptions& opts, int* iterations,
                                 double* final_residual) {
    if (!(p > 1.0) || std::isinf(p))
        throw InvalidInput("p must lie in (1, inf)");
    const int n = basics.count();
    if (iterations)
        *iterations = 0;
    if (final_residual)
        *final_residual = 0;
    if (n == 0)
        return {};

    const double q = p / (p - 1.0);
    const auto table = support_table(basics, tri);

    double scale = 1.0;
    for (const BasicWindow& w : basics.windows)
        scale = std::max(scale, std::abs(w.d));

    Eigen::VectorXd a;
    if (opts.initial_alpha) {
        if (static_cast<int>(opts.initial_alpha->size()) != n)
            throw InvalidInput("initial_alpha size mismatch");
        a = Eigen::Map<const Eigen::VectorXd>(opts.initial_alpha->data(), n);
    } else {
        a = gram_start(table, tri, basics);
    }

    double damping = 0;
    double res = std::numeric_limits<double>::infinity();
    double best_res = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_a = a;
    int stalled = 0;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        Eigen::VectorXd g = residual_vec(table, tri, basics, a, q);
        res = g.lpNorm<Eigen::Infinity>();
        if (iterations)
            *iterations = iter;
        if (final_residual)
            *final_residual = res;
        if (res <= opts.tol * scale)
            return std::vector<double>(a.data(), a.data() + n);
        if (res < 0.9 * best_res)
            stalled = 0;
        else
            ++stalled;
        if (res < best_res) {
            best_res = res;
            best_a = a;
        }
        // A solution sitting exactly on a positive-part kink bounces the damped
        // iteration at its roundoff floor; accept the floor when it is close.
        if (stalled >= 15 && best_res <= 1e3 * opts.tol * scale) {
            if (final_residual)
                *final_residual = best_res;
            return std::vector<double>(best_a.data(), best_a.data() + n);
        }

        Eigen::MatrixXd J = jacobian(table, tri, basics, a, q);
        double dmax = J.diagonal().cwiseAbs().maxCoeff();
        double diag_scale = dmax > 0 ? dmax : 1.0;
        double ridge = std::max(damping, 1e-12 * diag_scale);

        Eigen::VectorXd step;
        double slope = 0;
        bool have_dir = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd Jr = J;
            Jr.diagonal().array() += ridge;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Jr);
            if (ldlt.info() == Eigen::Success) {
                step = ldlt.solve(-g);
                Eigen::VectorXd refined = step + ldlt.solve(-g - Jr * step);
                if (refined.allFinite() &&
                    (Jr * refined + g).norm() < (Jr * step + g).norm())
                    step = refined;
                slope = g.dot(step);
                if (step.allFinite() && slope < 0) {
                    have_dir = true;
                    break;
                }
            }
            ridge = std::max(ridge * 100.0, 1e-10 * diag_scale);
        }
        if (!have_dir)
            throw SingularJacobian();

        const double f0 = merit(table, tri, basics, a, q);
        double s = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            double f1 = merit(table, tri, basics, a + s * step, q);
            if (std::isfinite(f1) && f1 <= f0 + 1e-4 * s * slope) {
                a += s * step;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (accepted) {
            damping = ridge * 0.25;
        } else {
            damping = std::max(ridge * 100.0, 1e-8 * diag_scale);
            if (damping > 1e20 * diag_scale)
                throw MaxIterationsExceeded(best_res);
        }
    }
    throw MaxIterationsExceeded(best_res);
}

LpSolution solve_lp(const ScatteredData& data, const Triangulation& tri, double p,
                    const NewtonOptions& opts) {
    if (!(p > 1.0) || std::isinf(p) || std::isnan(p))
        throw InvalidInput("p must lie in (1, inf)");
    ConvexityReport conv = check_convexity(data, tri);
    if (!conv.is_convex)
        throw NonConvexData();
    BasicCurveNetworks basics = build_basic_networks(data, tri);

    std::vector<double> rungs;
    if (p > 8.0)
        for (double s = 2.0; s < p; s *= 2.0)
            rungs.push_back(s);
    rungs.push_back(p);

    LpSolution sol;
    sol.p = p;
    const auto warm_table = support_table(basics, tri);

    auto peak = [&](const std::vector<double>& al) {
        Eigen::Map<const Eigen::VectorXd> av(al.data(), al.size());
        double H = 0;
        for (int e = 0; e < tri.n_edges(); ++e) {
            if (warm_table[e].empty())
                continue;
            double mu_lo, mu_hi;
            edge_endpoints(warm_table[e], av, mu_lo, mu_hi);
            H = std::max({H, mu_lo, mu_hi});
        }
        return H;
    };

    // h = sum alpha B scales like F^(p-1), and the components drift apart at
    // rate (F_i/F_j)^(p-1); a componentwise power map with a global rescale
    // keeps the warm start near the next rung's solution.
    auto rescale = [&](std::vector<double> al, double p1, double p2) {
        const double ratio = (p2 - 1.0) / (p1 - 1.0);
        const double H1 = peak(al);
        if (H1 <= 0)
            return al;
        std::vector<double> out(al.size());
        for (size_t i = 0; i < al.size(); ++i)
            out[i] = al[i] == 0 ? 0.0
                                : std::copysign(std::pow(std::abs(al[i]), ratio), al[i]);
        const double H2 = peak(out);
        const double target = std::pow(H1, ratio);
        if (H2 > 0 && std::isfinite(target)) {
            const double s = target / H2;
            if (std::isfinite(s) && s > 0) {
                for (double& v : out)
                    v *= s;
                return out;
            }
        }
        const double grow = std::pow(H1, ratio - 1.0);
        if (std::isfinite(grow) && grow > 0)
            for (double& v : al)
                v *= grow;
        return al;
    };

    auto run_rung = [&](double rung, const std::vector<double>* init) {
        NewtonOptions cur = opts;
        if (rung > 8.0)
            cur.max_iter = std::max(cur.max_iter, 2000);
        if (init)
            cur.initial_alpha = *init;
        int it = 0;
        double res = 0;
        try {
            sol.alpha = newton_solve(basics, tri, rung, cur, &it, &res);
        } catch (const MaxIterationsExceeded& ex) {
            if (getenv("MINNET_TRACE_LP"))
                fprintf(stderr, "rung %.4f FAIL res=%.3e\n", rung, ex.residual);
            throw;
        }
        if (getenv("MINNET_TRACE_LP"))
            fprintf(stderr, "rung %.4f ok it=%d res=%.3e\n", rung, it, res);
        sol.iterations += it;
        sol.final_residual = res;
    };

    // Climb p1 -> p2 from the solved alpha at p1, bisecting the rung
    // geometrically when Newton cannot cross it in one hop.
    std::function<void(double, double, int)> climb = [&](double p1, double p2, int depth) {
        std::vector<double> warm = rescale(sol.alpha, p1, p2);
        try {
            run_rung(p2, &warm);
        } catch (const MaxIterationsExceeded&) {
            if (depth <= 0)
                throw;
            double mid = std::sqrt(p1 * p2);
            climb(p1, mid, depth - 1);
            climb(mid, p2, depth - 1);
        }
    };

    run_rung(rungs[0], opts.initial_alpha ? &*opts.initial_alpha : nullptr);
    for (size_t k = 0; k + 1 < rungs.size(); ++k)
        climb(rungs[k], rungs[k + 1], 6);

    const double q = p / (p - 1.0);
    const auto table = support_table(basics, tri);
    Eigen::Map<const Eigen::VectorXd> av(sol.alpha.data(), sol.alpha.size());
    std::vector<SecondDerivModel> models(tri.n_edges(), ZeroModel{});
    for (int e = 0; e < tri.n_edges(); ++e) {
        if (table[e].empty())
            continue;
        double mu_lo, mu_hi;
        edge_endpoints(table[e], av, mu_lo, mu_hi);
        if (mu_lo <= 0 && mu_hi <= 0)
            continue;
        const double c = tri.edges[e].length;
        models[e] = PositivePartPower{(mu_hi - mu_lo) / c, mu_lo, q - 1.0};
    }
    sol.network = reconstruct(models, data, tri);
    sol.achieved_norm = norm_second_deriv(sol.network, p);
    return sol;
}

} // namespace minnet
