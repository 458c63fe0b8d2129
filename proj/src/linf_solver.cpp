#include "minnet/linf_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "minnet/basis.hpp"

namespace minnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDegenerate = 1e-9; // relative slack accepting an edge as second-derivative-free
constexpr double kSnapZero = 1e-8;   // build_linf_network zero-model snap, relative

double edge_scale(double a, double b, double c, double A) {
    return std::max({std::abs(a), std::abs(b), std::abs(A) / c, 1e-300});
}

struct EdgePhi {
    double value = 0;        // +inf when infeasible
    bool degenerate = false; // a = b = A/c up to tolerance, value 0
    double d1 = 0, d2 = 0;   // A - a*c and b*c - A
};

// Tolerant evaluation of phi for the iteration: degenerate edges count as zero,
// anything outside the (closed) feasible region evaluates to +inf.
EdgePhi soft_phi(double a, double b, double c, double A, double extra_abs_tol) {
    EdgePhi r;
    const double s = edge_scale(a, b, c, A);
    const double tol = std::max(kDegenerate * s, extra_abs_tol);
    const double db = b - a;
    r.d1 = A - a * c;
    r.d2 = b * c - A;
    if (db <= tol) {
        if (db >= -tol && std::abs(r.d1) <= tol * c && std::abs(r.d2) <= tol * c) {
            r.degenerate = true;
            r.value = 0;
        } else {
            r.value = kInf;
        }
        return r;
    }
    if (r.d1 <= 0 || r.d2 <= 0) {
        r.value = kInf;
        return r;
    }
    r.value = db * db / (2.0 * std::min(r.d1, r.d2));
    return r;
}

struct Contribution {
    int window;
    double lambda;
    bool from_lo;
};

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

} // namespace

double phi(double a, double b, double c, double A) {
    if (!(c > 0) || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(A))
        throw InvalidInput("phi: need finite a, b, A and c > 0");
    if (a > b)
        throw Infeasible("phi: endpoint derivatives must be nondecreasing");
    if (a == b || b - a <= 4e-16 * std::max(std::abs(a), std::abs(b))) {
        if (std::abs(A - 0.5 * (a + b) * c) <= 4e-16 * std::max(std::abs(A), std::abs(a * c)))
            return 0;
        throw Infeasible("phi: constant profile cannot match the integral");
    }
    const double d1 = A - a * c, d2 = b * c - A;
    if (d1 <= 0 || d2 <= 0)
        throw Infeasible("phi: integral outside (a*c, b*c)");
    const double db = b - a;
    return std::max(db * db / (2.0 * d1), db * db / (2.0 * d2));
}

UnivariateMinProfile univariate_min(double a, double b, double c, double A) {
    UnivariateMinProfile r;
    r.a = a;
    r.b = b;
    r.c = c;
    r.A = A;
    if (!(c > 0) || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(A))
        throw InvalidInput("univariate_min: need finite a, b, A and c > 0");
    if (a > b)
        throw Infeasible("univariate_min: endpoint derivatives must be nondecreasing");
    if (a == b || b - a <= 4e-16 * std::max(std::abs(a), std::abs(b))) {
        if (std::abs(A - 0.5 * (a + b) * c) <= 4e-16 * std::max(std::abs(A), std::abs(a * c))) {
            r.flat_side = UnivariateMinProfile::FlatSide::none;
            return r;
        }
        throw Infeasible("univariate_min: constant profile cannot match the integral");
    }
    const double d1 = A - a * c, d2 = b * c - A;
    if (d1 <= 0 || d2 <= 0)
        throw Infeasible("univariate_min: integral outside (a*c, b*c)");
    const double db = b - a;
    if (2.0 * A <= (a + b) * c) {
        r.flat_side = UnivariateMinProfile::FlatSide::left;
        r.knot = ((a + b) * c - 2.0 * A) / db;
        r.norm = db * db / (2.0 * d1);
    } else {
        r.flat_side = UnivariateMinProfile::FlatSide::right;
        r.knot = 2.0 * d2 / db;
        r.norm = db * db / (2.0 * d2);
    }
    r.knot = std::min(std::max(r.knot, 0.0), c);
    return r;
}

CurveNetwork build_linf_network(const DerivativeEndpoints& endpoints, const ScatteredData& data,
                                const Triangulation& tri) {
    const int ne = tri.n_edges();
    if (static_cast<int>(endpoints.a.size()) != ne || static_cast<int>(endpoints.b.size()) != ne)
        throw InvalidInput("build_linf_network: endpoint vectors must match the edge count");
    std::vector<SecondDerivModel> models(ne, ZeroModel{});
    for (int e = 0; e < ne; ++e) {
        const double c = tri.edges[e].length;
        const double A = data.points[tri.edges[e].hi].z - data.points[tri.edges[e].lo].z;
        const double a = endpoints.a[e], b = endpoints.b[e];
        const double s = edge_scale(a, b, c, A);
        if (std::abs(b - a) <= kSnapZero * s &&
            std::abs(A - 0.5 * (a + b) * c) <= kSnapZero * s * c)
            continue;
        UnivariateMinProfile prof = univariate_min(a, b, c, A);
        if (prof.flat_side == UnivariateMinProfile::FlatSide::left)
            models[e] = PiecewiseConstant{prof.knot, 0.0, prof.norm};
        else if (prof.flat_side == UnivariateMinProfile::FlatSide::right)
            models[e] = PiecewiseConstant{prof.knot, prof.norm, 0.0};
    }
    return reconstruct(models, data, tri);
}

namespace {

struct MinimaxProblem {
    const Triangulation* tri = nullptr;
    std::vector<double> A, c;            // per edge
    std::vector<char> active;            // edge supported by some window
    std::vector<int> coord_of_col;       // full column -> active-coordinate index, -1 if pinned
    std::vector<int> col_of_coord;       // active coordinate -> full column
    std::vector<double> deg_tol;         // per edge absolute degeneracy slack
    Eigen::MatrixXd Z;                   // null-space basis of the smoothness matrix
    Eigen::VectorXd pinned_x;            // full 2E vector with pinned values, 0 on active coords

    Eigen::VectorXd lift(const Eigen::VectorXd& y) const {
        Eigen::VectorXd x = pinned_x;
        if (Z.cols() > 0) {
            Eigen::VectorXd xa = Z * y;
            for (int i = 0; i < static_cast<int>(col_of_coord.size()); ++i)
                x[col_of_coord[i]] = xa[i];
        } else {
            for (int i = 0; i < static_cast<int>(col_of_coord.size()); ++i)
                x[col_of_coord[i]] = 0;
        }
        return x;
    }

    EdgePhi edge_phi(const Eigen::VectorXd& x, int e) const {
        return soft_phi(x[2 * e], x[2 * e + 1], c[e], A[e], deg_tol[e]);
    }

    double objective(const Eigen::VectorXd& x, int* argmax = nullptr) const {
        double best = 0;
        if (argmax)
            *argmax = -1;
        for (int e = 0; e < tri->n_edges(); ++e) {
            if (!active[e])
                continue;
            EdgePhi p = edge_phi(x, e);
            if (p.value > best) {
                best = p.value;
                if (argmax)
                    *argmax = e;
            }
            if (std::isinf(best))
                return best;
        }
        return best;
    }
};

// Gradient of the active branch of phi_e with respect to (a_e, b_e).
void phi_gradient(double a, double b, double c, double A, bool left_branch, double grad[2]) {
    const double db = b - a;
    if (left_branch) {
        const double v = A - a * c;
        grad[0] = -db / v + c * db * db / (2.0 * v * v);
        grad[1] = db / v;
    } else {
        const double v = b * c - A;
        grad[0] = -db / v;
        grad[1] = db / v - c * db * db / (2.0 * v * v);
    }
}

// Min-norm point of the convex hull of a small set of vectors, by projected
// gradient on the simplex weights.
Eigen::VectorXd min_norm_hull(const std::vector<Eigen::VectorXd>& gs) {
    const int k = static_cast<int>(gs.size());
    if (k == 1)
        return gs[0];
    const int n = static_cast<int>(gs[0].size());
    Eigen::MatrixXd G(n, k);
    for (int i = 0; i < k; ++i)
        G.col(i) = gs[i];
    Eigen::MatrixXd Q = G.transpose() * G;
    Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / k);
    const double lip = std::max(Q.trace(), 1e-300);
    for (int it = 0; it < 120; ++it) {
        Eigen::VectorXd v = w - (Q * w) / lip;
        Eigen::VectorXd u = v;
        std::sort(u.data(), u.data() + k, std::greater<double>());
        double css = 0, tau = 0;
        for (int i = 0; i < k; ++i) {
            css += u[i];
            double t = (css - 1.0) / (i + 1);
            if (u[i] - t > 0)
                tau = t;
        }
        for (int i = 0; i < k; ++i)
            w[i] = std::max(v[i] - tau, 0.0);
    }
    return G * w;
}

struct ActiveConstraint {
    int edge;
    bool left_branch;
};

// Square KKT system for min_y max over the fixed active branch set, solved by
// Levenberg-Marquardt on the residual. Unknowns: y, weights w, level C.
struct PolishResult {
    bool ok = false;
    Eigen::VectorXd y;
    double value = 0;
    int iterations = 0;
};

PolishResult kkt_polish(const MinimaxProblem& prob, const Eigen::VectorXd& y0, double C0,
                        std::vector<ActiveConstraint> cons) {
    PolishResult out;
    const int k = static_cast<int>(prob.Z.cols());
    for (int round = 0; round < 4; ++round) {
        const int m = static_cast<int>(cons.size());
        if (m == 0 || k == 0)
            return out;
        const int dim = k + m + 1;
        Eigen::VectorXd v(dim);
        v.head(k) = y0;
        v.segment(k, m).setConstant(1.0 / m);
        v[dim - 1] = C0;

        // y-space gradient rows of each constraint's edge coordinates
        auto rows_for_edge = [&](int e, Eigen::VectorXd& za, Eigen::VectorXd& zb) {
            int la = prob.coord_of_col[2 * e], lb = prob.coord_of_col[2 * e + 1];
            za = la >= 0 ? Eigen::VectorXd(prob.Z.row(la).transpose())
                         : Eigen::VectorXd(Eigen::VectorXd::Zero(k));
            zb = lb >= 0 ? Eigen::VectorXd(prob.Z.row(lb).transpose())
                         : Eigen::VectorXd(Eigen::VectorXd::Zero(k));
        };

        auto assemble = [&](const Eigen::VectorXd& vv, Eigen::VectorXd& F, Eigen::MatrixXd* J) {
            Eigen::VectorXd y = vv.head(k);
            Eigen::VectorXd w = vv.segment(k, m);
            double C = vv[dim - 1];
            Eigen::VectorXd x = prob.lift(y);
            F.setZero(dim);
            if (J)
                J->setZero(dim, dim);
            F[dim - 1] = w.sum() - 1.0;
            if (J)
                J->row(dim - 1).segment(k, m).setOnes();
            for (int i = 0; i < m; ++i) {
                const int e = cons[i].edge;
                const double a = x[2 * e], b = x[2 * e + 1];
                const double c = prob.c[e], A = prob.A[e];
                const double db = b - a;
                const double den = cons[i].left_branch ? A - a * c : b * c - A;
                if (den <= 0)
                    return false;
                const double ph = db * db / (2.0 * den);
                double g2[2];
                phi_gradient(a, b, c, A, cons[i].left_branch, g2);
                Eigen::VectorXd za, zb;
                rows_for_edge(e, za, zb);
                Eigen::VectorXd gy = g2[0] * za + g2[1] * zb;
                F.head(k) += w[i] * gy;
                F[k + i] = ph - C;
                if (J) {
                    // Hessian of u^2/(2v) is r r^T / v with r = grad u - (u/v) grad v
                    double r2[2];
                    if (cons[i].left_branch) {
                        r2[0] = -1.0 + c * db / den;
                        r2[1] = 1.0;
                    } else {
                        r2[0] = -1.0;
                        r2[1] = 1.0 - c * db / den;
                    }
                    Eigen::VectorXd ry = r2[0] * za + r2[1] * zb;
                    J->topLeftCorner(k, k) += (w[i] / den) * (ry * ry.transpose());
                    J->block(0, k + i, k, 1) = gy;
                    J->block(k + i, 0, 1, k) = gy.transpose();
                    (*J)(k + i, dim - 1) = -1.0;
                }
            }
            return true;
        };

        Eigen::VectorXd F;
        Eigen::MatrixXd J;
        if (!assemble(v, F, &J))
            return out;
        double lm = 1e-12;
        bool converged = false;
        for (int iter = 0; iter < 60; ++iter) {
            ++out.iterations;
            if (F.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, C0)) {
                converged = true;
                break;
            }
            Eigen::MatrixXd JtJ = J.transpose() * J;
            Eigen::VectorXd JtF = J.transpose() * F;
            bool stepped = false;
            for (int attempt = 0; attempt < 10; ++attempt) {
                Eigen::MatrixXd Jr = JtJ;
                Jr.diagonal().array() += lm * (1.0 + JtJ.diagonal().maxCoeff());
                Eigen::VectorXd dv = Jr.ldlt().solve(-JtF);
                if (!dv.allFinite()) {
                    lm *= 10;
                    continue;
                }
                Eigen::VectorXd vn = v + dv;
                Eigen::VectorXd Fn;
                Eigen::MatrixXd Jn;
                if (assemble(vn, Fn, &Jn) && Fn.norm() < F.norm()) {
                    v = vn;
                    F = Fn;
                    J = Jn;
                    lm = std::max(lm * 0.3, 1e-14);
                    stepped = true;
                    break;
                }
                lm *= 10;
            }
            if (!stepped)
                break;
        }
        if (!converged)
            return out;
        Eigen::VectorXd w = v.segment(k, m);
        double wmin = w.minCoeff();
        if (wmin >= -1e-6) {
            out.ok = true;
            out.y = v.head(k);
            out.value = prob.objective(prob.lift(out.y));
            return out;
        }
        std::vector<ActiveConstraint> kept;
        for (int i = 0; i < m; ++i)
            if (w[i] > 1e-10)
                kept.push_back(cons[i]);
        if (kept.size() == cons.size() || kept.empty())
            return out;
        cons = std::move(kept);
    }
    return out;
}

} // namespace

LinfSolution minimax_solve(const ScatteredData& data, const Triangulation& tri,
                           const BasicCurveNetworks& basics, const MinimaxOptions& opts) {
    ConvexityReport conv = check_convexity(data, tri);
    if (!conv.is_convex)
        throw NonConvexData();

    const int ne = tri.n_edges();
    MinimaxProblem prob;
    prob.tri = &tri;
    prob.A.resize(ne);
    prob.c.resize(ne);
    prob.active.assign(ne, 0);
    prob.deg_tol.assign(ne, 0.0);
    for (int e = 0; e < ne; ++e) {
        prob.c[e] = tri.edges[e].length;
        prob.A[e] = data.points[tri.edges[e].hi].z - data.points[tri.edges[e].lo].z;
    }
    auto table = support_table(basics, tri);
    for (int e = 0; e < ne; ++e)
        prob.active[e] = !table[e].empty();

    prob.coord_of_col.assign(2 * ne, -1);
    prob.pinned_x.setZero(2 * ne);
    for (int e = 0; e < ne; ++e) {
        if (prob.active[e]) {
            prob.coord_of_col[2 * e] = static_cast<int>(prob.col_of_coord.size());
            prob.col_of_coord.push_back(2 * e);
            prob.coord_of_col[2 * e + 1] = static_cast<int>(prob.col_of_coord.size());
            prob.col_of_coord.push_back(2 * e + 1);
        } else {
            prob.pinned_x[2 * e] = prob.pinned_x[2 * e + 1] = prob.A[e] / prob.c[e];
        }
    }
    const int na = static_cast<int>(prob.col_of_coord.size());

    // Smoothness matrix restricted to active coordinates, and its null space.
    const int m = basics.count();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, na);
    for (int w = 0; w < m; ++w) {
        const BasicWindow& win = basics.windows[w];
        for (int r = 0; r < 3; ++r) {
            const int e = win.edge_indices[r];
            if (win.from_lo[r])
                S(w, prob.coord_of_col[2 * e]) += win.lambda[r];
            else
                S(w, prob.coord_of_col[2 * e + 1]) -= win.lambda[r];
        }
    }
    int k = 0;
    if (na > 0) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        double thresh =
            sv.size() > 0 ? sv[0] * 1e-12 * std::max(m, na) : 0.0;
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv[i] > thresh)
                ++rank;
        k = na - rank;
        prob.Z = svd.matrixV().rightCols(k);
    } else {
        prob.Z.resize(0, 0);
    }

    // Warm start from the p = 2 network (or the caller's endpoints).
    Eigen::VectorXd xw(na);
    if (opts.initial) {
        const DerivativeEndpoints& init = *opts.initial;
        if (static_cast<int>(init.a.size()) != ne || static_cast<int>(init.b.size()) != ne)
            throw InvalidInput("minimax_solve: initial endpoints size mismatch");
        for (int i = 0; i < na; ++i) {
            int col = prob.col_of_coord[i];
            xw[i] = (col % 2 == 0) ? init.a[col / 2] : init.b[col / 2];
        }
    } else {
        LpSolution warm = solve_lp(data, tri, 2.0);
        for (int i = 0; i < na; ++i) {
            int col = prob.col_of_coord[i];
            int e = col / 2;
            xw[i] = (col % 2 == 0)
                        ? warm.network.edges[e].fprime0
                        : evaluate(warm.network, e, warm.network.edges[e].length, 1);
        }
    }

    // Edges starting on the feasibility boundary put the barrier wall right on
    // the iterate; nudge them into the interior by 1e-6 of the endpoint span.
    for (int i = 0; i + 1 < na; i += 2) {
        const int e = prob.col_of_coord[i] / 2;
        const double a = xw[i], b = xw[i + 1];
        const double span = b - a;
        const double s = edge_scale(a, b, prob.c[e], prob.A[e]);
        if (span <= kDegenerate * s)
            continue;
        if (prob.A[e] - a * prob.c[e] <= kDegenerate * s * prob.c[e])
            xw[i] = a - 1e-6 * span;
        if (b * prob.c[e] - prob.A[e] <= kDegenerate * s * prob.c[e])
            xw[i + 1] = b + 1e-6 * span;
    }

    Eigen::VectorXd y = k > 0 ? Eigen::VectorXd(prob.Z.transpose() * xw)
                              : Eigen::VectorXd(Eigen::VectorXd::Zero(0));
    if (k > 0) {
        Eigen::VectorXd xp = prob.Z * y;
        for (int e = 0; e < ne; ++e) {
            if (!prob.active[e])
                continue;
            double da = std::abs(xp[prob.coord_of_col[2 * e]] - xw[prob.coord_of_col[2 * e]]);
            double db = std::abs(xp[prob.coord_of_col[2 * e + 1]] - xw[prob.coord_of_col[2 * e + 1]]);
            prob.deg_tol[e] = 4.0 * std::max(da, db);
        }
    }

    LinfSolution sol;
    int iters = 0;

    Eigen::VectorXd x = prob.lift(y);
    double f = prob.objective(x);
    if (std::isinf(f))
        throw Error("minimax_solve: could not construct a feasible starting network");

    double f_best = f;
    Eigen::VectorXd y_best = y;

    if (k > 0 && f_best > 0) {
        // Polyak level steps; the level gap delta halves after each window of
        // non-improving iterations and a round ends when it collapses.
        enum class RoundEnd { budget, collapsed, creep };
        bool creep_detect = true;
        auto subgradient_round = [&](double delta, int& spent) {
            int no_improve = 0;
            double gained = 0;
            while (spent < opts.max_iter) {
                ++spent;
                ++iters;
                if (getenv("MINNET_TRACE_MM") && spent % 5000 == 0)
                    fprintf(stderr, "mm spent=%d f=%.9f f_best=%.9f delta=%.3e ni=%d\n", spent,
                            f, f_best, delta, no_improve);
                int estar = -1;
                f = prob.objective(x, &estar);
                if (estar < 0)
                    return RoundEnd::collapsed;
                // Stepping along a single max-edge subgradient zigzags between
                // opposing walls of a narrow valley; the min-norm point of the
                // hull of the near-tied branch gradients descends along it.
                std::vector<Eigen::VectorXd> gs;
                const double theta = std::min(delta, 1e-3 * f);
                for (int e = 0; e < ne && static_cast<int>(gs.size()) < 8; ++e) {
                    if (!prob.active[e])
                        continue;
                    EdgePhi ep = prob.edge_phi(x, e);
                    if (ep.degenerate || std::isinf(ep.value) || ep.value < f - theta)
                        continue;
                    const double adb = x[2 * e + 1] - x[2 * e];
                    const double side[2] = {adb * adb / (2.0 * ep.d1),
                                            adb * adb / (2.0 * ep.d2)};
                    for (int sb = 0; sb < 2; ++sb) {
                        if (side[sb] < f - theta)
                            continue;
                        double g2[2];
                        phi_gradient(x[2 * e], x[2 * e + 1], prob.c[e], prob.A[e], sb == 0,
                                     g2);
                        int la = prob.coord_of_col[2 * e], lb = prob.coord_of_col[2 * e + 1];
                        gs.push_back(g2[0] * prob.Z.row(la).transpose() +
                                     g2[1] * prob.Z.row(lb).transpose());
                    }
                }
                if (gs.empty())
                    return RoundEnd::collapsed;
                Eigen::VectorXd gy = min_norm_hull(gs);
                double gn2 = gy.squaredNorm();
                if (gn2 <= 1e-300)
                    return RoundEnd::collapsed;
                double target = f_best - delta;
                double tau = (f - target) / gn2;
                Eigen::VectorXd yc;
                double fc = kInf;
                bool ok = false;
                for (int h = 0; h < 60; ++h) {
                    yc = y - tau * gy;
                    fc = prob.objective(prob.lift(yc));
                    if (std::isfinite(fc)) {
                        ok = true;
                        break;
                    }
                    tau *= 0.5;
                }
                if (!ok) {
                    y = y_best;
                    x = prob.lift(y);
                    delta *= 0.5;
                    if (delta <= 0.1 * opts.tol * f_best)
                        return RoundEnd::collapsed;
                    continue;
                }
                y = yc;
                x = prob.lift(y);
                f = fc;
                // Progress must be commensurate with the level gap; hair-thin
                // improvements would otherwise keep the window open forever.
                if (f < f_best - 0.1 * delta)
                    no_improve = 0;
                else
                    ++no_improve;
                if (f < f_best) {
                    gained += f_best - f;
                    f_best = f;
                    y_best = y;
                }
                if (f > f_best * 1.5) {
                    y = y_best;
                    x = prob.lift(y);
                    f = f_best;
                }
                if (fc <= target + 0.1 * delta) {
                    delta = std::min(delta * 1.5, 0.5 * f_best);
                    gained = 0;
                } else if (creep_detect && gained >= 5.0 * delta) {
                    // Steady crawl at a level too small to ever be reached:
                    // first-order steps are trapped in a narrow valley, so
                    // hand over to the second-order polish and resume after.
                    return RoundEnd::creep;
                } else if (no_improve >= opts.improvement_window) {
                    y = y_best;
                    x = prob.lift(y);
                    f = f_best;
                    no_improve = 0;
                    gained = 0;
                    delta *= 0.5;
                    if (delta <= 0.1 * opts.tol * f_best)
                        return RoundEnd::collapsed;
                }
                if (f_best <= 0)
                    return RoundEnd::collapsed;
            }
            return RoundEnd::budget;
        };

        auto polish_pass = [&]() {
            Eigen::VectorXd xb = prob.lift(y_best);
            for (double rel_window : {1e-2, 1e-3, 1e-4}) {
                std::vector<ActiveConstraint> cons;
                for (int e = 0; e < ne; ++e) {
                    if (!prob.active[e])
                        continue;
                    EdgePhi ep = prob.edge_phi(xb, e);
                    if (ep.degenerate || std::isinf(ep.value))
                        continue;
                    double adb = xb[2 * e + 1] - xb[2 * e];
                    double pl = adb * adb / (2.0 * ep.d1);
                    double pr = adb * adb / (2.0 * ep.d2);
                    if (pl >= (1.0 - rel_window) * f_best)
                        cons.push_back({e, true});
                    if (pr >= (1.0 - rel_window) * f_best)
                        cons.push_back({e, false});
                }
                PolishResult pr = kkt_polish(prob, y_best, f_best, cons);
                iters += pr.iterations;
                if (pr.ok && std::isfinite(pr.value) && pr.value < f_best) {
                    f_best = pr.value;
                    y_best = pr.y;
                }
            }
        };

        int spent = 0;
        int creep_polishes = 0;
        double fail_gap = 0;
        auto run_rounds = [&]() {
            bool resumed = false;
            for (int round = 0; round < 3 && f_best > 0; ++round) {
                double delta0 = (round == 0 && !resumed ? 0.1 : 1e-4) * f_best;
                RoundEnd end = subgradient_round(delta0, spent);
                if (end == RoundEnd::creep) {
                    if (opts.polish && creep_polishes < 20) {
                        ++creep_polishes;
                        polish_pass();
                    } else {
                        creep_detect = false;
                    }
                    y = y_best;
                    x = prob.lift(y);
                    f = f_best;
                    resumed = true;
                    --round;
                    continue;
                }
                if (end == RoundEnd::budget) {
                    fail_gap = delta0;
                    return false;
                }
                if (!opts.polish)
                    break;
                double before = f_best;
                polish_pass();
                if (f_best >= before * (1.0 - 1e-11))
                    break;
                y = y_best;
                x = prob.lift(y);
                f = f_best;
            }
            return true;
        };
        bool converged = run_rounds();

        // The p = 2 start can sit in a razor-thin corner of the domain; when
        // the high-p ladder endpoints beat the value found, or the first phase
        // ran out of budget, restart from them.
        if (f_best > 0) {
            try {
                LpSolution hi;
                bool have_hi = false;
                for (double ph : {64.0, 48.0, 32.0}) {
                    try {
                        hi = solve_lp(data, tri, ph);
                        have_hi = true;
                        break;
                    } catch (const MaxIterationsExceeded&) {
                    } catch (const SingularJacobian&) {
                    }
                }
                if (!have_hi)
                    throw MaxIterationsExceeded(0);
                spent = 0;
                creep_polishes = 0;
                creep_detect = true;
                Eigen::VectorXd xh(na);
                for (int i = 0; i < na; ++i) {
                    int col = prob.col_of_coord[i];
                    int e = col / 2;
                    xh[i] = (col % 2 == 0)
                                ? hi.network.edges[e].fprime0
                                : evaluate(hi.network, e, hi.network.edges[e].length, 1);
                }
                Eigen::VectorXd yh = prob.Z.transpose() * xh;
                Eigen::VectorXd xp = prob.Z * yh;
                for (int e = 0; e < ne; ++e) {
                    if (!prob.active[e])
                        continue;
                    double da = std::abs(xp[prob.coord_of_col[2 * e]] - xh[prob.coord_of_col[2 * e]]);
                    double db = std::abs(xp[prob.coord_of_col[2 * e + 1]] -
                                         xh[prob.coord_of_col[2 * e + 1]]);
                    prob.deg_tol[e] = std::max(prob.deg_tol[e], 4.0 * std::max(da, db));
                }
                double fh = prob.objective(prob.lift(yh));
                if (getenv("MINNET_TRACE_MM"))
                    fprintf(stderr, "mm restart fh=%.9f f_best=%.9f conv=%d\n", fh, f_best,
                            (int)converged);
                if (std::isfinite(fh) && (fh < f_best || (!converged && fh < 1.25 * f_best))) {
                    double snap_f = f_best;
                    Eigen::VectorXd snap_y = y_best;
                    y = yh;
                    x = prob.lift(y);
                    f = fh;
                    f_best = fh;
                    y_best = yh;
                    if (run_rounds())
                        converged = true;
                    if (snap_f < f_best) {
                        f_best = snap_f;
                        y_best = snap_y;
                    }
                }
            } catch (const Error& ex) {
                if (getenv("MINNET_TRACE_MM"))
                    fprintf(stderr, "mm restart aborted: %s\n", ex.what());
            }
        }
        if (!converged)
            throw NotConverged(f_best, fail_gap);
    }

    // Snap degenerate edges exactly and export the endpoint values.
    Eigen::VectorXd xb = prob.lift(y_best);
    sol.endpoints.a.resize(ne);
    sol.endpoints.b.resize(ne);
    sol.endpoints.A = prob.A;
    sol.endpoints.c = prob.c;
    for (int e = 0; e < ne; ++e) {
        double a = xb[2 * e], b = xb[2 * e + 1];
        if (prob.active[e]) {
            EdgePhi ep = prob.edge_phi(xb, e);
            if (ep.degenerate)
                a = b = prob.A[e] / prob.c[e];
        }
        sol.endpoints.a[e] = a;
        sol.endpoints.b[e] = b;
    }
    sol.network = build_linf_network(sol.endpoints, data, tri);
    sol.achieved_norm = norm_second_deriv(sol.network, kInf);
    sol.iterations = iters;
    sol.certificate = NotAttempted{};
    return sol;
}

namespace {

enum class Pattern { empty, full, rising, falling };

struct EdgePattern {
    Pattern kind = Pattern::empty;
    double knot = 0;    // position for rising/falling
    double plateau = 0; // nonzero second-derivative level
};

bool classify_edge(const EdgeFunction& f, EdgePattern& out) {
    if (std::holds_alternative<ZeroModel>(f.model)) {
        out.kind = Pattern::empty;
        return true;
    }
    if (!std::holds_alternative<PiecewiseConstant>(f.model))
        return false;
    const auto& pc = std::get<PiecewiseConstant>(f.model);
    const double c = f.length;
    const double eps = 1e-7 * c;
    if (pc.left == 0.0) {
        out.plateau = pc.right;
        if (pc.knot <= eps)
            out.kind = Pattern::full;
        else if (pc.knot >= c - eps)
            out.kind = Pattern::empty;
        else {
            out.kind = Pattern::rising;
            out.knot = pc.knot;
        }
        return true;
    }
    if (pc.right == 0.0) {
        out.plateau = pc.left;
        if (pc.knot >= c - eps)
            out.kind = Pattern::full;
        else if (pc.knot <= eps)
            out.kind = Pattern::empty;
        else {
            out.kind = Pattern::falling;
            out.knot = pc.knot;
        }
        return true;
    }
    return false;
}

// int over the pattern's positive region of the hat weight on one edge
double hat_integral(const EdgePattern& pat, double c, bool from_lo) {
    switch (pat.kind) {
    case Pattern::empty:
        return 0;
    case Pattern::full:
        return c / 2.0;
    case Pattern::rising: {
        const double xi = pat.knot;
        return from_lo ? (c - xi) * (c - xi) / (2.0 * c) : (c * c - xi * xi) / (2.0 * c);
    }
    case Pattern::falling: {
        const double xi = pat.knot;
        return from_lo ? xi * (2.0 * c - xi) / (2.0 * c) : xi * xi / (2.0 * c);
    }
    }
    return 0;
}

} // namespace

Certificate certificate_theorem3(const LinfSolution& sol, const ScatteredData& data,
                                 const Triangulation& tri, const BasicCurveNetworks& basics) {
    (void)data;
    const int ne = tri.n_edges();
    const int nw = basics.count();
    if (static_cast<int>(sol.network.edges.size()) != ne)
        throw InvalidInput("certificate: network does not match the triangulation");

    double dmax = 0, cmin = kInf;
    for (const BasicWindow& w : basics.windows)
        dmax = std::max(dmax, std::abs(w.d));
    for (const Edge& e : tri.edges)
        cmin = std::min(cmin, e.length);
    const double C = sol.achieved_norm;
    const double dtol = 1e-6 * std::max(1.0, dmax);

    if (C <= 1e-10 * std::max(dmax / cmin, 1e-300) || nw == 0) {
        if (dmax <= dtol)
            return Certified{0.0, std::vector<double>(nw, 0.0)};
        return NotRepresentable{};
    }

    // Classify every edge against the candidate's plateau level C.
    auto table = support_table(basics, tri);
    std::vector<EdgePattern> pats(ne);
    for (int e = 0; e < ne; ++e) {
        if (!classify_edge(sol.network.edges[e], pats[e]))
            return NotRepresentable{};
        if (pats[e].kind != Pattern::empty) {
            if (std::abs(pats[e].plateau - C) > 1e-6 * C)
                return NotRepresentable{};
            if (table[e].empty())
                return NotRepresentable{};
        }
    }

    // Sign constraints on h = sum alpha B: equalities pin h at the knots, the
    // rest become margins of a max-margin feasibility problem over |alpha| <= 1.
    std::vector<Eigen::VectorXd> eq_rows;
    struct Row {
        Eigen::VectorXd v;
        bool needs_margin;
    };
    std::vector<Row> rows;
    auto mu_row = [&](int e, bool lo_end) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(nw);
        for (const Contribution& ct : table[e])
            if (ct.from_lo == lo_end)
                r[ct.window] += ct.lambda;
        return r;
    };
    auto knot_row = [&](int e, double xi) {
        const double c = tri.edges[e].length;
        Eigen::VectorXd r = Eigen::VectorXd::Zero(nw);
        for (const Contribution& ct : table[e])
            r[ct.window] += ct.from_lo ? ct.lambda * (1.0 - xi / c) : ct.lambda * (xi / c);
        return r;
    };
    for (int e = 0; e < ne; ++e) {
        if (table[e].empty())
            continue;
        switch (pats[e].kind) {
        case Pattern::empty:
            rows.push_back({-mu_row(e, true), false});
            rows.push_back({-mu_row(e, false), false});
            break;
        case Pattern::full:
            rows.push_back({mu_row(e, true), false});
            rows.push_back({mu_row(e, false), false});
            rows.push_back({mu_row(e, true) + mu_row(e, false), true});
            break;
        case Pattern::rising:
            eq_rows.push_back(knot_row(e, pats[e].knot));
            rows.push_back({mu_row(e, false), true});
            break;
        case Pattern::falling:
            eq_rows.push_back(knot_row(e, pats[e].knot));
            rows.push_back({mu_row(e, true), true});
            break;
        }
    }

    // Null space of the knot equalities.
    Eigen::MatrixXd N;
    if (eq_rows.empty()) {
        N = Eigen::MatrixXd::Identity(nw, nw);
    } else {
        Eigen::MatrixXd E(static_cast<int>(eq_rows.size()), nw);
        for (size_t i = 0; i < eq_rows.size(); ++i)
            E.row(static_cast<int>(i)) = eq_rows[i].transpose();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        double thresh = sv.size() > 0 ? sv[0] * 1e-12 * nw : 0.0;
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv[i] > thresh)
                ++rank;
        N = svd.matrixV().rightCols(nw - rank);
    }
    if (N.cols() == 0)
        return NotRepresentable{};

    // Normalize margin rows; projected subgradient ascent on the min margin
    // (rows that may legitimately sit at zero get a bonus so they do not cap it).
    const double bonus = 1e-3;
    for (Row& r : rows) {
        double n = r.v.norm();
        if (n > 0)
            r.v /= n;
    }
    Eigen::VectorXd u = Eigen::VectorXd::Zero(N.cols());
    auto score = [&](const Eigen::VectorXd& alpha, int* argmin) {
        double best = kInf;
        int which = -1;
        for (size_t i = 0; i < rows.size(); ++i) {
            double s = rows[i].v.dot(alpha) + (rows[i].needs_margin ? 0.0 : bonus);
            if (s < best) {
                best = s;
                which = static_cast<int>(i);
            }
        }
        for (int i = 0; i < nw; ++i) {
            double s = 1.0 - std::abs(alpha[i]) + bonus;
            if (s < best) {
                best = s;
                which = static_cast<int>(rows.size()) + i;
            }
        }
        if (argmin)
            *argmin = which;
        return best;
    };
    Eigen::VectorXd alpha = N * u;
    double best_score = score(alpha, nullptr);
    Eigen::VectorXd best_alpha = alpha;
    for (int it = 0; it < 6000; ++it) {
        int which = -1;
        score(alpha, &which);
        Eigen::VectorXd g;
        if (which < static_cast<int>(rows.size())) {
            g = N.transpose() * rows[which].v;
        } else {
            int i = which - static_cast<int>(rows.size());
            Eigen::VectorXd e = Eigen::VectorXd::Zero(nw);
            e[i] = alpha[i] >= 0 ? -1.0 : 1.0;
            g = N.transpose() * e;
        }
        double gn = g.norm();
        if (gn <= 1e-300)
            break;
        u += (0.5 / std::sqrt(it + 1.0)) * g / gn;
        alpha = N * u;
        double s = score(alpha, nullptr);
        if (s > best_score) {
            best_score = s;
            best_alpha = alpha;
        }
    }

    double margin = kInf, hard_floor = kInf;
    for (const Row& r : rows) {
        double s = r.v.dot(best_alpha);
        if (r.needs_margin)
            margin = std::min(margin, s);
        else
            hard_floor = std::min(hard_floor, s);
    }
    bool has_margin_rows = margin != kInf;
    if ((has_margin_rows && margin < 1e-8) || hard_floor < -1e-10)
        return NotRepresentable{};

    double amax = best_alpha.cwiseAbs().maxCoeff();
    if (amax > 0)
        best_alpha /= amax;
    else if (has_margin_rows)
        return NotRepresentable{};

    // Closed-form residual check of the candidate's pattern against d.
    for (int w = 0; w < nw; ++w) {
        const BasicWindow& win = basics.windows[w];
        double val = 0;
        for (int r = 0; r < 3; ++r) {
            const int e = win.edge_indices[r];
            val += win.lambda[r] * hat_integral(pats[e], tri.edges[e].length, win.from_lo[r]);
        }
        if (std::abs(C * val - win.d) > dtol)
            return NotRepresentable{};
    }

    Certified cert;
    cert.C = C;
    cert.alpha.assign(best_alpha.data(), best_alpha.data() + nw);
    return cert;
}

} // namespace minnet
