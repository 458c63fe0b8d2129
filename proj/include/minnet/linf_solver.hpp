#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "minnet/lp_solver.hpp"
#include "minnet/netcore.hpp"

namespace minnet {

/// Per-edge first-derivative endpoint values in canonical orientation:
/// a_e = f'(0), b_e = f'(length); A_e = z_hi - z_lo is the integral of f'.
struct DerivativeEndpoints {
    std::vector<double> a, b;    // parallel to Triangulation::edges
    std::vector<double> A, c;    // integral constraint and edge length
};

/// Minimal-sup-norm monotone profile g on [0, c] with g(0) = a, g(length) = b,
/// integral A: constant on one side of the knot, linear on the other.
struct UnivariateMinProfile {
    enum class FlatSide { left, right, none };
    FlatSide flat_side = FlatSide::none;
    double knot = 0;      // boundary between the flat and the linear piece
    double norm = 0;      // sup |g'| = the nonzero slope (0 for constant g)
    double a = 0, b = 0, c = 0, A = 0;
};

struct Certified {
    double C = 0;
    std::vector<double> alpha;   // normalized to max |alpha| = 1 (all zero when C = 0)
};
struct NotRepresentable {};
struct NotAttempted {};
using Certificate = std::variant<Certified, NotRepresentable, NotAttempted>;

struct MinimaxOptions {
    double tol = 1e-10;            // relative objective improvement threshold
    int max_iter = 200000;
    int improvement_window = 200;  // iterations without relative improvement before stopping
    bool polish = true;            // KKT active-set Newton refinement after the subgradient phase
    std::optional<DerivativeEndpoints> initial; // overrides the p = 2 warm start
};

struct LinfSolution {
    DerivativeEndpoints endpoints;
    CurveNetwork network;       // per-edge two-piece profiles integrated twice
    double achieved_norm = 0;   // C = max_e phi_e
    int iterations = 0;
    Certificate certificate = NotAttempted{};
};

/// phi(a, b; c, A): minimal sup-norm of g' over monotone g with the given
/// endpoint/integral data; max of (b-a)^2/(2(A-ac)) and (b-a)^2/(2(bc-A)).
/// Requires a*c < A < b*c when a < b (throws Infeasible otherwise); a = b
/// requires A = a*c and gives 0.
double phi(double a, double b, double c, double A);

/// The minimizing profile behind phi.
UnivariateMinProfile univariate_min(double a, double b, double c, double A);

/// Minimizes max_e phi_e over the affine subspace of smoothness-feasible
/// endpoint values by projected subgradient with Polyak steps (diminishing
/// fallback), warm-started from the p = 2 solution, then Newton-polished.
/// Throws NotConverged with a bisection gap estimate if the iteration limit is
/// reached without stabilizing.
LinfSolution minimax_solve(const ScatteredData& data, const Triangulation& tri,
                           const BasicCurveNetworks& basics, const MinimaxOptions& opts = {});

/// Assembles the curve network from endpoint values: per edge the minimizing
/// profile becomes a PiecewiseConstant (or Zero) second-derivative model,
/// integrated twice with the interpolation conditions.
CurveNetwork build_linf_network(const DerivativeEndpoints& endpoints, const ScatteredData& data,
                                const Triangulation& tri);

/// Global optimality certificate: searches for alpha whose
/// per-edge linear function sum alpha B reproduces the candidate's {0, C}
/// active set at its knots (max-margin feasibility over |alpha| <= 1), then
/// verifies int_E C (sum alpha B)_+^0 B_kl = d_kl in closed form. Returns
/// Certified{C, alpha} or NotRepresentable (informative only).
Certificate certificate_theorem3(const LinfSolution& sol, const ScatteredData& data,
                                 const Triangulation& tri, const BasicCurveNetworks& basics);

} // namespace minnet
