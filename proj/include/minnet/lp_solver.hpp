#pragma once

#include <optional>
#include <vector>

#include "minnet/moments.hpp"
#include "minnet/netcore.hpp"

namespace minnet {

struct NewtonOptions {
    double tol = 1e-10;          // max-norm of the residual, relative to the scale of d
    int max_iter = 500;
    int max_halvings = 30;
    std::optional<std::vector<double>> initial_alpha; // overrides the default init
};

struct LpSolution {
    double p = 2;
    std::vector<double> alpha;   // one per basic window, order of BasicCurveNetworks
    CurveNetwork network;        // F* with f''_e = (sum alpha B)_+^(q-1) per edge
    double achieved_norm = 0;    // ||F*''||_p
    int iterations = 0;
    double final_residual = 0;   // max-norm of the nonlinear system residual
};

/// Integral over [0, c] of (slope*t + intercept)_+^r (v_slope*t + v_intercept) dt.
/// Declared in moments.hpp; re-exported here as part of this module's surface.
using minnet::positive_part_moment;

/// Damped Newton iteration on the nonlinear system
///   int_E (sum alpha B)_+^(q-1) B_kl = d_kl  for all windows kl,
/// with the analytic Jacobian (q-1) int (sum alpha B)_+^(q-2) B_is B_kl.
/// Starts from alpha = 0 (all d = 0) or the p = 2 unconstrained Gram warm start.
/// Throws SingularJacobian / MaxIterationsExceeded on failure.
std::vector<double> newton_solve(const BasicCurveNetworks& basics, const Triangulation& tri,
                                 double p, const NewtonOptions& opts, int* iterations = nullptr,
                                 double* final_residual = nullptr);

/// End-to-end minimum L_p-norm interpolation network for 1 < p < infinity on
/// convex data (checked; throws NonConvexData). For p > 8 warm-starts through
/// an internal p-continuation ladder.
LpSolution solve_lp(const ScatteredData& data, const Triangulation& tri, double p,
                    const NewtonOptions& opts = {});

} // namespace minnet
