#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "minnet/linf_solver.hpp"

namespace minnet {

struct SolveInput {
    ScatteredData data;
    std::vector<Triangle> triangles; // empty => Delaunay
};

struct SolveReport {
    double p = 2;                    // infinity() for the minimax problem
    double achieved_norm = 0;
    int iterations = 0;
    double final_residual = 0;
    ConvexityReport convexity;
    Residuals resid;
    Certificate certificate = NotAttempted{};
    BasicCurveNetworks basics;
    ScatteredData data;
    Triangulation tri;
    CurveNetwork network;
};

/// Input JSON: { "points": [[x,y,z],...], "triangles": [[i,j,k],...]? } (0-based).
SolveInput load_input_json(const std::string& path);
SolveInput parse_input_json(const std::string& text);

/// Full pipeline: triangulate, check convexity, solve for p in (1, inf) or
/// p = infinity, score residuals, attach the certificate (p = infinity only).
SolveReport run_solve(const SolveInput& in, double p, double tol = 1e-10);

std::string network_to_json(const CurveNetwork& net, const ScatteredData& data,
                            const Triangulation& tri);
CurveNetwork network_from_json(const std::string& text, ScatteredData* data = nullptr,
                               Triangulation* tri = nullptr);

std::string report_to_json(const SolveReport& rep);
SolveReport report_from_json(const std::string& text);

std::string convexity_to_json(const ConvexityReport& rep, const Triangulation& tri);

/// CSV with header edge_i,edge_j,t,x,y,z; density+1 evenly spaced samples per
/// edge, endpoints included.
void export_samples(const CurveNetwork& net, const Triangulation& tri, int density,
                    std::ostream& out);

/// CLI entry point: subcommands validate | solve | sample | report with flags
/// --input, --p, --triangulation, --tol, --out, --density. Exit codes:
/// 0 success, 2 invalid input, 3 non-convex data, 4 solver failure.
int run(int argc, const char* const* argv);

} // namespace minnet
