#pragma once

#include <stdexcept>
#include <string>

namespace minnet {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidInput : Error {
    using Error::Error;
};

struct DuplicateProjection : InvalidInput {
    int i, j;
    DuplicateProjection(int i_, int j_)
        : InvalidInput("duplicate projection: vertices " + std::to_string(i_) + " and " +
                       std::to_string(j_)),
          i(i_), j(j_) {}
};

struct CollinearProjections : InvalidInput {
    CollinearProjections() : InvalidInput("all projections are collinear") {}
};

struct TooFewPoints : InvalidInput {
    explicit TooFewPoints(int n)
        : InvalidInput("need at least 3 points, got " + std::to_string(n)) {}
};

struct DegenerateTriangle : InvalidInput {
    int t;
    explicit DegenerateTriangle(int t_)
        : InvalidInput("degenerate triangle at index " + std::to_string(t_)), t(t_) {}
};

struct OverlappingTriangles : InvalidInput {
    int t1, t2;
    OverlappingTriangles(int a, int b)
        : InvalidInput("triangles " + std::to_string(a) + " and " + std::to_string(b) +
                       " overlap"),
          t1(a), t2(b) {}
};

struct VertexMismatch : InvalidInput {
    explicit VertexMismatch(const std::string& what) : InvalidInput(what) {}
};

struct SingularWindow : Error {
    int vertex, window;
    SingularWindow(int v, int s)
        : Error("singular 3x3 system at vertex " + std::to_string(v) + ", window " +
                std::to_string(s)),
          vertex(v), window(s) {}
};

struct StartEdgeChoiceFailed : Error {
    int vertex;
    explicit StartEdgeChoiceFailed(int v)
        : Error("no start edge gives lambda_1 != 0 for all windows at vertex " +
                std::to_string(v)),
          vertex(v) {}
};

struct Infeasible : Error {
    using Error::Error;
};

struct NonConvexData : Error {
    explicit NonConvexData(const std::string& what = "data is not convex over the triangulation")
        : Error(what) {}
};

struct SingularJacobian : Error {
    explicit SingularJacobian(const std::string& what = "Newton Jacobian is singular")
        : Error(what) {}
};

struct MaxIterationsExceeded : Error {
    double residual;
    explicit MaxIterationsExceeded(double r)
        : Error("iteration limit reached, residual " + std::to_string(r)), residual(r) {}
};

struct NotConverged : Error {
    double best_value;
    double gap;
    NotConverged(double best, double g)
        : Error("minimax solver did not converge: best " + std::to_string(best) +
                ", optimality gap estimate " + std::to_string(g)),
          best_value(best), gap(g) {}
};

} // namespace minnet
