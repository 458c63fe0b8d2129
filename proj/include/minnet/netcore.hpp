#pragma once

#include <variant>
#include <vector>

#include "minnet/basis.hpp"
#include "minnet/geometry.hpp"

namespace minnet {

/// f''(t) = 0.
struct ZeroModel {};

/// f''(t) = (slope*t + intercept)_+^exponent.
struct PositivePartPower {
    double slope = 0;
    double intercept = 0;
    double exponent = 1;
};

/// f''(t) = left on [0, knot), right on [knot, c].
struct PiecewiseConstant {
    double knot = 0;
    double left = 0;
    double right = 0;
};

using SecondDerivModel = std::variant<ZeroModel, PositivePartPower, PiecewiseConstant>;

/// One edge of a curve network: canonical parametrization from the low-index
/// vertex, f(0) = z_lo, first derivative f'(0) = fprime0, second derivative
/// given by the model.
struct EdgeFunction {
    int lo = -1, hi = -1;
    double length = 0;
    double z_lo = 0, z_hi = 0;
    double fprime0 = 0;
    SecondDerivModel model;
};

struct CurveNetwork {
    std::vector<EdgeFunction> edges; // parallel to Triangulation::edges
};

struct WindowResidual {
    int vertex = -1;
    int window = 0;
    double value = 0;
};

struct Residuals {
    std::vector<WindowResidual> smoothness;    // sum_r lambda_r * outgoing f' at the vertex
    std::vector<WindowResidual> lemma4;        // <F'', B_is> - d_is
    std::vector<double> interpolation;         // per vertex, max over incident edges
    double max_smoothness = 0;
    double max_lemma4 = 0;
    double max_interpolation = 0;
};

/// Value of f_e (order 0), f'_e (1) or f''_e (2) at t in [0, length],
/// canonical parametrization. Throws Error for t outside the edge or order > 2.
double evaluate(const CurveNetwork& net, int edge_index, double t, int order = 0);

/// <F'', B_is> = sum over supporting edges of int f'' * lambda_r (1 - t/len) dt
/// with t measured from the window's vertex; closed form per model.
double inner_product_basic(const CurveNetwork& net, const BasicWindow& w);

/// L_p norm of F'' for p in (1, inf); pass p = infinity for the sup norm.
double norm_second_deriv(const CurveNetwork& net, double p);

/// Per-edge sup of f''.
double edge_sup_second_deriv(const EdgeFunction& e);

/// Smoothness, lemma4 (<F'', B_is> - d_is) and interpolation residuals of a
/// network against data and its basic curve networks.
Residuals residuals(const CurveNetwork& net, const ScatteredData& data,
                    const BasicCurveNetworks& basics);

/// Builds the network from per-edge second-derivative models and the data:
/// f'(0) is chosen so that f(length) = z_hi exactly (in closed form).
CurveNetwork reconstruct(const std::vector<SecondDerivModel>& models,
                         const ScatteredData& data, const Triangulation& tri);

/// Outgoing first derivative of edge e at vertex v (f'(0) at the low end,
/// -f'(length) at the high end).
double outgoing_derivative(const CurveNetwork& net, int edge_index, int vertex);

} // namespace minnet
