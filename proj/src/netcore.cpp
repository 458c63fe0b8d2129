#include "minnet/netcore.hpp"

#include <algorithm>
#include <cmath>

#include "minnet/moments.hpp"

namespace minnet {

namespace {

double second_deriv_at(const SecondDerivModel& m, double t) {
    if (std::holds_alternative<ZeroModel>(m))
        return 0.0;
    if (const auto* p = std::get_if<PositivePartPower>(&m)) {
        double u = p->slope * t + p->intercept;
        return u > 0 ? std::pow(u, p->exponent) : 0.0;
    }
    const auto& w = std::get<PiecewiseConstant>(m);
    return t < w.knot ? w.left : w.right;
}

// int_0^t f''(tau) dtau
double integral0(const SecondDerivModel& m, double t) {
    if (std::holds_alternative<ZeroModel>(m))
        return 0.0;
    if (const auto* p = std::get_if<PositivePartPower>(&m))
        return positive_part_moment(p->slope, p->intercept, p->exponent, 0.0, 1.0, t);
    const auto& w = std::get<PiecewiseConstant>(m);
    return w.left * std::min(t, w.knot) + w.right * std::max(0.0, t - w.knot);
}

// int_0^t (t - tau) f''(tau) dtau
double integral1(const SecondDerivModel& m, double t) {
    if (std::holds_alternative<ZeroModel>(m))
        return 0.0;
    if (const auto* p = std::get_if<PositivePartPower>(&m))
        return positive_part_moment(p->slope, p->intercept, p->exponent, -1.0, t, t);
    const auto& w = std::get<PiecewiseConstant>(m);
    const double k = std::min(t, w.knot);
    double val = w.left * (t * k - k * k / 2.0);
    if (t > w.knot)
        val += w.right * (t - w.knot) * (t - w.knot) / 2.0;
    return val;
}

// int_a^b (v_slope*tau + v_icept) dtau
double linear_mass(double v_slope, double v_icept, double a, double b) {
    return v_slope * (b * b - a * a) / 2.0 + v_icept * (b - a);
}

} // namespace

double evaluate(const CurveNetwork& net, int edge_index, double t, int order) {
    if (edge_index < 0 || edge_index >= static_cast<int>(net.edges.size()))
        throw Error("evaluate: edge index out of range");
    const EdgeFunction& e = net.edges[edge_index];
    if (t < 0 || t > e.length)
        throw Error("evaluate: parameter outside [0, length]");
    switch (order) {
    case 0:
        return e.z_lo + e.fprime0 * t + integral1(e.model, t);
    case 1:
        return e.fprime0 + integral0(e.model, t);
    case 2:
        return second_deriv_at(e.model, t);
    default:
        throw Error("evaluate: order must be 0, 1 or 2");
    }
}

double inner_product_basic(const CurveNetwork& net, const BasicWindow& w) {
    double acc = 0;
    for (int r = 0; r < 3; ++r) {
        const EdgeFunction& e = net.edges[w.edge_indices[r]];
        const double c = e.length;
        // B weight in canonical parametrization: (1 - t/c) when the window's
        // vertex is the low end, t/c otherwise.
        const double vs = w.from_lo[r] ? -1.0 / c : 1.0 / c;
        const double vi = w.from_lo[r] ? 1.0 : 0.0;
        double contrib = 0;
        if (std::holds_alternative<ZeroModel>(e.model)) {
            contrib = 0;
        } else if (const auto* p = std::get_if<PositivePartPower>(&e.model)) {
            contrib = positive_part_moment(p->slope, p->intercept, p->exponent, vs, vi, c);
        } else {
            const auto& pc = std::get<PiecewiseConstant>(e.model);
            contrib = pc.left * linear_mass(vs, vi, 0.0, std::min(pc.knot, c)) +
                      pc.right * linear_mass(vs, vi, std::min(pc.knot, c), c);
        }
        acc += w.lambda[r] * contrib;
    }
    return acc;
}

double edge_sup_second_deriv(const EdgeFunction& e) {
    if (std::holds_alternative<ZeroModel>(e.model))
        return 0.0;
    if (const auto* p = std::get_if<PositivePartPower>(&e.model)) {
        double u0 = p->intercept, u1 = p->slope * e.length + p->intercept;
        double u = std::max({u0, u1, 0.0});
        return u > 0 ? std::pow(u, p->exponent) : 0.0;
    }
    const auto& pc = std::get<PiecewiseConstant>(e.model);
    double sup = 0;
    if (pc.knot > 0)
        sup = std::max(sup, pc.left);
    if (pc.knot < e.length)
        sup = std::max(sup, pc.right);
    return sup;
}

double norm_second_deriv(const CurveNetwork& net, double p) {
    if (std::isinf(p)) {
        double sup = 0;
        for (const EdgeFunction& e : net.edges)
            sup = std::max(sup, edge_sup_second_deriv(e));
        return sup;
    }
    if (p <= 1)
        throw Error("norm_second_deriv: p must be in (1, inf]");
    double sup = 0;
    for (const EdgeFunction& e : net.edges)
        sup = std::max(sup, edge_sup_second_deriv(e));
    if (sup == 0)
        return 0;
    // Scaling by the sup keeps the integrand in [0,1] so large p cannot overflow.
    double acc = 0;
    for (const EdgeFunction& e : net.edges) {
        if (std::holds_alternative<ZeroModel>(e.model))
            continue;
        if (const auto* m = std::get_if<PositivePartPower>(&e.model)) {
            if (m->exponent == 0) {
                acc += std::pow(1.0 / sup, p) *
                       positive_part_moment(m->slope, m->intercept, 0.0, 0.0, 1.0, e.length);
            } else {
                const double s = std::pow(sup, -1.0 / m->exponent);
                acc += positive_part_moment(m->slope * s, m->intercept * s, m->exponent * p,
                                            0.0, 1.0, e.length);
            }
        } else {
            const auto& pc = std::get<PiecewiseConstant>(e.model);
            const double k = std::min(std::max(pc.knot, 0.0), e.length);
            acc += std::pow(std::abs(pc.left) / sup, p) * k +
                   std::pow(std::abs(pc.right) / sup, p) * (e.length - k);
        }
    }
    return sup * std::pow(acc, 1.0 / p);
}

double outgoing_derivative(const CurveNetwork& net, int edge_index, int vertex) {
    const EdgeFunction& e = net.edges[edge_index];
    if (vertex == e.lo)
        return e.fprime0;
    if (vertex == e.hi)
        return -(e.fprime0 + integral0(e.model, e.length));
    throw Error("outgoing_derivative: vertex not on edge");
}

Residuals residuals(const CurveNetwork& net, const ScatteredData& data,
                    const BasicCurveNetworks& basics) {
    Residuals res;
    for (const BasicWindow& w : basics.windows) {
        double rho = 0;
        for (int r = 0; r < 3; ++r)
            rho += w.lambda[r] * outgoing_derivative(net, w.edge_indices[r], w.vertex);
        res.smoothness.push_back({w.vertex, w.window, rho});
        res.max_smoothness = std::max(res.max_smoothness, std::abs(rho));

        double ip = inner_product_basic(net, w) - w.d;
        res.lemma4.push_back({w.vertex, w.window, ip});
        res.max_lemma4 = std::max(res.max_lemma4, std::abs(ip));
    }
    res.interpolation.assign(data.size(), 0.0);
    for (size_t ei = 0; ei < net.edges.size(); ++ei) {
        const EdgeFunction& e = net.edges[ei];
        double at_lo = std::abs(evaluate(net, static_cast<int>(ei), 0.0) - data.points[e.lo].z);
        double at_hi =
            std::abs(evaluate(net, static_cast<int>(ei), e.length) - data.points[e.hi].z);
        res.interpolation[e.lo] = std::max(res.interpolation[e.lo], at_lo);
        res.interpolation[e.hi] = std::max(res.interpolation[e.hi], at_hi);
    }
    for (double v : res.interpolation)
        res.max_interpolation = std::max(res.max_interpolation, v);
    return res;
}

CurveNetwork reconstruct(const std::vector<SecondDerivModel>& models, const ScatteredData& data,
                         const Triangulation& tri) {
    if (static_cast<int>(models.size()) != tri.n_edges())
        throw Error("reconstruct: one model per edge required");
    CurveNetwork net;
    net.edges.resize(models.size());
    for (int ei = 0; ei < tri.n_edges(); ++ei) {
        const Edge& e = tri.edges[ei];
        EdgeFunction f;
        f.lo = e.lo;
        f.hi = e.hi;
        f.length = e.length;
        f.z_lo = data.points[e.lo].z;
        f.z_hi = data.points[e.hi].z;
        f.model = models[ei];
        // f(length) = z_hi  =>  f'(0) = (z_hi - z_lo - int_0^c (c-t) f'') / c
        double m1;
        if (std::holds_alternative<ZeroModel>(f.model)) {
            m1 = 0;
        } else if (const auto* p = std::get_if<PositivePartPower>(&f.model)) {
            m1 = positive_part_moment(p->slope, p->intercept, p->exponent, -1.0, e.length,
                                      e.length);
        } else {
            const auto& pc = std::get<PiecewiseConstant>(f.model);
            const double k = std::min(std::max(pc.knot, 0.0), e.length);
            m1 = pc.left * (e.length * k - k * k / 2.0) +
                 pc.right * (e.length - k) * (e.length - k) / 2.0;
        }
        f.fprime0 = (f.z_hi - f.z_lo - m1) / e.length;
        net.edges[ei] = f;
    }
    return net;
}

} // namespace minnet
