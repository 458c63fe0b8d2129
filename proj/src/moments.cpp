#include "minnet/moments.hpp"

#include <cmath>

#include "minnet/errors.hpp"

namespace minnet {

namespace {

// Below this relative variation of u over the interval the direct closed form
// cancels catastrophically, while a midpoint expansion is accurate to O(x^3).
constexpr double kRelConstant = 1e-4;

inline double pos_pow(double x, double e) { return x > 0 ? std::pow(x, e) : 0.0; }

} // namespace

double positive_part_moment(double slope, double intercept, double r,
                            double v_slope, double v_intercept, double c) {
    return positive_part_moment2(slope, intercept, r, 0.0, v_slope, v_intercept, c);
}

double positive_part_moment2(double slope, double intercept, double r,
                             double w2, double w1, double w0, double c) {
    if (r <= -1.0)
        throw Error("positive_part_moment: exponent must be > -1");
    if (c < 0)
        throw Error("positive_part_moment: negative interval length");
    if (c == 0)
        return 0.0;

    const double end0 = intercept, end1 = slope * c + intercept;
    if (std::abs(end1 - end0) <= kRelConstant * std::max(std::abs(end0), std::abs(end1))) {
        // u is (nearly) constant; endpoints share a sign, so the kink is outside.
        const double um = 0.5 * (end0 + end1);
        if (um <= 0)
            return 0.0;
        const double m0 = w2 * c * c * c / 3.0 + w1 * c * c / 2.0 + w0 * c;
        const double m1 = (w2 * c + w1) * c * c * c / 12.0;
        const double m2 =
            w2 * c * c * c * c * c / 30.0 + w1 * c * c * c * c / 24.0 + w0 * c * c * c / 12.0;
        const double g = slope / um;
        return pos_pow(um, r) * (m0 + r * g * m1 + 0.5 * r * (r - 1.0) * g * g * m2);
    }

    // Substitute u = slope*t + intercept. With
    //   I(x) = x_+^(r+1)/(r+1), J(x) = x_+^(r+2)/(r+2), K(x) = x_+^(r+3)/(r+3)
    // each of I, J, K is an antiderivative of the corresponding positive-part
    // power on the whole line, so the kink needs no explicit split.
    const double s = slope, b = intercept;
    const double u0 = b, uc = s * c + b;
    const double cI = w0 - w1 * b / s + w2 * b * b / (s * s);
    const double cJ = w1 / s - 2.0 * b * w2 / (s * s);
    const double cK = w2 / (s * s);

    auto I = [&](double x) { return pos_pow(x, r + 1.0) / (r + 1.0); };
    auto J = [&](double x) { return pos_pow(x, r + 2.0) / (r + 2.0); };
    auto K = [&](double x) { return pos_pow(x, r + 3.0) / (r + 3.0); };

    double val = cI * (I(uc) - I(u0)) + cJ * (J(uc) - J(u0));
    if (w2 != 0.0)
        val += cK * (K(uc) - K(u0));
    return val / s;
}

} // namespace minnet
