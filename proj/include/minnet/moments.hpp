#pragma once

namespace minnet {

/// Integral over [0, c] of (slope*t + intercept)_+^r * (v_slope*t + v_intercept) dt
/// in closed form, with (x)_+^r = x^r for x > 0 and 0 otherwise. The kink at the
/// zero of the linear argument is handled exactly. A nearly constant argument
/// (relative variation below 1e-4) switches to a midpoint expansion to avoid
/// cancellation in the antiderivative differences. Requires r > -1 and c >= 0.
double positive_part_moment(double slope, double intercept, double r,
                            double v_slope, double v_intercept, double c);

/// Same integral with a quadratic weight w2*t^2 + w1*t + w0.
double positive_part_moment2(double slope, double intercept, double r,
                             double w2, double w1, double w0, double c);

} // namespace minnet
