#pragma once

#include <cmath>

#include "disent/errors.hpp"

namespace disent {

// Probabilities are clamped to this band before quantile inversion so the
// composed transforms stay finite; values outside (0,1) are still rejected.
inline constexpr double kProbClampLo = 1e-12;
inline constexpr double kProbClampHi = 1.0 - 1e-12;

// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

namespace detail {

// Acklam's rational approximation to the standard normal quantile.
// Absolute error below 1.15e-9 over the full range before refinement.
inline double acklam_quantile(double p) {
    static constexpr double a[6] = {
        -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
        1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {
        -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
        6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[6] = {
        -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
        -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {
        7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
        3.754408661907416e+00};
    static constexpr double low = 0.02425;
    static constexpr double high = 1.0 - low;

    if (p < low) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= high) {
        double q = p - 0.5;
        double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

} // namespace detail

// Standard normal quantile for p in (0,1). One Halley step on top of the
// rational approximation brings the absolute error near machine precision.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw domain_error("normal_quantile: p must lie strictly inside (0,1)");
    }
    if (p < kProbClampLo) p = kProbClampLo;
    if (p > kProbClampHi) p = kProbClampHi;
    double x = detail::acklam_quantile(p);
    // Halley refinement: e is the CDF residual, u the Newton step.
    double e = normal_cdf(x) - p;
    double u = e * 2.50662827463100050242 * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

} // namespace disent
