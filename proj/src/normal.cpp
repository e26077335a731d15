#include "ifpt/normal.hpp"

#include <cmath>
#include <limits>

namespace ifpt::normal {

double pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double log_erfc(double y) {
    if (y < 26.0) {
        return std::log(std::erfc(y));
    }
    // Asymptotic expansion of erfcx; truncation error below 1e-13 for y >= 26.
    const double inv2 = 1.0 / (y * y);
    const double series =
        1.0 + inv2 * (-0.5 + inv2 * (0.75 + inv2 * (-1.875 + inv2 * 6.5625)));
    return -y * y - std::log(y * std::sqrt(kPi)) + std::log(series);
}

double log_cdf(double x) {
    if (x > 0.0) {
        return std::log1p(-sf(x));
    }
    return log_erfc(-x / kSqrt2) - std::log(2.0);
}

double log_cdf_diff(double lo, double hi) {
    if (!(hi > lo)) {
        return -std::numeric_limits<double>::infinity();
    }
    if (lo > 0.0) {
        // Both in the upper tail: Phi(hi) - Phi(lo) = sf(lo) - sf(hi).
        const double a = log_cdf(-lo);
        const double b = log_cdf(-hi);
        return a + std::log1p(-std::exp(b - a));
    }
    const double a = log_cdf(hi);
    const double b = log_cdf(lo);
    return a + std::log1p(-std::exp(b - a));
}

double heat_kernel(double dx, double dt) {
    return kInvSqrt2Pi / std::sqrt(dt) * std::exp(-0.5 * dx * dx / dt);
}

}  // namespace ifpt::normal
