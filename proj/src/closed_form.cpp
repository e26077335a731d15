#include "ifpt/closed_form.hpp"

#include "ifpt/errors.hpp"
#include "ifpt/normal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <fmt/format.h>

namespace ifpt {

namespace {

std::atomic<std::size_t> g_negative_clamps{0};

// Reflection chains stop once a term drops below this fraction of the
// chain's leading term; the terms decay like exp(-c j^2).
constexpr double kChainTolerance = 1e-17;
constexpr int kMaxImagePairs = 4096;

double clamp_series_result(double value, double epsilon, const char* what) {
    if (value >= 0.0) {
        return value;
    }
    if (value >= -10.0 * epsilon) {
        g_negative_clamps.fetch_add(1, std::memory_order_relaxed);
        return 0.0;
    }
    throw NumericalConsistencyError(fmt::format("{} returned a negative density {}", what, value));
}

// Image terms (sign, k1, k2) of the two reflection chains for a bridge that
// starts Au below the upper and Al above the lower boundary. Chain 0 starts
// with a touch of the upper line, chain 1 with the lower. `visit(chain,
// sign, k1, k2)` returns false to end the current chain.
template <class Visit>
void image_chains(double Au, double Al, Visit&& visit) {
    for (int chain = 0; chain < 2; ++chain) {
        const double own = chain == 0 ? Au : Al;
        const double other = chain == 0 ? Al : Au;
        double p = own;
        double q = 0.0;
        double sign = 1.0;
        auto emit = [&] { return chain == 0 ? visit(chain, sign, p, q) : visit(chain, sign, q, p); };
        if (!emit()) {
            continue;
        }
        for (int j = 0; j < kMaxImagePairs; ++j) {
            p += other * (2 * j + 2);
            q += other * (2 * j + 1);
            sign = -sign;
            if (!emit()) {
                break;
            }
            p += own * (2 * j + 3);
            q += own * (2 * j + 2);
            sign = -sign;
            if (!emit()) {
                break;
            }
        }
    }
}

bool one_sided(BoundaryPoint b) { return std::isinf(b.lower); }

}  // namespace

std::size_t negative_clamp_count() { return g_negative_clamps.load(std::memory_order_relaxed); }

double linear_fpt_density(const LinearSegment& seg, double t) {
    if (!(t > seg.t0)) {
        throw DomainError(fmt::format("linear_fpt_density needs t > t0, got t = {}, t0 = {}", t, seg.t0));
    }
    if (!(seg.intercept > seg.x0)) {
        throw PreconditionError("linear_fpt_density needs the start strictly below the boundary");
    }
    const double s = t - seg.t0;
    const double gap = seg.intercept + seg.slope * s - seg.x0;
    return (seg.intercept - seg.x0) / std::sqrt(2.0 * normal::kPi * s * s * s) *
           std::exp(-gap * gap / (2.0 * s));
}

double linear_transition_kernel(double g0, double g1, double t0, double x0, double t1, double x1) {
    if (!(t1 > t0)) {
        throw DomainError("linear_transition_kernel needs t1 > t0");
    }
    if (!(x0 < g0)) {
        throw PreconditionError("linear_transition_kernel: start is already absorbed");
    }
    if (!(x1 < g1)) {
        return 0.0;
    }
    const double dt = t1 - t0;
    return normal::heat_kernel(x1 - x0, dt) * -std::expm1(-2.0 * (g1 - x1) * (g0 - x0) / dt);
}

double constant_boundary_cdf(double x, double t, BoundarySide side) {
    if (!(x > 0.0)) {
        throw PreconditionError(fmt::format("constant boundary level must be positive, got {}", x));
    }
    if (t < 0.0) {
        throw DomainError("constant_boundary_cdf needs t >= 0");
    }
    if (t == 0.0) {
        return 0.0;
    }
    const double z = x / std::sqrt(t);
    if (side == BoundarySide::UpperOnly) {
        return 2.0 * normal::sf(z);
    }
    if (z < 1.0) {
        return 1.0 - constant_boundary_survival(x, t, side);
    }
    // 4 * sum (-1)^(k+1) Phi(-(2k-1) z); converges after a handful of terms.
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= kSeriesMaxTerms; ++k) {
        const double term = normal::sf((2.0 * k - 1.0) * z);
        sum += sign * term;
        if (term < 1e-18 * sum) {
            break;
        }
        sign = -sign;
    }
    return 4.0 * sum;
}

double constant_boundary_survival(double x, double t, BoundarySide side) {
    if (!(x > 0.0)) {
        throw PreconditionError(fmt::format("constant boundary level must be positive, got {}", x));
    }
    if (t < 0.0) {
        throw DomainError("constant_boundary_survival needs t >= 0");
    }
    if (t == 0.0) {
        return 1.0;
    }
    const double z = x / std::sqrt(t);
    if (side == BoundarySide::UpperOnly) {
        return std::erf(z / normal::kSqrt2);
    }
    if (z >= 1.0) {
        return 1.0 - constant_boundary_cdf(x, t, side);
    }
    // Eigenfunction expansion, fast when z is small.
    const double c = normal::kPi * normal::kPi / (8.0 * z * z);
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 0; k < kSeriesMaxTerms; ++k) {
        const double m = 2.0 * k + 1.0;
        const double term = std::exp(-m * m * c) / m;
        sum += sign * term;
        if (term < 1e-18 * std::abs(sum) || term == 0.0) {
            break;
        }
        sign = -sign;
    }
    return 4.0 / normal::kPi * sum;
}

double anderson_two_sided_density(const AndersonParams& p, double t) {
    if (!(p.gamma1 > 0.0) || !(p.gamma2 < 0.0)) {
        throw PreconditionError("Anderson density needs gamma1 > 0 > gamma2");
    }
    if (!(p.delta1 >= p.delta2)) {
        throw PreconditionError("Anderson density needs delta1 >= delta2");
    }
    if (!(p.epsilon > 0.0 && p.epsilon <= 1e-6)) {
        throw PreconditionError("Anderson density needs a series tolerance in (0, 1e-6]");
    }
    if (t < 0.0) {
        throw DomainError("Anderson density needs t >= 0");
    }
    if (t == 0.0) {
        return 0.0;
    }
    const double a1 = p.gamma1;
    const double a2 = -p.gamma2;
    const double U = p.gamma1 + p.delta1 * t;
    const double L = p.gamma2 + p.delta2 * t;
    const double W = U - L;
    const double scale = std::pow(t, -1.5);
    const double pu = scale * normal::pdf(U / std::sqrt(t));
    const double pl = scale * normal::pdf(L / std::sqrt(t));

    // One side of the series; (b1, b2) = (a1, a2) for the upper exit, swapped for the lower.
    auto term = [&](double b1, double b2, int r, bool second) {
        const double rr = r;
        if (!second) {
            return ((2 * rr + 1) * b1 + 2 * rr * b2) *
                   std::exp(-2.0 * (rr * (rr + 1) * b1 + rr * rr * b2) * W / t);
        }
        return -((2 * rr + 1) * b1 + (2 * rr + 2) * b2) *
               std::exp(-2.0 * (rr * (rr + 1) * b1 + (rr + 1) * (rr + 1) * b2) * W / t);
    };

    double sum = 0.0;
    for (int r = 0; r < kSeriesMaxTerms; ++r) {
        const double t1 = pu * term(a1, a2, r, false);
        const double t2 = pu * term(a1, a2, r, true);
        const double t3 = pl * term(a2, a1, r, false);
        const double t4 = pl * term(a2, a1, r, true);
        sum += (t1 + t2) + (t3 + t4);
        const double biggest = std::max({std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4)});
        if (r >= 1 && biggest < p.epsilon) {
            return clamp_series_result(sum, p.epsilon, "Anderson series");
        }
    }
    throw ConvergenceError(fmt::format("Anderson series did not settle in {} terms at t = {}",
                                       kSeriesMaxTerms, t));
}

double symmetric_linear_density(double C, double D, double t, double x0, double t0, double epsilon) {
    if (!(D > 0.0)) {
        throw PreconditionError("symmetric density needs D > 0");
    }
    if (!(C >= 0.0)) {
        throw PreconditionError("symmetric density needs a nonnegative slope");
    }
    if (!(std::abs(x0) < D)) {
        throw PreconditionError("symmetric density needs |x0| < D");
    }
    if (t < t0) {
        throw DomainError("symmetric density needs t >= t0");
    }
    const double s = t - t0;
    if (s == 0.0) {
        return 0.0;
    }
    const double w0 = 2.0 * D;
    const double W = 2.0 * (D + C * s);
    const double scale = std::pow(s, -1.5);

    // Exit through one side, whose start separation is a.
    auto side = [&](double a) {
        const double pre = scale * normal::pdf((a + C * s) / std::sqrt(s));
        auto term = [&](double k) { return pre * (a + 2.0 * k * w0) * std::exp(-2.0 * k * (k * w0 + a) * W / s); };
        double sum = term(0.0);
        for (int k = 1; k < kSeriesMaxTerms; ++k) {
            const double up = term(k);
            const double down = term(-k);
            sum += up + down;
            if (std::max(std::abs(up), std::abs(down)) < epsilon) {
                return sum;
            }
        }
        throw ConvergenceError(fmt::format("symmetric series did not settle in {} terms at t = {}",
                                           kSeriesMaxTerms, t));
    };
    const double value = side(D - x0) + side(D + x0);
    return clamp_series_result(value, epsilon, "symmetric series");
}

double bridge_crossing_probability(BoundaryPoint b0, BoundaryPoint b1, double x0, double x1, double dt) {
    if (!(x0 < b0.upper && x1 < b1.upper && x0 > b0.lower && x1 > b1.lower)) {
        return 1.0;
    }
    const double Bu = b1.upper - x1;
    const double Au = b0.upper - x0;
    if (one_sided(b0)) {
        return std::exp(-2.0 * Au * Bu / dt);
    }
    const double Al = x0 - b0.lower;
    const double Bl = x1 - b1.lower;
    double sum = 0.0;
    double lead[2] = {0.0, 0.0};
    image_chains(Au, Al, [&](int chain, double sign, double k1, double k2) {
        const double term = std::exp(-2.0 * (k1 * Bu + k2 * Bl) / dt);
        if (lead[chain] == 0.0) {
            lead[chain] = term;
        }
        sum += sign * term;
        return term > kChainTolerance * lead[chain];
    });
    return std::clamp(sum, 0.0, 1.0);
}

double bridge_noncrossing_probability(BoundaryPoint b0, BoundaryPoint b1, double x0, double x1, double dt) {
    if (!(x0 < b0.upper && x1 < b1.upper && x0 > b0.lower && x1 > b1.lower)) {
        return 0.0;
    }
    const double Au = b0.upper - x0;
    const double Bu = b1.upper - x1;
    const double eu = 2.0 * Au * Bu / dt;
    if (one_sided(b0)) {
        return -std::expm1(-eu);
    }
    const double Al = x0 - b0.lower;
    const double Bl = x1 - b1.lower;
    const double el = 2.0 * Al * Bl / dt;
    // Take the dominant leading image out of the sum and pair it with expm1.
    const int near_chain = eu <= el ? 0 : 1;
    double rest = 0.0;
    double lead[2] = {0.0, 0.0};
    image_chains(Au, Al, [&](int chain, double sign, double k1, double k2) {
        const double term = std::exp(-2.0 * (k1 * Bu + k2 * Bl) / dt);
        if (lead[chain] == 0.0) {
            lead[chain] = term;
            if (chain == near_chain) {
                return term > 0.0;
            }
        }
        rest += sign * term;
        return term > kChainTolerance * lead[chain];
    });
    const double value = -std::expm1(-std::min(eu, el)) - rest;
    return std::clamp(value, 0.0, 1.0);
}

double block_hit_probability(BoundaryPoint b0, BoundaryPoint b1, double x0, double dt) {
    if (!(x0 < b0.upper && x0 > b0.lower)) {
        return 1.0;
    }
    const double sq = std::sqrt(dt);
    if (one_sided(b0)) {
        const double a = b0.upper - x0;
        const double b = (b1.upper - b0.upper) / dt;
        const double direct = normal::sf((a + b * dt) / sq);
        const double reflected = std::exp(-2.0 * a * b + normal::log_cdf((b * dt - a) / sq));
        return std::min(1.0, direct + reflected);
    }
    if (!(b1.upper > b1.lower)) {
        return 1.0;
    }
    const double B1 = b1.upper - x0;
    const double B2 = x0 - b1.lower;
    const double Au = b0.upper - x0;
    const double Al = x0 - b0.lower;
    const double base = normal::sf(B1 / sq) + normal::sf(B2 / sq);
    // Each image term integrates exp(c + d y) against the Gaussian over the
    // end corridor (-B2, B1) in closed form.
    double sum = 0.0;
    double lead[2] = {0.0, 0.0};
    image_chains(Au, Al, [&](int chain, double sign, double k1, double k2) {
        const double c = -2.0 * (k1 * B1 + k2 * B2) / dt;
        const double d = 2.0 * (k1 - k2) / dt;
        const double log_mass = normal::log_cdf_diff((-B2 - d * dt) / sq, (B1 - d * dt) / sq);
        const double term = std::exp(c + 0.5 * d * d * dt + log_mass);
        if (lead[chain] == 0.0) {
            lead[chain] = term + base;
        }
        sum += sign * term;
        return term > kChainTolerance * lead[chain];
    });
    return std::clamp(base + sum, 0.0, 1.0);
}

}  // namespace ifpt
