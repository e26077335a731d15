#pragma once

#include "ifpt/core.hpp"

#include <cstddef>

namespace ifpt {

inline constexpr double kSeriesEpsilon = 1e-12;
inline constexpr int kSeriesMaxTerms = 64;

/// Straight boundary D + C (t - t0) seen from state x0 at time t0.
struct LinearSegment {
    double slope;      // C
    double intercept;  // D, boundary value at t0
    double t0;
    double x0;
};

/// First-passage density of W through a straight upper boundary.
double linear_fpt_density(const LinearSegment& seg, double t);

/// Absorbed transition density across one straight segment of an upper
/// boundary: free Gaussian times the bridge non-crossing factor.
double linear_transition_kernel(double g0, double g1, double t0, double x0, double t1, double x1);

/// P(T <= t) for the constant level x (UpperOnly) or the band (-x, x) (Symmetric).
double constant_boundary_cdf(double x, double t, BoundarySide side);
/// 1 - constant_boundary_cdf, evaluated without cancellation.
double constant_boundary_survival(double x, double t, BoundarySide side);

struct AndersonParams {
    double gamma1;  // upper intercept, > 0
    double delta1;  // upper slope
    double gamma2;  // lower intercept, < 0
    double delta2;  // lower slope, <= delta1
    double epsilon = kSeriesEpsilon;
};

/// First-exit density of W from (gamma2 + delta2 t, gamma1 + delta1 t).
double anderson_two_sided_density(const AndersonParams& p, double t);

/// First-exit density from (-(D + C s), D + C s), s = t - t0, for a start at x0.
double symmetric_linear_density(double C, double D, double t, double x0 = 0.0, double t0 = 0.0,
                                double epsilon = kSeriesEpsilon);

/// Number of tiny negative series values that were clamped to zero so far.
std::size_t negative_clamp_count();

/// Probability that a Brownian bridge from x0 to x1 over dt touches the
/// straight boundary pair joining b0 to b1. Lower = -inf means one-sided.
double bridge_crossing_probability(BoundaryPoint b0, BoundaryPoint b1, double x0, double x1, double dt);
/// 1 - bridge_crossing_probability, accurate when the crossing is near certain.
double bridge_noncrossing_probability(BoundaryPoint b0, BoundaryPoint b1, double x0, double x1, double dt);

/// Probability that W started at x0 leaves the straight corridor b0 -> b1
/// within dt. Small results keep full relative precision.
double block_hit_probability(BoundaryPoint b0, BoundaryPoint b1, double x0, double dt);

}  // namespace ifpt
