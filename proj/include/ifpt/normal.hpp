#pragma once

// Standard normal helpers shared by the closed-form kernels, the forward
// propagation and the simulator. The log-space variants keep products of the
// form exp(huge) * Phi(very negative) finite.

namespace ifpt::normal {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double pdf(double x);
double cdf(double x);
// Upper tail 1 - Phi(x) without cancellation.
double sf(double x);

// log(erfc(y)) for any finite y, including y far beyond the underflow of erfc.
double log_erfc(double y);
double log_cdf(double x);
// log(Phi(hi) - Phi(lo)); -inf when hi <= lo.
double log_cdf_diff(double lo, double hi);

// Gaussian transition density with variance dt.
double heat_kernel(double dx, double dt);

}  // namespace ifpt::normal
