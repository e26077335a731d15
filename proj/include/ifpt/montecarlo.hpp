#pragma once

#include "ifpt/core.hpp"
#include "ifpt/forward.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

namespace ifpt {

/// Philox4x32-10 counter-based generator. Each (key, stream) pair is an
/// independent sequence, so path i can be regenerated on its own.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Block = std::array<std::uint32_t, 4>;

    Philox4x32(std::uint64_t key, std::uint64_t stream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    /// The raw bijection, exposed for known-answer tests.
    static Block bijection(Block counter, std::array<std::uint32_t, 2> key);

private:
    std::array<std::uint32_t, 2> key_;
    Block counter_;
    Block buffer_{};
    int next_ = 4;
};

struct SimConfig {
    std::uint64_t paths = 100000;
    int substeps = 1;
    std::uint64_t seed = 20240531;

    void validate() const;
};

struct EmpiricalHittingDistribution {
    DyadicGrid grid;
    std::vector<std::uint64_t> hits;  // per block
    std::uint64_t survivors = 0;
    std::uint64_t paths = 0;

    double frequency(std::size_t m) const;
    double standard_error(std::size_t m) const;
    /// Empirical P(T <= t_m).
    double cumulative(std::size_t m) const;
    double total_frequency() const;
};

EmpiricalHittingDistribution simulate_hitting_times(const PiecewiseLinearBoundary& b, const SimConfig& cfg);

/// Hits of the straight corridor b0 -> b1 over dt by bridge-corrected paths from x0.
std::uint64_t simulate_segment_hits(BoundaryPoint b0, BoundaryPoint b1, double x0, double dt, const SimConfig& cfg);

/// max over knots of |empirical cumulative - F(t_m)|.
double ks_block_distance(const EmpiricalHittingDistribution& e, const TargetDistribution& d);

/// Block-m crossing probability by nested adaptive quadrature over the
/// positions at t_1..t_m (m <= 3).
double brute_force_block_check(const PiecewiseLinearBoundary& b, std::size_t m, const QuadratureConfig& cfg);

}  // namespace ifpt
