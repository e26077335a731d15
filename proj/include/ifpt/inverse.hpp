#pragma once

#include "ifpt/core.hpp"
#include "ifpt/forward.hpp"

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace ifpt {

struct SolverConfig {
    double probability_tolerance = 1e-10;  // eps_p, absolute on block mass
    // Additionally demanded relative to the block mass, so that tiny early
    // masses still pin the slope down.
    double relative_tolerance = 1e-9;
    double bracket_half_width = 4.0;
    double bracket_growth = 2.0;
    double bracket_limit = 1125899906842624.0;  // 2^50
    double secant_switch_width = 1e-4;
    int max_iterations = 200;
    double slope_warning = 1e3;
    QuadratureConfig quadrature{};

    void validate() const;
};

struct BlockSolveRecord {
    std::size_t block = 0;
    double unknown = 0.0;  // level g(0) for block 0, segment slope afterwards
    double slope = 0.0;    // segment slope actually used
    double target_mass = 0.0;
    double achieved = 0.0;
    double residual = 0.0;  // achieved - target
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int iterations = 0;
};

struct InverseSolution {
    PiecewiseLinearBoundary boundary;
    std::vector<BlockSolveRecord> records;
    double max_abs_slope = 0.0;
    double max_abs_residual = 0.0;
    double final_survival = 0.0;
    bool slope_warning = false;
};

/// Level alpha_0 > 0 of the constant first segment matching F(T / 2^n).
std::pair<double, BlockSolveRecord> solve_first_block(const TargetDistribution& d, const DyadicGrid& grid,
                                                      BoundarySide side, const SolverConfig& cfg);

/// Slope of block m matching its target mass, given the absorbed density at t_m
/// and the inherited boundary value g_m.
std::pair<double, BlockSolveRecord> solve_block(const SubDensity& p, double g_m, const TargetDistribution& d,
                                                const DyadicGrid& grid, std::size_t m, BoundarySide side,
                                                const SolverConfig& cfg);

/// Full recursive construction at level n. Records are appended to `progress`
/// (when given) as each block is solved, so they survive an aborted run.
InverseSolution construct_boundary(const TargetDistribution& d, double T, int n, BoundarySide side,
                                   const SolverConfig& cfg, std::vector<BlockSolveRecord>* progress = nullptr);

/// Max over the blocks of `coarse_grid` of |sum of realized sub-block masses - target mass|.
double nested_defect(const InverseSolution& fine, const TargetDistribution& d, const DyadicGrid& coarse_grid);

struct LevelReport {
    int level;
    InverseSolution solution;
    std::optional<double> distance_to_previous;  // sup on the previous level's knots
    double max_abs_slope;
    double nested_defect;  // against the n_min blocks
};

struct RefinementReport {
    std::vector<LevelReport> levels;
};

RefinementReport refine(const TargetDistribution& d, double T, int n_min, int n_max, BoundarySide side,
                        const SolverConfig& cfg);

/// Sup distance of two solutions on the knots of `a` inside the shorter horizon.
double cross_horizon_distance(const InverseSolution& a, const InverseSolution& b);

}  // namespace ifpt
