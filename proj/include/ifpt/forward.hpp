#pragma once

#include "ifpt/core.hpp"

#include <cstddef>
#include <vector>

namespace ifpt {

struct QuadratureConfig {
    int nodes_per_block = 96;        // nodes per truncation_width block deviations
    double truncation_width = 8.0;   // deviations of sqrt(t) kept below the alive region
    int panel_order = 12;            // composite Gauss-Legendre order
    double kernel_cutoff = 12.0;     // kernel support in block deviations
    double mass_tolerance = 1e-9;    // allowed gap between quadrature and telescoped survival

    void validate() const;
};

/// Absorbed density of W at one knot, on Gauss-Legendre nodes.
struct SubDensity {
    double time = 0.0;
    std::size_t knot = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> values;
    /// Survival telescoped from the block masses; keeps relative precision.
    double survival = 1.0;
    /// Mass absorbed over the block that produced this density.
    double block_mass = 0.0;

    /// Survival as the weighted sum of the values.
    double quadrature_mass() const;
};

/// The unit point mass at x = 0, t = 0.
SubDensity point_mass_at_origin();

/// Probability of hitting during the straight segment g0 -> g1 (and its
/// mirror for Symmetric) over dt, starting from p.
double segment_block_mass(const SubDensity& p, BoundarySide side, double g0, double g1, double dt);

/// Propagate p across the straight segment g0 -> g1 over dt.
SubDensity propagate_segment(const SubDensity& p, BoundarySide side, double g0, double g1, double dt,
                             const QuadratureConfig& cfg);

/// Absorbed density at t_1.
SubDensity init_subdensity(const PiecewiseLinearBoundary& b, const QuadratureConfig& cfg);

/// Absorbed density at t_{m+1} from the one at t_m.
SubDensity propagate_subdensity(const SubDensity& p, const PiecewiseLinearBoundary& b,
                                const QuadratureConfig& cfg);

/// Absorbed density at knot m (m = 0 gives the point mass).
SubDensity subdensity_at(const PiecewiseLinearBoundary& b, std::size_t m, const QuadratureConfig& cfg);

/// P(T_b > t_m), 1 <= m <= 2^n.
double survival_probability(const PiecewiseLinearBoundary& b, std::size_t m, const QuadratureConfig& cfg);

/// Crossing probability over block m when its segment uses `slope` instead
/// of b's own slope. b only needs to be meaningful through t_m.
double block_crossing_probability(const PiecewiseLinearBoundary& b, double slope, std::size_t m,
                                  const QuadratureConfig& cfg);
/// Same, from an already propagated density at t_m.
double block_crossing_probability(const SubDensity& p, BoundarySide side, double g_m, double slope, double dt);

struct FptRow {
    double t;
    double cdf;
    double block_mass;
    double avg_density;
    double quadrature_survival;
};

struct FptTable {
    std::vector<FptRow> rows;  // one per knot t_1..t_{2^n}
    double max_mass_defect = 0.0;

    std::vector<double> block_masses() const;
};

FptTable fpt_distribution_table(const PiecewiseLinearBoundary& b, const QuadratureConfig& cfg);

/// Block-averaged difference between the realized hitting density and the target.
double residual_fgkey(const PiecewiseLinearBoundary& b, const TargetDistribution& d, std::size_t m,
                      const QuadratureConfig& cfg);

}  // namespace ifpt
