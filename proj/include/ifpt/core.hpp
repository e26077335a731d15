#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ifpt {

inline constexpr int kDefaultMaxLevel = 14;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Dyadic time grid t_m = m T / 2^n, m = 0..2^n.
///
/// Knots are built as ldexp(m * T, -n), which makes a level-n knot
/// bit-identical to the matching level-l knot for every l >= n.
class DyadicGrid {
public:
    DyadicGrid(double horizon, int level, int max_level = kDefaultMaxLevel);

    double horizon() const noexcept { return horizon_; }
    int level() const noexcept { return level_; }
    std::size_t blocks() const noexcept { return std::size_t{1} << level_; }
    std::size_t knot_count() const noexcept { return blocks() + 1; }
    double step() const noexcept { return step_; }
    double knot(std::size_t m) const;
    std::vector<double> knots() const;

    /// Same horizon, finer level. Throws PreconditionError if level < this->level().
    DyadicGrid refined(int level) const;

    bool operator==(const DyadicGrid&) const = default;

private:
    double horizon_;
    int level_;
    double step_;
};

/// Which components of the boundary pair are active.
/// UpperOnly: lower component is -inf. Symmetric: lower = -upper.
enum class BoundarySide { UpperOnly, Symmetric };

std::string to_string(BoundarySide side);
BoundarySide parse_side(const std::string& text);

struct BoundaryPoint {
    double lower;
    double upper;
};

/// Continuous piecewise-linear boundary on a dyadic grid. Knot values are
/// the source of truth; slopes are derived from them.
class PiecewiseLinearBoundary {
public:
    PiecewiseLinearBoundary(BoundarySide side, DyadicGrid grid, std::vector<double> knot_values);

    /// Evaluate on [0, T]; exact at knots, linear between. DomainError outside.
    BoundaryPoint eval(double t) const;
    double upper(double t) const { return eval(t).upper; }

    BoundarySide side() const noexcept { return side_; }
    const DyadicGrid& grid() const noexcept { return grid_; }
    std::span<const double> knot_values() const noexcept { return values_; }
    double knot_value(std::size_t m) const { return values_.at(m); }
    double slope(std::size_t block) const;
    std::vector<double> slopes() const;
    double max_abs_slope() const;

    /// Norm on boundary pairs: twice the sup of the upper component (both
    /// supported sides give the same value).
    double norm() const;

private:
    BoundarySide side_;
    DyadicGrid grid_;
    std::vector<double> values_;
};

/// Sup distance between two boundaries sampled on the knots of `coarse`'s grid.
/// `fine` must cover the same horizon.
double sup_distance_on_knots(const PiecewiseLinearBoundary& coarse,
                             const PiecewiseLinearBoundary& fine);

/// Target first-passage law: density f and CDF F on [0, T].
class TargetDistribution {
public:
    struct Exponential {
        double rate;
    };
    struct Uniform {
        double a;
        double b;
    };
    /// Piecewise-linear density through (t_i, f_i); exact piecewise-quadratic CDF.
    struct Tabulated {
        std::vector<double> t;
        std::vector<double> f;
        std::vector<double> cumulative;  // F at each t_i
    };
    /// Piecewise-constant density from block masses on consecutive edges.
    struct Histogram {
        std::vector<double> edges;
        std::vector<double> masses;
        std::vector<double> cumulative;  // F at each edge
    };

    static TargetDistribution exponential(double rate);
    static TargetDistribution uniform(double a, double b);
    static TargetDistribution tabulated(std::vector<double> t, std::vector<double> f);
    static TargetDistribution histogram(std::vector<double> edges, std::vector<double> masses);

    double density(double t) const;
    double cdf(double t) const;
    /// Integral of f over [a, b], computed without differencing F where possible.
    double mass(double a, double b) const;

    /// Claimed bounds f_T^- and f_T^+ of the density on [0, T].
    double lower_bound(double horizon) const;
    double upper_bound(double horizon) const;

    std::string describe() const;

private:
    using Kind = std::variant<Exponential, Uniform, Tabulated, Histogram>;
    explicit TargetDistribution(Kind kind) : kind_(std::move(kind)) {}

    Kind kind_;
};

enum class ViolationKind { Positivity, Bounds, CdfConsistency, SurvivalMass };

std::string to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    double t;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool has(ViolationKind kind) const;
    std::string summary() const;
};

struct ValidationOptions {
    double survival_epsilon = 1e-6;
    double cdf_tolerance = 1e-8;
};

/// Check positivity, declared bounds, CDF consistency and the survival-mass
/// guard F(T) <= 1 - eps on an evenly spaced sample grid of [0, T].
/// A non-finite density sample raises ValidationError.
ValidationReport validate_target(const TargetDistribution& d, double horizon,
                                 std::size_t sample_count,
                                 const ValidationOptions& options = {});

}  // namespace ifpt
