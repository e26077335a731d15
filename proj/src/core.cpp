#include "ifpt/core.hpp"

#include "ifpt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

namespace ifpt {

// ---------------------------------------------------------------- grid

DyadicGrid::DyadicGrid(double horizon, int level, int max_level)
    : horizon_(horizon), level_(level), step_(std::ldexp(horizon, -level)) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw PreconditionError(fmt::format("grid horizon must be positive and finite, got {}", horizon));
    }
    if (level < 1 || level > max_level) {
        throw PreconditionError(fmt::format("grid level must lie in [1, {}], got {}", max_level, level));
    }
}

double DyadicGrid::knot(std::size_t m) const {
    if (m > blocks()) {
        throw DomainError(fmt::format("knot index {} outside [0, {}]", m, blocks()));
    }
    if (m == blocks()) {
        return horizon_;
    }
    // Scaling by a power of two is exact, so nested levels agree bit for bit.
    return std::ldexp(static_cast<double>(m) * horizon_, -level_);
}

std::vector<double> DyadicGrid::knots() const {
    std::vector<double> out(knot_count());
    for (std::size_t m = 0; m < out.size(); ++m) {
        out[m] = knot(m);
    }
    return out;
}

DyadicGrid DyadicGrid::refined(int level) const {
    if (level < level_) {
        throw PreconditionError(fmt::format("cannot refine level {} down to {}", level_, level));
    }
    return DyadicGrid(horizon_, level, std::max(level, kDefaultMaxLevel));
}

// ---------------------------------------------------------------- side

std::string to_string(BoundarySide side) {
    return side == BoundarySide::UpperOnly ? "upper" : "symmetric";
}

BoundarySide parse_side(const std::string& text) {
    if (text == "upper" || text == "upper-only" || text == "UpperOnly") {
        return BoundarySide::UpperOnly;
    }
    if (text == "symmetric" || text == "Symmetric") {
        return BoundarySide::Symmetric;
    }
    throw PreconditionError("unknown boundary side '" + text + "' (expected upper or symmetric)");
}

// ---------------------------------------------------------------- boundary

PiecewiseLinearBoundary::PiecewiseLinearBoundary(BoundarySide side, DyadicGrid grid,
                                                 std::vector<double> knot_values)
    : side_(side), grid_(grid), values_(std::move(knot_values)) {
    if (values_.size() != grid_.knot_count()) {
        throw PreconditionError(fmt::format("boundary needs {} knot values, got {}",
                                            grid_.knot_count(), values_.size()));
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw PreconditionError("boundary knot values must be finite");
        }
    }
    if (!(values_.front() > 0.0)) {
        throw PreconditionError(fmt::format("boundary must start strictly above 0, got {}", values_.front()));
    }
}

BoundaryPoint PiecewiseLinearBoundary::eval(double t) const {
    const double T = grid_.horizon();
    if (!(t >= 0.0 && t <= T)) {
        throw DomainError(fmt::format("boundary evaluated at t = {} outside [0, {}]", t, T));
    }
    const std::size_t last = grid_.blocks();
    auto m = static_cast<std::size_t>(std::floor(t / grid_.step()));
    m = std::min(m, last);
    double upper;
    if (t == grid_.knot(m)) {
        upper = values_[m];
    } else {
        if (m == last) {
            --m;
        }
        // t can sit a hair outside [t_m, t_{m+1}) after the floor; the
        // interpolant is still the right one up to rounding.
        const double t0 = grid_.knot(m);
        const double frac = (t - t0) / grid_.step();
        upper = values_[m] + (values_[m + 1] - values_[m]) * frac;
    }
    const double lower = side_ == BoundarySide::UpperOnly ? kNegInf : -upper;
    return {lower, upper};
}

double PiecewiseLinearBoundary::slope(std::size_t block) const {
    if (block >= grid_.blocks()) {
        throw DomainError(fmt::format("block index {} outside [0, {})", block, grid_.blocks()));
    }
    return (values_[block + 1] - values_[block]) / grid_.step();
}

std::vector<double> PiecewiseLinearBoundary::slopes() const {
    std::vector<double> out(grid_.blocks());
    for (std::size_t m = 0; m < out.size(); ++m) {
        out[m] = slope(m);
    }
    return out;
}

double PiecewiseLinearBoundary::max_abs_slope() const {
    double best = 0.0;
    for (std::size_t m = 0; m < grid_.blocks(); ++m) {
        best = std::max(best, std::abs(slope(m)));
    }
    return best;
}

double PiecewiseLinearBoundary::norm() const {
    double sup = 0.0;
    for (double v : values_) {
        sup = std::max(sup, std::abs(v));
    }
    return 2.0 * sup;
}

double sup_distance_on_knots(const PiecewiseLinearBoundary& coarse,
                             const PiecewiseLinearBoundary& fine) {
    if (coarse.grid().horizon() != fine.grid().horizon()) {
        throw PreconditionError("boundaries live on different horizons");
    }
    double sup = 0.0;
    for (std::size_t m = 0; m < coarse.grid().knot_count(); ++m) {
        const double t = coarse.grid().knot(m);
        sup = std::max(sup, std::abs(coarse.knot_value(m) - fine.upper(t)));
    }
    return sup;
}

// ---------------------------------------------------------------- targets

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void check_increasing(const std::vector<double>& t, const char* what) {
    if (t.size() < 2) {
        throw PreconditionError(fmt::format("{} needs at least two points", what));
    }
    if (t.front() != 0.0) {
        throw PreconditionError(fmt::format("{} must start at t = 0", what));
    }
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i] > t[i - 1]) || !std::isfinite(t[i])) {
            throw PreconditionError(fmt::format("{} times must be finite and strictly increasing", what));
        }
    }
}

// Index i with t[i] <= x < t[i+1], clamped to the valid segment range.
std::size_t segment_of(const std::vector<double>& t, double x) {
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    return std::min(i, t.size() - 2);
}

// Integral of the linear interpolant through (t0,f0),(t1,f1) over [a,b] within [t0,t1].
double trapezoid_piece(double t0, double f0, double t1, double f1, double a, double b) {
    const double s = (f1 - f0) / (t1 - t0);
    const double fa = f0 + s * (a - t0);
    const double fb = f0 + s * (b - t0);
    return 0.5 * (fa + fb) * (b - a);
}

double tabulated_mass(const TargetDistribution::Tabulated& tab, double a, double b) {
    a = std::max(a, tab.t.front());
    b = std::min(b, tab.t.back());
    if (!(b > a)) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i = segment_of(tab.t, a); i + 1 < tab.t.size() && tab.t[i] < b; ++i) {
        const double lo = std::max(a, tab.t[i]);
        const double hi = std::min(b, tab.t[i + 1]);
        if (hi > lo) {
            total += trapezoid_piece(tab.t[i], tab.f[i], tab.t[i + 1], tab.f[i + 1], lo, hi);
        }
    }
    return total;
}

double histogram_mass(const TargetDistribution::Histogram& h, double a, double b) {
    a = std::max(a, h.edges.front());
    b = std::min(b, h.edges.back());
    if (!(b > a)) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i = segment_of(h.edges, a); i + 1 < h.edges.size() && h.edges[i] < b; ++i) {
        const double lo = std::max(a, h.edges[i]);
        const double hi = std::min(b, h.edges[i + 1]);
        if (hi <= lo) {
            continue;
        }
        const double width = h.edges[i + 1] - h.edges[i];
        // Whole bins return the stored mass untouched.
        total += (lo == h.edges[i] && hi == h.edges[i + 1]) ? h.masses[i]
                                                            : h.masses[i] * ((hi - lo) / width);
    }
    return total;
}

}  // namespace

TargetDistribution TargetDistribution::exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw PreconditionError(fmt::format("exponential rate must be positive, got {}", rate));
    }
    return TargetDistribution(Exponential{rate});
}

TargetDistribution TargetDistribution::uniform(double a, double b) {
    if (!(a >= 0.0) || !(b > a) || !std::isfinite(b)) {
        throw PreconditionError(fmt::format("uniform support must satisfy 0 <= a < b, got [{}, {}]", a, b));
    }
    return TargetDistribution(Uniform{a, b});
}

TargetDistribution TargetDistribution::tabulated(std::vector<double> t, std::vector<double> f) {
    if (t.size() != f.size()) {
        throw PreconditionError("tabulated density needs matching t and f columns");
    }
    check_increasing(t, "tabulated density");
    for (double v : f) {
        if (!std::isfinite(v)) {
            throw ValidationError("tabulated density contains a non-finite value");
        }
    }
    Tabulated tab{std::move(t), std::move(f), {}};
    tab.cumulative.assign(tab.t.size(), 0.0);
    for (std::size_t i = 1; i < tab.t.size(); ++i) {
        tab.cumulative[i] = tab.cumulative[i - 1] +
                            0.5 * (tab.f[i - 1] + tab.f[i]) * (tab.t[i] - tab.t[i - 1]);
    }
    return TargetDistribution(std::move(tab));
}

TargetDistribution TargetDistribution::histogram(std::vector<double> edges, std::vector<double> masses) {
    if (edges.size() != masses.size() + 1) {
        throw PreconditionError("histogram needs one more edge than masses");
    }
    check_increasing(edges, "histogram");
    for (double v : masses) {
        if (!std::isfinite(v)) {
            throw ValidationError("histogram contains a non-finite mass");
        }
    }
    Histogram h{std::move(edges), std::move(masses), {}};
    h.cumulative.assign(h.edges.size(), 0.0);
    for (std::size_t i = 0; i < h.masses.size(); ++i) {
        h.cumulative[i + 1] = h.cumulative[i] + h.masses[i];
    }
    return TargetDistribution(std::move(h));
}

double TargetDistribution::density(double t) const {
    if (t < 0.0) {
        return 0.0;
    }
    return std::visit(
        overloaded{
            [t](const Exponential& e) { return e.rate * std::exp(-e.rate * t); },
            [t](const Uniform& u) { return (t >= u.a && t <= u.b) ? 1.0 / (u.b - u.a) : 0.0; },
            [t](const Tabulated& tab) {
                if (t > tab.t.back()) {
                    return 0.0;
                }
                const std::size_t i = segment_of(tab.t, t);
                const double s = (t - tab.t[i]) / (tab.t[i + 1] - tab.t[i]);
                return tab.f[i] + (tab.f[i + 1] - tab.f[i]) * s;
            },
            [t](const Histogram& h) {
                if (t > h.edges.back()) {
                    return 0.0;
                }
                const std::size_t i = segment_of(h.edges, t);
                return h.masses[i] / (h.edges[i + 1] - h.edges[i]);
            },
        },
        kind_);
}

double TargetDistribution::cdf(double t) const {
    if (t <= 0.0) {
        return 0.0;
    }
    return std::visit(
        overloaded{
            [t](const Exponential& e) { return -std::expm1(-e.rate * t); },
            [t](const Uniform& u) { return std::clamp((t - u.a) / (u.b - u.a), 0.0, 1.0); },
            [t](const Tabulated& tab) {
                if (t >= tab.t.back()) {
                    return tab.cumulative.back();
                }
                const std::size_t i = segment_of(tab.t, t);
                return tab.cumulative[i] + tabulated_mass(tab, tab.t[i], t);
            },
            [t](const Histogram& h) {
                if (t >= h.edges.back()) {
                    return h.cumulative.back();
                }
                const std::size_t i = segment_of(h.edges, t);
                return h.cumulative[i] + histogram_mass(h, h.edges[i], t);
            },
        },
        kind_);
}

double TargetDistribution::mass(double a, double b) const {
    a = std::max(a, 0.0);
    if (!(b > a)) {
        return 0.0;
    }
    return std::visit(
        overloaded{
            [a, b](const Exponential& e) { return std::exp(-e.rate * a) * -std::expm1(-e.rate * (b - a)); },
            [a, b](const Uniform& u) {
                const double lo = std::max(a, u.a);
                const double hi = std::min(b, u.b);
                return hi > lo ? (hi - lo) / (u.b - u.a) : 0.0;
            },
            [a, b](const Tabulated& tab) { return tabulated_mass(tab, a, b); },
            [a, b](const Histogram& h) { return histogram_mass(h, a, b); },
        },
        kind_);
}

double TargetDistribution::lower_bound(double horizon) const {
    return std::visit(
        overloaded{
            [horizon](const Exponential& e) { return e.rate * std::exp(-e.rate * horizon); },
            [horizon](const Uniform& u) { return (u.a <= 0.0 && u.b >= horizon) ? 1.0 / (u.b - u.a) : 0.0; },
            [this, horizon](const Tabulated& tab) {
                double lo = density(horizon);
                for (std::size_t i = 0; i < tab.t.size() && tab.t[i] <= horizon; ++i) {
                    lo = std::min(lo, tab.f[i]);
                }
                return lo;
            },
            [this, horizon](const Histogram& h) {
                double lo = density(horizon);
                for (std::size_t i = 0; i < h.masses.size() && h.edges[i] < horizon; ++i) {
                    lo = std::min(lo, h.masses[i] / (h.edges[i + 1] - h.edges[i]));
                }
                return lo;
            },
        },
        kind_);
}

double TargetDistribution::upper_bound(double horizon) const {
    return std::visit(
        overloaded{
            [](const Exponential& e) { return e.rate; },
            [](const Uniform& u) { return 1.0 / (u.b - u.a); },
            [this, horizon](const Tabulated& tab) {
                double hi = density(horizon);
                for (std::size_t i = 0; i < tab.t.size() && tab.t[i] <= horizon; ++i) {
                    hi = std::max(hi, tab.f[i]);
                }
                return hi;
            },
            [this, horizon](const Histogram& h) {
                double hi = density(horizon);
                for (std::size_t i = 0; i < h.masses.size() && h.edges[i] < horizon; ++i) {
                    hi = std::max(hi, h.masses[i] / (h.edges[i + 1] - h.edges[i]));
                }
                return hi;
            },
        },
        kind_);
}

std::string TargetDistribution::describe() const {
    return std::visit(
        overloaded{
            [](const Exponential& e) { return fmt::format("exp:{}", e.rate); },
            [](const Uniform& u) { return fmt::format("uniform:{}:{}", u.a, u.b); },
            [](const Tabulated& tab) { return fmt::format("table({} points)", tab.t.size()); },
            [](const Histogram& h) { return fmt::format("histogram({} bins)", h.masses.size()); },
        },
        kind_);
}

// ---------------------------------------------------------------- validation

std::string to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::Positivity: return "positivity";
        case ViolationKind::Bounds: return "bounds";
        case ViolationKind::CdfConsistency: return "cdf-consistency";
        case ViolationKind::SurvivalMass: return "survival-mass";
    }
    return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::summary() const {
    if (ok()) {
        return "target passed all checks";
    }
    std::ostringstream os;
    for (const auto& v : violations) {
        os << to_string(v.kind) << " at t=" << v.t << ": " << v.detail << '\n';
    }
    return os.str();
}

ValidationReport validate_target(const TargetDistribution& d, double horizon,
                                 std::size_t sample_count, const ValidationOptions& options) {
    if (sample_count < 2) {
        throw PreconditionError("validate_target needs at least two samples");
    }
    if (!(horizon > 0.0)) {
        throw PreconditionError("validate_target needs a positive horizon");
    }
    ValidationReport report;
    auto flag = [&report](ViolationKind kind, double t, std::string detail) {
        if (!report.has(kind)) {
            report.violations.push_back({kind, t, std::move(detail)});
        }
    };

    const double f_lo = d.lower_bound(horizon);
    const double f_hi = d.upper_bound(horizon);
    if (!(f_lo > 0.0) || !std::isfinite(f_hi)) {
        flag(ViolationKind::Bounds, 0.0,
             fmt::format("claimed bounds [{}, {}] are not strictly positive and finite", f_lo, f_hi));
    }

    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    const auto f = [&d](double s) { return d.density(s); };

    if (std::abs(d.cdf(0.0)) > options.cdf_tolerance) {
        flag(ViolationKind::CdfConsistency, 0.0, fmt::format("F(0) = {}", d.cdf(0.0)));
    }

    double integral = 0.0;
    double prev_t = 0.0;
    double prev_F = d.cdf(0.0);
    for (std::size_t i = 0; i < sample_count; ++i) {
        const double t = (i + 1 == sample_count)
                             ? horizon
                             : horizon * static_cast<double>(i) / static_cast<double>(sample_count - 1);
        const double ft = d.density(t);
        if (!std::isfinite(ft)) {
            throw ValidationError(fmt::format("target density is not finite at t = {}", t));
        }
        if (!(ft > 0.0)) {
            flag(ViolationKind::Positivity, t, fmt::format("f(t) = {}", ft));
        }
        if (ft < f_lo || ft > f_hi) {
            flag(ViolationKind::Bounds, t, fmt::format("f(t) = {} outside [{}, {}]", ft, f_lo, f_hi));
        }
        if (i > 0) {
            // GK15 is already exact to roundoff on these short pieces; a deep
            // recursion only chases the floor of its error estimate.
            integral += GK::integrate(f, prev_t, t, 4, 1e-12);
            const double Ft = d.cdf(t);
            if (Ft < prev_F) {
                flag(ViolationKind::CdfConsistency, t, fmt::format("F decreases from {} to {}", prev_F, Ft));
            }
            if (std::abs(Ft - integral) > options.cdf_tolerance * std::max(1.0, Ft)) {
                flag(ViolationKind::CdfConsistency, t,
                     fmt::format("F(t) = {} but the integral of f is {}", Ft, integral));
            }
            prev_F = Ft;
        }
        prev_t = t;
    }

    const double FT = d.cdf(horizon);
    if (FT > 1.0 - options.survival_epsilon) {
        flag(ViolationKind::SurvivalMass, horizon,
             fmt::format("F(T) = {} leaves less than {} survival mass", FT, options.survival_epsilon));
    }
    return report;
}

}  // namespace ifpt
