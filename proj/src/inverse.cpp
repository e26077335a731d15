#include "ifpt/inverse.hpp"

#include "ifpt/closed_form.hpp"
#include "ifpt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace ifpt {

namespace {

struct Root {
    double x;
    double value;
    double lo;
    double hi;
    int iterations;
};

// Refine a bracket [lo, hi] of a decreasing h with h(lo) > 0 > h(hi).
// Bisection until the bracket is narrow, then Illinois false position.
template <class H>
Root refine_bracket(H&& h, double lo, double hi, double flo, double fhi, double tol, int used,
                    const SolverConfig& cfg) {
    Root best{std::abs(flo) < std::abs(fhi) ? lo : hi, std::abs(flo) < std::abs(fhi) ? flo : fhi, lo, hi, used};
    int kept = 0;  // +1 when lo stayed put last step, -1 for hi
    for (int it = used; it < cfg.max_iterations; ++it) {
        double x = 0.5 * (lo + hi);
        if (hi - lo < cfg.secant_switch_width) {
            const double xs = (lo * fhi - hi * flo) / (fhi - flo);
            if (xs > lo && xs < hi) {
                x = xs;
            }
        }
        const double fx = h(x);
        if (std::abs(fx) < std::abs(best.value)) {
            best.x = x;
            best.value = fx;
        }
        best.iterations = it + 1;
        if (std::abs(fx) <= tol) {
            best.lo = lo;
            best.hi = hi;
            return best;
        }
        if (fx > 0.0) {
            lo = x;
            flo = fx;
            if (kept == -1) {
                fhi *= 0.5;
            }
            kept = -1;
        } else {
            hi = x;
            fhi = fx;
            if (kept == 1) {
                flo *= 0.5;
            }
            kept = 1;
        }
        const double ulp = std::numeric_limits<double>::epsilon() * std::max({std::abs(lo), std::abs(hi), 1e-300});
        if (hi - lo <= 4.0 * ulp) {
            break;
        }
    }
    best.lo = lo;
    best.hi = hi;
    return best;
}

double mass_tolerance(double target, const SolverConfig& cfg) {
    return std::min(cfg.probability_tolerance, cfg.relative_tolerance * target);
}

void check_converged(const Root& r, double tol, std::size_t block) {
    if (!(std::abs(r.value) <= tol)) {
        throw ConvergenceError(fmt::format(
            "block {}: root search stalled at residual {:.3e} (tolerance {:.3e}) after {} evaluations", block,
            r.value, tol, r.iterations));
    }
}

}  // namespace

void SolverConfig::validate() const {
    if (!(probability_tolerance > 0.0) || !(relative_tolerance > 0.0)) {
        throw PreconditionError("solver tolerances must be positive");
    }
    if (!(bracket_growth > 1.0) || !(bracket_half_width > 0.0)) {
        throw PreconditionError("bracket growth must exceed 1 and the half width must be positive");
    }
    if (max_iterations < 1) {
        throw PreconditionError("max_iterations must be positive");
    }
    quadrature.validate();
}

std::pair<double, BlockSolveRecord> solve_first_block(const TargetDistribution& d, const DyadicGrid& grid,
                                                      BoundarySide side, const SolverConfig& cfg) {
    const double dt = grid.step();
    const double mu = d.mass(0.0, dt);
    if (!(mu > 0.0) || !(mu < 1.0 - cfg.probability_tolerance)) {
        throw InfeasibleTargetError(0, fmt::format("block 0: target mass {} is not inside (0, 1)", mu));
    }
    auto h = [&](double level) { return constant_boundary_cdf(level, dt, side) - mu; };
    const double tol = mass_tolerance(mu, cfg);

    // The level lives on (0, inf): expand upward, shrink toward 0.
    int used = 0;
    double hi = cfg.bracket_half_width;
    double fhi = h(hi);
    ++used;
    while (fhi > 0.0) {
        hi *= cfg.bracket_growth;
        if (hi > cfg.bracket_limit) {
            throw DivergenceError("block 0: level bracket exceeded its expansion limit");
        }
        fhi = h(hi);
        ++used;
    }
    double lo = hi / cfg.bracket_growth;
    double flo = h(lo);
    ++used;
    while (flo <= 0.0) {
        hi = lo;
        fhi = flo;
        lo /= cfg.bracket_growth;
        if (lo < 1.0 / cfg.bracket_limit) {
            throw DivergenceError("block 0: level bracket collapsed toward zero");
        }
        flo = h(lo);
        ++used;
    }
    Root r = (std::abs(fhi) <= tol) ? Root{hi, fhi, lo, hi, used}
                                    : refine_bracket(h, lo, hi, flo, fhi, tol, used, cfg);
    check_converged(r, tol, 0);

    BlockSolveRecord rec;
    rec.block = 0;
    rec.unknown = r.x;
    rec.slope = 0.0;
    rec.target_mass = mu;
    rec.achieved = mu + r.value;
    rec.residual = r.value;
    rec.bracket_lo = r.lo;
    rec.bracket_hi = r.hi;
    rec.iterations = r.iterations;
    return {r.x, rec};
}

std::pair<double, BlockSolveRecord> solve_block(const SubDensity& p, double g_m, const TargetDistribution& d,
                                                const DyadicGrid& grid, std::size_t m, BoundarySide side,
                                                const SolverConfig& cfg) {
    const double dt = grid.step();
    const double mu = d.mass(grid.knot(m), grid.knot(m + 1));
    if (!(mu > 0.0)) {
        throw InfeasibleTargetError(m, fmt::format("block {}: target mass {} is not positive", m, mu));
    }
    if (!(mu < p.survival - cfg.probability_tolerance)) {
        throw InfeasibleTargetError(
            m, fmt::format("block {}: target mass {} exceeds the surviving mass {}", m, mu, p.survival));
    }
    auto h = [&](double slope) { return block_crossing_probability(p, side, g_m, slope, dt) - mu; };
    const double tol = mass_tolerance(mu, cfg);

    int used = 0;
    double w = cfg.bracket_half_width;
    double lo = -w, hi = w;
    double flo = h(lo), fhi = h(hi);
    used += 2;
    while (flo <= 0.0 || fhi >= 0.0) {
        w *= cfg.bracket_growth;
        if (w > cfg.bracket_limit) {
            throw DivergenceError(fmt::format("block {}: slope bracket exceeded its expansion limit", m));
        }
        if (flo <= 0.0) {
            hi = lo;
            fhi = flo;
            lo = -w;
            flo = h(lo);
            ++used;
        }
        if (fhi >= 0.0) {
            lo = hi;
            flo = fhi;
            hi = w;
            fhi = h(hi);
            ++used;
        }
    }
    Root r = refine_bracket(h, lo, hi, flo, fhi, tol, used, cfg);
    check_converged(r, tol, m);

    BlockSolveRecord rec;
    rec.block = m;
    rec.unknown = r.x;
    rec.slope = r.x;
    rec.target_mass = mu;
    rec.achieved = mu + r.value;
    rec.residual = r.value;
    rec.bracket_lo = r.lo;
    rec.bracket_hi = r.hi;
    rec.iterations = r.iterations;
    return {r.x, rec};
}

InverseSolution construct_boundary(const TargetDistribution& d, double T, int n, BoundarySide side,
                                   const SolverConfig& cfg, std::vector<BlockSolveRecord>* progress) {
    cfg.validate();
    const DyadicGrid grid(T, n);
    const double dt = grid.step();
    std::vector<double> knots(grid.knot_count());
    std::vector<BlockSolveRecord> records;
    records.reserve(grid.blocks());
    auto keep = [&](const BlockSolveRecord& r) {
        records.push_back(r);
        if (progress) {
            progress->push_back(r);
        }
    };

    auto [level, first] = solve_first_block(d, grid, side, cfg);
    knots[0] = level;
    knots[1] = level;
    SubDensity p = propagate_segment(point_mass_at_origin(), side, level, level, dt, cfg.quadrature);
    p.time = grid.knot(1);
    // Report the mass the propagation actually absorbed.
    first.achieved = p.block_mass;
    first.residual = p.block_mass - first.target_mass;
    keep(first);

    for (std::size_t m = 1; m < grid.blocks(); ++m) {
        auto [slope, rec] = solve_block(p, knots[m], d, grid, m, side, cfg);
        knots[m + 1] = knots[m] + slope * dt;
        p = propagate_segment(p, side, knots[m], knots[m + 1], dt, cfg.quadrature);
        p.time = grid.knot(m + 1);
        rec.achieved = p.block_mass;
        rec.residual = p.block_mass - rec.target_mass;
        keep(rec);
    }

    InverseSolution sol{PiecewiseLinearBoundary(side, grid, std::move(knots)), std::move(records)};
    sol.max_abs_slope = sol.boundary.max_abs_slope();
    for (const auto& r : sol.records) {
        sol.max_abs_residual = std::max(sol.max_abs_residual, std::abs(r.residual));
    }
    sol.final_survival = p.survival;
    sol.slope_warning = sol.max_abs_slope > cfg.slope_warning;
    return sol;
}

double nested_defect(const InverseSolution& fine, const TargetDistribution& d, const DyadicGrid& coarse_grid) {
    const DyadicGrid& g = fine.boundary.grid();
    if (coarse_grid.level() > g.level() || coarse_grid.horizon() != g.horizon()) {
        throw PreconditionError("nested defect needs a coarser grid on the same horizon");
    }
    const std::size_t ratio = std::size_t{1} << (g.level() - coarse_grid.level());
    double worst = 0.0;
    for (std::size_t k = 0; k < coarse_grid.blocks(); ++k) {
        double realized = 0.0;
        for (std::size_t j = 0; j < ratio; ++j) {
            realized += fine.records[k * ratio + j].achieved;
        }
        const double target = d.mass(coarse_grid.knot(k), coarse_grid.knot(k + 1));
        worst = std::max(worst, std::abs(realized - target));
    }
    return worst;
}

RefinementReport refine(const TargetDistribution& d, double T, int n_min, int n_max, BoundarySide side,
                        const SolverConfig& cfg) {
    if (n_min < 1 || n_max < n_min || n_max > kDefaultMaxLevel) {
        throw PreconditionError(fmt::format("refinement needs 1 <= n_min <= n_max <= {}", kDefaultMaxLevel));
    }
    RefinementReport report;
    const DyadicGrid base(T, n_min);
    for (int n = n_min; n <= n_max; ++n) {
        InverseSolution sol = construct_boundary(d, T, n, side, cfg);
        std::optional<double> dist;
        if (!report.levels.empty()) {
            dist = sup_distance_on_knots(report.levels.back().solution.boundary, sol.boundary);
        }
        const double slope = sol.max_abs_slope;
        const double defect = nested_defect(sol, d, base);
        report.levels.push_back({n, std::move(sol), dist, slope, defect});
    }
    return report;
}

double cross_horizon_distance(const InverseSolution& a, const InverseSolution& b) {
    const double horizon = std::min(a.boundary.grid().horizon(), b.boundary.grid().horizon());
    double sup = 0.0;
    const DyadicGrid& g = a.boundary.grid();
    for (std::size_t m = 0; m < g.knot_count() && g.knot(m) <= horizon; ++m) {
        sup = std::max(sup, std::abs(a.boundary.knot_value(m) - b.boundary.upper(g.knot(m))));
    }
    return sup;
}

}  // namespace ifpt
