#include "ifpt/forward.hpp"

#include "ifpt/closed_form.hpp"
#include "ifpt/errors.hpp"
#include "ifpt/normal.hpp"
#include "ifpt/parallel.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

namespace ifpt {

namespace {

struct Rule {
    std::vector<double> x;  // on [-1, 1]
    std::vector<double> w;
};

template <unsigned N>
Rule make_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    Rule r;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    // Boost stores the nonnegative half; mirror it.
    for (std::size_t i = a.size(); i-- > 0;) {
        if (a[i] != 0.0) {
            r.x.push_back(-a[i]);
            r.w.push_back(w[i]);
        }
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        r.x.push_back(a[i]);
        r.w.push_back(w[i]);
    }
    return r;
}

const Rule& gauss_rule(int order) {
    static const Rule r8 = make_rule<8>();
    static const Rule r10 = make_rule<10>();
    static const Rule r12 = make_rule<12>();
    static const Rule r16 = make_rule<16>();
    static const Rule r20 = make_rule<20>();
    switch (order) {
        case 8: return r8;
        case 10: return r10;
        case 12: return r12;
        case 16: return r16;
        case 20: return r20;
        default: throw PreconditionError(fmt::format("unsupported panel order {}", order));
    }
}

void add_panel(double a, double b, const Rule& rule, std::vector<double>& x, std::vector<double>& w) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        x.push_back(mid + half * rule.x[i]);
        w.push_back(half * rule.w[i]);
    }
}

// Composite rule on [lo, hi] with panels of about width h. Panels touching an
// absorbing edge are split geometrically (1/2, 1/4, 1/4 at the edge).
void layout_nodes(double lo, double hi, bool absorb_lo, bool absorb_hi, double h, const Rule& rule,
                  std::vector<double>& x, std::vector<double>& w) {
    const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / h)));
    const double width = (hi - lo) / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double a = lo + width * static_cast<double>(k);
        const double b = (k + 1 == count) ? hi : lo + width * static_cast<double>(k + 1);
        const bool edge_lo = absorb_lo && k == 0;
        const bool edge_hi = absorb_hi && k + 1 == count;
        if (edge_lo && edge_hi) {
            const double q = 0.25 * (b - a);
            add_panel(a, a + 0.5 * q, rule, x, w);
            add_panel(a + 0.5 * q, a + q, rule, x, w);
            add_panel(a + q, b - q, rule, x, w);
            add_panel(b - q, b - 0.5 * q, rule, x, w);
            add_panel(b - 0.5 * q, b, rule, x, w);
        } else if (edge_lo) {
            add_panel(a, a + 0.25 * (b - a), rule, x, w);
            add_panel(a + 0.25 * (b - a), a + 0.5 * (b - a), rule, x, w);
            add_panel(a + 0.5 * (b - a), b, rule, x, w);
        } else if (edge_hi) {
            add_panel(a, a + 0.5 * (b - a), rule, x, w);
            add_panel(a + 0.5 * (b - a), b - 0.25 * (b - a), rule, x, w);
            add_panel(b - 0.25 * (b - a), b, rule, x, w);
        } else {
            add_panel(a, b, rule, x, w);
        }
    }
}

BoundaryPoint corridor(BoundarySide side, double g) {
    return {side == BoundarySide::UpperOnly ? kNegInf : -g, g};
}

}  // namespace

void QuadratureConfig::validate() const {
    if (nodes_per_block < 8) {
        throw PreconditionError(fmt::format("nodes_per_block must be at least 8, got {}", nodes_per_block));
    }
    if (!(truncation_width >= 4.0)) {
        throw PreconditionError(fmt::format("truncation_width must be at least 4, got {}", truncation_width));
    }
    if (!(kernel_cutoff > 0.0) || !(mass_tolerance > 0.0)) {
        throw PreconditionError("kernel_cutoff and mass_tolerance must be positive");
    }
    gauss_rule(panel_order);
}

double SubDensity::quadrature_mass() const {
    double s = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        s += weights[j] * values[j];
    }
    return s;
}

SubDensity point_mass_at_origin() {
    SubDensity p;
    p.nodes = {0.0};
    p.weights = {1.0};
    p.values = {1.0};
    return p;
}

double segment_block_mass(const SubDensity& p, BoundarySide side, double g0, double g1, double dt) {
    const BoundaryPoint b0 = corridor(side, g0);
    const BoundaryPoint b1 = corridor(side, g1);
    double mass = 0.0;
    for (std::size_t j = 0; j < p.nodes.size(); ++j) {
        if (p.values[j] != 0.0) {
            mass += p.weights[j] * p.values[j] * block_hit_probability(b0, b1, p.nodes[j], dt);
        }
    }
    return mass;
}

SubDensity propagate_segment(const SubDensity& p, BoundarySide side, double g0, double g1, double dt,
                             const QuadratureConfig& cfg) {
    const BoundaryPoint b0 = corridor(side, g0);
    const BoundaryPoint b1 = corridor(side, g1);

    SubDensity out;
    out.time = p.time + dt;
    out.knot = p.knot + 1;
    out.block_mass = segment_block_mass(p, side, g0, g1, dt);
    out.survival = std::max(0.0, p.survival - out.block_mass);

    const double spread = cfg.truncation_width * std::sqrt(out.time);
    double lo = -spread;
    double hi = std::min(g1, spread);
    bool absorb_lo = false;
    const bool absorb_hi = g1 <= spread;
    if (side == BoundarySide::Symmetric && -g1 >= lo) {
        lo = -g1;
        absorb_lo = true;
    }
    if (!(hi > lo)) {
        return out;  // nothing alive inside the truncated window
    }
    const double sigma = std::sqrt(dt);
    const double h = sigma * cfg.truncation_width * cfg.panel_order / cfg.nodes_per_block;
    layout_nodes(lo, hi, absorb_lo, absorb_hi, h, gauss_rule(cfg.panel_order), out.nodes, out.weights);
    out.values.assign(out.nodes.size(), 0.0);

    const double reach = cfg.kernel_cutoff * sigma;
    parallel_for(out.nodes.size(), [&](std::size_t i) {
        const double y = out.nodes[i];
        auto first = std::lower_bound(p.nodes.begin(), p.nodes.end(), y - reach);
        auto last = std::upper_bound(first, p.nodes.end(), y + reach);
        double acc = 0.0;
        for (auto it = first; it != last; ++it) {
            const auto j = static_cast<std::size_t>(it - p.nodes.begin());
            if (p.values[j] == 0.0) {
                continue;
            }
            const double x = p.nodes[j];
            acc += p.weights[j] * p.values[j] * normal::heat_kernel(y - x, dt) *
                   bridge_noncrossing_probability(b0, b1, x, y, dt);
        }
        out.values[i] = acc;
    });

    const double before = p.quadrature_mass();
    const double after = out.quadrature_mass();
    if (after > before + cfg.mass_tolerance) {
        throw NumericalConsistencyError(
            fmt::format("propagation to t = {} created mass: {} -> {}", out.time, before, after));
    }
    return out;
}

SubDensity init_subdensity(const PiecewiseLinearBoundary& b, const QuadratureConfig& cfg) {
    return propagate_subdensity(point_mass_at_origin(), b, cfg);
}

SubDensity propagate_subdensity(const SubDensity& p, const PiecewiseLinearBoundary& b,
                                const QuadratureConfig& cfg) {
    const auto& grid = b.grid();
    if (p.knot >= grid.blocks()) {
        throw DomainError("cannot propagate past the horizon");
    }
    if (p.time != grid.knot(p.knot)) {
        throw PreconditionError("subdensity time does not sit on the boundary grid");
    }
    SubDensity out = propagate_segment(p, b.side(), b.knot_value(p.knot), b.knot_value(p.knot + 1),
                                       grid.step(), cfg);
    out.time = grid.knot(out.knot);
    return out;
}

SubDensity subdensity_at(const PiecewiseLinearBoundary& b, std::size_t m, const QuadratureConfig& cfg) {
    cfg.validate();
    if (m > b.grid().blocks()) {
        throw DomainError(fmt::format("knot index {} beyond the grid", m));
    }
    SubDensity p = point_mass_at_origin();
    for (std::size_t k = 0; k < m; ++k) {
        p = propagate_subdensity(p, b, cfg);
    }
    return p;
}

double survival_probability(const PiecewiseLinearBoundary& b, std::size_t m, const QuadratureConfig& cfg) {
    if (m < 1 || m > b.grid().blocks()) {
        throw DomainError(fmt::format("survival needs 1 <= m <= {}, got {}", b.grid().blocks(), m));
    }
    return subdensity_at(b, m, cfg).survival;
}

double block_crossing_probability(const SubDensity& p, BoundarySide side, double g_m, double slope, double dt) {
    return segment_block_mass(p, side, g_m, g_m + slope * dt, dt);
}

double block_crossing_probability(const PiecewiseLinearBoundary& b, double slope, std::size_t m,
                                  const QuadratureConfig& cfg) {
    if (m >= b.grid().blocks()) {
        throw DomainError(fmt::format("block index {} beyond the grid", m));
    }
    const SubDensity p = subdensity_at(b, m, cfg);
    const double mass = block_crossing_probability(p, b.side(), b.knot_value(m), slope, b.grid().step());
    if (mass < -cfg.mass_tolerance) {
        throw NumericalConsistencyError(fmt::format("negative crossing probability {}", mass));
    }
    return std::max(0.0, mass);
}

std::vector<double> FptTable::block_masses() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(r.block_mass);
    }
    return out;
}

FptTable fpt_distribution_table(const PiecewiseLinearBoundary& b, const QuadratureConfig& cfg) {
    cfg.validate();
    const auto& grid = b.grid();
    FptTable table;
    table.rows.reserve(grid.blocks());
    SubDensity p = point_mass_at_origin();
    double cdf = 0.0;
    for (std::size_t m = 0; m < grid.blocks(); ++m) {
        p = propagate_subdensity(p, b, cfg);
        cdf += p.block_mass;
        const double quad = p.quadrature_mass();
        table.rows.push_back({p.time, cdf, p.block_mass, p.block_mass / grid.step(), quad});
        table.max_mass_defect = std::max(table.max_mass_defect, std::abs(cdf + quad - 1.0));
    }
    return table;
}

double residual_fgkey(const PiecewiseLinearBoundary& b, const TargetDistribution& d, std::size_t m,
                      const QuadratureConfig& cfg) {
    const double dt = b.grid().step();
    const double realized = block_crossing_probability(b, b.slope(m), m, cfg);
    const double target = d.mass(b.grid().knot(m), b.grid().knot(m + 1));
    return (realized - target) / dt;
}

}  // namespace ifpt
