#include "doctest.h"

#include "ifpt/closed_form.hpp"
#include "ifpt/errors.hpp"
#include "ifpt/forward.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace ifpt;

namespace {

PiecewiseLinearBoundary line(double g0, double slope, double T, int n, BoundarySide side) {
    DyadicGrid grid(T, n);
    std::vector<double> v(grid.knot_count());
    for (std::size_t m = 0; m < v.size(); ++m) {
        v[m] = g0 + slope * grid.knot(m);
    }
    return PiecewiseLinearBoundary(side, grid, v);
}

const QuadratureConfig kCfg{};

}  // namespace

TEST_CASE("init_subdensity examples") {
    auto b = line(1.0, 0.0, 1.0, 1, BoundarySide::UpperOnly);
    auto p = init_subdensity(b, kCfg);
    CHECK(p.time == 0.5);
    CHECK(p.survival == doctest::Approx(0.8427007929497148).epsilon(1e-12));
    CHECK(p.quadrature_mass() == doctest::Approx(0.8427007929497148).epsilon(1e-10));
    for (std::size_t j = 0; j < p.nodes.size(); ++j) {
        CHECK(p.nodes[j] < 1.0);
        CHECK(p.values[j] >= 0.0);
    }
    // The absorbed density vanishes at the boundary itself.
    CHECK(linear_transition_kernel(1.0, 1.0, 0.0, 0.0, 0.5, 1.0) == 0.0);

    auto s = line(1.0, 0.0, 1.0, 1, BoundarySide::Symmetric);
    auto q = init_subdensity(s, kCfg);
    const double expect = 1.0 - constant_boundary_cdf(1.0, 0.5, BoundarySide::Symmetric);
    CHECK(q.survival == doctest::Approx(expect).epsilon(1e-12));
    CHECK(q.quadrature_mass() == doctest::Approx(expect).epsilon(1e-10));
    for (double x : q.nodes) {
        CHECK(std::abs(x) < 1.0);
    }
}

TEST_CASE("propagate_subdensity examples") {
    SUBCASE("far boundary absorbs nothing") {
        auto b = line(1e6, 0.0, 1.0, 3, BoundarySide::UpperOnly);
        auto p = init_subdensity(b, kCfg);
        auto q = propagate_subdensity(p, b, kCfg);
        CHECK(std::abs(q.quadrature_mass() - p.quadrature_mass()) < 1e-12);
        CHECK(q.block_mass < 1e-300);
    }
    SUBCASE("two half-blocks against the reflection principle") {
        auto b = line(1.0, 0.0, 1.0, 2, BoundarySide::UpperOnly);
        auto p = propagate_subdensity(init_subdensity(b, kCfg), b, kCfg);
        CHECK(p.time == 0.5);
        CHECK(std::abs(p.survival - (2 * oracle::Phi(1.0 / std::sqrt(0.5)) - 1)) < 1e-8);
        CHECK(std::abs(p.quadrature_mass() - (2 * oracle::Phi(1.0 / std::sqrt(0.5)) - 1)) < 1e-8);
    }
    SUBCASE("zero density stays zero") {
        auto b = line(1.0, 0.0, 1.0, 2, BoundarySide::UpperOnly);
        auto p = init_subdensity(b, kCfg);
        std::fill(p.values.begin(), p.values.end(), 0.0);
        p.survival = 0.0;
        auto q = propagate_subdensity(p, b, kCfg);
        for (double v : q.values) {
            CHECK(v == 0.0);
        }
        CHECK(q.block_mass == 0.0);
    }
}

TEST_CASE("survival_probability examples") {
    auto flat = line(1.0, 0.0, 1.0, 3, BoundarySide::UpperOnly);
    CHECK(std::abs(survival_probability(flat, 8, kCfg) - 0.6826894921370859) < 1e-8);
    CHECK(survival_probability(flat, 1, kCfg) == init_subdensity(flat, kCfg).survival);
    CHECK_THROWS_AS(survival_probability(flat, 0, kCfg), DomainError);

    auto sloped = line(1.0, 0.5, 1.0, 5, BoundarySide::UpperOnly);
    const double expect = 1.0 - oracle::integrate([](double t) { return oracle::linear_density(0.5, 1.0, t); }, 0.0, 1.0);
    CHECK(std::abs(survival_probability(sloped, 32, kCfg) - expect) < 1e-8);
}

TEST_CASE("block_crossing_probability examples") {
    auto flat = line(1.0, 0.0, 1.0, 1, BoundarySide::UpperOnly);
    CHECK(block_crossing_probability(flat, 1e6, 1, kCfg) < 1e-12);
    const double surv = survival_probability(flat, 1, kCfg);
    CHECK(block_crossing_probability(flat, -1e3, 1, kCfg) == doctest::Approx(surv).epsilon(1e-9));
    CHECK(std::abs(block_crossing_probability(flat, 0.0, 1, kCfg) - 0.16001130081262893) < 1e-9);

    for (auto side : {BoundarySide::UpperOnly, BoundarySide::Symmetric}) {
        auto b = line(1.0, 0.0, 1.0, 3, side);
        double last = 1.0;
        for (double a : {-3.0, -1.0, -0.2, 0.0, 0.4, 2.0, 6.0}) {
            const double pm = block_crossing_probability(b, a, 3, kCfg);
            CHECK(pm < last);
            CHECK(pm > 0.0);
            last = pm;
        }
    }
}

TEST_CASE("fpt_distribution_table examples") {
    auto flat = line(1.0, 0.0, 1.0, 2, BoundarySide::UpperOnly);
    auto tab = fpt_distribution_table(flat, kCfg);
    REQUIRE(tab.rows.size() == 4);
    CHECK(std::abs(tab.rows.back().cdf - 0.31731050786291415) < 1e-9);
    double sum = 0.0;
    for (const auto& r : tab.rows) {
        sum += r.block_mass;
        CHECK(r.avg_density == doctest::Approx(r.block_mass / 0.25));
    }
    CHECK(sum == doctest::Approx(tab.rows.back().cdf).epsilon(1e-15));

    auto far = fpt_distribution_table(line(1e6, 0.0, 1.0, 3, BoundarySide::UpperOnly), kCfg);
    for (const auto& r : far.rows) {
        CHECK(r.block_mass < 1e-300);
    }
}

TEST_CASE("mass conservation and monotone survival") {
    for (auto side : {BoundarySide::UpperOnly, BoundarySide::Symmetric}) {
        DyadicGrid grid(1.5, 5);
        std::vector<double> v(grid.knot_count());
        for (std::size_t m = 0; m < v.size(); ++m) {
            const double t = grid.knot(m);
            v[m] = 0.9 + 0.4 * std::sin(3 * t) + 0.2 * t;
        }
        auto tab = fpt_distribution_table(PiecewiseLinearBoundary(side, grid, v), kCfg);
        CHECK(tab.max_mass_defect < 1e-9);
        for (std::size_t m = 1; m < tab.rows.size(); ++m) {
            CHECK(tab.rows[m].cdf > tab.rows[m - 1].cdf);
        }
    }
}

TEST_CASE("markov composition across half steps") {
    for (auto side : {BoundarySide::UpperOnly, BoundarySide::Symmetric}) {
        // Coarse boundary with a kink at 0.5; the fine one just adds knots on the same segments.
        PiecewiseLinearBoundary coarse(side, DyadicGrid(1.0, 1), {1.0, 0.8, 1.6});
        PiecewiseLinearBoundary fine(side, DyadicGrid(1.0, 2), {1.0, 0.9, 0.8, 1.2, 1.6});
        auto c = fpt_distribution_table(coarse, kCfg);
        auto f = fpt_distribution_table(fine, kCfg);
        CHECK(std::abs(c.rows[0].cdf - f.rows[1].cdf) < 1e-9);
        CHECK(std::abs(c.rows[1].cdf - f.rows[3].cdf) < 1e-9);
        CHECK(std::abs(c.rows[1].quadrature_survival - f.rows[3].quadrature_survival) < 1e-9);
    }
}

TEST_CASE("linear boundaries match the closed-form densities per block") {
    auto up = line(1.0, 0.5, 1.0, 5, BoundarySide::UpperOnly);
    auto tab = fpt_distribution_table(up, kCfg);
    const double dt = up.grid().step();
    for (std::size_t m = 0; m < tab.rows.size(); ++m) {
        const double ref = oracle::integrate([](double t) { return oracle::linear_density(0.5, 1.0, t); }, m * dt, (m + 1) * dt);
        CHECK(std::abs(tab.rows[m].block_mass - ref) < 1e-6);
    }
    for (double C : {0.0, 0.5}) {
        auto sym = line(1.0, C, 1.0, 4, BoundarySide::Symmetric);
        auto st = fpt_distribution_table(sym, kCfg);
        const double h = sym.grid().step();
        for (std::size_t m = 0; m < st.rows.size(); ++m) {
            const double ref = oracle::integrate([C](double t) { return symmetric_linear_density(C, 1.0, t); }, m * h, (m + 1) * h);
            CHECK(std::abs(st.rows[m].block_mass - ref) < 1e-6);
        }
    }
}

TEST_CASE("residual_fgkey responds to slope perturbations") {
    auto b = line(1.0, 0.0, 1.0, 3, BoundarySide::UpperOnly);
    const double dt = b.grid().step();
    std::vector<double> masses;
    for (std::size_t m = 0; m < 8; ++m) {
        masses.push_back(oracle::reflection_cdf(1.0, (m + 1) * dt) - oracle::reflection_cdf(1.0, m * dt));
    }
    std::vector<double> edges(b.grid().knots());
    auto target = TargetDistribution::histogram(edges, masses);
    for (std::size_t m = 0; m < 8; ++m) {
        CHECK(std::abs(residual_fgkey(b, target, m, kCfg)) < 1e-8 / dt);
    }
    std::vector<double> v(b.knot_values().begin(), b.knot_values().end());
    for (std::size_t k = 5; k < v.size(); ++k) {
        v[k] += 0.1 * dt;
    }
    PiecewiseLinearBoundary bumped(BoundarySide::UpperOnly, b.grid(), v);
    CHECK(residual_fgkey(bumped, target, 4, kCfg) < -1e-4);

    auto far = line(1e6, 0.0, 1.0, 3, BoundarySide::UpperOnly);
    auto expo = TargetDistribution::exponential(1.0);
    CHECK(residual_fgkey(far, expo, 2, kCfg) == doctest::Approx(-expo.mass(2 * dt, 3 * dt) / dt).epsilon(1e-12));
}
