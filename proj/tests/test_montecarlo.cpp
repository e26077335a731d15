#include "doctest.h"

#include "ifpt/closed_form.hpp"
#include "ifpt/errors.hpp"
#include "ifpt/forward.hpp"
#include "ifpt/montecarlo.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace ifpt;

TEST_CASE("philox known answers") {
    using B = Philox4x32::Block;
    CHECK(Philox4x32::bijection(B{0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::bijection(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::bijection(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});

    Philox4x32 a(42, 7), b(42, 7), c(42, 8);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto va = a();
        CHECK(va == b());
        differs = differs || va != c();
    }
    CHECK(differs);
}

TEST_CASE("simulate_hitting_times examples") {
    DyadicGrid grid(1.0, 1);
    PiecewiseLinearBoundary flat(BoundarySide::UpperOnly, grid, {1.0, 1.0, 1.0});
    SimConfig cfg;
    cfg.paths = 1000000;
    cfg.seed = 99;
    auto e = simulate_hitting_times(flat, cfg);
    const double p = oracle::reflection_cdf(1.0, 1.0);
    const double se = std::sqrt(p * (1 - p) / cfg.paths);
    CHECK(std::abs(e.total_frequency() - p) < 3 * se);
    CHECK(e.survivors + e.hits[0] + e.hits[1] == cfg.paths);

    auto again = simulate_hitting_times(flat, cfg);
    CHECK(again.hits == e.hits);
    CHECK(again.survivors == e.survivors);

    PiecewiseLinearBoundary far(BoundarySide::Symmetric, grid, {1e6, 1e6, 1e6});
    cfg.paths = 10000;
    auto none = simulate_hitting_times(far, cfg);
    CHECK(none.survivors == cfg.paths);

    cfg.paths = 0;
    CHECK_THROWS_AS(simulate_hitting_times(flat, cfg), PreconditionError);
}

TEST_CASE("symmetric simulation matches the two-sided closed form per block") {
    DyadicGrid grid(1.0, 2);
    PiecewiseLinearBoundary band(BoundarySide::Symmetric, grid, {1.0, 1.0, 1.0, 1.0, 1.0});
    SimConfig cfg;
    cfg.paths = 400000;
    auto e = simulate_hitting_times(band, cfg);
    for (std::size_t m = 0; m < 4; ++m) {
        const double F1 = constant_boundary_cdf(1.0, grid.knot(m + 1), BoundarySide::Symmetric);
        const double F0 = m == 0 ? 0.0 : constant_boundary_cdf(1.0, grid.knot(m), BoundarySide::Symmetric);
        const double p = F1 - F0;
        CHECK(std::abs(e.frequency(m) - p) < 3.5 * std::sqrt(p * (1 - p) / cfg.paths));
    }
}

TEST_CASE("substeps leave linear segments unbiased") {
    DyadicGrid grid(1.0, 1);
    PiecewiseLinearBoundary kinked(BoundarySide::UpperOnly, grid, {0.8, 0.8, 1.4});
    SimConfig one;
    one.paths = 300000;
    SimConfig four = one;
    four.substeps = 4;
    four.seed = one.seed + 1;
    auto a = simulate_hitting_times(kinked, one);
    auto b = simulate_hitting_times(kinked, four);
    const double p = a.total_frequency();
    CHECK(std::abs(a.total_frequency() - b.total_frequency()) < 4.0 * std::sqrt(2 * p * (1 - p) / one.paths));
}

TEST_CASE("segment simulation against the crossing probability") {
    SimConfig cfg;
    cfg.paths = 300000;
    const BoundaryPoint b0{kNegInf, 0.7}, b1{kNegInf, 1.1};
    const double p = block_hit_probability(b0, b1, 0.1, 0.6);
    const auto hits = simulate_segment_hits(b0, b1, 0.1, 0.6, cfg);
    CHECK(std::abs(static_cast<double>(hits) / cfg.paths - p) < 3.5 * std::sqrt(p * (1 - p) / cfg.paths));
}

TEST_CASE("ks_block_distance examples") {
    DyadicGrid grid(1.0, 2);
    auto target = TargetDistribution::histogram(grid.knots(), {0.125, 0.25, 0.0625, 0.125});
    EmpiricalHittingDistribution exact{grid, {1000, 2000, 500, 1000}, 3500, 8000};
    CHECK(ks_block_distance(exact, target) == doctest::Approx(0.0).epsilon(1e-15));
    EmpiricalHittingDistribution shifted{grid, {1000, 2080, 500, 1000}, 3420, 8000};
    CHECK(ks_block_distance(shifted, target) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("brute_force_block_check examples") {
    PiecewiseLinearBoundary flat(BoundarySide::UpperOnly, DyadicGrid(1.0, 1), {1.0, 1.0, 1.0});
    CHECK(std::abs(brute_force_block_check(flat, 1, {}) - 0.16001130081262893) < 1e-6);
    CHECK_THROWS_AS(brute_force_block_check(PiecewiseLinearBoundary(BoundarySide::UpperOnly, DyadicGrid(1.0, 3),
                                                                    std::vector<double>(9, 1.0)),
                                            4, {}),
                    PreconditionError);

    for (auto side : {BoundarySide::UpperOnly, BoundarySide::Symmetric}) {
        PiecewiseLinearBoundary b(side, DyadicGrid(1.0, 2), {1.0, 1.0, 0.8, 1.3, 1.1});
        for (std::size_t m : {1, 2}) {
            const double brute = brute_force_block_check(b, m, {});
            const double fwd = block_crossing_probability(b, b.slope(m), m, {});
            CHECK(std::abs(brute - fwd) < 1e-6);
        }
    }
}
