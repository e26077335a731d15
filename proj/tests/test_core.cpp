#include "doctest.h"

#include "ifpt/core.hpp"
#include "ifpt/errors.hpp"

#include <cmath>
#include <random>

using namespace ifpt;

namespace {

PiecewiseLinearBoundary constant_boundary(double level, double T, int n, BoundarySide side) {
    DyadicGrid grid(T, n);
    return PiecewiseLinearBoundary(side, grid, std::vector<double>(grid.knot_count(), level));
}

}  // namespace

TEST_CASE("grid knots start at zero, end at T and increase") {
    DyadicGrid g(1.7, 5);
    CHECK(g.knot(0) == 0.0);
    CHECK(g.knot(g.blocks()) == 1.7);
    for (std::size_t m = 1; m < g.knot_count(); ++m) {
        CHECK(g.knot(m) > g.knot(m - 1));
    }
    CHECK_THROWS_AS(DyadicGrid(1.0, 0), PreconditionError);
    CHECK_THROWS_AS(DyadicGrid(0.0, 3), PreconditionError);
    CHECK_THROWS_AS(DyadicGrid(1.0, 15), PreconditionError);
    CHECK_THROWS_AS(g.knot(33), DomainError);
}

TEST_CASE("grid nesting is bit-identical") {
    for (double T : {1.0, 0.3, 2.9, 7.0 / 3.0}) {
        for (int n = 1; n <= 8; ++n) {
            DyadicGrid coarse(T, n);
            for (int l = n; l <= 12; ++l) {
                DyadicGrid fine = coarse.refined(l);
                const std::size_t ratio = std::size_t{1} << (l - n);
                for (std::size_t m = 0; m < coarse.knot_count(); ++m) {
                    REQUIRE(coarse.knot(m) == fine.knot(m * ratio));
                }
            }
        }
    }
}

TEST_CASE("eval_boundary examples") {
    auto flat = constant_boundary(1.0, 1.0, 3, BoundarySide::UpperOnly);
    auto p = flat.eval(0.37);
    CHECK(std::isinf(p.lower));
    CHECK(p.lower < 0.0);
    CHECK(p.upper == 1.0);

    PiecewiseLinearBoundary sym(BoundarySide::Symmetric, DyadicGrid(1.0, 1), {1.0, 1.25, 1.5});
    auto q = sym.eval(0.5);
    CHECK(q.lower == doctest::Approx(-1.25).epsilon(1e-15));
    CHECK(q.upper == doctest::Approx(1.25).epsilon(1e-15));

    PiecewiseLinearBoundary line(BoundarySide::UpperOnly, DyadicGrid(1.0, 1), {1.0, 1.25, 1.5});
    CHECK(line.eval(1.0).upper == 1.5);
    CHECK(line.slope(0) == doctest::Approx(0.5));

    CHECK_THROWS_AS(line.eval(-1e-12), DomainError);
    CHECK_THROWS_AS(line.eval(1.0 + 1e-12), DomainError);
}

TEST_CASE("boundary evaluation is exact at knots and continuous") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    DyadicGrid grid(2.0, 6);
    std::vector<double> v(grid.knot_count());
    v[0] = 1.0;
    for (std::size_t m = 1; m < v.size(); ++m) {
        v[m] = v[m - 1] + 0.1 * z(rng);
    }
    PiecewiseLinearBoundary b(BoundarySide::Symmetric, grid, v);
    for (std::size_t m = 0; m < grid.knot_count(); ++m) {
        const double t = grid.knot(m);
        CHECK(b.eval(t).upper == v[m]);
        CHECK(b.eval(t).lower == -v[m]);
        const double left = b.eval(std::max(0.0, std::nextafter(t, 0.0))).upper;
        const double right = b.eval(std::min(2.0, std::nextafter(t, 3.0))).upper;
        CHECK(std::abs(left - v[m]) < 1e-12);
        CHECK(std::abs(right - v[m]) < 1e-12);
    }
    for (int i = 0; i < 1000; ++i) {
        const double t = 2.0 * i / 999.0;
        const auto p = b.eval(t);
        CHECK(p.lower == -p.upper);
    }
}

TEST_CASE("boundary invariants are enforced") {
    DyadicGrid grid(1.0, 2);
    CHECK_THROWS_AS(PiecewiseLinearBoundary(BoundarySide::UpperOnly, grid, {1.0, 1.0}), PreconditionError);
    CHECK_THROWS_AS(PiecewiseLinearBoundary(BoundarySide::UpperOnly, grid, {0.0, 1.0, 1.0, 1.0, 1.0}),
                    PreconditionError);
    PiecewiseLinearBoundary b(BoundarySide::UpperOnly, grid, {1.0, 0.5, -0.25, 2.0, 1.0});
    CHECK(b.max_abs_slope() == doctest::Approx(9.0));
    CHECK(b.norm() == doctest::Approx(4.0));
}

TEST_CASE("validate_target examples") {
    SUBCASE("exponential passes with survival left") {
        auto d = TargetDistribution::exponential(1.0);
        auto r = validate_target(d, 1.0, 257);
        CHECK(r.ok());
        CHECK(d.cdf(1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
        CHECK(d.cdf(1.0) == doctest::Approx(0.6321).epsilon(1e-4));
    }
    SUBCASE("uniform on [0, 0.5] violates positivity") {
        auto r = validate_target(TargetDistribution::uniform(0.0, 0.5), 1.0, 101);
        CHECK(r.has(ViolationKind::Positivity));
        for (const auto& v : r.violations) {
            if (v.kind == ViolationKind::Positivity) {
                CHECK(v.t > 0.5);
            }
        }
    }
    SUBCASE("tabulated density with F(T) = 1 fails the survival check") {
        auto d = TargetDistribution::tabulated({0.0, 0.5, 1.0}, {1.0, 1.0, 1.0});
        auto r = validate_target(d, 1.0, 33);
        CHECK(r.has(ViolationKind::SurvivalMass));
        CHECK_FALSE(r.has(ViolationKind::Positivity));
    }
    SUBCASE("non-finite density is a hard error") {
        CHECK_THROWS_AS(TargetDistribution::tabulated({0.0, 1.0}, {1.0, NAN}), ValidationError);
    }
    SUBCASE("too few samples") {
        CHECK_THROWS_AS(validate_target(TargetDistribution::exponential(1.0), 1.0, 1), PreconditionError);
    }
}

TEST_CASE("tabulated targets have exact quadratic cdf and block masses") {
    auto d = TargetDistribution::tabulated({0.0, 0.3, 1.0, 2.0}, {0.2, 0.6, 0.4, 0.1});
    // Trapezoid areas: 0.12, 0.35, 0.25.
    CHECK(d.cdf(0.3) == doctest::Approx(0.12).epsilon(1e-15));
    CHECK(d.cdf(1.0) == doctest::Approx(0.47).epsilon(1e-15));
    CHECK(d.cdf(2.0) == doctest::Approx(0.72).epsilon(1e-15));
    // Inside a segment the density is 0.6 - 0.2 (t - 0.3) / 0.7.
    const double t = 0.65;
    const double f = 0.6 - 0.2 * (t - 0.3) / 0.7;
    CHECK(d.density(t) == doctest::Approx(f).epsilon(1e-14));
    CHECK(d.cdf(t) == doctest::Approx(0.12 + 0.5 * (0.6 + f) * 0.35).epsilon(1e-14));
    CHECK(d.mass(0.1, 1.5) == doctest::Approx(d.cdf(1.5) - d.cdf(0.1)).epsilon(1e-14));
    CHECK(d.lower_bound(2.0) == doctest::Approx(0.1));
    CHECK(d.upper_bound(2.0) == doctest::Approx(0.6));
    CHECK(validate_target(d, 2.0, 200).ok());
}

TEST_CASE("exponential block masses keep relative precision") {
    auto d = TargetDistribution::exponential(3.0);
    const double a = 0.2;
    const double b = 0.2 + 1e-9;
    const double exact = std::exp(-0.6) * (1.0 - std::exp(-3e-9));
    CHECK(d.mass(a, b) == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("histogram targets reproduce their bin masses") {
    auto d = TargetDistribution::histogram({0.0, 0.25, 0.5, 1.0}, {0.1, 0.2, 0.05});
    CHECK(d.mass(0.25, 0.5) == 0.2);
    CHECK(d.cdf(1.0) == doctest::Approx(0.35));
    CHECK(d.density(0.7) == doctest::Approx(0.1));
}
