#include "ifpt/montecarlo.hpp"

#include "ifpt/closed_form.hpp"
#include "ifpt/errors.hpp"
#include "ifpt/normal.hpp"
#include "ifpt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

namespace ifpt {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

// Paths are split into this many fixed chunks whatever the thread count.
constexpr std::size_t kChunks = 256;

BoundaryPoint at(const PiecewiseLinearBoundary& b, std::size_t m, double frac) {
    const double g = b.knot_value(m) + (b.knot_value(m + 1) - b.knot_value(m)) * frac;
    return {b.side() == BoundarySide::UpperOnly ? kNegInf : -g, g};
}

bool outside(BoundaryPoint b, double x) { return x >= b.upper || x <= b.lower; }

}  // namespace

Philox4x32::Philox4x32(std::uint64_t key, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
      counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

Philox4x32::Block Philox4x32::bijection(Block c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kW0;
        k[1] += kW1;
    }
    return c;
}

Philox4x32::result_type Philox4x32::operator()() {
    if (next_ == 4) {
        buffer_ = bijection(counter_, key_);
        if (++counter_[0] == 0) {
            ++counter_[1];
        }
        next_ = 0;
    }
    return buffer_[next_++];
}

void SimConfig::validate() const {
    if (paths < 1) {
        throw PreconditionError("simulation needs at least one path");
    }
    if (substeps < 1) {
        throw PreconditionError("simulation needs at least one substep per block");
    }
}

double EmpiricalHittingDistribution::frequency(std::size_t m) const {
    return static_cast<double>(hits.at(m)) / static_cast<double>(paths);
}

double EmpiricalHittingDistribution::standard_error(std::size_t m) const {
    const double f = frequency(m);
    return std::sqrt(f * (1.0 - f) / static_cast<double>(paths));
}

double EmpiricalHittingDistribution::cumulative(std::size_t m) const {
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < m; ++k) {
        total += hits.at(k);
    }
    return static_cast<double>(total) / static_cast<double>(paths);
}

double EmpiricalHittingDistribution::total_frequency() const { return cumulative(hits.size()); }

EmpiricalHittingDistribution simulate_hitting_times(const PiecewiseLinearBoundary& b, const SimConfig& cfg) {
    cfg.validate();
    const DyadicGrid& grid = b.grid();
    const std::size_t blocks = grid.blocks();
    const double h = grid.step() / cfg.substeps;
    const double sd = std::sqrt(h);

    std::vector<std::vector<std::uint64_t>> partial(kChunks, std::vector<std::uint64_t>(blocks + 1, 0));
    parallel_chunks(cfg.paths, kChunks, [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
        auto& counts = partial[chunk];
        for (std::size_t path = lo; path < hi; ++path) {
            Philox4x32 rng(cfg.seed, path);
            std::normal_distribution<double> gauss;
            std::uniform_real_distribution<double> unif;
            double x = 0.0;
            std::size_t landed = blocks;  // survivor slot
            for (std::size_t m = 0; m < blocks && landed == blocks; ++m) {
                for (int s = 0; s < cfg.substeps; ++s) {
                    const BoundaryPoint b0 = at(b, m, static_cast<double>(s) / cfg.substeps);
                    const BoundaryPoint b1 = at(b, m, static_cast<double>(s + 1) / cfg.substeps);
                    const double x1 = x + sd * gauss(rng);
                    if (outside(b1, x1) || unif(rng) < bridge_crossing_probability(b0, b1, x, x1, h)) {
                        landed = m;
                        break;
                    }
                    x = x1;
                }
            }
            ++counts[landed];
        }
    });

    EmpiricalHittingDistribution e{grid, std::vector<std::uint64_t>(blocks, 0), 0, cfg.paths};
    for (const auto& counts : partial) {
        for (std::size_t m = 0; m < blocks; ++m) {
            e.hits[m] += counts[m];
        }
        e.survivors += counts[blocks];
    }
    return e;
}

std::uint64_t simulate_segment_hits(BoundaryPoint b0, BoundaryPoint b1, double x0, double dt, const SimConfig& cfg) {
    cfg.validate();
    const double sd = std::sqrt(dt);
    std::vector<std::uint64_t> partial(kChunks, 0);
    parallel_chunks(cfg.paths, kChunks, [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
        for (std::size_t path = lo; path < hi; ++path) {
            Philox4x32 rng(cfg.seed, path);
            std::normal_distribution<double> gauss;
            std::uniform_real_distribution<double> unif;
            const double x1 = x0 + sd * gauss(rng);
            if (outside(b0, x0) || outside(b1, x1) ||
                unif(rng) < bridge_crossing_probability(b0, b1, x0, x1, dt)) {
                ++partial[chunk];
            }
        }
    });
    std::uint64_t total = 0;
    for (auto c : partial) {
        total += c;
    }
    return total;
}

double ks_block_distance(const EmpiricalHittingDistribution& e, const TargetDistribution& d) {
    double worst = 0.0;
    std::uint64_t running = 0;
    for (std::size_t m = 0; m < e.hits.size(); ++m) {
        running += e.hits[m];
        const double emp = static_cast<double>(running) / static_cast<double>(e.paths);
        worst = std::max(worst, std::abs(emp - d.cdf(e.grid.knot(m + 1))));
    }
    return worst;
}

double brute_force_block_check(const PiecewiseLinearBoundary& b, std::size_t m, const QuadratureConfig& cfg) {
    if (m > 3) {
        throw PreconditionError(fmt::format("brute-force check supports blocks 0..3, got {}", m));
    }
    if (m >= b.grid().blocks()) {
        throw DomainError(fmt::format("block index {} beyond the grid", m));
    }
    const double dt = b.grid().step();
    const double reach = (cfg.truncation_width + 2.0) * std::sqrt(dt);
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

    // Integrate over the position at t_k given the position x at t_{k-1}.
    std::function<double(std::size_t, double)> nested = [&](std::size_t k, double x) -> double {
        if (k > m) {
            return block_hit_probability(at(b, m, 0.0), at(b, m, 1.0), x, dt);
        }
        const BoundaryPoint b0 = at(b, k - 1, 0.0);
        const BoundaryPoint b1 = at(b, k - 1, 1.0);
        const double lo = std::max(b1.lower, x - reach);
        const double hi = std::min(b1.upper, x + reach);
        if (!(hi > lo)) {
            return 0.0;
        }
        auto f = [&](double y) {
            return normal::heat_kernel(y - x, dt) * bridge_noncrossing_probability(b0, b1, x, y, dt) * nested(k + 1, y);
        };
        return GK::integrate(f, lo, hi, 12, 1e-12);
    };
    return nested(1, 0.0);
}

}  // namespace ifpt
