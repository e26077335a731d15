#include "ifpt/core.hpp"
#include "ifpt/errors.hpp"
#include "ifpt/forward.hpp"
#include "ifpt/inverse.hpp"
#include "ifpt/io.hpp"
#include "ifpt/montecarlo.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <fmt/format.h>
#include "CLI11.hpp"

namespace fs = std::filesystem;
using namespace ifpt;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kNumerical = 3, kInfeasible = 4, kInvalid = 5 };

struct RunConfig {
    std::string command;
    double T = 1.0;
    int n = 6;
    int n_min = 2;
    int n_max = 6;
    std::string side = "upper";
    std::string target;
    std::string boundary;
    std::string out = ".";
    double tol = 1e-10;
    std::uint64_t paths = 1000000;
    std::uint64_t seed = SimConfig{}.seed;
    int nodes = QuadratureConfig{}.nodes_per_block;
    int substeps = 1;
    double threshold = 0.005;
};

struct Usage : Error {
    using Error::Error;
};

void require(bool present, const char* what, const std::string& command) {
    if (!present) {
        throw Usage(fmt::format("{} requires {}", command, what));
    }
}

QuadratureConfig quadrature(const RunConfig& rc) {
    QuadratureConfig q;
    q.nodes_per_block = rc.nodes;
    q.validate();
    return q;
}

SolverConfig solver(const RunConfig& rc) {
    SolverConfig s;
    s.probability_tolerance = rc.tol;
    s.quadrature = quadrature(rc);
    s.validate();
    return s;
}

std::ofstream create(const RunConfig& rc, const char* name) {
    fs::create_directories(rc.out);
    const fs::path p = fs::path(rc.out) / name;
    std::ofstream os(p);
    if (!os) {
        throw ParseError(0, fmt::format("cannot write '{}'", p.string()));
    }
    return os;
}

TargetDistribution checked_target(const RunConfig& rc) {
    TargetDistribution d = io::parse_target_spec(rc.target);
    const auto report = validate_target(d, rc.T, 4096);
    if (!report.ok()) {
        throw ValidationError(fmt::format("target {} rejected on [0, {}]:\n{}", d.describe(), rc.T, report.summary()));
    }
    return d;
}

int run_forward(const RunConfig& rc) {
    require(!rc.boundary.empty(), "--boundary", rc.command);
    const auto b = io::read_boundary_csv(fs::path(rc.boundary));
    const auto table = fpt_distribution_table(b, quadrature(rc));
    auto os = create(rc, "fpt_table.csv");
    io::write_fpt_table_csv(os, table);
    fmt::print("level {}  T {}  side {}\n", b.grid().level(), b.grid().horizon(), to_string(b.side()));
    fmt::print("cdf(T) = {:.12g}\n", table.rows.back().cdf);
    fmt::print("mass conservation defect = {:.3e}\n", table.max_mass_defect);
    return kOk;
}

int run_inverse(const RunConfig& rc) {
    require(!rc.target.empty(), "--target", rc.command);
    const auto d = checked_target(rc);
    const auto cfg = solver(rc);
    const auto sol = construct_boundary(d, rc.T, rc.n, parse_side(rc.side), cfg);
    auto bs = create(rc, "boundary.csv");
    io::write_boundary_csv(bs, sol.boundary);
    auto js = create(rc, "diagnostics.json");
    js << io::diagnostics_json(sol, d);
    fmt::print("g(0) = {:.17g}\n", sol.boundary.knot_value(0));
    fmt::print("max |residual| = {:.3e}  max |slope| = {:.6g}  survival(T) = {:.12g}\n", sol.max_abs_residual,
               sol.max_abs_slope, sol.final_survival);
    if (sol.slope_warning) {
        fmt::print("warning: steep boundary, max |slope| {:.3g}\n", sol.max_abs_slope);
    }
    return sol.max_abs_residual <= rc.tol ? kOk : kNumerical;
}

int run_simulate(const RunConfig& rc) {
    require(!rc.boundary.empty(), "--boundary", rc.command);
    const auto b = io::read_boundary_csv(fs::path(rc.boundary));
    const auto e = simulate_hitting_times(b, SimConfig{rc.paths, rc.substeps, rc.seed});
    auto os = create(rc, "mc_hits.csv");
    io::write_empirical_csv(os, e);
    fmt::print("paths {}  hits {}  survivors {}\n", e.paths, e.paths - e.survivors, e.survivors);
    fmt::print("total hit frequency = {:.6f} +- {:.6f}\n", e.total_frequency(),
               std::sqrt(e.total_frequency() * (1.0 - e.total_frequency()) / static_cast<double>(e.paths)));
    return kOk;
}

int run_verify(const RunConfig& rc) {
    require(!rc.boundary.empty(), "--boundary", rc.command);
    require(!rc.target.empty(), "--target", rc.command);
    const SimConfig sim{rc.paths, rc.substeps, rc.seed};
    sim.validate();
    const auto b = io::read_boundary_csv(fs::path(rc.boundary));
    const auto d = io::parse_target_spec(rc.target);
    const auto table = fpt_distribution_table(b, quadrature(rc));
    const auto e = simulate_hitting_times(b, sim);
    const double ks = ks_block_distance(e, d);
    const DyadicGrid& g = b.grid();

    fmt::print("{:>6} {:>12} {:>12} {:>14} {:>14} {:>12} {:>12} {:>10}\n", "block", "t_lo", "t_hi", "quad_mass",
               "target_mass", "residual", "mc_freq", "mc_se");
    double worst = 0.0;
    for (std::size_t m = 0; m < g.blocks(); ++m) {
        const double target = d.mass(g.knot(m), g.knot(m + 1));
        const double mass = table.rows[m].block_mass;
        const double residual = (mass - target) / g.step();
        worst = std::max(worst, std::abs(mass - target));
        fmt::print("{:>6} {:>12.6g} {:>12.6g} {:>14.8g} {:>14.8g} {:>12.3e} {:>12.6g} {:>10.2e}\n", m, g.knot(m),
                   g.knot(m + 1), mass, target, residual, e.frequency(m), e.standard_error(m));
    }
    fmt::print("max |block mass - target| = {:.3e}\n", worst);
    fmt::print("KS block statistic = {:.6f} (threshold {}, N = {})\n", ks, rc.threshold, e.paths);
    const bool pass = ks <= rc.threshold;
    fmt::print("{}\n", pass ? "PASS" : "FAIL");
    return pass ? kOk : kVerifyFailed;
}

int run_convergence(const RunConfig& rc) {
    require(!rc.target.empty(), "--target", rc.command);
    const auto d = checked_target(rc);
    const auto report = refine(d, rc.T, rc.n_min, rc.n_max, parse_side(rc.side), solver(rc));
    auto os = create(rc, "convergence.csv");
    os << "level,distance_to_previous,max_abs_slope,nested_defect,max_abs_residual,g0\n";
    fmt::print("{:>5} {:>14} {:>14} {:>14} {:>14}\n", "level", "sup_dist_prev", "max_abs_slope", "nested_defect",
               "max_residual");
    for (const auto& lvl : report.levels) {
        const std::string dist = lvl.distance_to_previous ? io::format_double(*lvl.distance_to_previous) : "";
        os << lvl.level << ',' << dist << ',' << io::format_double(lvl.max_abs_slope) << ','
           << io::format_double(lvl.nested_defect) << ',' << io::format_double(lvl.solution.max_abs_residual) << ','
           << io::format_double(lvl.solution.boundary.knot_value(0)) << '\n';
        fmt::print("{:>5} {:>14} {:>14.6g} {:>14.3e} {:>14.3e}\n", lvl.level,
                   lvl.distance_to_previous ? fmt::format("{:.6e}", *lvl.distance_to_previous) : "-",
                   lvl.max_abs_slope, lvl.nested_defect, lvl.solution.max_abs_residual);
        io::write_boundary_csv(fs::path(rc.out) / fmt::format("boundary_n{}.csv", lvl.level), lvl.solution.boundary);
    }
    return kOk;
}

int dispatch(const RunConfig& rc) {
    if (rc.command == "forward") return run_forward(rc);
    if (rc.command == "inverse") return run_inverse(rc);
    if (rc.command == "simulate") return run_simulate(rc);
    if (rc.command == "verify") return run_verify(rc);
    if (rc.command == "convergence") return run_convergence(rc);
    throw Usage(fmt::format("unknown command '{}'", rc.command));
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig rc;
    std::string positional;
    CLI::App app{"Inverse first-passage boundaries for Brownian motion"};
    app.add_option("cmd", positional, "forward | inverse | simulate | verify | convergence");
    app.add_option("--command", rc.command, "same as the positional command");
    app.add_option("--T", rc.T, "horizon");
    app.add_option("--n", rc.n, "dyadic level");
    app.add_option("--n-min", rc.n_min, "first level of the convergence ladder");
    app.add_option("--n-max", rc.n_max, "last level of the convergence ladder");
    app.add_option("--side", rc.side, "upper | symmetric");
    app.add_option("--target", rc.target, "exp:<rate> | uniform:<a>:<b> | table:<csv>");
    app.add_option("--boundary", rc.boundary, "boundary CSV (t,upper,lower)");
    app.add_option("--out", rc.out, "output directory");
    app.add_option("--tol", rc.tol, "per-block probability tolerance");
    app.add_option("--paths", rc.paths, "Monte Carlo paths");
    app.add_option("--seed", rc.seed, "Monte Carlo seed");
    app.add_option("--nodes", rc.nodes, "quadrature nodes per block");
    app.add_option("--substeps", rc.substeps, "Monte Carlo substeps per block");
    app.add_option("--threshold", rc.threshold, "KS threshold for verify");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    if (!positional.empty() && !rc.command.empty() && positional != rc.command) {
        fmt::print(stderr, "error: conflicting commands '{}' and '{}'\n", positional, rc.command);
        return kUsage;
    }
    if (rc.command.empty()) {
        rc.command = positional;
    }
    if (rc.command.empty()) {
        fmt::print(stderr, "error: no command given\n{}", app.help());
        return kUsage;
    }

    try {
        return dispatch(rc);
    } catch (const InfeasibleTargetError& e) {
        fmt::print(stderr, "infeasible target at block {}: {}\n", e.block(), e.what());
        return kInfeasible;
    } catch (const ValidationError& e) {
        fmt::print(stderr, "validation failed: {}\n", e.what());
        return kInvalid;
    } catch (const ParseError& e) {
        fmt::print(stderr, "input error: {}\n", e.what());
        return kUsage;
    } catch (const Usage& e) {
        fmt::print(stderr, "usage error: {}\n", e.what());
        return kUsage;
    } catch (const PreconditionError& e) {
        fmt::print(stderr, "usage error: {}\n", e.what());
        return kUsage;
    } catch (const DomainError& e) {
        fmt::print(stderr, "usage error: {}\n", e.what());
        return kUsage;
    } catch (const fs::filesystem_error& e) {
        fmt::print(stderr, "io error: {}\n", e.what());
        return kUsage;
    } catch (const Error& e) {
        fmt::print(stderr, "numerical error: {}\n", e.what());
        return kNumerical;
    }
}
