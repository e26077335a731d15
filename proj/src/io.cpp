#include "ifpt/io.hpp"

#include "ifpt/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>
#include "json.hpp"

namespace ifpt::io {

namespace {

struct Row {
    std::size_t line;
    std::vector<double> cells;
};

std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) {
        return {};
    }
    const auto b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

double parse_cell(const std::string& cell, std::size_t line) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (!cell.empty() && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ParseError(line, fmt::format("line {}: cannot read a number from '{}'", line, cell));
    }
    return v;
}

// Header must match exactly; every data row must have that many numeric cells.
std::vector<Row> read_table(std::istream& is, const std::vector<std::string>& header) {
    std::string text;
    std::size_t line = 0;
    bool seen_header = false;
    std::vector<Row> rows;
    while (std::getline(is, text)) {
        ++line;
        const std::string t = trim(text);
        if (t.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(t);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(trim(cell));
        }
        if (!t.empty() && t.back() == ',') {
            cells.emplace_back();
        }
        if (!seen_header) {
            if (cells != header) {
                throw ParseError(line, fmt::format("line {}: expected header '{}'", line, fmt::join(header, ",")));
            }
            seen_header = true;
            continue;
        }
        if (cells.size() != header.size()) {
            throw ParseError(line, fmt::format("line {}: expected {} columns, found {}", line, header.size(),
                                               cells.size()));
        }
        Row r{line, {}};
        for (const auto& c : cells) {
            r.cells.push_back(parse_cell(c, line));
        }
        rows.push_back(std::move(r));
    }
    if (!seen_header) {
        throw ParseError(line, "empty file: no header found");
    }
    return rows;
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(0, fmt::format("cannot open '{}'", path.string()));
    }
    return in;
}

}  // namespace

std::string format_double(double v) {
    if (std::isinf(v)) {
        return v < 0 ? "-inf" : "inf";
    }
    return fmt::format("{:.17g}", v);
}

void write_boundary_csv(std::ostream& os, const PiecewiseLinearBoundary& b) {
    os << "t,upper,lower\n";
    const DyadicGrid& g = b.grid();
    for (std::size_t m = 0; m < g.knot_count(); ++m) {
        const double u = b.knot_value(m);
        const double l = b.side() == BoundarySide::UpperOnly ? kNegInf : -u;
        os << format_double(g.knot(m)) << ',' << format_double(u) << ',' << format_double(l) << '\n';
    }
}

void write_boundary_csv(const std::filesystem::path& path, const PiecewiseLinearBoundary& b) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError(0, fmt::format("cannot write '{}'", path.string()));
    }
    write_boundary_csv(out, b);
}

PiecewiseLinearBoundary read_boundary_csv(std::istream& is) {
    const auto rows = read_table(is, {"t", "upper", "lower"});
    const std::size_t k = rows.size();
    if (k < 3 || ((k - 1) & (k - 2)) != 0) {
        throw ParseError(rows.empty() ? 1 : rows.back().line,
                         fmt::format("a boundary needs 2^n + 1 knots with n >= 1, found {}", k));
    }
    int level = 0;
    while ((std::size_t{1} << level) < k - 1) {
        ++level;
    }
    if (level > kDefaultMaxLevel) {
        throw ParseError(rows.back().line, fmt::format("level {} exceeds the cap {}", level, kDefaultMaxLevel));
    }
    const double T = rows.back().cells[0];
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw ParseError(rows.back().line, fmt::format("line {}: horizon must be positive", rows.back().line));
    }
    const DyadicGrid grid(T, level);
    const bool upper_only = std::isinf(rows.front().cells[2]) && rows.front().cells[2] < 0;
    std::vector<double> values;
    for (std::size_t m = 0; m < k; ++m) {
        const auto& r = rows[m];
        const double t = r.cells[0], u = r.cells[1], l = r.cells[2];
        if (std::abs(t - grid.knot(m)) > 1e-12 * T) {
            throw ParseError(r.line, fmt::format("line {}: t = {} is not the dyadic knot {}", r.line, t, grid.knot(m)));
        }
        if (!std::isfinite(u)) {
            throw ParseError(r.line, fmt::format("line {}: upper value must be finite", r.line));
        }
        const bool ok = upper_only ? (std::isinf(l) && l < 0) : (l == -u);
        if (!ok) {
            throw ParseError(r.line, fmt::format("line {}: lower must be -inf throughout or mirror the upper column",
                                                 r.line));
        }
        values.push_back(u);
    }
    try {
        return PiecewiseLinearBoundary(upper_only ? BoundarySide::UpperOnly : BoundarySide::Symmetric, grid,
                                       std::move(values));
    } catch (const PreconditionError& e) {
        throw ParseError(rows.front().line, e.what());
    }
}

PiecewiseLinearBoundary read_boundary_csv(const std::filesystem::path& path) {
    auto in = open(path);
    return read_boundary_csv(in);
}

TargetDistribution read_target_csv(std::istream& is) {
    const auto rows = read_table(is, {"t", "f"});
    if (rows.size() < 2) {
        throw ParseError(rows.empty() ? 1 : rows.back().line, "a tabulated density needs at least two rows");
    }
    std::vector<double> t, f;
    for (const auto& r : rows) {
        if (t.empty() ? r.cells[0] != 0.0 : !(r.cells[0] > t.back())) {
            throw ParseError(r.line, fmt::format("line {}: t must start at 0 and increase strictly", r.line));
        }
        t.push_back(r.cells[0]);
        f.push_back(r.cells[1]);
    }
    return TargetDistribution::tabulated(std::move(t), std::move(f));
}

TargetDistribution read_target_csv(const std::filesystem::path& path) {
    auto in = open(path);
    return read_target_csv(in);
}

TargetDistribution parse_target_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
    auto number = [&](const std::string& s) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
            throw PreconditionError(fmt::format("bad number '{}' in target spec '{}'", s, spec));
        }
        return v;
    };
    if (kind == "exp") {
        return TargetDistribution::exponential(number(rest));
    }
    if (kind == "uniform") {
        const auto c = rest.find(':');
        if (c == std::string::npos) {
            throw PreconditionError(fmt::format("uniform target needs uniform:a:b, got '{}'", spec));
        }
        return TargetDistribution::uniform(number(rest.substr(0, c)), number(rest.substr(c + 1)));
    }
    if (kind == "table") {
        return read_target_csv(std::filesystem::path(rest));
    }
    throw PreconditionError(fmt::format("unknown target '{}' (exp:rate, uniform:a:b, table:path)", spec));
}

void write_fpt_table_csv(std::ostream& os, const FptTable& table) {
    os << "t,cdf,block_mass,avg_density\n";
    for (const auto& r : table.rows) {
        os << format_double(r.t) << ',' << format_double(r.cdf) << ',' << format_double(r.block_mass) << ','
           << format_double(r.avg_density) << '\n';
    }
}

void write_empirical_csv(std::ostream& os, const EmpiricalHittingDistribution& e) {
    os << "t_lo,t_hi,hits,frequency,stderr\n";
    for (std::size_t m = 0; m < e.hits.size(); ++m) {
        os << format_double(e.grid.knot(m)) << ',' << format_double(e.grid.knot(m + 1)) << ',' << e.hits[m] << ','
           << format_double(e.frequency(m)) << ',' << format_double(e.standard_error(m)) << '\n';
    }
    const double f = static_cast<double>(e.survivors) / static_cast<double>(e.paths);
    os << "survivors," << format_double(e.grid.horizon()) << ',' << e.survivors << ',' << format_double(f) << ','
       << format_double(std::sqrt(f * (1.0 - f) / static_cast<double>(e.paths))) << '\n';
}

std::string diagnostics_json(const InverseSolution& sol, const TargetDistribution& d) {
    const DyadicGrid& g = sol.boundary.grid();
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["level"] = g.level();
    j["horizon"] = g.horizon();
    j["side"] = to_string(sol.boundary.side());
    j["target"] = d.describe();
    auto blocks = nlohmann::ordered_json::array();
    for (const auto& r : sol.records) {
        blocks.push_back({{"block", r.block},
                          {"target_mass", r.target_mass},
                          {"achieved", r.achieved},
                          {"residual", r.residual},
                          {"slope", r.slope},
                          {"iterations", r.iterations}});
    }
    j["blocks"] = std::move(blocks);
    j["max_abs_slope"] = sol.max_abs_slope;
    j["max_abs_residual"] = sol.max_abs_residual;
    j["final_survival"] = sol.final_survival;
    j["slope_warning"] = sol.slope_warning;
    double defect = 0.0;
    for (int level = 1; level <= g.level(); ++level) {
        defect = std::max(defect, nested_defect(sol, d, DyadicGrid(g.horizon(), level)));
    }
    j["nested_defect"] = defect;
    return j.dump(2) + "\n";
}

}  // namespace ifpt::io
