#pragma once

#include "ifpt/core.hpp"
#include "ifpt/forward.hpp"
#include "ifpt/inverse.hpp"
#include "ifpt/montecarlo.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace ifpt::io {

/// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double v);

void write_boundary_csv(std::ostream& os, const PiecewiseLinearBoundary& b);
void write_boundary_csv(const std::filesystem::path& path, const PiecewiseLinearBoundary& b);

/// Knots must sit on a dyadic grid starting at 0. A `-inf` lower column means
/// UpperOnly, lower == -upper means Symmetric. Throws ParseError with the line.
PiecewiseLinearBoundary read_boundary_csv(std::istream& is);
PiecewiseLinearBoundary read_boundary_csv(const std::filesystem::path& path);

/// Tabulated density with header `t,f`.
TargetDistribution read_target_csv(std::istream& is);
TargetDistribution read_target_csv(const std::filesystem::path& path);

/// exp:<rate>, uniform:<a>:<b> or table:<path>.
TargetDistribution parse_target_spec(const std::string& spec);

void write_fpt_table_csv(std::ostream& os, const FptTable& table);
void write_empirical_csv(std::ostream& os, const EmpiricalHittingDistribution& e);

/// diagnostics.json body; nested_defect is the worst over all coarser levels.
std::string diagnostics_json(const InverseSolution& sol, const TargetDistribution& d);

}  // namespace ifpt::io
