#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gtheory/anova.hpp"
#include "gtheory/confidence.hpp"
#include "gtheory/dstudy.hpp"
#include "gtheory/reliability.hpp"

namespace gtheory {

enum class OutputFormat { Text, Json, Csv };

OutputFormat parse_format(std::string_view text);

struct RunConfig {
  std::filesystem::path data_path;
  std::string design_str;
  std::string response;
  std::vector<std::pair<std::string, Role>> roles;
  std::optional<DStudyGrid> dstudy_grid;
  double alpha = 0.05;
  OutputFormat output_format = OutputFormat::Text;
  std::optional<std::filesystem::path> output_path;
  std::optional<std::string> object;
};

struct ObjectIntervals {
  std::string object;
  std::vector<ConfidenceInterval> intervals;
};

struct Report {
  RunConfig config;
  AnovaTable anova;
  std::vector<GCoeffResult> g_coefficients;
  std::optional<std::vector<DStudyResult>> d_study;  // one per analysed object
  std::vector<ObjectIntervals> confidence;
  std::vector<std::string> warnings;
};

/// Role assignments implied by the configuration: the chosen object (or every
/// facet in turn) with the configured fixed/random roles. Throws ComputeError
/// for unknown facets or conflicting object choices.
std::vector<RoleAssignment> resolve_analyses(const RunConfig& config, const AnovaTable& anova);

/// Runs anova, coefficients, optional d-study and intervals on validated data.
Report build_report(const RunConfig& config, const Dataset& data);

std::string render_anova(const AnovaTable& table, OutputFormat format);
std::string render_g_table(const std::vector<GCoeffResult>& results, OutputFormat format);
std::string render_dstudy(const std::vector<DStudyResult>& results, OutputFormat format);
std::string render_ci(const std::vector<ObjectIntervals>& results, OutputFormat format);

/// Full report as one document (CSV tables separated by blank lines).
std::string render_report(const Report& report, OutputFormat format);

/// Writes one CSV file per table into `dir`.
void write_csv_tables(const Report& report, const std::filesystem::path& dir);

/// Command-line entry point. Exit codes: 0 ok, 2 usage/design/config error,
/// 3 data validation error, 4 computation or output error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gtheory
