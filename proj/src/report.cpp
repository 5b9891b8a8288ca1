#include "gtheory/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "gtheory/error.hpp"
#include "gtheory/oracle.hpp"

namespace gtheory {

namespace {

using ojson = nlohmann::ordered_json;

std::string sig6(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Six significant digits with trailing zeros kept, for coefficients.
std::string sig6_fixed(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%#.6g", x);
  return buf;
}

std::string full(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, static_cast<std::size_t>(res.ptr - buf));
}

std::string coeff_text(const std::optional<double>& v) {
  return v ? sig6_fixed(*v) : "undefined";
}

std::string coeff_csv(const std::optional<double>& v) { return v ? full(*v) : "undefined"; }

ojson coeff_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header, std::size_t left_columns = 1)
      : header_(std::move(header)), left_(left_columns) {}

  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string render() const {
    std::vector<std::size_t> width(header_.size(), 0);
    auto measure = [&](const std::vector<std::string>& row) {
      for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    };
    measure(header_);
    for (const auto& r : rows_) measure(r);

    std::string out;
    auto emit = [&](const std::vector<std::string>& row) {
      std::string line;
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) line += "  ";
        const std::string pad(width[c] - row[c].size(), ' ');
        line += c < left_ ? row[c] + pad : pad + row[c];
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out += line + "\n";
    };
    emit(header_);
    for (const auto& r : rows_) emit(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::size_t left_;
};

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_escape(fields[i]);
  }
  return line + "\n";
}

ojson anova_json(const AnovaTable& table) {
  ojson rows = ojson::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"component", r.label},
                    {"df", r.df},
                    {"t", r.t_value},
                    {"ss", r.ss},
                    {"ms", r.ms},
                    {"sigma2", r.sigma2},
                    {"negative", r.negative()}});
  }
  return {{"grand_mean", table.grand_mean},
          {"t_u", table.t_u},
          {"observations", table.observations},
          {"rows", std::move(rows)}};
}

ojson g_json(const std::vector<GCoeffResult>& results) {
  ojson out = ojson::array();
  for (const auto& g : results) {
    out.push_back({{"object", g.object},
                   {"e_rho2", coeff_json(g.e_rho2)},
                   {"phi", coeff_json(g.phi)},
                   {"tau", g.tau},
                   {"delta", g.delta},
                   {"Delta", g.Delta},
                   {"clamped_components", g.clamped_components}});
  }
  return out;
}

ojson dstudy_json(const std::vector<DStudyResult>& results) {
  ojson out = ojson::array();
  for (const auto& d : results) {
    ojson scenarios = ojson::array();
    for (const auto& s : d.scenarios) {
      ojson levels = ojson::object();
      for (std::size_t f = 0; f < d.facets.size(); ++f) levels[d.facets[f]] = s.counts[f];
      scenarios.push_back({{"levels", std::move(levels)},
                           {"e_rho2", coeff_json(s.coefficients.e_rho2)},
                           {"phi", coeff_json(s.coefficients.phi)},
                           {"tau", s.coefficients.tau},
                           {"delta", s.coefficients.delta},
                           {"Delta", s.coefficients.Delta}});
    }
    const std::string object = d.scenarios.empty() ? "" : d.scenarios.front().coefficients.object;
    out.push_back({{"object", object}, {"facets", d.facets}, {"scenarios", std::move(scenarios)}});
  }
  return out;
}

ojson ci_json(const std::vector<ObjectIntervals>& results) {
  ojson out = ojson::array();
  for (const auto& set : results) {
    ojson intervals = ojson::array();
    for (const auto& ci : set.intervals) {
      intervals.push_back({{"level", ci.object_level},
                           {"mean", ci.mean},
                           {"half_width", ci.half_width},
                           {"lower", ci.lower},
                           {"upper", ci.upper}});
    }
    const double alpha = set.intervals.empty() ? 0.0 : set.intervals.front().alpha;
    const double hw = set.intervals.empty() ? 0.0 : set.intervals.front().half_width;
    out.push_back({{"object", set.object},
                   {"alpha", alpha},
                   {"half_width", hw},
                   {"intervals", std::move(intervals)}});
  }
  return out;
}

ojson config_json(const RunConfig& c, const AnovaTable& anova) {
  ojson roles = ojson::object();
  for (const auto& [facet, role] : c.roles) roles[facet] = std::string(to_string(role));
  ojson grid = nullptr;
  if (c.dstudy_grid) {
    grid = ojson::object();
    for (const auto& [facet, counts] : *c.dstudy_grid) grid[facet] = counts;
  }
  const char* format = c.output_format == OutputFormat::Json  ? "json"
                       : c.output_format == OutputFormat::Csv ? "csv"
                                                              : "text";
  return {{"data", c.data_path.generic_string()},
          {"design", c.design_str},
          {"design_canonical", render_design(anova.design)},
          {"response", c.response},
          {"roles", std::move(roles)},
          {"dstudy", std::move(grid)},
          {"alpha", c.alpha},
          {"format", format},
          {"object", c.object ? ojson(*c.object) : ojson(nullptr)}};
}

std::string anova_csv(const AnovaTable& table) {
  std::string out = csv_line({"component", "df", "t", "ss", "ms", "sigma2", "negative"});
  for (const auto& r : table.rows) {
    out += csv_line({r.label, std::to_string(r.df), full(r.t_value), full(r.ss), full(r.ms),
                     full(r.sigma2), r.negative() ? "true" : "false"});
  }
  return out;
}

std::string g_csv(const std::vector<GCoeffResult>& results) {
  std::string out =
      csv_line({"object", "e_rho2", "phi", "tau", "delta", "Delta", "clamped_components"});
  for (const auto& g : results) {
    out += csv_line({g.object, coeff_csv(g.e_rho2), coeff_csv(g.phi), full(g.tau),
                     full(g.delta), full(g.Delta), join(g.clamped_components, ";")});
  }
  return out;
}

std::string dstudy_csv(const std::vector<DStudyResult>& results) {
  if (results.empty()) return {};
  std::vector<std::string> header{"object"};
  for (const auto& f : results.front().facets) header.push_back("n_" + f);
  for (const char* h : {"e_rho2", "phi", "tau", "delta", "Delta"}) header.emplace_back(h);
  std::string out = csv_line(header);
  for (const auto& d : results) {
    for (const auto& s : d.scenarios) {
      std::vector<std::string> row{s.coefficients.object};
      for (std::size_t n : s.counts) row.push_back(std::to_string(n));
      row.push_back(coeff_csv(s.coefficients.e_rho2));
      row.push_back(coeff_csv(s.coefficients.phi));
      row.push_back(full(s.coefficients.tau));
      row.push_back(full(s.coefficients.delta));
      row.push_back(full(s.coefficients.Delta));
      out += csv_line(row);
    }
  }
  return out;
}

std::string ci_csv(const std::vector<ObjectIntervals>& results) {
  std::string out =
      csv_line({"object", "level", "mean", "half_width", "lower", "upper", "alpha"});
  for (const auto& set : results) {
    for (const auto& ci : set.intervals) {
      out += csv_line({set.object, ci.object_level, full(ci.mean), full(ci.half_width),
                       full(ci.lower), full(ci.upper), full(ci.alpha)});
    }
  }
  return out;
}

std::string anova_text(const AnovaTable& table) {
  TextTable t({"Source", "df", "T", "SS", "MS", "Variance", "Flag"});
  for (const auto& r : table.rows) {
    t.add({r.label, std::to_string(r.df), sig6(r.t_value), sig6(r.ss), sig6(r.ms),
           sig6(r.sigma2), r.negative() ? "negative" : ""});
  }
  return "ANOVA\n" + t.render() + "Observations: " + std::to_string(table.observations) +
         "  Grand mean: " + sig6(table.grand_mean) + "  T(U): " + sig6(table.t_u) + "\n";
}

std::string g_text(const std::vector<GCoeffResult>& results) {
  TextTable t({"Object", "Rho2", "Phi", "tau", "delta", "Delta", "Clamped"});
  for (const auto& g : results) {
    t.add({g.object, coeff_text(g.e_rho2), coeff_text(g.phi), sig6(g.tau), sig6(g.delta),
           sig6(g.Delta), g.clamped_components.empty() ? "" : join(g.clamped_components, "; ")});
  }
  return "G coefficients\n" + t.render();
}

std::string dstudy_text(const std::vector<DStudyResult>& results) {
  std::string out = "D-study\n";
  if (results.empty()) return out;
  std::vector<std::string> header{"Object"};
  for (const auto& f : results.front().facets) header.push_back("n_" + f);
  for (const char* h : {"Rho2", "Phi", "tau", "delta", "Delta"}) header.emplace_back(h);
  TextTable t(header);
  for (const auto& d : results) {
    for (const auto& s : d.scenarios) {
      std::vector<std::string> row{s.coefficients.object};
      for (std::size_t n : s.counts) row.push_back(std::to_string(n));
      row.push_back(coeff_text(s.coefficients.e_rho2));
      row.push_back(coeff_text(s.coefficients.phi));
      row.push_back(sig6(s.coefficients.tau));
      row.push_back(sig6(s.coefficients.delta));
      row.push_back(sig6(s.coefficients.Delta));
      t.add(std::move(row));
    }
  }
  return out + t.render();
}

std::string ci_text(const std::vector<ObjectIntervals>& results) {
  std::string out;
  for (const auto& set : results) {
    const double alpha = set.intervals.empty() ? 0.05 : set.intervals.front().alpha;
    TextTable t({"Level", "Mean", "HalfWidth", "Lower", "Upper"});
    for (const auto& ci : set.intervals) {
      t.add({ci.object_level, sig6(ci.mean), sig6(ci.half_width), sig6(ci.lower),
             sig6(ci.upper)});
    }
    if (!out.empty()) out += "\n";
    out += "Confidence intervals for " + set.object + " (alpha = " + sig6(alpha) + ")\n" +
           t.render();
  }
  return out;
}

void push_unique(std::vector<std::string>& list, std::string item) {
  if (std::find(list.begin(), list.end(), item) == list.end()) list.push_back(std::move(item));
}

// ---- command line -------------------------------------------------------

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitCompute = 4;

int fail(std::ostream& err, std::string_view category, std::string_view code,
         std::string message, int exit_code) {
  std::replace(message.begin(), message.end(), '\n', ' ');
  err << "ERROR:" << category << ':';
  if (!code.empty()) err << code << ": ";
  err << message << '\n';
  return exit_code;
}

std::vector<std::pair<std::string, Role>> parse_roles_json(const std::string& text) {
  const auto j = ojson::parse(text);
  if (!j.is_object()) throw std::invalid_argument("--roles must be a JSON object");
  std::vector<std::pair<std::string, Role>> out;
  for (const auto& [facet, role] : j.items()) {
    if (!role.is_string()) throw std::invalid_argument("role for '" + facet + "' must be a string");
    out.emplace_back(facet, parse_role(role.get<std::string>()));
  }
  return out;
}

DStudyGrid parse_grid_json(const std::string& text) {
  const auto j = ojson::parse(text);
  if (!j.is_object()) throw std::invalid_argument("--dstudy must be a JSON object");
  DStudyGrid grid;
  for (const auto& [facet, list] : j.items()) {
    if (!list.is_array()) {
      throw std::invalid_argument("d-study levels for '" + facet + "' must be an array");
    }
    std::vector<std::size_t> counts;
    for (const auto& v : list) {
      if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw std::invalid_argument("d-study levels for '" + facet +
                                    "' must be positive integers");
      }
      counts.push_back(v.get<std::size_t>());
    }
    grid.emplace_back(facet, std::move(counts));
  }
  return grid;
}

// Checks every facet name the configuration mentions against the design.
void validate_config(const RunConfig& config, const DesignSpec& design) {
  std::optional<std::size_t> object;
  for (const auto& [facet, role] : config.roles) {
    const std::size_t f = design.index_of(facet);
    if (role == Role::Object) {
      if (object && *object != f) {
        throw ComputeError(ComputeErrc::NoObject, "more than one facet has role 'object'");
      }
      object = f;
    }
  }
  if (config.object) {
    const std::size_t f = design.index_of(*config.object);
    if (object && *object != f) {
      throw ComputeError(ComputeErrc::NoObject, "--object conflicts with the role map");
    }
  }
  if (config.dstudy_grid) {
    for (const auto& entry : *config.dstudy_grid) design.index_of(entry.first);
    expand_grid(*config.dstudy_grid);
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

int run_simulate(const std::string& design_str, const std::string& levels_json,
                 const std::string& truth_json, double mean, std::uint64_t seed,
                 const std::string& response, const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
  std::optional<DesignSpec> design;
  try {
    design = parse_design(design_str);
  } catch (const DesignError& e) {
    return fail(err, "design", to_string(e.code()), e.what(), kExitUsage);
  }
  std::vector<std::size_t> counts(design->facet_count(), 0);
  std::map<std::string, double> truth;
  try {
    const auto lj = ojson::parse(levels_json);
    if (!lj.is_object()) throw std::invalid_argument("--levels must be a JSON object");
    for (const auto& [facet, n] : lj.items()) {
      if (!n.is_number_integer() || n.get<long long>() < 1) {
        throw std::invalid_argument("level count for '" + facet + "' must be a positive integer");
      }
      counts[design->index_of(facet)] = n.get<std::size_t>();
    }
    for (std::size_t f = 0; f < counts.size(); ++f) {
      if (counts[f] == 0) {
        throw std::invalid_argument("--levels is missing facet '" + design->facets()[f].name +
                                    "'");
      }
    }
    const auto tj = ojson::parse(truth_json);
    if (!tj.is_object()) throw std::invalid_argument("--truth must be a JSON object");
    for (const auto& [label, v] : tj.items()) {
      if (!v.is_number()) throw std::invalid_argument("variance for '" + label + "' must be a number");
      truth[label] = v.get<double>();
    }
  } catch (const ComputeError& e) {
    return fail(err, "config", to_string(e.code()), e.what(), kExitUsage);
  } catch (const std::exception& e) {
    return fail(err, "usage", "", e.what(), kExitUsage);
  }
  try {
    const auto components = oracle::truth_from_labels(*design, mean, truth);
    const Dataset data = oracle::simulate(*design, counts, components, seed);
    std::ostringstream csv;
    Dataset named(data.design(), data.levels(),
                  std::vector<double>(data.cells().begin(), data.cells().end()), response);
    write_csv(csv, named);
    if (out_path.empty()) {
      out << csv.str();
    } else {
      write_file(out_path, csv.str());
    }
  } catch (const ComputeError& e) {
    return fail(err, "config", to_string(e.code()), e.what(), kExitUsage);
  } catch (const std::exception& e) {
    return fail(err, "output", "", e.what(), kExitCompute);
  }
  return 0;
}

}  // namespace

OutputFormat parse_format(std::string_view text) {
  const std::string t = to_lower(text);
  if (t == "text") return OutputFormat::Text;
  if (t == "json") return OutputFormat::Json;
  if (t == "csv") return OutputFormat::Csv;
  throw std::invalid_argument("unknown output format '" + std::string(text) +
                              "' (expected text, json or csv)");
}

std::vector<RoleAssignment> resolve_analyses(const RunConfig& config, const AnovaTable& anova) {
  const auto& design = anova.design;
  std::vector<Role> base(design.facet_count(), Role::Random);
  std::optional<std::size_t> object;
  for (const auto& [facet, role] : config.roles) {
    const std::size_t f = design.index_of(facet);
    if (role == Role::Object) {
      if (object && *object != f) {
        throw ComputeError(ComputeErrc::NoObject, "more than one facet has role 'object'");
      }
      object = f;
    } else {
      base[f] = role;
    }
  }
  if (config.object) {
    const std::size_t f = design.index_of(*config.object);
    if (object && *object != f) {
      throw ComputeError(ComputeErrc::NoObject, "--object conflicts with the role map");
    }
    object = f;
  }

  std::vector<RoleAssignment> analyses;
  for (std::size_t o = 0; o < design.facet_count(); ++o) {
    if (object && *object != o) continue;
    RoleAssignment roles(design.facet_count());
    for (std::size_t f = 0; f < roles.size(); ++f) {
      roles[f] = {f == o ? Role::Object : base[f], anova.levels.count(f)};
    }
    analyses.push_back(std::move(roles));
  }
  return analyses;
}

Report build_report(const RunConfig& config, const Dataset& data) {
  Report report{config, run_anova(data), {}, std::nullopt, {}, {}};
  const auto& anova = report.anova;

  for (const auto& row : anova.rows) {
    if (row.negative()) {
      report.warnings.push_back("negative variance estimate for '" + row.label + "' (" +
                                sig6(row.sigma2) + "); counted as 0 in coefficients and intervals");
    }
  }

  const auto analyses = resolve_analyses(config, anova);
  report.g_coefficients = g_coeffs_table(anova, analyses);

  if (config.dstudy_grid) {
    report.d_study.emplace();
    for (const auto& roles : analyses) {
      auto d = run_d_study(anova, *config.dstudy_grid, roles);
      for (auto& note : d.notes) push_unique(report.warnings, "d-study: " + note);
      report.d_study->push_back(std::move(d));
    }
  }

  for (const auto& roles : analyses) {
    std::size_t object = 0;
    while (roles[object].role != Role::Object) ++object;
    report.confidence.push_back({anova.design.facets()[object].name,
                                 confidence_intervals(data, anova, object, config.alpha)});
  }
  return report;
}

std::string render_anova(const AnovaTable& table, OutputFormat format) {
  switch (format) {
    case OutputFormat::Json: return anova_json(table).dump(2);
    case OutputFormat::Csv: return anova_csv(table);
    case OutputFormat::Text: break;
  }
  return anova_text(table);
}

std::string render_g_table(const std::vector<GCoeffResult>& results, OutputFormat format) {
  switch (format) {
    case OutputFormat::Json: return g_json(results).dump(2);
    case OutputFormat::Csv: return g_csv(results);
    case OutputFormat::Text: break;
  }
  return g_text(results);
}

std::string render_dstudy(const std::vector<DStudyResult>& results, OutputFormat format) {
  switch (format) {
    case OutputFormat::Json: return dstudy_json(results).dump(2);
    case OutputFormat::Csv: return dstudy_csv(results);
    case OutputFormat::Text: break;
  }
  return dstudy_text(results);
}

std::string render_ci(const std::vector<ObjectIntervals>& results, OutputFormat format) {
  switch (format) {
    case OutputFormat::Json: return ci_json(results).dump(2);
    case OutputFormat::Csv: return ci_csv(results);
    case OutputFormat::Text: break;
  }
  return ci_text(results);
}

std::string render_report(const Report& report, OutputFormat format) {
  if (format == OutputFormat::Json) {
    ojson doc;
    doc["anova"] = anova_json(report.anova);
    doc["g_coefficients"] = g_json(report.g_coefficients);
    if (report.d_study) doc["d_study"] = dstudy_json(*report.d_study);
    doc["confidence_intervals"] = ci_json(report.confidence);
    doc["warnings"] = report.warnings;
    doc["config_echo"] = config_json(report.config, report.anova);
    return doc.dump(2) + "\n";
  }
  if (format == OutputFormat::Csv) {
    std::string out = anova_csv(report.anova) + "\n" + g_csv(report.g_coefficients);
    if (report.d_study) out += "\n" + dstudy_csv(*report.d_study);
    out += "\n" + ci_csv(report.confidence);
    return out;
  }
  std::string out = "Design: " + render_design(report.anova.design) + "\n\n";
  out += anova_text(report.anova) + "\n" + g_text(report.g_coefficients);
  if (report.d_study) out += "\n" + dstudy_text(*report.d_study);
  out += "\n" + ci_text(report.confidence);
  if (!report.warnings.empty()) {
    out += "\nWarnings\n";
    for (const auto& w : report.warnings) out += "- " + w + "\n";
  }
  return out;
}

void write_csv_tables(const Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "anova.csv", anova_csv(report.anova));
  write_file(dir / "g_coefficients.csv", g_csv(report.g_coefficients));
  if (report.d_study) write_file(dir / "d_study.csv", dstudy_csv(*report.d_study));
  write_file(dir / "confidence_intervals.csv", ci_csv(report.confidence));
  std::string warnings = csv_line({"warning"});
  for (const auto& w : report.warnings) warnings += csv_line({w});
  write_file(dir / "warnings.csv", warnings);
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalizability-theory reliability analysis for balanced designs", "gtheory"};
  std::string data_path, design_str, response, dstudy_json_text, roles_json_text, object;
  std::string format_text = "text", out_path;
  double alpha = 0.05;
  app.add_option("--data", data_path, "Long-format CSV with one column per facet");
  app.add_option("--design", design_str, "Design string, e.g. \"person x (rater:item)\"");
  app.add_option("--response", response, "Name of the response column");
  app.add_option("--dstudy", dstudy_json_text, "D-study grid as JSON, e.g. '{\"item\":[4,8]}'");
  app.add_option("--roles", roles_json_text, "Facet roles as JSON, e.g. '{\"item\":\"fixed\"}'");
  app.add_option("--alpha", alpha, "Significance level for confidence intervals");
  app.add_option("--format", format_text, "Output format: text, json or csv");
  app.add_option("--out", out_path, "Output file (or directory for csv tables)");
  app.add_option("--object", object, "Object of measurement (default: every facet in turn)");

  std::string sim_design, sim_levels, sim_truth, sim_response = "Response", sim_out;
  double sim_mean = 0;
  std::uint64_t sim_seed = 1;
  auto* sim = app.add_subcommand("simulate", "Write a simulated balanced dataset as CSV");
  sim->group("");
  sim->add_option("--design", sim_design)->required();
  sim->add_option("--levels", sim_levels, "JSON object facet -> level count")->required();
  sim->add_option("--truth", sim_truth, "JSON object component -> true variance")->required();
  sim->add_option("--mean", sim_mean);
  sim->add_option("--seed", sim_seed);
  sim->add_option("--response", sim_response);
  sim->add_option("--out", sim_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    return fail(err, "usage", "", e.what(), kExitUsage);
  }

  if (*sim) {
    return run_simulate(sim_design, sim_levels, sim_truth, sim_mean, sim_seed, sim_response,
                        sim_out, out, err);
  }

  std::vector<std::string> missing;
  if (data_path.empty()) missing.push_back("--data");
  if (design_str.empty()) missing.push_back("--design");
  if (response.empty()) missing.push_back("--response");
  if (!missing.empty()) {
    return fail(err, "usage", "", "missing required option(s): " + join(missing, ", "),
                kExitUsage);
  }

  RunConfig config;
  config.data_path = data_path;
  config.design_str = design_str;
  config.response = response;
  config.alpha = alpha;
  if (!out_path.empty()) config.output_path = out_path;
  if (!object.empty()) config.object = object;
  try {
    config.output_format = parse_format(format_text);
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw std::invalid_argument("--alpha must lie strictly between 0 and 1");
    }
    if (!roles_json_text.empty()) config.roles = parse_roles_json(roles_json_text);
    if (!dstudy_json_text.empty()) config.dstudy_grid = parse_grid_json(dstudy_json_text);
  } catch (const ComputeError& e) {
    return fail(err, "config", to_string(e.code()), e.what(), kExitUsage);
  } catch (const std::exception& e) {
    return fail(err, "usage", "", e.what(), kExitUsage);
  }

  std::optional<DesignSpec> design;
  try {
    design = parse_design(config.design_str);
    validate_config(config, *design);
  } catch (const DesignError& e) {
    return fail(err, "design", to_string(e.code()), e.what(), kExitUsage);
  } catch (const ComputeError& e) {
    return fail(err, "config", to_string(e.code()), e.what(), kExitUsage);
  }

  std::optional<Dataset> data;
  try {
    const RawTable raw = load_table(config.data_path, config.response);
    data = validate_and_index(raw, *design, config.response);
  } catch (const DataError& e) {
    return fail(err, "data", to_string(e.code()), e.what(), kExitData);
  }

  std::optional<Report> report;
  try {
    report = build_report(config, *data);
  } catch (const ComputeError& e) {
    return fail(err, "compute", to_string(e.code()), e.what(), kExitCompute);
  }

  try {
    if (config.output_format == OutputFormat::Csv) {
      for (const auto& w : report->warnings) err << "WARNING: " << w << '\n';
    }
    if (!config.output_path) {
      out << render_report(*report, config.output_format);
    } else if (config.output_format == OutputFormat::Csv &&
               (std::filesystem::is_directory(*config.output_path) ||
                out_path.back() == '/')) {
      write_csv_tables(*report, *config.output_path);
    } else {
      write_file(*config.output_path, render_report(*report, config.output_format));
    }
  } catch (const std::exception& e) {
    return fail(err, "output", "", e.what(), kExitCompute);
  }
  return 0;
}

}  // namespace gtheory
