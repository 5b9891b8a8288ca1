#include "gtheory/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include "gtheory/error.hpp"

namespace gtheory {

namespace {

std::string trim_copy(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool parse_number(std::string_view text, double& out) {
  const std::string t = trim_copy(text);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(out);
}

// Reads one RFC-4180 record. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

bool blank_record(const std::vector<std::string>& fields) {
  return std::all_of(fields.begin(), fields.end(),
                     [](const std::string& f) { return trim_copy(f).empty(); });
}

}  // namespace

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool natural_less(std::string_view a, std::string_view b) {
  double x = 0, y = 0;
  const bool na = parse_number(a, x);
  const bool nb = parse_number(b, y);
  if (na && nb && x != y) return x < y;
  if (na != nb) return na;
  return a < b;
}

std::size_t RawTable::find_column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  const std::string key = to_lower(trim_copy(name));
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (to_lower(header[c]) == key) return c;
  }
  return header.size();
}

RawTable load_table(std::vector<std::string> header,
                    const std::vector<std::vector<std::string>>& rows,
                    std::string_view response_column) {
  RawTable table;
  for (auto& h : header) h = trim_copy(h);
  table.header = std::move(header);
  if (rows.empty()) throw DataError(DataErrc::EmptyTable, "table has no data rows");
  table.response_column = table.find_column(response_column);
  if (table.response_column == table.header.size()) {
    throw DataError(DataErrc::MissingColumn,
                    "response column '" + std::string(response_column) + "' not found");
  }

  table.columns.assign(table.header.size(), {});
  for (auto& col : table.columns) col.reserve(rows.size());
  table.response.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != table.header.size()) {
      throw DataError(DataErrc::RaggedRow,
                      "row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                          " fields, header has " + std::to_string(table.header.size()),
                      r + 1);
    }
    for (std::size_t c = 0; c < row.size(); ++c) table.columns[c].push_back(trim_copy(row[c]));
    double value = 0;
    if (!parse_number(row[table.response_column], value)) {
      throw DataError(DataErrc::NonNumericResponse,
                      "row " + std::to_string(r + 1) + ": response '" +
                          row[table.response_column] + "' is not a number",
                      r + 1);
    }
    table.response.push_back(value);
  }
  return table;
}

RawTable load_table(std::istream& in, std::string_view response_column) {
  std::vector<std::string> header;
  if (!read_record(in, header) || blank_record(header)) {
    throw DataError(DataErrc::EmptyTable, "input has no header row");
  }
  if (header.front().rfind("\xEF\xBB\xBF", 0) == 0) header.front().erase(0, 3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> fields;
  while (read_record(in, fields)) {
    if (blank_record(fields)) continue;
    rows.push_back(fields);
  }
  return load_table(std::move(header), rows, response_column);
}

RawTable load_table(const std::filesystem::path& path, std::string_view response_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrc::Io, "cannot open '" + path.string() + "'");
  return load_table(in, response_column);
}

FacetLevels::FacetLevels(const DesignSpec& design, std::vector<std::size_t> counts)
    : counts_(std::move(counts)) {
  if (counts_.size() != design.facet_count()) {
    throw ComputeError(ComputeErrc::InvalidLevelCount, "one level count per facet is required");
  }
  labels_.resize(counts_.size());
  for (std::size_t f = 0; f < counts_.size(); ++f) {
    if (counts_[f] == 0) {
      throw ComputeError(ComputeErrc::InvalidLevelCount,
                         "facet '" + design.facets()[f].name + "' has zero levels");
    }
    std::size_t parents = 1;
    for (std::size_t a : design.ancestors(f).members()) parents *= counts_[a];
    std::vector<std::string> names(counts_[f]);
    for (std::size_t i = 0; i < names.size(); ++i) names[i] = std::to_string(i + 1);
    labels_[f].assign(parents, names);
  }
}

Dataset::Dataset(DesignSpec design, FacetLevels levels, std::vector<double> cells,
                 std::string response_name)
    : design_(std::move(design)),
      levels_(std::move(levels)),
      cells_(std::move(cells)),
      response_name_(std::move(response_name)) {
  const std::size_t k = design_.facet_count();
  if (levels_.facet_count() != k) {
    throw ComputeError(ComputeErrc::InvalidLevelCount, "level counts do not match the design");
  }
  strides_.assign(k, 1);
  for (std::size_t f = k; f-- > 1;) strides_[f - 1] = strides_[f] * levels_.count(f);
  if (strides_[0] * levels_.count(0) != cells_.size()) {
    throw ComputeError(ComputeErrc::InvalidLevelCount, "cell count does not match level counts");
  }
}

double Dataset::at(std::span<const std::size_t> index) const {
  std::size_t pos = 0;
  for (std::size_t f = 0; f < index.size(); ++f) pos += index[f] * strides_[f];
  return cells_[pos];
}

std::size_t Dataset::parent_cell(std::size_t facet, std::span<const std::size_t> index) const {
  std::size_t cell = 0;
  for (std::size_t a : design_.ancestors(facet).members()) {
    cell = cell * levels_.count(a) + index[a];
  }
  return cell;
}

std::string Dataset::level_label(std::size_t facet, std::span<const std::size_t> index) const {
  std::string out = levels_.label(facet, parent_cell(facet, index), index[facet]);
  for (std::size_t a : design_.ancestors(facet).members()) {
    out += ":" + levels_.label(a, parent_cell(a, index), index[a]);
  }
  return out;
}

Dataset validate_and_index(const RawTable& raw, const DesignSpec& design,
                           std::string_view response) {
  const std::size_t k = design.facet_count();
  const std::size_t n_rows = raw.rows();
  if (n_rows == 0) throw DataError(DataErrc::EmptyTable, "table has no data rows");
  const std::size_t response_col = raw.find_column(response);
  if (response_col == raw.header.size()) {
    throw DataError(DataErrc::MissingColumn,
                    "response column '" + std::string(response) + "' not found");
  }

  std::vector<std::size_t> column(k);
  for (std::size_t f = 0; f < k; ++f) {
    column[f] = raw.find_column(design.facets()[f].name);
    if (column[f] == raw.header.size() || column[f] == response_col) {
      throw DataError(DataErrc::MissingColumn,
                      "no column for facet '" + design.facets()[f].name + "'");
    }
  }

  // Enclosing facets are indexed before the facets nested in them.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return design.ancestors(a).size() < design.ancestors(b).size();
  });

  std::vector<std::size_t> counts(k, 0);
  std::vector<std::vector<std::vector<std::string>>> labels(k);
  std::vector<std::vector<std::size_t>> index(k, std::vector<std::size_t>(n_rows));

  for (std::size_t f : order) {
    const auto& name = design.facets()[f].name;
    const auto& col = raw.columns[column[f]];
    const auto ancestors = design.ancestors(f).members();
    std::size_t parents = 1;
    for (std::size_t a : ancestors) parents *= counts[a];

    std::vector<std::size_t> parent_of(n_rows, 0);
    std::vector<std::vector<std::string>> groups(parents);
    for (std::size_t r = 0; r < n_rows; ++r) {
      std::size_t cell = 0;
      for (std::size_t a : ancestors) cell = cell * counts[a] + index[a][r];
      parent_of[r] = cell;
      groups[cell].push_back(col[r]);
    }
    for (auto& g : groups) {
      std::sort(g.begin(), g.end(), [](const std::string& a, const std::string& b) {
        return natural_less(a, b);
      });
      g.erase(std::unique(g.begin(), g.end()), g.end());
    }
    for (std::size_t p = 0; p < parents; ++p) {
      if (groups[p].empty()) {
        throw DataError(DataErrc::Unbalanced,
                        "facet '" + name + "' has no observations in parent cell " +
                            std::to_string(p + 1));
      }
      if (groups[p].size() != groups[0].size()) {
        throw DataError(DataErrc::NestedCountMismatch,
                        "nested facet '" + name + "' has " + std::to_string(groups[0].size()) +
                            " levels in its first parent cell but " +
                            std::to_string(groups[p].size()) + " in parent cell " +
                            std::to_string(p + 1));
      }
    }
    counts[f] = groups[0].size();
    for (std::size_t r = 0; r < n_rows; ++r) {
      const auto& g = groups[parent_of[r]];
      const auto it = std::lower_bound(g.begin(), g.end(), col[r],
                                       [](const std::string& a, const std::string& b) {
                                         return natural_less(a, b);
                                       });
      index[f][r] = static_cast<std::size_t>(it - g.begin());
    }
    labels[f] = std::move(groups);
  }

  FacetLevels levels(design, counts);
  for (std::size_t f = 0; f < k; ++f) levels.labels(f) = std::move(labels[f]);

  std::size_t total = 1;
  for (std::size_t c : counts) total *= c;
  std::vector<std::size_t> stride(k, 1);
  for (std::size_t f = k; f-- > 1;) stride[f - 1] = stride[f] * counts[f];

  auto describe = [&](std::span<const std::size_t> idx) {
    std::string out;
    for (std::size_t f = 0; f < k; ++f) {
      std::size_t cell = 0;
      for (std::size_t a : design.ancestors(f).members()) cell = cell * counts[a] + idx[a];
      if (f) out += ", ";
      out += design.facets()[f].name + "=" + levels.label(f, cell, idx[f]);
    }
    return out;
  };

  std::vector<double> cells(total, 0.0);
  std::vector<std::size_t> source_row(total, 0);
  std::vector<std::size_t> idx(k);
  for (std::size_t r = 0; r < n_rows; ++r) {
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
      idx[f] = index[f][r];
      pos += idx[f] * stride[f];
    }
    if (source_row[pos] != 0) {
      throw DataError(DataErrc::DuplicateObservation,
                      "rows " + std::to_string(source_row[pos]) + " and " +
                          std::to_string(r + 1) + " both observe (" + describe(idx) + ")",
                      r + 1);
    }
    source_row[pos] = r + 1;
    cells[pos] = raw.response[r];
  }
  for (std::size_t pos = 0; pos < total; ++pos) {
    if (source_row[pos] != 0) continue;
    std::size_t rest = pos;
    for (std::size_t f = 0; f < k; ++f) {
      idx[f] = rest / stride[f];
      rest %= stride[f];
    }
    throw DataError(DataErrc::Unbalanced, "no observation for (" + describe(idx) + ")");
  }
  return Dataset(design, std::move(levels), std::move(cells), raw.header[response_col]);
}

void write_csv(std::ostream& out, const Dataset& data) {
  const auto& design = data.design();
  const std::size_t k = design.facet_count();
  for (std::size_t f = 0; f < k; ++f) out << csv_escape(design.facets()[f].name) << ',';
  out << csv_escape(data.response_name()) << '\n';

  std::vector<std::size_t> idx(k, 0);
  char buf[64];
  for (std::size_t pos = 0; pos < data.size(); ++pos) {
    std::size_t rest = pos;
    for (std::size_t f = 0; f < k; ++f) {
      idx[f] = rest / data.stride(f);
      rest %= data.stride(f);
    }
    for (std::size_t f = 0; f < k; ++f) {
      out << csv_escape(data.levels().label(f, data.parent_cell(f, idx), idx[f])) << ',';
    }
    const auto res = std::to_chars(buf, buf + sizeof buf, data.cells()[pos]);
    out << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
  }
}

}  // namespace gtheory
