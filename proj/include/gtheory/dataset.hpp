#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gtheory/design.hpp"

namespace gtheory {

/// Long-format table as read: every column kept as text, plus the parsed response.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> columns;  // columns[c][row]
  std::size_t response_column = 0;
  std::vector<double> response;

  std::size_t rows() const { return response.size(); }
  /// Exact match first, then case-insensitive; returns header.size() when absent.
  std::size_t find_column(std::string_view name) const;
};

RawTable load_table(const std::filesystem::path& path, std::string_view response_column);
RawTable load_table(std::istream& in, std::string_view response_column);
RawTable load_table(std::vector<std::string> header,
                    const std::vector<std::vector<std::string>>& rows,
                    std::string_view response_column);

/// Level counts and labels per facet. Nested facets carry one label list per
/// parent cell (combination of their enclosing facets' indices); all lists
/// have the same length.
class FacetLevels {
 public:
  FacetLevels() = default;
  FacetLevels(const DesignSpec& design, std::vector<std::size_t> counts);

  std::size_t facet_count() const { return counts_.size(); }
  std::size_t count(std::size_t facet) const { return counts_[facet]; }
  const std::vector<std::size_t>& counts() const { return counts_; }

  /// Number of parent cells of `facet` (1 for top-level facets).
  std::size_t parent_cells(std::size_t facet) const { return labels_[facet].size(); }
  const std::string& label(std::size_t facet, std::size_t parent_cell, std::size_t index) const {
    return labels_[facet][parent_cell][index];
  }
  std::vector<std::vector<std::string>>& labels(std::size_t facet) { return labels_[facet]; }
  const std::vector<std::vector<std::string>>& labels(std::size_t facet) const {
    return labels_[facet];
  }

 private:
  std::vector<std::size_t> counts_;
  std::vector<std::vector<std::vector<std::string>>> labels_;
};

/// Balanced, complete observations on a dense grid. Index i of facet f runs
/// over 0..count(f)-1; for nested facets it is the position within the parent.
/// Cells are row-major in design facet order (last facet fastest).
class Dataset {
 public:
  Dataset(DesignSpec design, FacetLevels levels, std::vector<double> cells,
          std::string response_name = "Response");

  const DesignSpec& design() const { return design_; }
  const FacetLevels& levels() const { return levels_; }
  std::span<const double> cells() const { return cells_; }
  const std::string& response_name() const { return response_name_; }
  std::size_t size() const { return cells_.size(); }

  std::size_t stride(std::size_t facet) const { return strides_[facet]; }
  double at(std::span<const std::size_t> index) const;

  /// Index of the parent cell of `facet` given a full index tuple.
  std::size_t parent_cell(std::size_t facet, std::span<const std::size_t> index) const;
  /// Display label for a facet level in context, e.g. "5:1" for rater 5 within item 1.
  std::string level_label(std::size_t facet, std::span<const std::size_t> index) const;

 private:
  DesignSpec design_;
  FacetLevels levels_;
  std::vector<double> cells_;
  std::vector<std::size_t> strides_;
  std::string response_name_;
};

/// Matches design facets to columns, re-indexes nested facets per parent and
/// checks that every index combination is observed exactly once.
Dataset validate_and_index(const RawTable& raw, const DesignSpec& design,
                           std::string_view response);

/// Writes the dataset back in long format (facet columns then response).
void write_csv(std::ostream& out, const Dataset& data);

/// RFC-4180 quoting: fields with commas, quotes or line breaks are quoted.
std::string csv_escape(std::string_view field);

/// Numbers sort numerically, everything else lexicographically after them.
bool natural_less(std::string_view a, std::string_view b);

}  // namespace gtheory
