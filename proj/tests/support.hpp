#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gtheory/dataset.hpp"
#include "gtheory/design.hpp"

namespace gtheory::testing {

struct CatalogDesign {
  std::string design;
  std::vector<std::size_t> counts;  // design facet order
};

/// Designs exercised by the oracle-equivalence and consistency checks.
inline const std::vector<CatalogDesign>& catalog() {
  static const std::vector<CatalogDesign> designs{
      {"p x i", {6, 5}},
      {"p x r x i", {5, 3, 4}},
      {"p x (r:i)", {5, 3, 4}},
      {"(r:p) x i", {3, 5, 4}},
      {"r:(i:p)", {3, 4, 5}},
  };
  return designs;
}

inline Dataset dataset_from_values(const std::string& design_str,
                                   const std::vector<std::size_t>& counts,
                                   std::vector<double> values) {
  auto design = parse_design(design_str);
  FacetLevels levels(design, counts);
  return Dataset(std::move(design), std::move(levels), std::move(values));
}

/// Uniform noise on a balanced grid.
inline Dataset random_dataset(const std::string& design_str, const std::vector<std::size_t>& counts,
                              std::uint64_t seed, double offset = 0.0, double scale = 1.0) {
  std::size_t total = 1;
  for (std::size_t n : counts) total *= n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> values(total);
  for (auto& v : values) v = offset + scale * u(rng);
  return dataset_from_values(design_str, counts, std::move(values));
}

inline Dataset transformed(const Dataset& data, double mul, double add) {
  std::vector<double> values(data.cells().begin(), data.cells().end());
  for (auto& v : values) v = v * mul + add;
  return Dataset(data.design(), data.levels(), std::move(values));
}

/// |a - b| <= tol * max(|a|, |b|, floor).
inline bool rel_close(double a, double b, double tol, double floor = 1e-300) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), floor});
}

/// The 2x2 person-by-item fixture, rows = persons.
inline Dataset worked_fixture() { return dataset_from_values("p x i", {2, 2}, {1, 2, 3, 5}); }

}  // namespace gtheory::testing
