#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gtheory/reliability.hpp"

namespace gtheory {

/// Candidate level counts per facet name, in the order supplied.
using DStudyGrid = std::vector<std::pair<std::string, std::vector<std::size_t>>>;

/// Cartesian product, first entry varying slowest.
std::vector<std::vector<std::size_t>> expand_grid(const DStudyGrid& grid);

struct DStudyScenario {
  std::vector<std::size_t> counts;  // one per design facet
  GCoeffResult coefficients;
};

struct DStudyResult {
  std::vector<std::string> facets;  // design order
  std::vector<DStudyScenario> scenarios;
  std::vector<std::string> notes;
};

/// Re-evaluates the coefficients for every grid scenario with the G-study
/// variance components held fixed. `roles` selects the object and any fixed
/// facets; their level counts are replaced per scenario. Facets absent from the
/// grid keep their G-study counts.
DStudyResult run_d_study(const AnovaTable& anova, const DStudyGrid& grid,
                         const RoleAssignment& roles);

}  // namespace gtheory
