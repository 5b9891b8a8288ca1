#include "gtheory/dstudy.hpp"

#include "gtheory/error.hpp"

namespace gtheory {

std::vector<std::vector<std::size_t>> expand_grid(const DStudyGrid& grid) {
  for (const auto& [facet, counts] : grid) {
    if (counts.empty()) {
      throw ComputeError(ComputeErrc::EmptyCandidateList,
                         "no candidate level counts for facet '" + facet + "'");
    }
    for (std::size_t n : counts) {
      if (n == 0) {
        throw ComputeError(ComputeErrc::InvalidLevelCount,
                           "candidate level count for facet '" + facet + "' must be positive");
      }
    }
  }
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> pick(grid.size(), 0);
  while (true) {
    std::vector<std::size_t> scenario(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) scenario[i] = grid[i].second[pick[i]];
    out.push_back(std::move(scenario));
    std::size_t i = grid.size();
    while (i-- > 0) {
      if (++pick[i] < grid[i].second.size()) break;
      pick[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

DStudyResult run_d_study(const AnovaTable& anova, const DStudyGrid& grid,
                         const RoleAssignment& roles) {
  const auto& design = anova.design;
  const std::size_t k = design.facet_count();
  if (roles.size() != k) {
    throw ComputeError(ComputeErrc::NoObject, "roles must cover every facet of the design");
  }

  DStudyResult result;
  std::vector<const std::vector<std::size_t>*> supplied(k, nullptr);
  for (const auto& [facet, counts] : grid) {
    const std::size_t f = design.index_of(facet);
    supplied[f] = &counts;
  }

  DStudyGrid full;
  for (std::size_t f = 0; f < k; ++f) {
    result.facets.push_back(design.facets()[f].name);
    if (supplied[f]) {
      full.emplace_back(design.facets()[f].name, *supplied[f]);
      if (roles[f].role == Role::Object) {
        result.notes.push_back("facet '" + design.facets()[f].name +
                               "' is the object of measurement; its candidate counts do not "
                               "affect the coefficients");
      }
    } else {
      full.emplace_back(design.facets()[f].name,
                        std::vector<std::size_t>{anova.levels.count(f)});
      if (roles[f].role != Role::Object) {
        result.notes.push_back("facet '" + design.facets()[f].name +
                               "' not in the d-study grid; using its G-study count " +
                               std::to_string(anova.levels.count(f)));
      }
    }
  }

  for (auto& counts : expand_grid(full)) {
    RoleAssignment scenario_roles = roles;
    for (std::size_t f = 0; f < k; ++f) scenario_roles[f].level_count_used = counts[f];
    result.scenarios.push_back({std::move(counts), evaluate_coefficients(anova, scenario_roles)});
  }
  return result;
}

}  // namespace gtheory
