#include "gtheory/reliability.hpp"

#include <algorithm>

#include "gtheory/error.hpp"

namespace gtheory {

Role parse_role(std::string_view text) {
  const std::string t = to_lower(text);
  if (t == "object") return Role::Object;
  if (t == "random") return Role::Random;
  if (t == "fixed") return Role::Fixed;
  throw ComputeError(ComputeErrc::UnknownRole,
                     "unknown role '" + std::string(text) + "' (expected object, random or fixed)");
}

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::Object: return "object";
    case Role::Random: return "random";
    case Role::Fixed: return "fixed";
  }
  return "?";
}

RoleAssignment default_roles(const AnovaTable& anova, std::size_t object) {
  RoleAssignment roles(anova.design.facet_count());
  for (std::size_t f = 0; f < roles.size(); ++f) {
    roles[f] = {f == object ? Role::Object : Role::Random, anova.levels.count(f)};
  }
  return roles;
}

Partition partition_components(const DesignSpec& design,
                               std::span<const VarianceComponent> components,
                               std::span<const FacetRole> roles) {
  if (roles.size() != design.facet_count()) {
    throw ComputeError(ComputeErrc::NoObject, "roles must cover every facet of the design");
  }
  const auto objects = std::count_if(roles.begin(), roles.end(),
                                     [](const FacetRole& r) { return r.role == Role::Object; });
  if (objects != 1) {
    throw ComputeError(ComputeErrc::NoObject,
                       "exactly one facet must be the object of measurement (got " +
                           std::to_string(objects) + ")");
  }
  std::size_t object = 0;
  while (roles[object].role != Role::Object) ++object;
  const FacetSet block = FacetSet::single(object) | design.ancestors(object);

  Partition out;
  for (std::size_t c = 0; c < components.size(); ++c) {
    const FacetSet indices = components[c].indices();
    const FacetSet outside = indices - block;
    if (outside.empty()) {
      out.tau.push_back({c, 1.0});
      continue;
    }
    double divisor = 1;
    bool all_fixed = true;
    for (std::size_t f : outside.members()) {
      if (roles[f].level_count_used == 0) {
        throw ComputeError(ComputeErrc::InvalidLevelCount,
                           "facet '" + design.facets()[f].name + "' has a level count of zero");
      }
      divisor *= static_cast<double>(roles[f].level_count_used);
      all_fixed = all_fixed && roles[f].role == Role::Fixed;
    }
    if (indices.intersects(block)) {
      if (all_fixed) {
        out.tau.push_back({c, divisor});
        continue;
      }
      out.delta.push_back({c, divisor});
    }
    out.Delta.push_back({c, divisor});
  }
  return out;
}

std::optional<double> g_coefficient(double tau, double delta) {
  if (tau + delta == 0.0) return std::nullopt;
  return tau / (tau + delta);
}

std::optional<double> phi_coefficient(double tau, double Delta) {
  if (tau + Delta == 0.0) return std::nullopt;
  return tau / (tau + Delta);
}

GCoeffResult evaluate_coefficients(const AnovaTable& anova, std::span<const FacetRole> roles) {
  const auto components = anova.components();
  const Partition part = partition_components(anova.design, components, roles);

  GCoeffResult result;
  while (roles[result.object_facet].role != Role::Object) ++result.object_facet;
  result.object = anova.design.facets()[result.object_facet].name;

  auto total = [&](const std::vector<DivisorTerm>& terms) {
    double sum = 0;
    for (const auto& t : terms) sum += std::max(anova.rows[t.component].sigma2, 0.0) / t.divisor;
    return sum;
  };
  result.tau = total(part.tau);
  result.delta = total(part.delta);
  result.Delta = total(part.Delta);
  result.e_rho2 = g_coefficient(result.tau, result.delta);
  result.phi = phi_coefficient(result.tau, result.Delta);
  for (const auto& row : anova.rows) {
    if (row.negative()) result.clamped_components.push_back(row.label);
  }
  return result;
}

std::vector<GCoeffResult> g_coeffs_table(const AnovaTable& anova,
                                         std::span<const RoleAssignment> analyses) {
  std::vector<GCoeffResult> out;
  out.reserve(analyses.size());
  for (const auto& roles : analyses) out.push_back(evaluate_coefficients(anova, roles));
  return out;
}

std::vector<GCoeffResult> g_coeffs_table(const AnovaTable& anova) {
  std::vector<RoleAssignment> analyses;
  for (std::size_t f = 0; f < anova.design.facet_count(); ++f) {
    analyses.push_back(default_roles(anova, f));
  }
  return g_coeffs_table(anova, analyses);
}

}  // namespace gtheory
