#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gtheory/anova.hpp"

namespace gtheory {

enum class Role { Object, Random, Fixed };

Role parse_role(std::string_view text);
std::string_view to_string(Role role) noexcept;

struct FacetRole {
  Role role = Role::Random;
  std::size_t level_count_used = 1;
};

/// Roles for every facet of a design, indexed by facet position.
using RoleAssignment = std::vector<FacetRole>;

/// `object` as the object of measurement, every other facet random, G-study counts.
RoleAssignment default_roles(const AnovaTable& anova, std::size_t object);

/// A variance component's contribution: sigma2(component) / divisor.
struct DivisorTerm {
  std::size_t component;
  double divisor;
};

struct Partition {
  std::vector<DivisorTerm> tau;
  std::vector<DivisorTerm> delta;
  std::vector<DivisorTerm> Delta;
};

/// Splits components into universe-score (tau), relative-error (delta) and
/// absolute-error (Delta) sets.
///
/// The object block is the object facet plus the facets it is nested within.
/// A component lying entirely inside the block belongs to tau with divisor 1.
/// Every other component is divided by the product of level_count_used over
/// its indices outside the block. Of those, the ones touching the block go to
/// tau when all their outside indices are fixed and to delta otherwise. Delta
/// holds everything that is not in tau.
Partition partition_components(const DesignSpec& design,
                               std::span<const VarianceComponent> components,
                               std::span<const FacetRole> roles);

/// tau / (tau + delta); empty when both are zero.
std::optional<double> g_coefficient(double tau, double delta);
/// tau / (tau + Delta); empty when both are zero.
std::optional<double> phi_coefficient(double tau, double Delta);

struct GCoeffResult {
  std::string object;
  std::size_t object_facet = 0;
  double tau = 0;
  double delta = 0;
  double Delta = 0;
  std::optional<double> e_rho2;
  std::optional<double> phi;
  std::vector<std::string> clamped_components;
};

/// Coefficients for one role assignment. Negative variance estimates count as
/// zero and are listed in clamped_components.
GCoeffResult evaluate_coefficients(const AnovaTable& anova, std::span<const FacetRole> roles);

/// One result per role assignment.
std::vector<GCoeffResult> g_coeffs_table(const AnovaTable& anova,
                                         std::span<const RoleAssignment> analyses);
/// Every facet in turn as the object, all others random.
std::vector<GCoeffResult> g_coeffs_table(const AnovaTable& anova);

}  // namespace gtheory
