#pragma once

#include <map>
#include <string>
#include <vector>

#include "gtheory/dataset.hpp"
#include "gtheory/design.hpp"

namespace gtheory {

struct AnovaRow {
  VarianceComponent component;
  std::string label;
  std::size_t df = 0;
  double t_value = 0;
  double ss = 0;
  double ms = 0;
  double sigma2 = 0;  // raw estimate, may be negative
  bool negative() const { return sigma2 < 0; }
};

struct AnovaTable {
  DesignSpec design;
  FacetLevels levels;
  std::vector<AnovaRow> rows;  // enumeration order
  double grand_mean = 0;
  double t_u = 0;
  std::size_t observations = 0;

  std::vector<VarianceComponent> components() const;
  std::vector<double> sigma2() const;
  /// Row index by label (whitespace/case-insensitive); rows.size() when absent.
  std::size_t find(std::string_view label) const;
};

/// T-values keyed by component index set; the empty set is the grand-mean term U.
using TValues = std::map<FacetSet, double>;

/// T = (product of level counts outside the set) x sum of squared marginal means.
/// An empty index set gives T(U) = N * mean^2.
double t_value(const Dataset& data, FacetSet indices);
double t_value(const Dataset& data, const VarianceComponent& component);

/// Inclusion-exclusion over the component's primary indices; nesting indices
/// stay attached to every term.
double sum_of_squares(const TValues& t, const VarianceComponent& component);

std::size_t degrees_of_freedom(const VarianceComponent& component, const FacetLevels& levels);

/// Product of level counts of the facets outside `indices`.
double complement_count(const FacetLevels& levels, FacetSet indices);

/// Expected-mean-square coefficients: entry (a, b) is the product of level
/// counts outside b when b's indices contain a's, else 0.
class EmsMatrix {
 public:
  EmsMatrix(std::vector<VarianceComponent> components, std::vector<double> coeff);

  std::size_t size() const { return components_.size(); }
  double operator()(std::size_t row, std::size_t col) const { return coeff_[row * size() + col]; }
  const std::vector<VarianceComponent>& components() const { return components_; }

 private:
  std::vector<VarianceComponent> components_;
  std::vector<double> coeff_;
};

EmsMatrix ems_matrix(const DesignSpec& design, const FacetLevels& levels);

/// Back-substitution from the residual upward. Estimates are returned raw.
std::vector<double> solve_variance_components(std::span<const double> ms, const EmsMatrix& ems);

AnovaTable run_anova(const Dataset& data);

}  // namespace gtheory
