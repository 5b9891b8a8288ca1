#pragma once

// Reference implementations used to check the engine, and a synthetic-data
// generator. Nothing here shares code with the ANOVA engine.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gtheory/anova.hpp"
#include "gtheory/dataset.hpp"
#include "gtheory/design.hpp"

namespace gtheory::oracle {

struct NaiveTerm {
  FacetSet indices;
  double t = 0;
  double ss = 0;
};

struct NaiveAnova {
  double t_u = 0;
  std::vector<NaiveTerm> terms;  // enumeration order
};

/// T by explicit mean-then-square loops; SS as the sum over observations of the
/// squared effect estimate, each effect built from marginal means.
NaiveAnova naive_t_ss(const Dataset& data);

/// Maps mean squares to variance components (sigma2 = K * MS) by the step
/// expansion over added indices. Fully crossed designs only.
EmsMatrix ems_symbolic(const DesignSpec& design, const FacetLevels& levels);

/// True variance per component (enumeration order) and grand mean.
struct TrueComponents {
  double mean = 0;
  std::vector<double> variance;
};

/// Builds TrueComponents from component labels; unnamed components get zero.
TrueComponents truth_from_labels(const DesignSpec& design, double mean,
                                 const std::map<std::string, double>& by_label);

/// Derives an independent per-replicate seed.
std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t replicate);

/// Draws one balanced dataset from the random-effects model: the mean plus one
/// independent normal effect per component level combination.
Dataset simulate(const DesignSpec& design, const std::vector<std::size_t>& counts,
                 const TrueComponents& truth, std::uint64_t seed);

struct Simulation {
  Dataset data;
  /// Drawn effects per component (enumeration order), indexed row-major over
  /// the component's facets in design order, nested facets by per-parent index.
  std::vector<std::vector<double>> effects;
};

/// As simulate(), also returning the effects behind the data.
Simulation simulate_with_effects(const DesignSpec& design, const std::vector<std::size_t>& counts,
                                 const TrueComponents& truth, std::uint64_t seed);

}  // namespace gtheory::oracle
