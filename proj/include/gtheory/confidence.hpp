#pragma once

#include <span>
#include <string>
#include <vector>

#include "gtheory/anova.hpp"

namespace gtheory {

struct ConfidenceInterval {
  std::string object_level;
  double mean = 0;
  double half_width = 0;
  double lower = 0;
  double upper = 0;
  double alpha = 0.05;
};

/// Error variance of an object level's mean score: every component outside
/// the object block, divided by the product of its level counts outside the
/// block. Negative entries in `sigma2` are treated as zero.
double mean_score_variance(const DesignSpec& design, std::span<const VarianceComponent> components,
                           std::span<const double> sigma2, std::size_t object,
                           const FacetLevels& levels);

/// Standard normal inverse CDF (Wichura's AS 241).
double normal_quantile(double p);

/// One z-interval per object level, sorted by level label.
std::vector<ConfidenceInterval> confidence_intervals(const Dataset& data, const AnovaTable& anova,
                                                     std::size_t object, double alpha = 0.05);

}  // namespace gtheory
