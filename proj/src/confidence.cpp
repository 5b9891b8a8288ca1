#include "gtheory/confidence.hpp"

#include <algorithm>
#include <cmath>

#include "gtheory/error.hpp"

namespace gtheory {

double mean_score_variance(const DesignSpec& design, std::span<const VarianceComponent> components,
                           std::span<const double> sigma2, std::size_t object,
                           const FacetLevels& levels) {
  const FacetSet block = FacetSet::single(object) | design.ancestors(object);
  double var = 0;
  for (std::size_t c = 0; c < components.size(); ++c) {
    const FacetSet outside = components[c].indices() - block;
    if (outside.empty()) continue;
    double divisor = 1;
    for (std::size_t f : outside.members()) divisor *= static_cast<double>(levels.count(f));
    var += std::max(sigma2[c], 0.0) / divisor;
  }
  return var;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ComputeError(ComputeErrc::OutOfDomain,
                       "normal quantile needs 0 < p < 1, got " + std::to_string(p));
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                0.24178072517745061177) * r + 1.27045825245236838258) * r +
              3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) * r + 0.14810397642748007459) * r +
              0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) * r + 0.026532189526576123093) * r +
              0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
              0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0 ? -val : val;
}

std::vector<ConfidenceInterval> confidence_intervals(const Dataset& data, const AnovaTable& anova,
                                                     std::size_t object, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ComputeError(ComputeErrc::OutOfDomain,
                       "alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  const auto& design = data.design();
  const auto& levels = data.levels();
  if (object >= design.facet_count()) {
    throw ComputeError(ComputeErrc::UnknownFacet, "object facet index out of range");
  }
  const auto components = anova.components();
  const auto sigma2 = anova.sigma2();
  const double var = mean_score_variance(design, components, sigma2, object, anova.levels);
  const double half_width = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(var);

  const auto block = (FacetSet::single(object) | design.ancestors(object)).members();
  std::size_t groups = 1;
  for (std::size_t f : block) groups *= levels.count(f);
  std::vector<double> sums(groups, 0.0);

  const std::size_t k = design.facet_count();
  std::vector<std::size_t> idx(k, 0);
  const auto cells = data.cells();
  for (std::size_t pos = 0; pos < cells.size(); ++pos) {
    std::size_t key = 0;
    for (std::size_t f : block) key = key * levels.count(f) + idx[f];
    sums[key] += cells[pos];
    for (std::size_t f = k; f-- > 0;) {
      if (++idx[f] < levels.count(f)) break;
      idx[f] = 0;
    }
  }

  const double per_group = static_cast<double>(cells.size() / groups);
  std::vector<ConfidenceInterval> out;
  out.reserve(groups);
  std::fill(idx.begin(), idx.end(), 0);
  for (std::size_t key = 0; key < groups; ++key) {
    std::size_t rest = key;
    for (std::size_t b = block.size(); b-- > 0;) {
      idx[block[b]] = rest % levels.count(block[b]);
      rest /= levels.count(block[b]);
    }
    ConfidenceInterval ci;
    ci.object_level = data.level_label(object, idx);
    ci.mean = sums[key] / per_group;
    ci.half_width = half_width;
    ci.lower = ci.mean - half_width;
    ci.upper = ci.mean + half_width;
    ci.alpha = alpha;
    out.push_back(std::move(ci));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return natural_less(a.object_level, b.object_level);
  });
  return out;
}

}  // namespace gtheory
