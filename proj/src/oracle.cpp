#include "gtheory/oracle.hpp"

#include <cmath>
#include <random>

#include "gtheory/error.hpp"

namespace gtheory::oracle {

namespace {

// Advances `idx` over the facets in `which`; returns false after the last combination.
bool advance(std::vector<std::size_t>& idx, const std::vector<std::size_t>& which,
             const FacetLevels& levels) {
  for (std::size_t i = which.size(); i-- > 0;) {
    const std::size_t f = which[i];
    if (++idx[f] < levels.count(f)) return true;
    idx[f] = 0;
  }
  return false;
}

std::size_t key_of(const std::vector<std::size_t>& idx, const std::vector<std::size_t>& which,
                   const FacetLevels& levels) {
  std::size_t key = 0;
  for (std::size_t f : which) key = key * levels.count(f) + idx[f];
  return key;
}

// Marginal means over every combination of `set`, keyed as key_of().
std::vector<long double> marginal_means(const Dataset& data, FacetSet set) {
  const auto& levels = data.levels();
  const std::size_t k = levels.facet_count();
  const auto inside = set.members();
  const auto outside = (FacetSet::first_n(k) - set).members();

  std::vector<long double> means;
  std::vector<std::size_t> idx(k, 0);
  do {
    long double sum = 0;
    std::size_t n = 0;
    for (std::size_t f : outside) idx[f] = 0;
    do {
      sum += data.at(idx);
      ++n;
    } while (advance(idx, outside, levels));
    means.push_back(sum / static_cast<long double>(n));
  } while (advance(idx, inside, levels));
  return means;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

NaiveAnova naive_t_ss(const Dataset& data) {
  const auto& design = data.design();
  const auto& levels = data.levels();
  const std::size_t k = design.facet_count();
  const auto components = enumerate_components(design);

  std::map<FacetSet, std::vector<long double>> means;
  means[FacetSet{}] = marginal_means(data, FacetSet{});
  for (const auto& c : components) means[c.indices()] = marginal_means(data, c.indices());

  NaiveAnova out;
  const long double n_total = static_cast<long double>(data.size());
  out.t_u = static_cast<double>(n_total * means[FacetSet{}][0] * means[FacetSet{}][0]);

  const auto all = FacetSet::first_n(k).members();
  for (const auto& c : components) {
    const auto& m = means[c.indices()];
    const long double cell_size = n_total / static_cast<long double>(m.size());
    long double t = 0;
    for (long double v : m) t += cell_size * v * v;

    // Effect of this component at every observation, from marginal means.
    std::vector<FacetSet> subsets;
    std::vector<int> signs;
    for (std::uint32_t sub = 0; sub < (std::uint32_t{1} << k); ++sub) {
      const FacetSet q(sub);
      if (!c.primary.contains(q)) continue;
      subsets.push_back(q | c.nesting);
      signs.push_back((c.primary.size() - q.size()) % 2 ? -1 : 1);
    }
    long double ss = 0;
    std::vector<std::size_t> idx(k, 0);
    do {
      long double effect = 0;
      for (std::size_t s = 0; s < subsets.size(); ++s) {
        const auto which = subsets[s].members();
        effect += signs[s] * means[subsets[s]][key_of(idx, which, levels)];
      }
      ss += effect * effect;
    } while (advance(idx, all, levels));

    out.terms.push_back({c.indices(), static_cast<double>(t), static_cast<double>(ss)});
  }
  return out;
}

EmsMatrix ems_symbolic(const DesignSpec& design, const FacetLevels& levels) {
  if (!design.fully_crossed()) {
    throw ComputeError(ComputeErrc::NotCrossed,
                       "the step expansion applies to fully crossed designs only");
  }
  auto components = enumerate_components(design);
  const std::size_t n = components.size();
  const FacetSet all = design.all_facets();
  auto position = [&](FacetSet s) {
    for (std::size_t i = 0; i < n; ++i) {
      if (components[i].indices() == s) return i;
    }
    throw ComputeError(ComputeErrc::UnknownComponent, "component missing from enumeration");
  };

  std::vector<double> coeff(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    const FacetSet alpha = components[a].indices();
    const FacetSet added = all - alpha;
    double others = 1;
    for (std::size_t f : added.members()) others *= static_cast<double>(levels.count(f));
    // Step j adds (-1)^j times the mean squares with j extra indices.
    for (std::uint32_t sub = 0; sub < (std::uint32_t{1} << design.facet_count()); ++sub) {
      const FacetSet extra(sub);
      if (!added.contains(extra)) continue;
      const double sign = extra.size() % 2 ? -1.0 : 1.0;
      coeff[a * n + position(alpha | extra)] += sign / others;
    }
  }
  return EmsMatrix(std::move(components), std::move(coeff));
}

TrueComponents truth_from_labels(const DesignSpec& design, double mean,
                                 const std::map<std::string, double>& by_label) {
  const auto components = enumerate_components(design);
  TrueComponents truth{mean, std::vector<double>(components.size(), 0.0)};
  for (const auto& [label, value] : by_label) {
    const std::string key = normalize_label(label);
    bool found = false;
    for (std::size_t c = 0; c < components.size(); ++c) {
      if (normalize_label(component_label(design, components[c])) == key) {
        truth.variance[c] = value;
        found = true;
      }
    }
    if (!found) {
      throw ComputeError(ComputeErrc::UnknownComponent,
                         "no component named '" + label + "' in the design");
    }
  }
  return truth;
}

std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t replicate) {
  return splitmix64(splitmix64(base) ^ replicate);
}

Simulation simulate_with_effects(const DesignSpec& design, const std::vector<std::size_t>& counts,
                                 const TrueComponents& truth, std::uint64_t seed) {
  const auto components = enumerate_components(design);
  if (truth.variance.size() != components.size()) {
    throw ComputeError(ComputeErrc::InvalidTruth, "one true variance per component is required");
  }
  for (double v : truth.variance) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ComputeError(ComputeErrc::InvalidTruth, "true variances must be finite and >= 0");
    }
  }
  if (!(truth.variance.back() > 0.0)) {
    throw ComputeError(ComputeErrc::InvalidTruth, "the residual variance must be positive");
  }

  FacetLevels levels(design, counts);
  const std::size_t k = design.facet_count();
  std::size_t total = 1;
  for (std::size_t n : counts) total *= n;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> cells(total, truth.mean);
  std::vector<std::vector<double>> effects;
  const auto all = FacetSet::first_n(k).members();
  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto which = components[c].indices().members();
    std::size_t draws = 1;
    for (std::size_t f : which) draws *= counts[f];
    const double sd = std::sqrt(truth.variance[c]);
    std::vector<double> effect(draws);
    for (auto& e : effect) e = sd * normal(rng);

    std::vector<std::size_t> idx(k, 0);
    std::size_t pos = 0;
    do {
      cells[pos++] += effect[key_of(idx, which, levels)];
    } while (advance(idx, all, levels));
    effects.push_back(std::move(effect));
  }
  return {Dataset(design, std::move(levels), std::move(cells)), std::move(effects)};
}

Dataset simulate(const DesignSpec& design, const std::vector<std::size_t>& counts,
                 const TrueComponents& truth, std::uint64_t seed) {
  return simulate_with_effects(design, counts, truth, seed).data;
}

}  // namespace gtheory::oracle
