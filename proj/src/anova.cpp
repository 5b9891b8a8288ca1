#include "gtheory/anova.hpp"

#include <algorithm>
#include <cmath>

#include "gtheory/error.hpp"

namespace gtheory {

namespace {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0;
  double comp_ = 0;
};

void require_closed(const DesignSpec& design, FacetSet indices) {
  if (!(indices - design.all_facets()).empty()) {
    throw ComputeError(ComputeErrc::UnknownComponent, "index set outside the design");
  }
  for (std::size_t f : indices.members()) {
    if (!indices.contains(design.ancestors(f))) {
      throw ComputeError(ComputeErrc::UnknownComponent,
                         "facet '" + design.facets()[f].name +
                             "' appears without the facets it is nested in");
    }
  }
}

// Sum over marginal cells of (sum of (x - shift))^2 / cell size.
double marginal_t(const Dataset& data, FacetSet indices, double shift) {
  const std::size_t k = data.design().facet_count();
  const auto members = indices.members();
  std::size_t groups = 1;
  for (std::size_t f : members) groups *= data.levels().count(f);

  std::vector<CompensatedSum> sums(groups);
  std::vector<std::size_t> idx(k, 0);
  const auto cells = data.cells();
  for (std::size_t pos = 0; pos < cells.size(); ++pos) {
    std::size_t key = 0;
    for (std::size_t f : members) key = key * data.levels().count(f) + idx[f];
    sums[key].add(cells[pos] - shift);
    for (std::size_t f = k; f-- > 0;) {
      if (++idx[f] < data.levels().count(f)) break;
      idx[f] = 0;
    }
  }
  const double per_group = static_cast<double>(cells.size() / groups);
  CompensatedSum t;
  for (const auto& s : sums) {
    const double v = s.value();
    t.add(v * v);
  }
  return t.value() / per_group;
}

double mean_of(const Dataset& data) {
  const auto cells = data.cells();
  if (std::all_of(cells.begin(), cells.end(), [&](double x) { return x == cells[0]; })) {
    return cells[0];
  }
  CompensatedSum s;
  for (double x : data.cells()) s.add(x);
  return s.value() / static_cast<double>(data.size());
}

}  // namespace

std::vector<VarianceComponent> AnovaTable::components() const {
  std::vector<VarianceComponent> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.component);
  return out;
}

std::vector<double> AnovaTable::sigma2() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.sigma2);
  return out;
}

std::size_t AnovaTable::find(std::string_view label) const {
  const std::string key = normalize_label(label);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (normalize_label(rows[i].label) == key) return i;
  }
  return rows.size();
}

double t_value(const Dataset& data, FacetSet indices) {
  require_closed(data.design(), indices);
  return marginal_t(data, indices, 0.0);
}

double t_value(const Dataset& data, const VarianceComponent& component) {
  return t_value(data, component.indices());
}

double sum_of_squares(const TValues& t, const VarianceComponent& component) {
  const std::uint32_t primary = component.primary.bits();
  double ss = 0;
  // Walk every subset of the primary indices.
  std::uint32_t sub = primary;
  while (true) {
    const FacetSet key = FacetSet(sub) | component.nesting;
    const auto it = t.find(key);
    if (it == t.end()) {
      throw ComputeError(ComputeErrc::MissingTValue,
                         "no T-value for index set " + std::to_string(key.bits()));
    }
    const bool odd = (component.primary.size() - FacetSet(sub).size()) % 2 == 1;
    ss += odd ? -it->second : it->second;
    if (sub == 0) break;
    sub = (sub - 1) & primary;
  }
  return ss;
}

std::size_t degrees_of_freedom(const VarianceComponent& component, const FacetLevels& levels) {
  std::size_t df = 1;
  for (std::size_t f : component.primary.members()) df *= levels.count(f) - 1;
  for (std::size_t f : component.nesting.members()) df *= levels.count(f);
  return df;
}

double complement_count(const FacetLevels& levels, FacetSet indices) {
  double n = 1;
  for (std::size_t f = 0; f < levels.facet_count(); ++f) {
    if (!indices.contains(f)) n *= static_cast<double>(levels.count(f));
  }
  return n;
}

EmsMatrix::EmsMatrix(std::vector<VarianceComponent> components, std::vector<double> coeff)
    : components_(std::move(components)), coeff_(std::move(coeff)) {}

EmsMatrix ems_matrix(const DesignSpec& design, const FacetLevels& levels) {
  auto components = enumerate_components(design);
  const std::size_t n = components.size();
  std::vector<double> coeff(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (components[b].indices().contains(components[a].indices())) {
        coeff[a * n + b] = complement_count(levels, components[b].indices());
      }
    }
  }
  return EmsMatrix(std::move(components), std::move(coeff));
}

std::vector<double> solve_variance_components(std::span<const double> ms, const EmsMatrix& ems) {
  const std::size_t n = ems.size();
  if (ms.size() != n) {
    throw ComputeError(ComputeErrc::SingularSystem, "mean-square count does not match the system");
  }
  std::vector<double> sigma2(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = 0; j < i; ++j) {
      if (ems(i, j) != 0.0) {
        throw ComputeError(ComputeErrc::SingularSystem, "system is not upper triangular");
      }
    }
    if (ems(i, i) == 0.0) {
      throw ComputeError(ComputeErrc::SingularSystem, "zero pivot in the mean-square system");
    }
    double rest = ms[i];
    for (std::size_t j = i + 1; j < n; ++j) rest -= ems(i, j) * sigma2[j];
    sigma2[i] = rest / ems(i, i);
  }
  return sigma2;
}

AnovaTable run_anova(const Dataset& data) {
  const auto& design = data.design();
  const auto& levels = data.levels();
  for (std::size_t f = 0; f < design.facet_count(); ++f) {
    if (levels.count(f) < 2) {
      throw ComputeError(ComputeErrc::ZeroDf, "facet '" + design.facets()[f].name +
                                                  "' has a single level; its effects have zero "
                                                  "degrees of freedom");
    }
  }

  AnovaTable table{design, levels, {}, mean_of(data), 0.0, data.size()};
  table.t_u = static_cast<double>(data.size()) * table.grand_mean * table.grand_mean;

  // Sums of squares come from T-values of the mean-centred data; the algebra is
  // shift invariant and this avoids cancellation against large T(U).
  TValues centred{{FacetSet{}, marginal_t(data, FacetSet{}, table.grand_mean)}};
  const auto ems = ems_matrix(design, levels);
  for (const auto& c : ems.components()) {
    centred[c.indices()] = marginal_t(data, c.indices(), table.grand_mean);
  }

  std::vector<double> ms;
  for (const auto& c : ems.components()) {
    AnovaRow row;
    row.component = c;
    row.label = component_label(design, c);
    row.df = degrees_of_freedom(c, levels);
    row.t_value = marginal_t(data, c.indices(), 0.0);
    row.ss = sum_of_squares(centred, c);
    row.ms = row.ss / static_cast<double>(row.df);
    ms.push_back(row.ms);
    table.rows.push_back(std::move(row));
  }
  const auto sigma2 = solve_variance_components(ms, ems);
  for (std::size_t i = 0; i < sigma2.size(); ++i) table.rows[i].sigma2 = sigma2[i];
  return table;
}

}  // namespace gtheory
