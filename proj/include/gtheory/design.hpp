#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gtheory {

/// Set of facets, addressed by their position in the design.
class FacetSet {
 public:
  static constexpr std::size_t kMaxFacets = 32;

  constexpr FacetSet() = default;
  constexpr explicit FacetSet(std::uint32_t bits) : bits_(bits) {}

  static constexpr FacetSet single(std::size_t facet) {
    return FacetSet(std::uint32_t{1} << facet);
  }
  static constexpr FacetSet first_n(std::size_t n) {
    return FacetSet(n >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1);
  }

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  constexpr bool contains(std::size_t facet) const { return (bits_ >> facet) & 1u; }
  constexpr bool contains(FacetSet other) const { return (bits_ & other.bits_) == other.bits_; }
  constexpr bool intersects(FacetSet other) const { return (bits_ & other.bits_) != 0; }

  constexpr FacetSet operator|(FacetSet o) const { return FacetSet(bits_ | o.bits_); }
  constexpr FacetSet operator&(FacetSet o) const { return FacetSet(bits_ & o.bits_); }
  constexpr FacetSet operator-(FacetSet o) const { return FacetSet(bits_ & ~o.bits_); }
  constexpr FacetSet& operator|=(FacetSet o) { bits_ |= o.bits_; return *this; }

  constexpr auto operator<=>(const FacetSet&) const = default;

  /// Facet positions in ascending order.
  std::vector<std::size_t> members() const;

 private:
  std::uint32_t bits_ = 0;
};

struct Facet {
  std::string name;                  // spelling as first written
  std::vector<std::string> nested_in;  // full chain of enclosing facets, in design order
};

/// Parsed measurement design. Facets keep the order of first appearance in the source.
class DesignSpec {
 public:
  DesignSpec(std::vector<Facet> facets, std::string source);

  const std::vector<Facet>& facets() const { return facets_; }
  std::size_t facet_count() const { return facets_.size(); }
  const std::string& source_string() const { return source_; }
  FacetSet all_facets() const { return FacetSet::first_n(facets_.size()); }

  /// Case-insensitive facet lookup; returns facet_count() when absent.
  std::size_t find(std::string_view name) const;
  /// As find(), but throws ComputeError(UnknownFacet).
  std::size_t index_of(std::string_view name) const;

  /// Every facet `facet` is nested within (transitively).
  FacetSet ancestors(std::size_t facet) const { return ancestors_[facet]; }
  bool is_nested(std::size_t facet) const { return !ancestors_[facet].empty(); }
  bool fully_crossed() const;

  /// Structural equality: same facets (case-insensitive) with the same nesting.
  friend bool operator==(const DesignSpec& a, const DesignSpec& b);

 private:
  std::vector<Facet> facets_;
  std::vector<FacetSet> ancestors_;
  std::string source_;
};

/// One effect of the random-effects model: its own indices plus the indices
/// it is nested within.
struct VarianceComponent {
  FacetSet primary;
  FacetSet nesting;

  FacetSet indices() const { return primary | nesting; }
  friend bool operator==(const VarianceComponent&, const VarianceComponent&) = default;
};

/// Parses `ident ("x" ident)*` with `:` for nesting (left within right) and
/// parentheses for grouping. Mixing `x` and `:` at one grouping level is rejected.
DesignSpec parse_design(std::string_view design_str);

/// Canonical text form; parse_design(render_design(d)) == d.
std::string render_design(const DesignSpec& design);

/// Admissible main effects and interactions, containment-ordered. The last
/// entry is the all-facet (residual) component.
std::vector<VarianceComponent> enumerate_components(const DesignSpec& design);

/// Component built from an index set; the set must be closed under nesting.
VarianceComponent component_from_indices(const DesignSpec& design, FacetSet indices);

/// Display label, e.g. "p x i", "r:i", "(p x r):i".
std::string component_label(const DesignSpec& design, const VarianceComponent& component);

/// Lowercase, whitespace-free form used to match user-supplied component names.
std::string normalize_label(std::string_view label);

std::string to_lower(std::string_view s);

}  // namespace gtheory
