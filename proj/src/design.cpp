#include "gtheory/design.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "gtheory/error.hpp"

namespace gtheory {

namespace {

constexpr std::size_t kMaxDesignFacets = 16;

bool is_ident_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '.' || c == '-';
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

enum class Tok { Ident, Cross, Colon, LParen, RParen, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Tok::LParen, "(", i++});
    } else if (c == ')') {
      out.push_back({Tok::RParen, ")", i++});
    } else if (c == ':') {
      out.push_back({Tok::Colon, ":", i++});
    } else if (c == '*') {
      out.push_back({Tok::Cross, "*", i++});
    } else if (static_cast<unsigned char>(c) == 0xC3 && i + 1 < src.size() &&
               static_cast<unsigned char>(src[i + 1]) == 0x97) {
      // U+00D7 multiplication sign
      out.push_back({Tok::Cross, "\xC3\x97", i});
      i += 2;
    } else if (is_ident_char(c)) {
      const std::size_t start = i;
      while (i < src.size() && is_ident_char(src[i])) ++i;
      std::string word(src.substr(start, i - start));
      const bool cross = word == "x" || word == "X";
      out.push_back({cross ? Tok::Cross : Tok::Ident, std::move(word), start});
    } else {
      throw DesignError(DesignErrc::InvalidCharacter,
                        "invalid character '" + std::string(1, c) + "' at position " +
                            std::to_string(i));
    }
  }
  out.push_back({Tok::End, "", src.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

  void run() {
    parse_design();
    const Token& t = peek();
    if (t.kind == Tok::RParen) {
      throw DesignError(DesignErrc::UnbalancedParens,
                        "unmatched ')' at position " + std::to_string(t.pos));
    }
    if (t.kind != Tok::End) {
      throw DesignError(DesignErrc::MissingOperator,
                        "expected 'x' or ':' before '" + t.text + "' at position " +
                            std::to_string(t.pos));
    }
  }

  std::vector<Facet> facets() const {
    std::vector<Facet> out;
    out.reserve(names_.size());
    for (std::size_t f = 0; f < names_.size(); ++f) {
      Facet facet{names_[f], {}};
      for (std::size_t a : ancestors_[f].members()) facet.nested_in.push_back(names_[a]);
      out.push_back(std::move(facet));
    }
    return out;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }

  // design := term ("x" term)*
  FacetSet parse_design() {
    bool colon_here = false;
    FacetSet all = parse_term(colon_here);
    while (peek().kind == Tok::Cross) {
      const Token& op = next();
      bool colon_in_term = false;
      all |= parse_term(colon_in_term);
      colon_here = colon_here || colon_in_term;
      if (colon_here) {
        throw DesignError(DesignErrc::MixedOperatorAmbiguity,
                          "'x' and ':' mixed without parentheses near position " +
                              std::to_string(op.pos));
      }
    }
    return all;
  }

  // term := primary (":" term)?
  FacetSet parse_term(bool& used_colon) {
    FacetSet inner = parse_primary();
    if (peek().kind != Tok::Colon) return inner;
    next();
    used_colon = true;
    bool unused = false;
    const FacetSet outer = parse_term(unused);
    for (std::size_t f : inner.members()) ancestors_[f] |= outer;
    return inner | outer;
  }

  // primary := ident | "(" design ")"
  FacetSet parse_primary() {
    const Token& t = next();
    switch (t.kind) {
      case Tok::Ident:
        return add_facet(t);
      case Tok::LParen: {
        const FacetSet group = parse_design();
        const Token& close = peek();
        if (close.kind == Tok::RParen) {
          next();
          return group;
        }
        if (close.kind == Tok::End) {
          throw DesignError(DesignErrc::UnbalancedParens,
                            "missing ')' for '(' at position " + std::to_string(t.pos));
        }
        throw DesignError(DesignErrc::MissingOperator,
                          "expected 'x', ':' or ')' before '" + close.text + "' at position " +
                              std::to_string(close.pos));
      }
      case Tok::RParen:
      case Tok::Cross:
      case Tok::Colon:
      case Tok::End:
        break;
    }
    throw DesignError(DesignErrc::EmptyToken,
                      "expected a facet name at position " + std::to_string(t.pos));
  }

  FacetSet add_facet(const Token& t) {
    const std::string key = to_lower(t.text);
    for (const auto& n : names_) {
      if (to_lower(n) == key) {
        throw DesignError(DesignErrc::DuplicateFacet, "facet '" + t.text + "' appears twice");
      }
    }
    if (names_.size() == kMaxDesignFacets) {
      throw DesignError(DesignErrc::TooManyFacets,
                        "at most " + std::to_string(kMaxDesignFacets) + " facets are supported");
    }
    names_.push_back(t.text);
    ancestors_.emplace_back();
    return FacetSet::single(names_.size() - 1);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<std::string> names_;
  std::vector<FacetSet> ancestors_;
};

// Undirected connectivity through nesting relations, restricted to `within`.
std::vector<FacetSet> nesting_blocks(const DesignSpec& d, FacetSet within) {
  std::vector<FacetSet> blocks;
  FacetSet seen;
  for (std::size_t f : within.members()) {
    if (seen.contains(f)) continue;
    FacetSet block = FacetSet::single(f);
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t g : within.members()) {
        if (block.contains(g)) continue;
        const FacetSet ga = d.ancestors(g) & within;
        bool linked = ga.intersects(block);
        for (std::size_t b : block.members()) linked = linked || d.ancestors(b).contains(g);
        if (linked) {
          block |= FacetSet::single(g);
          grew = true;
        }
      }
    }
    seen |= block;
    blocks.push_back(block);
  }
  return blocks;
}

struct Rendered {
  std::string text;
  bool single_ident = false;
  bool top_cross = false;
};

Rendered render_set(const DesignSpec& d, FacetSet s);

Rendered render_block(const DesignSpec& d, FacetSet block) {
  if (block.size() == 1) {
    return {d.facets()[block.members().front()].name, true, false};
  }
  // Split into inner:outer where outer is what every innermost facet sits within.
  FacetSet outer = block;
  for (std::size_t f : block.members()) {
    bool leaf = true;
    for (std::size_t g : block.members()) leaf = leaf && !d.ancestors(g).contains(f);
    if (leaf) outer = outer & d.ancestors(f);
  }
  if (outer.empty()) throw std::logic_error("design not renderable");
  const FacetSet inner = block - outer;
  for (std::size_t f : inner.members()) {
    if (!d.ancestors(f).contains(outer)) throw std::logic_error("design not renderable");
  }
  for (std::size_t f : outer.members()) {
    if (d.ancestors(f).intersects(inner)) throw std::logic_error("design not renderable");
  }
  const Rendered lhs = render_set(d, inner);
  const Rendered rhs = render_set(d, outer);
  std::string text = lhs.single_ident ? lhs.text : "(" + lhs.text + ")";
  text += ":";
  text += rhs.top_cross ? "(" + rhs.text + ")" : rhs.text;
  return {std::move(text), false, false};
}

Rendered render_set(const DesignSpec& d, FacetSet s) {
  const auto blocks = nesting_blocks(d, s);
  if (blocks.size() == 1) return render_block(d, blocks.front());
  Rendered out{"", false, true};
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Rendered part = render_block(d, blocks[b]);
    if (b) out.text += " x ";
    out.text += part.single_ident ? part.text : "(" + part.text + ")";
  }
  return out;
}

}  // namespace

std::vector<std::size_t> FacetSet::members() const {
  std::vector<std::size_t> out;
  out.reserve(size());
  for (std::uint32_t b = bits_; b; b &= b - 1) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(b)));
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string normalize_label(std::string_view label) {
  std::string out;
  for (std::size_t i = 0; i < label.size(); ++i) {
    const auto u = static_cast<unsigned char>(label[i]);
    if (std::isspace(u)) continue;
    if (u == 0xC3 && i + 1 < label.size() && static_cast<unsigned char>(label[i + 1]) == 0x97) {
      out += 'x';
      ++i;
      continue;
    }
    out += static_cast<char>(std::tolower(u));
  }
  return out;
}

DesignSpec::DesignSpec(std::vector<Facet> facets, std::string source)
    : facets_(std::move(facets)), source_(std::move(source)) {
  if (facets_.size() < 2) {
    throw DesignError(DesignErrc::TooFewFacets, "a design needs at least two facets");
  }
  if (facets_.size() > kMaxDesignFacets) {
    throw DesignError(DesignErrc::TooManyFacets,
                      "at most " + std::to_string(kMaxDesignFacets) + " facets are supported");
  }
  for (auto& f : facets_) {
    f.name = trim(f.name);
    if (f.name.empty()) throw DesignError(DesignErrc::EmptyToken, "empty facet name");
  }
  for (std::size_t a = 0; a < facets_.size(); ++a) {
    for (std::size_t b = a + 1; b < facets_.size(); ++b) {
      if (to_lower(facets_[a].name) == to_lower(facets_[b].name)) {
        throw DesignError(DesignErrc::DuplicateFacet,
                          "facet '" + facets_[b].name + "' appears twice");
      }
    }
  }
  ancestors_.assign(facets_.size(), FacetSet{});
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    for (const auto& parent : facets_[f].nested_in) {
      const std::size_t p = find(parent);
      if (p == facets_.size()) {
        throw DesignError(DesignErrc::UnknownNestingFacet,
                          "unknown nesting facet '" + parent + "'");
      }
      ancestors_[f] |= FacetSet::single(p);
    }
  }
  // Transitive closure.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t f = 0; f < facets_.size(); ++f) {
      FacetSet closed = ancestors_[f];
      for (std::size_t a : ancestors_[f].members()) closed |= ancestors_[a];
      if (closed != ancestors_[f]) {
        ancestors_[f] = closed;
        changed = true;
      }
    }
  }
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    if (ancestors_[f].contains(f)) {
      throw DesignError(DesignErrc::CyclicNesting,
                        "facet '" + facets_[f].name + "' is nested within itself");
    }
    facets_[f].nested_in.clear();
    for (std::size_t a : ancestors_[f].members()) facets_[f].nested_in.push_back(facets_[a].name);
  }
}

std::size_t DesignSpec::find(std::string_view name) const {
  const std::string key = to_lower(trim(name));
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    if (facets_[f].name == name) return f;
  }
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    if (to_lower(facets_[f].name) == key) return f;
  }
  return facets_.size();
}

std::size_t DesignSpec::index_of(std::string_view name) const {
  const std::size_t f = find(name);
  if (f == facets_.size()) {
    throw ComputeError(ComputeErrc::UnknownFacet,
                       "facet '" + std::string(name) + "' is not in the design");
  }
  return f;
}

bool DesignSpec::fully_crossed() const {
  return std::all_of(ancestors_.begin(), ancestors_.end(),
                     [](FacetSet a) { return a.empty(); });
}

bool operator==(const DesignSpec& a, const DesignSpec& b) {
  if (a.facet_count() != b.facet_count()) return false;
  for (std::size_t f = 0; f < a.facet_count(); ++f) {
    const std::size_t g = b.find(a.facets_[f].name);
    if (g == b.facet_count()) return false;
    const auto ancestors_a = a.ancestors(f).members();
    const auto ancestors_b = b.ancestors(g);
    if (ancestors_a.size() != ancestors_b.size()) return false;
    for (std::size_t x : ancestors_a) {
      const std::size_t y = b.find(a.facets_[x].name);
      if (y == b.facet_count() || !ancestors_b.contains(y)) return false;
    }
  }
  return true;
}

DesignSpec parse_design(std::string_view design_str) {
  Parser parser(design_str);
  parser.run();
  return DesignSpec(parser.facets(), std::string(design_str));
}

std::string render_design(const DesignSpec& design) {
  return render_set(design, design.all_facets()).text;
}

VarianceComponent component_from_indices(const DesignSpec& design, FacetSet indices) {
  FacetSet nesting;
  for (std::size_t f : indices.members()) nesting |= design.ancestors(f);
  if (!indices.contains(nesting)) {
    throw ComputeError(ComputeErrc::UnknownComponent,
                       "index set is missing a nesting facet of one of its members");
  }
  return {indices - nesting, nesting};
}

std::vector<VarianceComponent> enumerate_components(const DesignSpec& design) {
  const std::size_t k = design.facet_count();
  std::vector<VarianceComponent> out;
  for (std::uint32_t bits = 1; bits < (std::uint32_t{1} << k); ++bits) {
    const FacetSet s(bits);
    bool closed = true;
    for (std::size_t f : s.members()) closed = closed && s.contains(design.ancestors(f));
    if (closed) out.push_back(component_from_indices(design, s));
  }
  std::sort(out.begin(), out.end(), [](const VarianceComponent& a, const VarianceComponent& b) {
    const auto ka = std::make_tuple(a.indices().size(), a.primary.size());
    const auto kb = std::make_tuple(b.indices().size(), b.primary.size());
    if (ka != kb) return ka < kb;
    return a.indices().members() < b.indices().members();
  });
  return out;
}

std::string component_label(const DesignSpec& design, const VarianceComponent& component) {
  std::string primary;
  for (std::size_t f : component.primary.members()) {
    if (!primary.empty()) primary += " x ";
    primary += design.facets()[f].name;
  }
  if (component.nesting.empty()) return primary;
  if (component.primary.size() > 1) primary = "(" + primary + ")";
  const Rendered outer = render_set(design, component.nesting);
  return primary + ":" + (outer.top_cross ? "(" + outer.text + ")" : outer.text);
}

std::string_view to_string(DesignErrc code) noexcept {
  switch (code) {
    case DesignErrc::EmptyToken: return "EmptyToken";
    case DesignErrc::InvalidCharacter: return "InvalidCharacter";
    case DesignErrc::UnbalancedParens: return "UnbalancedParens";
    case DesignErrc::MissingOperator: return "MissingOperator";
    case DesignErrc::MixedOperatorAmbiguity: return "MixedOperatorAmbiguity";
    case DesignErrc::DuplicateFacet: return "DuplicateFacet";
    case DesignErrc::TooFewFacets: return "TooFewFacets";
    case DesignErrc::TooManyFacets: return "TooManyFacets";
    case DesignErrc::UnknownNestingFacet: return "UnknownNestingFacet";
    case DesignErrc::CyclicNesting: return "CyclicNesting";
  }
  return "?";
}

std::string_view to_string(DataErrc code) noexcept {
  switch (code) {
    case DataErrc::EmptyTable: return "EmptyTable";
    case DataErrc::MissingColumn: return "MissingColumn";
    case DataErrc::RaggedRow: return "RaggedRow";
    case DataErrc::NonNumericResponse: return "NonNumericResponse";
    case DataErrc::DuplicateObservation: return "DuplicateObservation";
    case DataErrc::Unbalanced: return "Unbalanced";
    case DataErrc::NestedCountMismatch: return "NestedCountMismatch";
    case DataErrc::Io: return "Io";
  }
  return "?";
}

std::string_view to_string(ComputeErrc code) noexcept {
  switch (code) {
    case ComputeErrc::UnknownComponent: return "UnknownComponent";
    case ComputeErrc::UnknownFacet: return "UnknownFacet";
    case ComputeErrc::MissingTValue: return "MissingTValue";
    case ComputeErrc::ZeroDf: return "ZeroDf";
    case ComputeErrc::SingularSystem: return "SingularSystem";
    case ComputeErrc::NoObject: return "NoObject";
    case ComputeErrc::UnknownRole: return "UnknownRole";
    case ComputeErrc::EmptyCandidateList: return "EmptyCandidateList";
    case ComputeErrc::InvalidLevelCount: return "InvalidLevelCount";
    case ComputeErrc::OutOfDomain: return "OutOfDomain";
    case ComputeErrc::NotCrossed: return "NotCrossed";
    case ComputeErrc::InvalidTruth: return "InvalidTruth";
  }
  return "?";
}

}  // namespace gtheory
