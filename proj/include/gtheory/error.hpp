#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gtheory {

/// Broad failure category; maps one-to-one onto CLI exit codes.
enum class ErrorCategory { Design, Data, Compute };

enum class DesignErrc {
  EmptyToken,
  InvalidCharacter,
  UnbalancedParens,
  MissingOperator,
  MixedOperatorAmbiguity,
  DuplicateFacet,
  TooFewFacets,
  TooManyFacets,
  UnknownNestingFacet,
  CyclicNesting,
};

enum class DataErrc {
  EmptyTable,
  MissingColumn,
  RaggedRow,
  NonNumericResponse,
  DuplicateObservation,
  Unbalanced,
  NestedCountMismatch,
  Io,
};

enum class ComputeErrc {
  UnknownComponent,
  UnknownFacet,
  MissingTValue,
  ZeroDf,
  SingularSystem,
  NoObject,
  UnknownRole,
  EmptyCandidateList,
  InvalidLevelCount,
  OutOfDomain,
  NotCrossed,
  InvalidTruth,
};

std::string_view to_string(DesignErrc code) noexcept;
std::string_view to_string(DataErrc code) noexcept;
std::string_view to_string(ComputeErrc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class DesignError : public Error {
 public:
  DesignError(DesignErrc code, const std::string& what)
      : Error(ErrorCategory::Design, what), code_(code) {}
  DesignErrc code() const noexcept { return code_; }

 private:
  DesignErrc code_;
};

class DataError : public Error {
 public:
  /// `row` is the 1-based data row (header excluded) when one applies, else 0.
  DataError(DataErrc code, const std::string& what, std::size_t row = 0)
      : Error(ErrorCategory::Data, what), code_(code), row_(row) {}
  DataErrc code() const noexcept { return code_; }
  std::size_t row() const noexcept { return row_; }

 private:
  DataErrc code_;
  std::size_t row_;
};

class ComputeError : public Error {
 public:
  ComputeError(ComputeErrc code, const std::string& what)
      : Error(ErrorCategory::Compute, what), code_(code) {}
  ComputeErrc code() const noexcept { return code_; }

 private:
  ComputeErrc code_;
};

}  // namespace gtheory
