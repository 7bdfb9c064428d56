#pragma once

#include <stdexcept>
#include <string>

namespace hetrdme {

/// Base for all library errors. `kind()` is the stable machine-readable name.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define HETRDME_ERROR(Name)                                              \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

HETRDME_ERROR(DimensionMismatch);
HETRDME_ERROR(LatticeMismatch);
HETRDME_ERROR(IncompatibleLattices);
HETRDME_ERROR(NotWeaklyReversible);
HETRDME_ERROR(SingularSystem);
HETRDME_ERROR(NoEventEnabled);
HETRDME_ERROR(NegativeInitialData);
HETRDME_ERROR(SolverFailure);
HETRDME_ERROR(NonPositiveEquilibrium);
HETRDME_ERROR(NonPositiveSeries);
HETRDME_ERROR(InvalidSchedule);
HETRDME_ERROR(StructureMismatch);

#undef HETRDME_ERROR

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& message)
      : Error("ParseError", "line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace hetrdme
