#pragma once

#include <stdexcept>
#include <string>

namespace pnpgl {

// Bad argument, bad shape, or invalid configuration. Maps to CLI exit code 1.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical precondition or invariant failed. `invariant()` names it so the
// CLI can report which check tripped. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string invariant, const std::string& what)
      : std::runtime_error(what), invariant_(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

class NotPositiveDefinite : public NumericalError {
 public:
  explicit NotPositiveDefinite(const std::string& what)
      : NumericalError("positive-definite", what) {}
};

// W has eigenvalues too close to zero for an operation that needs W^{-1}.
class SingularFilter : public NumericalError {
 public:
  explicit SingularFilter(const std::string& what)
      : NumericalError("invertible-filter", what) {}
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pnpgl
