#ifndef FPCA_ERRORS_HPP
#define FPCA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fpca {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input: invalid spec, malformed file, dimension mismatch, bad argument.
class SpecError : public Error {
 public:
  explicit SpecError(const std::string& msg) : Error(msg) {}
};

class CsvError : public SpecError {
 public:
  explicit CsvError(const std::string& msg) : SpecError(msg) {}
};

// Numerical degeneracy: the computation is well-formed but unidentified.
class DegenerateEigenvalues : public Error {
 public:
  explicit DegenerateEigenvalues(const std::string& msg) : Error(msg) {}
};

class RotationSingular : public Error {
 public:
  explicit RotationSingular(const std::string& msg) : Error(msg) {}
};

class SignUndefined : public Error {
 public:
  explicit SignUndefined(const std::string& msg) : Error(msg) {}
};

class DegenerateVariance : public Error {
 public:
  explicit DegenerateVariance(const std::string& msg) : Error(msg) {}
};

class SingularRestriction : public Error {
 public:
  explicit SingularRestriction(const std::string& msg) : Error(msg) {}
};

// An asymptotic-theory precondition (e.g. T > n̄·r for Wald) is violated.
class PreconditionViolation : public Error {
 public:
  explicit PreconditionViolation(const std::string& msg) : Error(msg) {}
};

}  // namespace fpca

#endif  // FPCA_ERRORS_HPP
