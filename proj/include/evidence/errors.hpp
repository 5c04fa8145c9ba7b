#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace evidence {

/// Precondition of an operation was violated by the caller.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A sample carries no usable weight (all zero, or a ratio denominator vanished).
class DegenerateSample : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two routes to the same quantity disagree beyond their tolerance.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative scheme hit its iteration cap. Carries the iterates seen so far.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Bad command line, configuration key, or model/estimator name.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file; the message names the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace detail
}  // namespace evidence
