#ifndef INOC_ERRORS_HPP
#define INOC_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace inoc {

// Malformed input files, bad records, schema violations.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid input that violates an operation's contract.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A sampling or split request that the available data cannot satisfy.
class InsufficientSamplesError : public std::runtime_error {
 public:
  InsufficientSamplesError(const std::string& context, std::size_t available,
                           std::size_t required)
      : std::runtime_error(context + ": have " + std::to_string(available) +
                           " samples, need " + std::to_string(required)),
        available(available),
        required(required) {}

  std::size_t available;
  std::size_t required;
};

// k-DPP request for more items than the kernel rank supports.
class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(std::size_t k, std::size_t rank)
      : std::runtime_error("k-DPP requires k <= rank(kernel): k=" +
                           std::to_string(k) + ", rank=" + std::to_string(rank)),
        k(k),
        rank(rank) {}

  std::size_t k;
  std::size_t rank;
};

// Exemplar selection constraints (balance, coverage) that cannot all hold.
class ConstraintInfeasibleError : public std::runtime_error {
 public:
  explicit ConstraintInfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

// Backend/network failures surfaced by the runner.
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace inoc

#endif
