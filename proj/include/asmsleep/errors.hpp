#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace asmsleep {

// Argument outside the mathematical domain of an operation (negative time,
// level not enabled, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A configured resource bound (state-space cap) was exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double final_delta,
                   std::size_t iterations)
      : std::runtime_error(what),
        final_delta_(final_delta),
        iterations_(iterations) {}

  double final_delta() const noexcept { return final_delta_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double final_delta_;
  std::size_t iterations_;
};

}  // namespace asmsleep

namespace asmsleep {

// File could not be read, written or parsed at the syntax level.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace asmsleep
