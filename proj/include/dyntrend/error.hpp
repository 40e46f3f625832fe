#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dyntrend {

/// Bad input: malformed files, invalid arguments, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Failures that only show up while computing (non-convergence, explosion).
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExplosionError : public ComputeError {
 public:
  ExplosionError(std::size_t event_cap, std::size_t run_index)
      : ComputeError("simulation exceeded the event cap of " + std::to_string(event_cap) +
                     " events in run " + std::to_string(run_index) +
                     " (supercritical parameters?)"),
        event_cap_(event_cap),
        run_index_(run_index) {}

  std::size_t event_cap() const noexcept { return event_cap_; }
  std::size_t run_index() const noexcept { return run_index_; }

 private:
  std::size_t event_cap_;
  std::size_t run_index_;
};

}  // namespace dyntrend
