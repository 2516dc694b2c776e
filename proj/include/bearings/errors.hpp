#pragma once

#include <stdexcept>
#include <string>

namespace bearings {

/// Invalid input: malformed graph, spec, constraint set, or argument.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A bearing became numerically undefined (two endpoints closer than the
/// separation tolerance). The simulation engine converts this into a
/// collision event; everywhere else it is an input defect.
class DegenerateEdgeError : public ValidationError {
 public:
  DegenerateEdgeError(int tail, int head)
      : ValidationError("edge (" + std::to_string(tail) + "," + std::to_string(head) +
                        ") is degenerate: endpoints closer than the separation tolerance"),
        tail_(tail),
        head_(head) {}

  int tail() const { return tail_; }
  int head() const { return head_; }

 private:
  int tail_;
  int head_;
};

/// Non-finite values or a failed numerical routine.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bearings
