#pragma once

#include <stdexcept>
#include <string>

namespace beatfcos {

// Malformed or inconsistent annotation data (bad beat lists, intervals that
// do not fit the track).
class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be parsed or uses an unsupported encoding.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// An algorithm could not produce a meaningful answer for its input
// (e.g. threshold selection on a histogram without two modes).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training diverged.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace beatfcos
