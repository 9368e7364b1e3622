#pragma once

#include <stdexcept>
#include <string>

namespace gcnclust {

// Caller passed arguments that violate an operation's preconditions
// (shape mismatch, out-of-range hyperparameter, empty input, ...).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A file on disk is structurally malformed (bad magic, truncated payload).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// A file parsed but its contents fail validation (non-finite values,
// inconsistent shapes).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A text file line could not be parsed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A pipeline stage failed; the message is prefixed with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InputError(what);
}

}  // namespace detail
}  // namespace gcnclust
