#pragma once

#include <stdexcept>
#include <string>

namespace birdsi {

// Malformed caller input: bad files, duplicate identifiers, empty inputs.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A configuration that cannot be scored (e.g. a window smaller than the
// ground-truth vector). Distinct from InputError so the CLI can map it to
// its own exit code.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem / network failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Ground-truth file parse failure; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Append-only versioning violation (removal or re-categorization).
class VersioningError : public std::runtime_error {
 public:
  explicit VersioningError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace birdsi
