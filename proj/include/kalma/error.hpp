#pragma once

#include <stdexcept>
#include <string>

namespace kalma {

// Root of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number of the offending
// record (0 when the error is not tied to a line).
class ParseError : public Error {
 public:
  ParseError(std::string source, size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  size_t line() const { return line_; }

 private:
  std::string source_;
  size_t line_;
};

class UnknownEntityError : public Error {
 public:
  explicit UnknownEntityError(const std::string& id)
      : Error("unknown entity: " + id) {}
};

// Remote judge or generator failure (transport, timeout, bad payload).
class JudgeError : public Error {
 public:
  using Error::Error;
};

}  // namespace kalma
