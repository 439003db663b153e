#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dlsim {

/// Malformed input file. Carries the 1-based line number when one applies
/// (0 means the whole file, e.g. a missing header or a length mismatch).
class ParseError : public std::runtime_error {
public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : std::runtime_error(format(source, line, what)), source_(std::move(source)), line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

private:
  static std::string format(const std::string& source, std::size_t line, const std::string& what) {
    std::string s = source.empty() ? std::string("<input>") : source;
    if (line > 0) s += ":" + std::to_string(line);
    return s + ": " + what;
  }

  std::string source_;
  std::size_t line_;
};

}  // namespace dlsim
