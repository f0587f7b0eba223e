#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rlcombine {

/// Input that does not parse under its declared format. Carries the
/// 1-based source line when known (0 = not line-addressable).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t line = 0)
        : std::runtime_error(line > 0 ? message + " (line " + std::to_string(line) + ")"
                                      : message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a contract: duplicate model columns,
/// missing target values inside the window, out-of-range configuration.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace rlcombine
