#pragma once

#include <stdexcept>
#include <string>

namespace emolab {

// Thrown for malformed input files (JSON, weight files, config syntax).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when well-formed input violates a documented invariant.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown for bad experiment configuration (missing keys, missing paths).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace emolab
