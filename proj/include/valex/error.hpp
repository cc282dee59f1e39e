#pragma once

#include <stdexcept>
#include <string>

namespace valex {

// Base for everything this library throws on its own behalf.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad values in inputs: out-of-range scores, malformed rows, invalid codes.
struct ValidationError : Error {
    using Error::Error;
};

// Filesystem and parsing failures, carrying the offending path/line in the message.
struct IoError : Error {
    using Error::Error;
};

// Unknown keys, contradictory flags, missing required settings.
struct ConfigError : Error {
    using Error::Error;
};

// Training produced a non-finite loss.
struct DivergenceError : Error {
    using Error::Error;
};

}  // namespace valex
