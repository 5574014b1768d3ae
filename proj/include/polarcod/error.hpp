#pragma once

#include <stdexcept>
#include <string>

namespace polarcod {

// Shape or dimension contract violated by an operation's inputs.
class DimensionError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

// Invalid configuration, flag combination or version mismatch.
class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Unreadable, missing or corrupt input data.
class DataError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Non-finite values under checked mode, or a failed numeric verification.
class NumericError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Misuse of the gradient tape (non-scalar loss, released graph, ...).
class TapeError : public std::logic_error {
   public:
    using std::logic_error::logic_error;
};

}  // namespace polarcod
