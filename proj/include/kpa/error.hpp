#pragma once

#include <stdexcept>
#include <string>

namespace kpa {

/// Malformed or inconsistent input data (files, records, joins).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid experiment or CLI configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kpa
