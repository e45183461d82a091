#pragma once

#include <stdexcept>
#include <string>

namespace hopgen {

// Malformed or inconsistent input data (parse failures, shape mismatches,
// empty families). CLI maps this to exit code 3.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (non-finite states, degenerate spectra, flat curves).
// CLI maps this to exit code 4.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace hopgen
