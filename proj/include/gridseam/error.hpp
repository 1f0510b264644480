#pragma once

#include <stdexcept>
#include <string>

namespace gridseam {

/// Bad input data: schema violations, dangling references, malformed files.
/// The message always names the offending element or file.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure that the caller cannot fix by editing one field
/// (singular Jacobian, singular network matrix).
class SolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kToolVersion = "gridseam 1.0.0";

}  // namespace gridseam
