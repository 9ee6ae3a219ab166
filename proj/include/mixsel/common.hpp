#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixsel {

// Domain-specific failures. Plain argument misuse throws std::invalid_argument.
struct GridTooSmallError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergentIntegralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateWeightingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BallTooSmallError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t line_number)
        : std::runtime_error(msg + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
    std::size_t line;
};

inline double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double norm(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// FNV-1a, used for output-manifest content hashes.
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace mixsel
