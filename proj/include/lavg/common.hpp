#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lavg {

inline constexpr const char* kVersion = "0.1.0";

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Error types. Thrown where a contract is violated rather than silently
// producing garbage; callers that sweep many runs catch and record them.
// ---------------------------------------------------------------------------

/// Nearest-point projection is not unique (defining coordinate block is zero).
struct AmbiguousProjection : std::runtime_error {
    explicit AmbiguousProjection(const std::string& what) : std::runtime_error(what) {}
};

/// A point fed to an intrinsic operation does not satisfy the manifold equations.
struct OffManifold : std::runtime_error {
    explicit OffManifold(const std::string& what) : std::runtime_error(what) {}
};

/// Minibatch collection exceeded its draw budget before reaching the target count.
struct AcceptanceTooLow : std::runtime_error {
    AcceptanceTooLow(const std::string& what, long draws, int accepted, int wanted)
        : std::runtime_error(what), draws_consumed(draws), accepted(accepted), wanted(wanted) {}
    long draws_consumed;
    int accepted;
    int wanted;
};

/// Adaptive quadrature ran out of its evaluation budget before converging.
struct QuadratureNonConvergence : std::runtime_error {
    explicit QuadratureNonConvergence(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Argument outside the validity window of an envelope bound.
struct WindowError : std::domain_error {
    explicit WindowError(const std::string& what) : std::domain_error(what) {}
};

// ---------------------------------------------------------------------------
// Small dense-vector helpers. Points live in R^D with D up to a few million,
// so everything is plain contiguous doubles.
// ---------------------------------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

inline Vec add(const Vec& a, const Vec& b) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline Vec sub(const Vec& a, const Vec& b) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline Vec scaled(const Vec& a, double c) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
    return out;
}

inline void accumulate(Vec& acc, std::span<const double> a) {
    if (acc.size() != a.size()) acc.assign(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) acc[i] += a[i];
}

}  // namespace lavg
