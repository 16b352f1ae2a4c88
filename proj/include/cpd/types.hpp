#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpd {

// Input that failed to parse (malformed file contents).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Ragged rows, incompatible vector sizes, wrong parameter dimension.
struct DimensionMismatchError : std::invalid_argument {
    explicit DimensionMismatchError(const std::string& what) : std::invalid_argument(what) {}
};

// Window with no usable mass (e.g. all-zero weights).
struct DegenerateWindowError : std::invalid_argument {
    explicit DegenerateWindowError(const std::string& what) : std::invalid_argument(what) {}
};

// Parameter outside the family's valid domain (nonpositive variance/rate).
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Ordered observations Y_0..Y_{n-1}, each a p-vector, stored row-major.
// Optional per-observation factors psi_i (q-vectors) for the GLM mode.
struct TimeSeries {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> values;  // n * p

    std::size_t factor_dim = 0;  // q; 0 means no factors
    std::vector<double> factors;  // n * q when present

    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * p, p};
    }
    std::span<const double> factor(std::size_t i) const {
        return {factors.data() + i * factor_dim, factor_dim};
    }
    bool has_factors() const { return factor_dim > 0; }

    void append_row(std::span<const double> y);

    // Checks the container invariants: p >= 1, n >= 2, consistent storage,
    // factor count equal to n when factors are present.
    void validate() const;

    static TimeSeries from_rows(const std::vector<std::vector<double>>& rows);
};

}  // namespace cpd
