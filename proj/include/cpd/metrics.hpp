#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cpd {

// A segmentation of [0, n) by strictly increasing boundaries in (0, n).
struct Partition {
    std::size_t n = 0;
    std::vector<std::size_t> boundaries;

    void validate() const;
    std::size_t segment_count() const { return boundaries.size() + 1; }
    std::vector<std::size_t> segment_lengths() const;
};

// Segment-length entropy in nats.
double entropy(const Partition& partition);

// Normalized mutual information 2(H(X)+H(Y)-H(X,Y))/(H(X)+H(Y)) in [0,1];
// two trivial partitions score 1 by convention.
double nmi(const Partition& x, const Partition& y);

struct LocalizationRun {
    double tau_hat = 0.0;
    double tau_star = 0.0;
    bool detected = false;
};

struct LocalizationStats {
    double mean_abs_error = 0.0;  // over detected runs
    double power = 0.0;           // detected fraction
};

LocalizationStats localization_stats(const std::vector<LocalizationRun>& runs);

// Least-squares exponent of error ~ c / h^beta from (h, error) points;
// zero errors must be floored by the caller before the fit.
double convergence_slope(const std::vector<std::pair<double, double>>& errors);

// Boundary-list JSON: {"n": int, "boundaries": [ints]} or a bare array with n
// supplied separately by the caller.
Partition load_partition(const std::string& path);

}  // namespace cpd
