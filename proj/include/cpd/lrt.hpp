#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cpd/model.hpp"
#include "cpd/types.hpp"

namespace cpd {

// sqrt(2 T_h(t)) for every admissible center t. At center t the left window
// is Y_{t-h..t-1} and the right window is Y_{t..t+h-1}; valid centers are
// t in [h, n-h], so values.size() == n - 2h + 1.
struct LrtSeries {
    std::size_t h = 0;
    std::size_t first = 0;  // position of values[0]; equals h
    std::vector<double> values;
    std::size_t solver_failures = 0;  // positions where a solver gave up

    std::size_t positions() const { return values.size(); }
    std::size_t last() const { return first + values.size() - 1; }
    bool contains(std::size_t t) const { return t >= first && t <= last(); }
    double at(std::size_t t) const { return values[t - first]; }
};

// T_h(t) from the window split, clamped at zero.
double lrt_at(const Model& model, const TimeSeries& series, std::size_t t, std::size_t h);

LrtSeries lrt_series(const Model& model, const TimeSeries& series, std::size_t h);

// Per-position unweighted MLE differences theta_r(t) - theta_l(t), shared by
// every bootstrap replicate of one (series, h) pair.
struct ShiftCache {
    std::size_t h = 0;
    std::size_t first = 0;
    std::size_t dim = 0;
    std::vector<double> delta;  // positions x dim, row-major

    std::span<const double> at(std::size_t t) const {
        return {delta.data() + (t - first) * dim, dim};
    }
};

ShiftCache make_shift_cache(const Model& model, const TimeSeries& series, std::size_t h);

// One weighted-bootstrap replicate: a single weight vector u_i ~ N(1,1) spans
// the whole series; per position the statistic subtracts the shift-coupled
// supremum, so identity weights annihilate it exactly.
LrtSeries weighted_bootstrap_lrt_series(const Model& model, const TimeSeries& series,
                                        std::size_t h, std::uint64_t seed,
                                        const ShiftCache* cache = nullptr);

// Same computation with caller-supplied weights (test hook and engine core).
LrtSeries weighted_bootstrap_lrt_series_with_weights(const Model& model, const TimeSeries& series,
                                                     std::size_t h, std::span<const double> weights,
                                                     const ShiftCache* cache = nullptr);

// One empirical-bootstrap replicate: n i.i.d. uniform indices, plain LRT on
// the resampled series.
LrtSeries empirical_bootstrap_lrt_series(const Model& model, const TimeSeries& series,
                                         std::size_t h, std::uint64_t seed);

LrtSeries empirical_bootstrap_lrt_series_with_indices(const Model& model, const TimeSeries& series,
                                                      std::size_t h,
                                                      std::span<const std::size_t> indices);

}  // namespace cpd
