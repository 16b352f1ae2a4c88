#pragma once

#include <initializer_list>
#include <vector>

#include "cpd/data.hpp"
#include "cpd/rng.hpp"
#include "cpd/types.hpp"

namespace helpers {

inline cpd::TimeSeries scalar_series(std::initializer_list<double> values) {
    cpd::TimeSeries s;
    for (double v : values) s.append_row({&v, 1});
    return s;
}

inline cpd::TimeSeries gaussian_series(std::size_t n, std::size_t p, std::uint64_t seed,
                                       double mean = 0.0) {
    cpd::Rng rng(seed);
    cpd::TimeSeries s;
    std::vector<double> row(p);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : row) v = mean + rng.normal();
        s.append_row(row);
    }
    return s;
}

inline cpd::TimeSeries poisson_series(std::size_t n, double rate, std::uint64_t seed) {
    cpd::Rng rng(seed);
    cpd::TimeSeries s;
    for (std::size_t i = 0; i < n; ++i) {
        double v = static_cast<double>(rng.poisson(rate));
        s.append_row({&v, 1});
    }
    return s;
}

inline std::vector<double> bootstrap_weights(std::size_t n, std::uint64_t seed) {
    cpd::Rng rng(seed);
    std::vector<double> w(n);
    for (auto& v : w) v = 1.0 + rng.normal();
    return w;
}

}  // namespace helpers
