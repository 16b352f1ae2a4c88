#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpd/types.hpp"

namespace cpd {

enum class SeriesFormat { Csv, Json };

enum class SegmentFamily { GaussianMean, GaussianMeanVar, Poisson };

// One homogeneous block of a piecewise series.
//   GaussianMean:    params = mean vector (dimension p), unit covariance
//   GaussianMeanVar: params = {mean, variance}, scalar observations
//   Poisson:         params = {rate}, scalar counts
struct SegmentSpec {
    std::size_t length = 0;
    SegmentFamily family = SegmentFamily::GaussianMean;
    std::vector<double> params;

    void validate() const;
    std::size_t dim() const;
};

struct GeneratedSeries {
    TimeSeries series;
    std::vector<std::size_t> true_change_points;  // cumulative boundaries, excluding 0 and n
    std::uint64_t seed = 0;
};

enum class TransitionKind { AbruptMean, SmoothMean, AbruptVariance };

TimeSeries load_series(const std::string& path, SeriesFormat format);
void save_series(const TimeSeries& series, const std::string& path, SeriesFormat format);

// Adjacent metadata file: {n, p, true_change_points, seed}.
void save_metadata(const GeneratedSeries& g, const std::string& path);

// Concatenates independent samples of the given segments. Sampling order is
// segment-major, then time-major, then coordinate-minor, from a single
// SplitMix64 stream seeded with `seed`, so output is bit-reproducible.
GeneratedSeries generate_piecewise(const std::vector<SegmentSpec>& segments, std::uint64_t seed);

// AbruptMean: params are mean vectors, unit variance; width must be 0.
// SmoothMean: scalar-or-vector means; width W inserts W-1 intermediate points
//             with linearly interpolated means (see README for the layout).
// AbruptVariance: params are {mean, variance} pairs; width must be 0.
GeneratedSeries generate_transition(TransitionKind kind, const std::vector<double>& pre_params,
                                    const std::vector<double>& post_params, std::size_t width,
                                    std::size_t pre_length, std::size_t post_length,
                                    std::uint64_t seed);

SegmentFamily segment_family_from_name(const std::string& name);
std::string segment_family_name(SegmentFamily family);

}  // namespace cpd
