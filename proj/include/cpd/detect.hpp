#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpd/calibrate.hpp"
#include "cpd/model.hpp"
#include "cpd/pattern.hpp"

namespace cpd {

struct Flag {
    std::size_t tau = 0;
    std::size_t h = 0;
    double tp = 0.0;
    double threshold = 0.0;
};

struct TpSummary {
    std::size_t count = 0;
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
};

struct ScaleReport {
    std::size_t h = 0;
    double critical_value = 0.0;
    std::size_t tau_hat = 0;
    double max_tp = 0.0;
    std::vector<Flag> flags;  // strict exceedances TP > z
    TpSummary summary;
};

struct DetectConfig {
    std::vector<std::size_t> scales;
    PatternKind pattern = PatternKind::Triangle;
    std::size_t plateau = 0;
    double alpha = 0.1;
    std::size_t replicates = 500;
    BootstrapMethod method = BootstrapMethod::Weighted;
    std::uint64_t master_seed = 0;
    std::size_t min_separation = 0;  // 0 = max(scales)
    MultiScaleMode mode = MultiScaleMode::PerScale;
    std::size_t workers = 0;
};

struct DetectionReport {
    std::vector<ScaleReport> per_scale;
    std::vector<std::size_t> change_points;  // sorted, >= min_separation apart
    DetectConfig config;
    std::size_t failed_replicates = 0;
};

// Frozen per-scale rule: flag tau when TP_h(tau) > critical_value.
struct FrozenScale {
    std::size_t h = 0;
    double critical_value = 0.0;
    Pattern pattern;
};

// Calibrates every scale on the series itself (the shift-corrected weighted
// bootstrap keeps this valid on contaminated data), then applies the rule.
DetectionReport detect(const Model& model, const TimeSeries& series, const DetectConfig& config);

// The rule under externally supplied thresholds; no calibration happens.
DetectionReport detect_with_thresholds(const Model& model, const TimeSeries& series,
                                       const std::vector<FrozenScale>& scales,
                                       std::size_t min_separation);

std::vector<std::size_t> merge_flags(const std::vector<Flag>& flags, std::size_t min_separation);

// Incremental detector over a frozen calibration. Each appended observation
// completes at most one new LRT position and one new TP position per scale;
// previously computed values never change, so the flag set equals the batch
// rule on the same data and thresholds.
class StreamDetector {
public:
    StreamDetector(Model model, std::vector<FrozenScale> scales);

    // Appends one observation; returns the flags it released.
    std::vector<Flag> push(std::span<const double> observation);

    const std::vector<Flag>& flags() const { return flags_; }
    std::size_t size() const { return buffer_.n; }

    // Calibrates on a warmup window and optionally replays it through push().
    static StreamDetector from_calibration(const Model& model, const TimeSeries& warmup,
                                           const std::vector<std::size_t>& scales, PatternKind kind,
                                           std::size_t plateau, double alpha, std::size_t replicates,
                                           BootstrapMethod method, std::uint64_t master_seed,
                                           bool replay_warmup = true,
                                           const CalibrateOptions& options = {});

private:
    Model model_;
    std::vector<FrozenScale> scales_;
    TimeSeries buffer_;
    std::vector<std::vector<double>> lrt_values_;  // per scale, sqrt(2T) from position h on
    std::vector<Flag> flags_;
};

// Serialization for the CLI and the experiment harness.
std::string detect_config_to_json(const DetectConfig& config);
DetectConfig detect_config_from_json(const std::string& json_text);
std::string detection_report_to_json(const DetectionReport& report);
void write_detection_report(const DetectionReport& report, const std::string& path);
void write_flags_csv(const DetectionReport& report, const std::string& path);
void write_lrt_csv(const LrtSeries& lrt, const std::string& path);
void write_pattern_csv(const Pattern& pattern, const std::string& path);
std::string calibration_to_json(const CalibrationResult& result);
void write_calibration(const CalibrationResult& result, const std::string& path);

}  // namespace cpd
