#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpd/model.hpp"
#include "cpd/pattern.hpp"
#include "cpd/types.hpp"

namespace cpd {

enum class BootstrapMethod { Weighted, Empirical };

BootstrapMethod bootstrap_method_from_name(const std::string& name);
std::string bootstrap_method_name(BootstrapMethod method);

struct CalibrateOptions {
    std::size_t workers = 0;          // 0 = all cores
    int max_retries = 8;              // fresh-seed reruns per replicate
    double abort_fraction = 0.2;      // rerun events above this fraction abort
};

struct CalibrationResult {
    std::size_t h = 0;
    double alpha = 0.0;
    BootstrapMethod method = BootstrapMethod::Weighted;
    std::vector<double> replicate_maxima;  // length B, replicate order
    double critical_value = 0.0;
    std::size_t failed_replicates = 0;  // rerun events (B never shrinks)
    std::uint64_t master_seed = 0;
};

// Upper empirical quantile: ascending order statistic of rank
// ceil((1-alpha)*B), 1-indexed.
double upper_quantile(std::vector<double> values, double alpha);

// Empirical quantiles at levels alpha+delta and alpha-delta; a stability
// bracket around the critical value.
std::pair<double, double> quantile_bracket(const std::vector<double>& maxima, double alpha,
                                           double delta);

// Bootstrap distribution of max_tau TP_h(tau): per replicate one bootstrap
// draw (weight vector or index resample), one maximum. Replicates with solver
// failures rerun under a fresh derived seed; B stays fixed.
CalibrationResult calibrate(const Model& model, const TimeSeries& series, std::size_t h,
                            const Pattern& pattern, double alpha, std::size_t replicates,
                            BootstrapMethod method, std::uint64_t master_seed,
                            const CalibrateOptions& options = {});

enum class MultiScaleMode { PerScale, MaxJoint, Bonferroni };

MultiScaleMode multi_scale_mode_from_name(const std::string& name);
std::string multi_scale_mode_name(MultiScaleMode mode);

struct JointCalibration {
    MultiScaleMode mode = MultiScaleMode::PerScale;
    double alpha = 0.0;
    std::vector<CalibrationResult> per_scale;      // per-scale z at alpha
    double family_threshold = 0.0;                 // MaxJoint only
    std::vector<double> adjusted_thresholds;       // Bonferroni: per-scale z at alpha/K
};

// Calibrates several scales from shared replicate draws (one bootstrap draw
// per replicate covers every scale). With a single scale the result is
// bit-identical to calibrate().
JointCalibration joint_calibrate(const Model& model, const TimeSeries& series,
                                 const std::vector<std::size_t>& scales, PatternKind kind,
                                 std::size_t plateau, double alpha, std::size_t replicates,
                                 BootstrapMethod method, std::uint64_t master_seed,
                                 MultiScaleMode mode = MultiScaleMode::PerScale,
                                 const CalibrateOptions& options = {});

// Engine shared by calibrate, joint_calibrate and the experiment harness:
// maxima[s][k][b] is the replicate-b maximum of pattern k at scale s.
struct ReplicateMaxima {
    std::vector<std::vector<std::vector<double>>> maxima;
    std::size_t rerun_events = 0;
};

ReplicateMaxima bootstrap_replicate_maxima(const Model& model, const TimeSeries& series,
                                           const std::vector<std::size_t>& scales,
                                           const std::vector<std::vector<Pattern>>& patterns,
                                           std::size_t replicates, BootstrapMethod method,
                                           std::uint64_t master_seed,
                                           const CalibrateOptions& options = {});

}  // namespace cpd
