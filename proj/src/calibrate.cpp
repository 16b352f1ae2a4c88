#include "cpd/calibrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "cpd/parallel.hpp"
#include "cpd/rng.hpp"

namespace cpd {

namespace {

void check_calibration_args(const TimeSeries& series, std::size_t h, double alpha,
                            std::size_t replicates) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    if (replicates < 20) throw std::invalid_argument("need at least 20 bootstrap replicates");
    if (series.n < 4 * h) {
        throw std::invalid_argument("series too short: need n >= 4h for calibration at h=" +
                                    std::to_string(h));
    }
}

}  // namespace

BootstrapMethod bootstrap_method_from_name(const std::string& name) {
    if (name == "weighted") return BootstrapMethod::Weighted;
    if (name == "empirical") return BootstrapMethod::Empirical;
    throw std::invalid_argument("unknown bootstrap method: " + name);
}

std::string bootstrap_method_name(BootstrapMethod method) {
    return method == BootstrapMethod::Weighted ? "weighted" : "empirical";
}

MultiScaleMode multi_scale_mode_from_name(const std::string& name) {
    if (name == "per-scale") return MultiScaleMode::PerScale;
    if (name == "max-joint") return MultiScaleMode::MaxJoint;
    if (name == "bonferroni") return MultiScaleMode::Bonferroni;
    throw std::invalid_argument("unknown multi-scale mode: " + name);
}

std::string multi_scale_mode_name(MultiScaleMode mode) {
    switch (mode) {
        case MultiScaleMode::PerScale: return "per-scale";
        case MultiScaleMode::MaxJoint: return "max-joint";
        case MultiScaleMode::Bonferroni: return "bonferroni";
    }
    return "?";
}

double upper_quantile(std::vector<double> values, double alpha) {
    if (values.empty()) throw std::invalid_argument("no values to take a quantile of");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(
        std::ceil((1.0 - alpha) * static_cast<double>(values.size())));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

std::pair<double, double> quantile_bracket(const std::vector<double>& maxima, double alpha,
                                           double delta) {
    if (delta < 0.0 || !(alpha - delta > 0.0) || !(alpha + delta < 1.0)) {
        throw std::invalid_argument("quantile bracket levels must lie in (0,1)");
    }
    return {upper_quantile(maxima, alpha + delta), upper_quantile(maxima, alpha - delta)};
}

ReplicateMaxima bootstrap_replicate_maxima(const Model& model, const TimeSeries& series,
                                           const std::vector<std::size_t>& scales,
                                           const std::vector<std::vector<Pattern>>& patterns,
                                           std::size_t replicates, BootstrapMethod method,
                                           std::uint64_t master_seed,
                                           const CalibrateOptions& options) {
    if (scales.empty()) throw std::invalid_argument("no scales given");
    if (patterns.size() != scales.size()) {
        throw std::invalid_argument("need one pattern list per scale");
    }
    for (std::size_t s = 0; s < scales.size(); ++s) {
        if (patterns[s].empty()) throw std::invalid_argument("empty pattern list");
        for (const auto& p : patterns[s]) {
            if (p.h != scales[s]) throw std::invalid_argument("pattern scale mismatch");
        }
    }
    model.check_series(series);

    // Shift caches are shared read-only across replicates (weighted only).
    std::vector<ShiftCache> caches;
    if (method == BootstrapMethod::Weighted) {
        caches.reserve(scales.size());
        for (std::size_t h : scales) caches.push_back(make_shift_cache(model, series, h));
    }

    ReplicateMaxima out;
    out.maxima.resize(scales.size());
    for (std::size_t s = 0; s < scales.size(); ++s) {
        out.maxima[s].assign(patterns[s].size(), std::vector<double>(replicates, 0.0));
    }
    std::atomic<std::size_t> rerun_events{0};

    parallel_for(replicates, options.workers, [&](std::size_t b) {
        std::uint64_t seed = derive_seed(master_seed, b);
        for (int attempt = 0;; ++attempt) {
            bool failed = false;
            std::vector<LrtSeries> lrt(scales.size());
            if (method == BootstrapMethod::Weighted) {
                Rng rng(seed);
                std::vector<double> weights(series.n);
                for (double& w : weights) w = 1.0 + rng.normal();
                for (std::size_t s = 0; s < scales.size(); ++s) {
                    lrt[s] = weighted_bootstrap_lrt_series_with_weights(model, series, scales[s],
                                                                        weights, &caches[s]);
                    failed = failed || lrt[s].solver_failures > 0;
                }
            } else {
                Rng rng(seed);
                std::vector<std::size_t> idx(series.n);
                for (auto& k : idx) k = static_cast<std::size_t>(rng.uniform_below(series.n));
                for (std::size_t s = 0; s < scales.size(); ++s) {
                    lrt[s] = empirical_bootstrap_lrt_series_with_indices(model, series, scales[s], idx);
                    failed = failed || lrt[s].solver_failures > 0;
                }
            }
            if (failed && attempt < options.max_retries) {
                ++rerun_events;
                seed = derive_seed(seed, static_cast<std::uint64_t>(attempt) + 1);
                continue;
            }
            for (std::size_t s = 0; s < scales.size(); ++s) {
                for (std::size_t k = 0; k < patterns[s].size(); ++k) {
                    out.maxima[s][k][b] = max_tp(lrt[s], patterns[s][k]).value;
                }
            }
            break;
        }
    });

    out.rerun_events = rerun_events.load();
    double limit = options.abort_fraction * static_cast<double>(replicates);
    if (static_cast<double>(out.rerun_events) > limit) {
        throw std::runtime_error(
            "bootstrap calibration aborted: " + std::to_string(out.rerun_events) +
            " replicate reruns out of " + std::to_string(replicates) +
            " (solver failure rate above " + std::to_string(options.abort_fraction) + ")");
    }
    return out;
}

CalibrationResult calibrate(const Model& model, const TimeSeries& series, std::size_t h,
                            const Pattern& pattern, double alpha, std::size_t replicates,
                            BootstrapMethod method, std::uint64_t master_seed,
                            const CalibrateOptions& options) {
    check_calibration_args(series, h, alpha, replicates);
    if (pattern.h != h) throw std::invalid_argument("pattern was built for a different scale");
    ReplicateMaxima rm =
        bootstrap_replicate_maxima(model, series, {h}, {{pattern}}, replicates, method, master_seed,
                                   options);
    CalibrationResult r;
    r.h = h;
    r.alpha = alpha;
    r.method = method;
    r.replicate_maxima = std::move(rm.maxima[0][0]);
    r.critical_value = upper_quantile(r.replicate_maxima, alpha);
    r.failed_replicates = rm.rerun_events;
    r.master_seed = master_seed;
    return r;
}

JointCalibration joint_calibrate(const Model& model, const TimeSeries& series,
                                 const std::vector<std::size_t>& scales, PatternKind kind,
                                 std::size_t plateau, double alpha, std::size_t replicates,
                                 BootstrapMethod method, std::uint64_t master_seed,
                                 MultiScaleMode mode, const CalibrateOptions& options) {
    if (scales.empty()) throw std::invalid_argument("no scales given");
    for (std::size_t h : scales) check_calibration_args(series, h, alpha, replicates);

    std::vector<std::vector<Pattern>> patterns;
    patterns.reserve(scales.size());
    for (std::size_t h : scales) {
        patterns.push_back({make_pattern(kind, h, plateau, PatternNormalization::L1)});
    }
    ReplicateMaxima rm = bootstrap_replicate_maxima(model, series, scales, patterns, replicates,
                                                    method, master_seed, options);

    JointCalibration jc;
    jc.mode = mode;
    jc.alpha = alpha;
    for (std::size_t s = 0; s < scales.size(); ++s) {
        CalibrationResult r;
        r.h = scales[s];
        r.alpha = alpha;
        r.method = method;
        r.replicate_maxima = std::move(rm.maxima[s][0]);
        r.critical_value = upper_quantile(r.replicate_maxima, alpha);
        r.failed_replicates = rm.rerun_events;
        r.master_seed = master_seed;
        jc.per_scale.push_back(std::move(r));
    }
    if (mode == MultiScaleMode::MaxJoint) {
        std::vector<double> family_max(replicates, 0.0);
        for (std::size_t b = 0; b < replicates; ++b) {
            double m = jc.per_scale[0].replicate_maxima[b];
            for (std::size_t s = 1; s < scales.size(); ++s) {
                m = std::max(m, jc.per_scale[s].replicate_maxima[b]);
            }
            family_max[b] = m;
        }
        jc.family_threshold = upper_quantile(family_max, alpha);
    } else if (mode == MultiScaleMode::Bonferroni) {
        double adjusted = alpha / static_cast<double>(scales.size());
        for (const auto& r : jc.per_scale) {
            jc.adjusted_thresholds.push_back(upper_quantile(r.replicate_maxima, adjusted));
        }
    }
    return jc;
}

}  // namespace cpd
