#include "cpd/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace cpd {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ScaleReport score_scale(const LrtSeries& lrt, const FrozenScale& fs) {
    ScaleReport r;
    r.h = fs.h;
    r.critical_value = fs.critical_value;
    TpSeries tp = tp_series(lrt, fs.pattern);
    r.summary.count = tp.values.size();
    double mn = tp.values.front(), mx = tp.values.front(), sum = 0.0;
    r.tau_hat = tp.tau_first;
    r.max_tp = tp.values.front();
    for (std::size_t i = 0; i < tp.values.size(); ++i) {
        double v = tp.values[i];
        sum += v;
        mn = std::min(mn, v);
        mx = std::max(mx, v);
        if (v > r.max_tp) {
            r.max_tp = v;
            r.tau_hat = tp.tau_first + i;
        }
        if (v > fs.critical_value) {
            r.flags.push_back({tp.tau_first + i, fs.h, v, fs.critical_value});
        }
    }
    r.summary.min = mn;
    r.summary.max = mx;
    r.summary.mean = sum / static_cast<double>(tp.values.size());
    return r;
}

nlohmann::ordered_json config_to_json(const DetectConfig& c) {
    nlohmann::ordered_json j;
    j["scales"] = c.scales;
    j["pattern"] = pattern_kind_name(c.pattern);
    j["plateau"] = c.plateau;
    j["alpha"] = c.alpha;
    j["replicates"] = c.replicates;
    j["method"] = bootstrap_method_name(c.method);
    j["seed"] = c.master_seed;
    j["min_separation"] = c.min_separation;
    j["mode"] = multi_scale_mode_name(c.mode);
    j["workers"] = c.workers;
    return j;
}

}  // namespace

std::vector<std::size_t> merge_flags(const std::vector<Flag>& flags, std::size_t min_separation) {
    if (flags.empty()) return {};
    std::vector<Flag> sorted = flags;
    std::sort(sorted.begin(), sorted.end(), [](const Flag& a, const Flag& b) {
        if (a.tau != b.tau) return a.tau < b.tau;
        return a.tp > b.tp;
    });
    std::vector<std::size_t> merged;
    std::size_t cluster_start = 0;
    auto emit = [&](std::size_t begin, std::size_t end) {
        // Representative: the largest TP in the cluster, earliest tau on ties.
        std::size_t best = begin;
        for (std::size_t i = begin + 1; i < end; ++i) {
            if (sorted[i].tp > sorted[best].tp) best = i;
        }
        merged.push_back(sorted[best].tau);
    };
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].tau - sorted[i - 1].tau >= min_separation) {
            emit(cluster_start, i);
            cluster_start = i;
        }
    }
    emit(cluster_start, sorted.size());
    return merged;
}

DetectionReport detect_with_thresholds(const Model& model, const TimeSeries& series,
                                       const std::vector<FrozenScale>& scales,
                                       std::size_t min_separation) {
    if (scales.empty()) throw std::invalid_argument("no scales given");
    DetectionReport report;
    std::vector<Flag> all_flags;
    for (const auto& fs : scales) {
        LrtSeries lrt = lrt_series(model, series, fs.h);
        ScaleReport sr = score_scale(lrt, fs);
        all_flags.insert(all_flags.end(), sr.flags.begin(), sr.flags.end());
        report.per_scale.push_back(std::move(sr));
    }
    report.change_points = merge_flags(all_flags, min_separation);
    return report;
}

DetectionReport detect(const Model& model, const TimeSeries& series, const DetectConfig& config) {
    if (config.scales.empty()) throw std::invalid_argument("no scales given");
    std::size_t hmax = *std::max_element(config.scales.begin(), config.scales.end());
    if (series.n < 4 * hmax) {
        throw std::invalid_argument("series too short: need n >= 4*max(scales)");
    }
    CalibrateOptions opts;
    opts.workers = config.workers;
    JointCalibration jc = joint_calibrate(model, series, config.scales, config.pattern,
                                          config.plateau, config.alpha, config.replicates,
                                          config.method, config.master_seed, config.mode, opts);
    std::vector<FrozenScale> frozen;
    frozen.reserve(config.scales.size());
    for (std::size_t s = 0; s < config.scales.size(); ++s) {
        double z = jc.per_scale[s].critical_value;
        if (config.mode == MultiScaleMode::MaxJoint) z = jc.family_threshold;
        if (config.mode == MultiScaleMode::Bonferroni) z = jc.adjusted_thresholds[s];
        frozen.push_back({config.scales[s], z,
                          make_pattern(config.pattern, config.scales[s], config.plateau,
                                       PatternNormalization::L1)});
    }
    std::size_t min_sep = config.min_separation == 0 ? hmax : config.min_separation;
    DetectionReport report = detect_with_thresholds(model, series, frozen, min_sep);
    report.config = config;
    report.config.min_separation = min_sep;
    report.failed_replicates = jc.per_scale.front().failed_replicates;
    return report;
}

StreamDetector::StreamDetector(Model model, std::vector<FrozenScale> scales)
    : model_(std::move(model)), scales_(std::move(scales)) {
    lrt_values_.resize(scales_.size());
}

std::vector<Flag> StreamDetector::push(std::span<const double> observation) {
    if (scales_.empty()) throw std::logic_error("stream detector has no calibrated scales");
    buffer_.append_row(observation);
    std::vector<Flag> released;
    const std::size_t n = buffer_.n;
    for (std::size_t s = 0; s < scales_.size(); ++s) {
        const std::size_t h = scales_[s].h;
        if (n < 2 * h) continue;  // the state only grows
        // Exactly one LRT center completes per appended point.
        std::size_t t_new = n - h;
        double v = std::sqrt(2.0 * lrt_at(model_, buffer_, t_new, h));
        lrt_values_[s].push_back(v);
        // TP at tau needs centers tau-h..tau+h-1; the newest computable one
        // is tau = n - 2h, admissible once tau >= 2h.
        if (n < 4 * h) continue;
        std::size_t tau = n - 2 * h;
        const Pattern& pat = scales_[s].pattern;
        const std::vector<double>& vals = lrt_values_[s];  // value i sits at position h+i
        double tp = 0.0;
        for (std::size_t i = 0; i < pat.weights.size(); ++i) {
            double w = pat.weights[i];
            if (w == 0.0) continue;
            std::size_t t = tau + static_cast<std::size_t>(pat.first_offset + static_cast<int>(i));
            tp += w * vals[t - h];
        }
        if (tp > scales_[s].critical_value) {
            Flag f{tau, h, tp, scales_[s].critical_value};
            flags_.push_back(f);
            released.push_back(f);
        }
    }
    return released;
}

StreamDetector StreamDetector::from_calibration(const Model& model, const TimeSeries& warmup,
                                                const std::vector<std::size_t>& scales,
                                                PatternKind kind, std::size_t plateau, double alpha,
                                                std::size_t replicates, BootstrapMethod method,
                                                std::uint64_t master_seed, bool replay_warmup,
                                                const CalibrateOptions& options) {
    JointCalibration jc = joint_calibrate(model, warmup, scales, kind, plateau, alpha, replicates,
                                          method, master_seed, MultiScaleMode::PerScale, options);
    std::vector<FrozenScale> frozen;
    for (std::size_t s = 0; s < scales.size(); ++s) {
        frozen.push_back({scales[s], jc.per_scale[s].critical_value,
                          make_pattern(kind, scales[s], plateau, PatternNormalization::L1)});
    }
    StreamDetector detector(model, std::move(frozen));
    if (replay_warmup) {
        for (std::size_t i = 0; i < warmup.n; ++i) detector.push(warmup.row(i));
    }
    return detector;
}

std::string detect_config_to_json(const DetectConfig& config) {
    return config_to_json(config).dump(2);
}

DetectConfig detect_config_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("detect config: ") + e.what());
    }
    DetectConfig c;
    c.scales = j.at("scales").get<std::vector<std::size_t>>();
    c.pattern = pattern_kind_from_name(j.at("pattern").get<std::string>());
    c.plateau = j.at("plateau").get<std::size_t>();
    c.alpha = j.at("alpha").get<double>();
    c.replicates = j.at("replicates").get<std::size_t>();
    c.method = bootstrap_method_from_name(j.at("method").get<std::string>());
    c.master_seed = j.at("seed").get<std::uint64_t>();
    c.min_separation = j.at("min_separation").get<std::size_t>();
    c.mode = multi_scale_mode_from_name(j.at("mode").get<std::string>());
    c.workers = j.at("workers").get<std::size_t>();
    return c;
}

std::string detection_report_to_json(const DetectionReport& report) {
    nlohmann::ordered_json j;
    j["config"] = config_to_json(report.config);
    j["failed_replicates"] = report.failed_replicates;
    nlohmann::ordered_json scales = nlohmann::ordered_json::array();
    for (const auto& sr : report.per_scale) {
        nlohmann::ordered_json js;
        js["h"] = sr.h;
        js["critical_value"] = sr.critical_value;
        js["tau_hat"] = sr.tau_hat;
        js["max_tp"] = sr.max_tp;
        js["tp_summary"] = {{"count", sr.summary.count},
                            {"min", sr.summary.min},
                            {"mean", sr.summary.mean},
                            {"max", sr.summary.max}};
        nlohmann::ordered_json fl = nlohmann::ordered_json::array();
        for (const auto& f : sr.flags) fl.push_back({{"tau", f.tau}, {"tp", f.tp}});
        js["flags"] = fl;
        scales.push_back(js);
    }
    j["per_scale"] = scales;
    j["change_points"] = report.change_points;
    return j.dump(2);
}

void write_detection_report(const DetectionReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << detection_report_to_json(report) << '\n';
}

void write_flags_csv(const DetectionReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "tau,h,tp,z_h\n";
    for (const auto& sr : report.per_scale) {
        for (const auto& f : sr.flags) {
            out << f.tau << ',' << f.h << ',' << fmt(f.tp) << ',' << fmt(f.threshold) << '\n';
        }
    }
}

void write_lrt_csv(const LrtSeries& lrt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "t,value\n";
    for (std::size_t i = 0; i < lrt.values.size(); ++i) {
        out << (lrt.first + i) << ',' << fmt(lrt.values[i]) << '\n';
    }
}

void write_pattern_csv(const Pattern& pattern, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "offset,weight\n";
    for (std::size_t i = 0; i < pattern.weights.size(); ++i) {
        out << (pattern.first_offset + static_cast<int>(i)) << ',' << fmt(pattern.weights[i]) << '\n';
    }
}

std::string calibration_to_json(const CalibrationResult& result) {
    nlohmann::ordered_json j;
    j["h"] = result.h;
    j["alpha"] = result.alpha;
    j["method"] = bootstrap_method_name(result.method);
    j["critical_value"] = result.critical_value;
    j["failed_replicates"] = result.failed_replicates;
    j["master_seed"] = result.master_seed;
    j["replicate_maxima"] = result.replicate_maxima;
    return j.dump(2);
}

void write_calibration(const CalibrationResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << calibration_to_json(result) << '\n';
}

}  // namespace cpd
