#include "cpd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cpd/data.hpp"
#include "cpd/parallel.hpp"
#include "cpd/rng.hpp"

namespace cpd {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    return out;
}

bool detected_near(const std::vector<std::size_t>& flagged_taus, std::size_t tau_star,
                   std::size_t h) {
    for (std::size_t tau : flagged_taus) {
        std::size_t d = tau > tau_star ? tau - tau_star : tau_star - tau;
        if (d <= h) return true;
    }
    return false;
}

}  // namespace

LocalizationPowerResult run_localization_power(const LocalizationPowerConfig& cfg) {
    if (cfg.tau_star >= cfg.n) throw std::invalid_argument("tau_star must lie inside the series");
    if (cfg.n < 4 * cfg.h) throw std::invalid_argument("need n >= 4h");
    Model model = Model::gaussian_mean(cfg.p);
    Pattern tri = make_pattern(PatternKind::Triangle, cfg.h, 0, PatternNormalization::L1);
    Pattern ind = make_pattern(PatternKind::Indicator, cfg.h, 0, PatternNormalization::L1);

    LocalizationPowerResult result;
    result.rows.resize(cfg.shifts.size() * cfg.runs);

    CalibrateOptions serial;
    serial.workers = 1;  // outer loop owns the parallelism

    parallel_for(result.rows.size(), cfg.workers, [&](std::size_t job) {
        std::size_t shift_idx = job / cfg.runs;
        std::size_t run = job % cfg.runs;
        double shift = cfg.shifts[shift_idx];

        std::uint64_t data_seed = derive_seed(derive_seed(cfg.master_seed, shift_idx), run);
        std::uint64_t cal_seed = derive_seed(data_seed, 7);

        std::vector<double> pre(cfg.p, 0.0);
        std::vector<double> post(cfg.p, shift);
        GeneratedSeries g = generate_piecewise(
            {{cfg.tau_star, SegmentFamily::GaussianMean, pre},
             {cfg.n - cfg.tau_star, SegmentFamily::GaussianMean, post}},
            data_seed);

        ReplicateMaxima rm = bootstrap_replicate_maxima(model, g.series, {cfg.h}, {{tri, ind}},
                                                        cfg.replicates, cfg.method, cal_seed, serial);
        double z_tri = upper_quantile(rm.maxima[0][0], cfg.alpha);
        double z_ind = upper_quantile(rm.maxima[0][1], cfg.alpha);

        LrtSeries lrt = lrt_series(model, g.series, cfg.h);
        TpSeries tp_tri = tp_series(lrt, tri);
        TpSeries tp_ind = tp_series(lrt, ind);

        auto analyze = [&](const TpSeries& tp, double z, std::size_t& tau_hat, double& err,
                           bool& detected) {
            std::size_t best = 0;
            std::vector<std::size_t> flagged;
            for (std::size_t i = 0; i < tp.values.size(); ++i) {
                if (tp.values[i] > tp.values[best]) best = i;
                if (tp.values[i] > z) flagged.push_back(tp.tau_first + i);
            }
            tau_hat = tp.tau_first + best;
            err = std::abs(static_cast<double>(tau_hat) - static_cast<double>(cfg.tau_star));
            detected = detected_near(flagged, cfg.tau_star, cfg.h);
        };

        LocalizationRunRow row;
        row.shift = shift;
        row.run = run;
        analyze(tp_tri, z_tri, row.tau_triangle, row.err_triangle, row.detected_triangle);
        analyze(tp_ind, z_ind, row.tau_indicator, row.err_indicator, row.detected_indicator);
        result.rows[job] = row;
    });

    for (std::size_t s = 0; s < cfg.shifts.size(); ++s) {
        std::vector<LocalizationRun> tri_runs, ind_runs;
        for (std::size_t r = 0; r < cfg.runs; ++r) {
            const auto& row = result.rows[s * cfg.runs + r];
            tri_runs.push_back({static_cast<double>(row.tau_triangle),
                                static_cast<double>(cfg.tau_star), row.detected_triangle});
            ind_runs.push_back({static_cast<double>(row.tau_indicator),
                                static_cast<double>(cfg.tau_star), row.detected_indicator});
        }
        LocalizationStats tri = localization_stats(tri_runs);
        LocalizationStats ind = localization_stats(ind_runs);
        result.summary.push_back({cfg.shifts[s], "triangle", tri.mean_abs_error, tri.power,
                                  cfg.runs});
        result.summary.push_back({cfg.shifts[s], "indicator", ind.mean_abs_error, ind.power,
                                  cfg.runs});
    }
    return result;
}

void write_localization_power(const LocalizationPowerResult& result, const std::string& out_dir) {
    auto summary = open_out(out_dir + "/localization_summary.csv");
    summary << "shift,pattern,mean_abs_error,power,runs\n";
    for (const auto& row : result.summary) {
        summary << fmt(row.shift) << ',' << row.pattern << ',' << fmt(row.mean_abs_error) << ','
                << fmt(row.power) << ',' << row.runs << '\n';
    }
    auto runs = open_out(out_dir + "/localization_runs.csv");
    runs << "shift,run,tau_triangle,err_triangle,detected_triangle,"
            "tau_indicator,err_indicator,detected_indicator\n";
    for (const auto& r : result.rows) {
        runs << fmt(r.shift) << ',' << r.run << ',' << r.tau_triangle << ',' << fmt(r.err_triangle)
             << ',' << (r.detected_triangle ? 1 : 0) << ',' << r.tau_indicator << ','
             << fmt(r.err_indicator) << ',' << (r.detected_indicator ? 1 : 0) << '\n';
    }
}

ConvergenceResult run_bootstrap_convergence(const ConvergenceConfig& cfg) {
    Model model = Model::gaussian_mean(cfg.p);
    ConvergenceResult result;
    result.rows.resize(cfg.scales.size());

    std::vector<std::uint8_t> rejections(cfg.scales.size() * cfg.mc_runs, 0);
    CalibrateOptions serial;
    serial.workers = 1;

    parallel_for(cfg.scales.size() * cfg.mc_runs, cfg.workers, [&](std::size_t job) {
        std::size_t scale_idx = job / cfg.mc_runs;
        std::size_t mc = job % cfg.mc_runs;
        std::size_t h = cfg.scales[scale_idx];
        std::size_t n = 6 * h;

        std::uint64_t data_seed = derive_seed(derive_seed(cfg.master_seed, scale_idx), mc);
        std::uint64_t cal_seed = derive_seed(data_seed, 7);

        std::vector<double> base(cfg.p, 0.0);
        GeneratedSeries g;
        if (cfg.with_change) {
            std::vector<double> shifted(cfg.p, cfg.shift);
            g = generate_piecewise({{3 * h, SegmentFamily::GaussianMean, base},
                                    {3 * h, SegmentFamily::GaussianMean, shifted}},
                                   data_seed);
        } else {
            g = generate_piecewise({{n, SegmentFamily::GaussianMean, base}}, data_seed);
        }

        Pattern tri = make_pattern(PatternKind::Triangle, h, 0, PatternNormalization::L1);
        CalibrationResult cal = calibrate(model, g.series, h, tri, cfg.alpha, cfg.replicates,
                                          cfg.method, cal_seed, serial);
        LrtSeries lrt = lrt_series(model, g.series, h);
        double observed = max_tp(lrt, tri).value;
        rejections[job] = observed > cal.critical_value ? 1 : 0;
    });

    std::vector<std::pair<double, double>> points;
    for (std::size_t s = 0; s < cfg.scales.size(); ++s) {
        std::size_t hits = 0;
        for (std::size_t mc = 0; mc < cfg.mc_runs; ++mc) hits += rejections[s * cfg.mc_runs + mc];
        double level = static_cast<double>(hits) / static_cast<double>(cfg.mc_runs);
        double floor = 1.0 / (2.0 * static_cast<double>(cfg.mc_runs));
        double err = std::max(std::abs(level - cfg.alpha), floor);
        result.rows[s] = {cfg.scales[s], level, err};
        points.emplace_back(static_cast<double>(cfg.scales[s]), err);
    }
    result.beta = convergence_slope(points);
    return result;
}

void write_bootstrap_convergence(const ConvergenceResult& result, const std::string& out_dir) {
    auto out = open_out(out_dir + "/convergence.csv");
    out << "h,level,abs_error\n";
    for (const auto& row : result.rows) {
        out << row.h << ',' << fmt(row.level) << ',' << fmt(row.abs_error) << '\n';
    }
    auto beta = open_out(out_dir + "/convergence_beta.json");
    beta << "{\n  \"beta\": " << fmt(result.beta) << "\n}\n";
}

NmiSweepResult run_nmi_sweep(const NmiSweepConfig& cfg) {
    if (cfg.data_family != "gaussian-meanvar" && cfg.data_family != "poisson") {
        throw std::invalid_argument("nmi sweep data family must be gaussian-meanvar or poisson");
    }
    NmiSweepResult result;
    result.rows.resize(cfg.deltas.size() * cfg.sequences_per_delta);

    CalibrateOptions serial;
    serial.workers = 1;
    // The fit is always the two-parameter normal family; Poisson data is the
    // misspecification scenario.
    Model model = Model::gaussian_meanvar();

    parallel_for(result.rows.size(), cfg.workers, [&](std::size_t job) {
        std::size_t delta_idx = job / cfg.sequences_per_delta;
        std::size_t seq = job % cfg.sequences_per_delta;
        double delta = cfg.deltas[delta_idx];
        std::size_t cp_count = seq % 3;

        std::uint64_t data_seed = derive_seed(derive_seed(cfg.master_seed, delta_idx), seq);
        std::uint64_t cal_seed = derive_seed(data_seed, 7);

        auto segment = [&](std::size_t length, double level) -> SegmentSpec {
            if (cfg.data_family == "poisson") {
                return {length, SegmentFamily::Poisson, {cfg.base_rate + level}};
            }
            return {length, SegmentFamily::GaussianMeanVar, {cfg.base_mean + level, cfg.base_var}};
        };

        std::vector<SegmentSpec> segments;
        if (cp_count == 0) {
            segments = {segment(cfg.n, 0.0)};
        } else if (cp_count == 1) {
            segments = {segment(cfg.n / 2, 0.0), segment(cfg.n - cfg.n / 2, delta)};
        } else {
            std::size_t third = cfg.n / 3;
            segments = {segment(third, 0.0), segment(third, delta),
                        segment(cfg.n - 2 * third, 0.0)};
        }
        GeneratedSeries g = generate_piecewise(segments, data_seed);

        DetectConfig dc;
        dc.scales = {cfg.h};
        dc.pattern = cfg.pattern;
        dc.alpha = cfg.alpha;
        dc.replicates = cfg.replicates;
        dc.method = cfg.method;
        dc.master_seed = cal_seed;
        dc.workers = 1;
        DetectionReport report = detect(model, g.series, dc);

        Partition truth{cfg.n, g.true_change_points};
        Partition predicted{cfg.n, report.change_points};

        NmiRow row;
        row.delta = delta;
        row.sequence = seq;
        row.true_change_points = g.true_change_points.size();
        row.predicted_change_points = report.change_points.size();
        row.nmi = nmi(truth, predicted);
        result.rows[job] = row;
    });
    return result;
}

void write_nmi_sweep(const NmiSweepResult& result, const std::string& out_dir) {
    auto out = open_out(out_dir + "/nmi.csv");
    out << "delta,sequence,true_change_points,predicted_change_points,nmi\n";
    for (const auto& row : result.rows) {
        out << fmt(row.delta) << ',' << row.sequence << ',' << row.true_change_points << ','
            << row.predicted_change_points << ',' << fmt(row.nmi) << '\n';
    }
}

std::vector<NmiScoreRow> score_partitions(
    const Partition& reference, const std::vector<std::pair<std::string, Partition>>& methods) {
    std::vector<NmiScoreRow> rows;
    rows.reserve(methods.size());
    for (const auto& [name, partition] : methods) {
        rows.push_back({name, nmi(reference, partition)});
    }
    return rows;
}

}  // namespace cpd
