// Command-line front end: synthetic data generation, calibration, detection,
// experiment reproduction and the closed-form theory calculators.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpd/calibrate.hpp"
#include "cpd/data.hpp"
#include "cpd/detect.hpp"
#include "cpd/experiment.hpp"
#include "cpd/metrics.hpp"
#include "cpd/theory.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw cpd::ParseError(path + ": " + e.what());
    }
}

std::size_t workers_from_env(std::size_t flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("CPD_WORKERS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return 0;  // library default: all cores
}

cpd::SeriesFormat format_from_name(const std::string& name) {
    if (name == "csv") return cpd::SeriesFormat::Csv;
    if (name == "json") return cpd::SeriesFormat::Json;
    throw std::invalid_argument("unknown series format: " + name);
}

struct ModelOptions {
    std::string family = "gaussian-mean";
    std::string link = "exp";
    std::string factors_path;
};

cpd::Model build_model(const ModelOptions& opts, const cpd::TimeSeries& series) {
    cpd::Family family = cpd::Model::family_from_name(opts.family);
    switch (family) {
        case cpd::Family::GaussianMean:
            return cpd::Model::gaussian_mean(series.p);
        case cpd::Family::GaussianMeanVar:
            return cpd::Model::gaussian_meanvar();
        case cpd::Family::Poisson:
            return cpd::Model::poisson();
        case cpd::Family::Glm: {
            if (opts.factors_path.empty()) {
                throw std::invalid_argument("glm family needs --factors <csv>");
            }
            cpd::TimeSeries f = cpd::load_series(opts.factors_path, cpd::SeriesFormat::Csv);
            if (f.n != series.n) {
                throw cpd::DimensionMismatchError("factor rows must match the series length");
            }
            return cpd::Model::glm(cpd::GlmLink::from_name(opts.link), f.values, f.p);
        }
    }
    throw std::invalid_argument("unreachable");
}

void require_seed(const std::optional<std::uint64_t>& seed) {
    if (!seed) throw std::invalid_argument("a --seed is mandatory for stochastic commands");
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
}

// ---- generate ----------------------------------------------------------

int cmd_generate(const json& cfg, const std::string& out_dir, std::optional<std::uint64_t> seed,
                 const std::string& format_name) {
    require_seed(seed);
    ensure_dir(out_dir);
    cpd::GeneratedSeries g;
    if (cfg.contains("transition")) {
        const json& t = cfg["transition"];
        auto kind_name = t.at("kind").get<std::string>();
        cpd::TransitionKind kind;
        if (kind_name == "abrupt-mean") kind = cpd::TransitionKind::AbruptMean;
        else if (kind_name == "smooth-mean") kind = cpd::TransitionKind::SmoothMean;
        else if (kind_name == "abrupt-variance") kind = cpd::TransitionKind::AbruptVariance;
        else throw std::invalid_argument("unknown transition kind: " + kind_name);
        g = cpd::generate_transition(kind, t.at("pre").get<std::vector<double>>(),
                                     t.at("post").get<std::vector<double>>(),
                                     t.at("width").get<std::size_t>(),
                                     t.at("pre_length").get<std::size_t>(),
                                     t.at("post_length").get<std::size_t>(), *seed);
    } else if (cfg.contains("segments")) {
        std::vector<cpd::SegmentSpec> segments;
        for (const json& js : cfg["segments"]) {
            cpd::SegmentSpec seg;
            seg.length = js.at("length").get<std::size_t>();
            seg.family = cpd::segment_family_from_name(js.at("family").get<std::string>());
            seg.params = js.at("params").get<std::vector<double>>();
            segments.push_back(std::move(seg));
        }
        g = cpd::generate_piecewise(segments, *seed);
    } else {
        throw std::invalid_argument("generate config needs \"segments\" or \"transition\"");
    }
    cpd::SeriesFormat format = format_from_name(format_name);
    std::string ext = format == cpd::SeriesFormat::Csv ? ".csv" : ".json";
    cpd::save_series(g.series, out_dir + "/series" + ext, format);
    cpd::save_metadata(g, out_dir + "/series.meta.json");
    std::cout << "generated n=" << g.series.n << " p=" << g.series.p << " change points at [";
    for (std::size_t i = 0; i < g.true_change_points.size(); ++i) {
        std::cout << (i ? ", " : "") << g.true_change_points[i];
    }
    std::cout << "] -> " << out_dir << "/series" << ext << "\n";
    return 0;
}

// ---- detect / calibrate -------------------------------------------------

void validate_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha out of range (0,1)");
}

int cmd_detect(const std::string& input, const std::string& format_name, const ModelOptions& mopts,
               cpd::DetectConfig dc, const std::string& out_dir, bool emit_lrt) {
    validate_alpha(dc.alpha);
    cpd::TimeSeries series = cpd::load_series(input, format_from_name(format_name));
    cpd::Model model = build_model(mopts, series);
    ensure_dir(out_dir);
    cpd::DetectionReport report = cpd::detect(model, series, dc);
    cpd::write_detection_report(report, out_dir + "/report.json");
    cpd::write_flags_csv(report, out_dir + "/flags.csv");
    if (emit_lrt) {
        for (std::size_t h : dc.scales) {
            cpd::LrtSeries lrt = cpd::lrt_series(model, series, h);
            cpd::write_lrt_csv(lrt, out_dir + "/lrt_h" + std::to_string(h) + ".csv");
        }
    }
    std::cout << "detected " << report.change_points.size() << " change point(s):";
    for (std::size_t tau : report.change_points) std::cout << ' ' << tau;
    std::cout << "\nreport -> " << out_dir << "/report.json\n";
    for (const auto& sr : report.per_scale) {
        std::cout << "  h=" << sr.h << " z=" << sr.critical_value << " tau_hat=" << sr.tau_hat
                  << " max_tp=" << sr.max_tp << " flags=" << sr.flags.size() << "\n";
    }
    return 0;
}

int cmd_calibrate(const std::string& input, const std::string& format_name,
                  const ModelOptions& mopts, std::size_t h, const std::string& pattern_name,
                  std::size_t plateau, double alpha, std::size_t replicates,
                  const std::string& method_name, std::uint64_t seed, std::size_t workers,
                  const std::string& out_dir) {
    validate_alpha(alpha);
    cpd::TimeSeries series = cpd::load_series(input, format_from_name(format_name));
    cpd::Model model = build_model(mopts, series);
    cpd::Pattern pattern = cpd::make_pattern(cpd::pattern_kind_from_name(pattern_name), h, plateau,
                                             cpd::PatternNormalization::L1);
    cpd::CalibrateOptions opts;
    opts.workers = workers;
    cpd::CalibrationResult result =
        cpd::calibrate(model, series, h, pattern, alpha, replicates,
                       cpd::bootstrap_method_from_name(method_name), seed, opts);
    ensure_dir(out_dir);
    cpd::write_calibration(result, out_dir + "/calibration.json");
    std::cout << "z_h(" << alpha << ") = " << result.critical_value << " from " << replicates
              << " replicates (" << result.failed_replicates << " reruns) -> " << out_dir
              << "/calibration.json\n";
    return 0;
}

// ---- experiment ----------------------------------------------------------

template <typename T>
void maybe(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

int cmd_experiment(const json& cfg, const std::string& out_dir,
                   std::optional<std::uint64_t> seed_override, std::size_t workers) {
    std::string type = cfg.at("type").get<std::string>();
    ensure_dir(out_dir);

    if (type == "localization-power") {
        cpd::LocalizationPowerConfig c;
        maybe(cfg, "n", c.n);
        maybe(cfg, "p", c.p);
        maybe(cfg, "tau_star", c.tau_star);
        maybe(cfg, "h", c.h);
        maybe(cfg, "shifts", c.shifts);
        maybe(cfg, "runs", c.runs);
        maybe(cfg, "alpha", c.alpha);
        maybe(cfg, "replicates", c.replicates);
        if (cfg.contains("method")) c.method = cpd::bootstrap_method_from_name(cfg["method"]);
        maybe(cfg, "seed", c.master_seed);
        if (seed_override) c.master_seed = *seed_override;
        c.workers = workers;
        validate_alpha(c.alpha);
        cpd::LocalizationPowerResult result = cpd::run_localization_power(c);
        cpd::write_localization_power(result, out_dir);
        std::cout << "shift pattern mean|tau-err| power\n";
        for (const auto& row : result.summary) {
            std::cout << row.shift << ' ' << row.pattern << ' ' << row.mean_abs_error << ' '
                      << row.power << "\n";
        }
        return 0;
    }
    if (type == "bootstrap-convergence") {
        cpd::ConvergenceConfig c;
        maybe(cfg, "p", c.p);
        maybe(cfg, "scales", c.scales);
        maybe(cfg, "mc_runs", c.mc_runs);
        maybe(cfg, "replicates", c.replicates);
        maybe(cfg, "alpha", c.alpha);
        if (cfg.contains("method")) c.method = cpd::bootstrap_method_from_name(cfg["method"]);
        maybe(cfg, "with_change", c.with_change);
        maybe(cfg, "shift", c.shift);
        maybe(cfg, "seed", c.master_seed);
        if (seed_override) c.master_seed = *seed_override;
        c.workers = workers;
        validate_alpha(c.alpha);
        cpd::ConvergenceResult result = cpd::run_bootstrap_convergence(c);
        cpd::write_bootstrap_convergence(result, out_dir);
        std::cout << "h level |level-alpha|\n";
        for (const auto& row : result.rows) {
            std::cout << row.h << ' ' << row.level << ' ' << row.abs_error << "\n";
        }
        std::cout << "beta = " << result.beta << "\n";
        return 0;
    }
    if (type == "nmi-sweep") {
        if (cfg.contains("reference")) {
            // Score externally produced partitions instead of simulating.
            cpd::Partition reference = cpd::load_partition(cfg.at("reference").get<std::string>());
            std::vector<std::pair<std::string, cpd::Partition>> methods;
            for (const auto& [name, path] : cfg.at("methods").items()) {
                methods.emplace_back(name, cpd::load_partition(path.get<std::string>()));
            }
            auto rows = cpd::score_partitions(reference, methods);
            std::ofstream out(out_dir + "/nmi_scores.csv");
            if (!out) throw std::invalid_argument("cannot write " + out_dir + "/nmi_scores.csv");
            out << "method,nmi\n";
            for (const auto& r : rows) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.17g", r.nmi);
                out << r.method << ',' << buf << '\n';
                std::cout << r.method << " nmi=" << r.nmi << "\n";
            }
            return 0;
        }
        cpd::NmiSweepConfig c;
        maybe(cfg, "data_family", c.data_family);
        maybe(cfg, "n", c.n);
        maybe(cfg, "deltas", c.deltas);
        maybe(cfg, "sequences_per_delta", c.sequences_per_delta);
        maybe(cfg, "base_mean", c.base_mean);
        maybe(cfg, "base_var", c.base_var);
        maybe(cfg, "base_rate", c.base_rate);
        maybe(cfg, "h", c.h);
        if (cfg.contains("pattern")) c.pattern = cpd::pattern_kind_from_name(cfg["pattern"]);
        maybe(cfg, "alpha", c.alpha);
        maybe(cfg, "replicates", c.replicates);
        if (cfg.contains("method")) c.method = cpd::bootstrap_method_from_name(cfg["method"]);
        maybe(cfg, "seed", c.master_seed);
        if (seed_override) c.master_seed = *seed_override;
        c.workers = workers;
        validate_alpha(c.alpha);
        cpd::NmiSweepResult result = cpd::run_nmi_sweep(c);
        cpd::write_nmi_sweep(result, out_dir);
        double mean = 0.0;
        for (const auto& row : result.rows) mean += row.nmi;
        std::cout << "nmi rows: " << result.rows.size()
                  << ", mean nmi = " << mean / static_cast<double>(result.rows.size()) << "\n";
        return 0;
    }
    throw std::invalid_argument("unknown experiment type: " + type);
}

// ---- theory ----------------------------------------------------------------

int cmd_theory(const std::string& calc, double p, double h, double x, double spread, double trace,
               double trace_sq, double lambda_max, std::optional<double> g,
               const std::string& out_path) {
    ordered_json j;
    j["calc"] = calc;
    if (calc == "z") {
        j["p"] = p;
        j["x"] = x;
        j["value"] = cpd::subgaussian_norm_quantile(p, x, g);
    } else if (calc == "zb") {
        cpd::QuadFormSpectrum spectrum{trace, trace_sq, lambda_max};
        j["trace"] = trace;
        j["trace_sq"] = trace_sq;
        j["lambda_max"] = lambda_max;
        j["x"] = x;
        j["value"] = cpd::quad_form_quantile(spectrum, x, g);
        j["simple_bound"] = cpd::quad_form_quantile_simple(spectrum, x);
    } else if (calc == "min-shift") {
        j["p"] = p;
        j["h"] = h;
        j["x"] = x;
        j["spread"] = spread;
        j["value"] = cpd::min_detectable_shift(p, h, x, spread);
    } else if (calc == "tp-var") {
        cpd::TpVarianceBound b = cpd::tp_variance_bound(p, h, x);
        j["p"] = p;
        j["h"] = h;
        j["x"] = x;
        j["variance_bound"] = b.variance_bound;
        j["critical_value_bound"] = b.critical_value_bound;
    } else {
        throw std::invalid_argument("unknown calculator: " + calc);
    }
    std::string text = j.dump(2);
    std::cout << text << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::invalid_argument("cannot write " + out_path);
        out << text << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sliding-window LRT change point detection with pattern convolution and "
                 "bootstrap-calibrated thresholds"};
    app.require_subcommand(1);
    // --h is a real option on some subcommands, so help must not claim -h.
    app.set_help_flag("--help", "print help");

    // Shared knobs loaded from --config first; explicit flags override.
    std::string config_path;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
    }
    json cfg = config_path.empty() ? json::object() : json();

    try {
        if (!config_path.empty()) cfg = load_json_file(config_path);

        // generate
        auto* gen = app.add_subcommand("generate", "sample a piecewise synthetic series");
        gen->set_help_flag("--help", "print help");
        std::string gen_out = cfg.value("out", std::string("."));
        std::string gen_format = cfg.value("format", std::string("csv"));
        std::optional<std::uint64_t> gen_seed;
        if (cfg.contains("seed")) gen_seed = cfg["seed"].get<std::uint64_t>();
        gen->add_option("--config", config_path, "JSON config with segments/transition");
        gen->add_option("--out", gen_out, "output directory");
        gen->add_option("--format", gen_format, "csv|json");
        gen->add_option("--seed", gen_seed, "RNG seed (mandatory)");

        // detect & calibrate share model/input options
        std::string input, in_format = "csv";
        ModelOptions mopts;
        cpd::DetectConfig dc;
        std::string pattern_name = cfg.value("pattern", std::string("triangle"));
        std::string method_name = cfg.value("method", std::string("weighted"));
        std::string mode_name = cfg.value("mode", std::string("per-scale"));
        std::optional<std::uint64_t> run_seed;
        std::string out_dir = cfg.value("out", std::string("."));
        bool emit_lrt = false;
        std::size_t cal_h = cfg.value("h", 40);
        std::size_t workers_flag = 0;

        if (!cfg.is_null() && cfg.is_object()) {
            maybe(cfg, "input", input);
            maybe(cfg, "format", in_format);
            maybe(cfg, "family", mopts.family);
            maybe(cfg, "link", mopts.link);
            maybe(cfg, "factors", mopts.factors_path);
            maybe(cfg, "scales", dc.scales);
            maybe(cfg, "plateau", dc.plateau);
            maybe(cfg, "alpha", dc.alpha);
            maybe(cfg, "replicates", dc.replicates);
            maybe(cfg, "min_separation", dc.min_separation);
            if (cfg.contains("seed")) run_seed = cfg["seed"].get<std::uint64_t>();
        }

        auto add_common = [&](CLI::App* sub) {
            sub->add_option("--config", config_path, "JSON config file (flags win)");
            sub->add_option("--input", input, "series file");
            sub->add_option("--format", in_format, "csv|json");
            sub->add_option("--family", mopts.family,
                            "gaussian-mean|gaussian-meanvar|poisson|glm");
            sub->add_option("--link", mopts.link, "glm link: quadratic|exp|logistic");
            sub->add_option("--factors", mopts.factors_path, "glm factor CSV");
            sub->add_option("--alpha", dc.alpha, "test level in (0,1)");
            sub->add_option("--replicates,-B", dc.replicates, "bootstrap replicates");
            sub->add_option("--method", method_name, "weighted|empirical");
            sub->add_option("--pattern", pattern_name, "triangle|trapezium|horn|indicator");
            sub->add_option("--plateau", dc.plateau, "trapezium plateau width");
            sub->add_option("--seed", run_seed, "master seed (mandatory)");
            sub->add_option("--workers", workers_flag, "max worker threads (0 = cores)");
            sub->add_option("--out", out_dir, "output directory");
        };

        auto* det = app.add_subcommand("detect", "multi-scale change point detection");
        det->set_help_flag("--help", "print help");
        add_common(det);
        det->add_option("--scales", dc.scales, "half-window sizes")->delimiter(',');
        det->add_option("--min-sep", dc.min_separation, "merge separation (0 = max scale)");
        det->add_option("--mode", mode_name, "per-scale|max-joint|bonferroni");
        det->add_flag("--emit-lrt", emit_lrt, "write per-scale LRT series CSVs");

        auto* cal = app.add_subcommand("calibrate", "bootstrap critical value for one scale");
        cal->set_help_flag("--help", "print help");
        add_common(cal);
        cal->add_option("--h", cal_h, "half-window size");

        auto* exp = app.add_subcommand("experiment", "run a simulation study");
        exp->set_help_flag("--help", "print help");
        std::string exp_type;
        exp->add_option("--config", config_path, "JSON experiment config")->required();
        exp->add_option("--type", exp_type, "override config type");
        exp->add_option("--out", out_dir, "output directory");
        std::optional<std::uint64_t> exp_seed;
        exp->add_option("--seed", exp_seed, "override config seed");
        exp->add_option("--workers", workers_flag, "max worker threads");

        auto* theory = app.add_subcommand("theory", "closed-form calculators");
        theory->set_help_flag("--help", "print help");
        std::string calc = "z";
        double tp = 1.0, th = 1.0, tx = 0.0, tspread = 0.0;
        double ttrace = 1.0, ttrace_sq = 1.0, tlambda = 1.0;
        std::optional<double> tg;
        std::string theory_out;
        theory->add_option("--calc", calc, "z|zb|min-shift|tp-var")->required();
        theory->add_option("--p", tp, "dimension");
        theory->add_option("--h", th, "half-window");
        theory->add_option("--x", tx, "exceedance exponent");
        theory->add_option("--spread", tspread, "quadratic approximation error");
        theory->add_option("--trace", ttrace, "tr(B)");
        theory->add_option("--trace-sq", ttrace_sq, "tr(B^2)");
        theory->add_option("--lambda-max", tlambda, "largest eigenvalue of B");
        theory->add_option("--g", tg, "sub-Gaussian range for the tail branch");
        theory->add_option("--out", theory_out, "also write the JSON here");

        auto* pat = app.add_subcommand("pattern", "export a pattern as CSV");
        pat->set_help_flag("--help", "print help");
        std::string pat_kind = "triangle";
        std::size_t pat_h = 10, pat_plateau = 0;
        bool pat_l1 = false;
        std::string pat_out = "pattern.csv";
        pat->add_option("--kind", pat_kind, "triangle|trapezium|horn|indicator");
        pat->add_option("--h", pat_h, "half-window");
        pat->add_option("--plateau", pat_plateau, "trapezium plateau width");
        pat->add_flag("--l1", pat_l1, "l1-normalize");
        pat->add_option("--out", pat_out, "output CSV path");

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }

        std::size_t workers = workers_from_env(workers_flag);

        if (gen->parsed()) return cmd_generate(cfg, gen_out, gen_seed, gen_format);
        if (det->parsed()) {
            require_seed(run_seed);
            dc.master_seed = *run_seed;
            dc.pattern = cpd::pattern_kind_from_name(pattern_name);
            dc.method = cpd::bootstrap_method_from_name(method_name);
            dc.mode = cpd::multi_scale_mode_from_name(mode_name);
            dc.workers = workers;
            if (input.empty()) throw std::invalid_argument("detect needs --input");
            return cmd_detect(input, in_format, mopts, dc, out_dir, emit_lrt);
        }
        if (cal->parsed()) {
            require_seed(run_seed);
            if (input.empty()) throw std::invalid_argument("calibrate needs --input");
            return cmd_calibrate(input, in_format, mopts, cal_h, pattern_name, dc.plateau, dc.alpha,
                                 dc.replicates, method_name, *run_seed, workers, out_dir);
        }
        if (exp->parsed()) {
            json exp_cfg = load_json_file(config_path);
            if (!exp_type.empty()) exp_cfg["type"] = exp_type;
            return cmd_experiment(exp_cfg, out_dir, exp_seed, workers);
        }
        if (theory->parsed()) {
            return cmd_theory(calc, tp, th, tx, tspread, ttrace, ttrace_sq, tlambda, tg, theory_out);
        }
        if (pat->parsed()) {
            cpd::Pattern pattern = cpd::make_pattern(
                cpd::pattern_kind_from_name(pat_kind), pat_h, pat_plateau,
                pat_l1 ? cpd::PatternNormalization::L1 : cpd::PatternNormalization::Raw);
            cpd::write_pattern_csv(pattern, pat_out);
            std::cout << "pattern -> " << pat_out << "\n";
            return 0;
        }
        return 2;
    } catch (const cpd::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
}
