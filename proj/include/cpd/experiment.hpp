#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpd/calibrate.hpp"
#include "cpd/detect.hpp"
#include "cpd/metrics.hpp"

namespace cpd {

// Mean-shift localization and power, triangle vs indicator on paired data.
struct LocalizationPowerConfig {
    std::size_t n = 500;
    std::size_t p = 5;
    std::size_t tau_star = 250;
    std::size_t h = 60;
    std::vector<double> shifts = {0.1, 0.25, 0.5, 1.0};
    std::size_t runs = 300;
    double alpha = 0.1;
    std::size_t replicates = 300;
    BootstrapMethod method = BootstrapMethod::Weighted;
    std::uint64_t master_seed = 1;
    std::size_t workers = 0;
};

struct LocalizationRunRow {
    double shift = 0.0;
    std::size_t run = 0;
    std::size_t tau_triangle = 0;
    double err_triangle = 0.0;
    bool detected_triangle = false;
    std::size_t tau_indicator = 0;
    double err_indicator = 0.0;
    bool detected_indicator = false;
};

struct LocalizationSummaryRow {
    double shift = 0.0;
    std::string pattern;
    double mean_abs_error = 0.0;
    double power = 0.0;
    std::size_t runs = 0;
};

struct LocalizationPowerResult {
    std::vector<LocalizationRunRow> rows;
    std::vector<LocalizationSummaryRow> summary;
};

LocalizationPowerResult run_localization_power(const LocalizationPowerConfig& config);
void write_localization_power(const LocalizationPowerResult& result, const std::string& out_dir);

// Bootstrap level error against window scale; fits error ~ c / h^beta.
struct ConvergenceConfig {
    std::size_t p = 30;
    std::vector<std::size_t> scales = {10, 20, 30, 40, 50};
    std::size_t mc_runs = 300;
    std::size_t replicates = 300;
    double alpha = 0.1;
    BootstrapMethod method = BootstrapMethod::Weighted;
    bool with_change = false;  // change point at 3h of the 6h-long series
    double shift = 0.3;
    std::uint64_t master_seed = 1;
    std::size_t workers = 0;
};

struct ConvergenceRow {
    std::size_t h = 0;
    double level = 0.0;      // empirical P(max TP > z)
    double abs_error = 0.0;  // |level - alpha|, floored at 1/(2 mc_runs)
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    double beta = 0.0;
};

ConvergenceResult run_bootstrap_convergence(const ConvergenceConfig& config);
void write_bootstrap_convergence(const ConvergenceResult& result, const std::string& out_dir);

// NMI of detected vs true partitions over a shift grid; sequences cycle
// through 0, 1 and 2 change points.
struct NmiSweepConfig {
    std::string data_family = "gaussian-meanvar";  // or "poisson" (misspecified fit)
    std::size_t n = 340;
    std::vector<double> deltas = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    std::size_t sequences_per_delta = 10;
    double base_mean = 0.0;
    double base_var = 1.0;
    double base_rate = 5.0;
    std::size_t h = 30;
    PatternKind pattern = PatternKind::Triangle;
    double alpha = 0.1;
    std::size_t replicates = 200;
    // Empirical resampling by default: with two-parameter normal fits the
    // N(1,1)-weighted likelihood is unbounded often enough at these window
    // sizes that the rerun budget trips.
    BootstrapMethod method = BootstrapMethod::Empirical;
    std::uint64_t master_seed = 1;
    std::size_t workers = 0;
};

struct NmiRow {
    double delta = 0.0;
    std::size_t sequence = 0;
    std::size_t true_change_points = 0;
    std::size_t predicted_change_points = 0;
    double nmi = 0.0;
};

struct NmiSweepResult {
    std::vector<NmiRow> rows;
};

NmiSweepResult run_nmi_sweep(const NmiSweepConfig& config);
void write_nmi_sweep(const NmiSweepResult& result, const std::string& out_dir);

// Cross-method scoring of external boundary-list partitions.
struct NmiScoreRow {
    std::string method;
    double nmi = 0.0;
};

std::vector<NmiScoreRow> score_partitions(const Partition& reference,
                                          const std::vector<std::pair<std::string, Partition>>& methods);

}  // namespace cpd
