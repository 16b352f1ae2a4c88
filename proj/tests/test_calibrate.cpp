#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "cpd/calibrate.hpp"
#include "cpd/rng.hpp"
#include "helpers.hpp"

using Catch::Approx;

TEST_CASE("upper_quantile rank arithmetic") {
    std::vector<double> ascending(100);
    std::iota(ascending.begin(), ascending.end(), 1.0);  // 1..100

    REQUIRE(cpd::upper_quantile(ascending, 0.5) == 50.0);
    REQUIRE(cpd::upper_quantile(ascending, 0.1) == 90.0);

    std::vector<double> constant(20, 7.0);
    REQUIRE(cpd::upper_quantile(constant, 0.1) == 7.0);

    auto [lo, hi] = cpd::quantile_bracket(ascending, 0.1, 0.05);
    REQUIRE(lo == 85.0);
    REQUIRE(hi == 95.0);

    auto [same_lo, same_hi] = cpd::quantile_bracket(ascending, 0.1, 0.0);
    REQUIRE(same_lo == same_hi);
    REQUIRE(same_lo == cpd::upper_quantile(ascending, 0.1));

    // Widening delta never narrows the bracket.
    auto [wlo, whi] = cpd::quantile_bracket(ascending, 0.1, 0.08);
    REQUIRE(wlo <= lo);
    REQUIRE(whi >= hi);

    REQUIRE_THROWS_AS(cpd::quantile_bracket(ascending, 0.1, 0.2), std::invalid_argument);
}

TEST_CASE("quantile monotonicity in alpha") {
    cpd::Rng rng(123);
    std::vector<double> maxima(333);
    for (auto& v : maxima) v = rng.uniform01() * 10.0;
    double prev = 1e300;
    for (double alpha : {0.01, 0.05, 0.1, 0.2, 0.5, 0.9}) {
        double z = cpd::upper_quantile(maxima, alpha);
        REQUIRE(z <= prev);
        prev = z;
    }
}

TEST_CASE("calibrate is deterministic and keeps B maxima") {
    cpd::TimeSeries s = helpers::gaussian_series(120, 2, 606);
    cpd::Model g = cpd::Model::gaussian_mean(2);
    cpd::Pattern tri = cpd::make_pattern(cpd::PatternKind::Triangle, 20, 0,
                                         cpd::PatternNormalization::L1);
    cpd::CalibrateOptions serial;
    serial.workers = 1;
    cpd::CalibrateOptions parallel;
    parallel.workers = 4;

    cpd::CalibrationResult a = cpd::calibrate(g, s, 20, tri, 0.1, 60, cpd::BootstrapMethod::Weighted,
                                              42, serial);
    cpd::CalibrationResult b = cpd::calibrate(g, s, 20, tri, 0.1, 60, cpd::BootstrapMethod::Weighted,
                                              42, parallel);
    REQUIRE(a.replicate_maxima.size() == 60);
    REQUIRE(a.replicate_maxima == b.replicate_maxima);  // schedule independent
    REQUIRE(a.critical_value == b.critical_value);
    REQUIRE(a.critical_value == cpd::upper_quantile(a.replicate_maxima, 0.1));

    cpd::CalibrationResult c = cpd::calibrate(g, s, 20, tri, 0.1, 60, cpd::BootstrapMethod::Weighted,
                                              43, serial);
    REQUIRE(a.replicate_maxima != c.replicate_maxima);

    cpd::CalibrationResult e = cpd::calibrate(g, s, 20, tri, 0.1, 60,
                                              cpd::BootstrapMethod::Empirical, 42, serial);
    REQUIRE(e.replicate_maxima.size() == 60);
    REQUIRE(e.replicate_maxima != a.replicate_maxima);

    REQUIRE_THROWS_AS(cpd::calibrate(g, s, 20, tri, 0.1, 10, cpd::BootstrapMethod::Weighted, 1),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(cpd::calibrate(g, s, 40, cpd::make_pattern(cpd::PatternKind::Triangle, 40, 0,
                                                                 cpd::PatternNormalization::L1),
                                     0.1, 60, cpd::BootstrapMethod::Weighted, 1),
                      std::invalid_argument);  // n < 4h
}

TEST_CASE("joint calibration: single scale reduces to calibrate exactly") {
    cpd::TimeSeries s = helpers::gaussian_series(160, 1, 1212);
    cpd::Model g = cpd::Model::gaussian_mean(1);
    cpd::Pattern tri = cpd::make_pattern(cpd::PatternKind::Triangle, 25, 0,
                                         cpd::PatternNormalization::L1);
    cpd::CalibrationResult direct =
        cpd::calibrate(g, s, 25, tri, 0.1, 50, cpd::BootstrapMethod::Weighted, 7);
    cpd::JointCalibration joint = cpd::joint_calibrate(g, s, {25}, cpd::PatternKind::Triangle, 0,
                                                       0.1, 50, cpd::BootstrapMethod::Weighted, 7);
    REQUIRE(joint.per_scale.size() == 1);
    REQUIRE(joint.per_scale[0].replicate_maxima == direct.replicate_maxima);
    REQUIRE(joint.per_scale[0].critical_value == direct.critical_value);
}

TEST_CASE("max-joint threshold dominates per-scale thresholds") {
    cpd::TimeSeries s = helpers::gaussian_series(200, 1, 989);
    cpd::Model g = cpd::Model::gaussian_mean(1);
    cpd::JointCalibration jc =
        cpd::joint_calibrate(g, s, {20, 35}, cpd::PatternKind::Triangle, 0, 0.1, 80,
                             cpd::BootstrapMethod::Weighted, 11, cpd::MultiScaleMode::MaxJoint);
    REQUIRE(jc.family_threshold >= jc.per_scale[0].critical_value);
    REQUIRE(jc.family_threshold >= jc.per_scale[1].critical_value);
}

TEST_CASE("Bonferroni rejects no more often than max-joint on noise") {
    cpd::Model g = cpd::Model::gaussian_mean(1);
    const std::vector<std::size_t> scales{10, 20};
    const std::size_t B = 60;
    const double alpha = 0.2;
    int reject_bonf = 0, reject_mj = 0;
    const int mc = 500;
    for (int run = 0; run < mc; ++run) {
        cpd::TimeSeries s = helpers::gaussian_series(80, 1, cpd::derive_seed(31000, run));
        cpd::JointCalibration mj =
            cpd::joint_calibrate(g, s, scales, cpd::PatternKind::Triangle, 0, alpha, B,
                                 cpd::BootstrapMethod::Weighted, cpd::derive_seed(32000, run),
                                 cpd::MultiScaleMode::MaxJoint);
        cpd::JointCalibration bonf =
            cpd::joint_calibrate(g, s, scales, cpd::PatternKind::Triangle, 0, alpha, B,
                                 cpd::BootstrapMethod::Weighted, cpd::derive_seed(32000, run),
                                 cpd::MultiScaleMode::Bonferroni);
        bool any_mj = false, any_bonf = false;
        for (std::size_t k = 0; k < scales.size(); ++k) {
            cpd::Pattern tri = cpd::make_pattern(cpd::PatternKind::Triangle, scales[k], 0,
                                                 cpd::PatternNormalization::L1);
            double observed = cpd::max_tp(cpd::lrt_series(g, s, scales[k]), tri).value;
            any_mj = any_mj || observed > mj.family_threshold;
            any_bonf = any_bonf || observed > bonf.adjusted_thresholds[k];
        }
        reject_mj += any_mj ? 1 : 0;
        reject_bonf += any_bonf ? 1 : 0;
    }
    INFO("bonferroni " << reject_bonf << " vs max-joint " << reject_mj << " out of " << mc);
    REQUIRE(reject_bonf <= reject_mj);
}

TEST_CASE("replicate failures rerun under fresh seeds, pathological rates abort") {
    cpd::Model po = cpd::Model::poisson();

    // h=12 windows hit negative weight mass occasionally: reruns happen but
    // stay under the abort threshold.
    cpd::TimeSeries s = helpers::poisson_series(72, 5.0, 2718);
    cpd::Pattern tri12 = cpd::make_pattern(cpd::PatternKind::Triangle, 12, 0,
                                           cpd::PatternNormalization::L1);
    cpd::CalibrateOptions serial;
    serial.workers = 1;
    cpd::CalibrationResult r = cpd::calibrate(po, s, 12, tri12, 0.1, 200,
                                              cpd::BootstrapMethod::Weighted, 999, serial);
    REQUIRE(r.replicate_maxima.size() == 200);
    REQUIRE(r.failed_replicates > 0);
    cpd::CalibrationResult again = cpd::calibrate(po, s, 12, tri12, 0.1, 200,
                                                  cpd::BootstrapMethod::Weighted, 999, serial);
    REQUIRE(r.replicate_maxima == again.replicate_maxima);

    // h=2 windows fail so often that the 20% rerun budget trips.
    cpd::TimeSeries tiny = helpers::poisson_series(16, 5.0, 2719);
    cpd::Pattern tri2 = cpd::make_pattern(cpd::PatternKind::Triangle, 2, 0,
                                          cpd::PatternNormalization::L1);
    REQUIRE_THROWS_AS(cpd::calibrate(po, tiny, 2, tri2, 0.1, 100, cpd::BootstrapMethod::Weighted,
                                     999, serial),
                      std::runtime_error);
}
