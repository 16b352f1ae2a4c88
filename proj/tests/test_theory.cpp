#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cpd/rng.hpp"
#include "cpd/theory.hpp"

using Catch::Approx;

TEST_CASE("sub-Gaussian norm quantile formula") {
    REQUIRE(cpd::subgaussian_norm_quantile(4.0, 0.0) == 2.0);
    REQUIRE(cpd::subgaussian_norm_quantile(1.0, 2.0) ==
            Approx(std::sqrt(1.0 + 2.0 * std::sqrt(2.0) + 4.0)).margin(1e-12));
    REQUIRE(cpd::subgaussian_norm_quantile(1.0, 2.0) == Approx(2.7979).margin(1e-4));

    // Monotone in both arguments.
    double prev = 0.0;
    for (double x : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        double z = cpd::subgaussian_norm_quantile(3.0, x);
        REQUIRE(z >= prev);
        prev = z;
    }
    prev = 0.0;
    for (double p : {1.0, 2.0, 5.0, 10.0}) {
        double z = cpd::subgaussian_norm_quantile(p, 1.0);
        REQUIRE(z >= prev);
        prev = z;
    }

    // The tail branch beyond x_c = g^2/4 is a linear upper envelope; under a
    // valid range (0.3 g >= sqrt(p)) it dominates the main branch at x_c.
    double g = 4.0, xc = 4.0;
    double below = cpd::subgaussian_norm_quantile(1.0, xc, g);
    double above = cpd::subgaussian_norm_quantile(1.0, xc + 1e-9, g);
    REQUIRE(above >= below);
    REQUIRE(cpd::subgaussian_norm_quantile(1.0, 5.0, g) ==
            Approx(g + 2.0 * (5.0 - xc) / g).margin(1e-12));
}

TEST_CASE("quadratic form quantile and the identity reduction") {
    cpd::QuadFormSpectrum s{10.0, 4.0, 1.0};
    REQUIRE(cpd::quad_form_quantile(s, 1.0) == 4.0);
    REQUIRE(cpd::quad_form_quantile_simple(s, 1.0) ==
            Approx(std::sqrt(10.0) + std::sqrt(2.0)).margin(1e-12));

    for (double p : {2.0, 5.0, 10.0}) {
        for (double x : {0.0, 0.7, 1.0, 2.0, 3.5}) {
            cpd::QuadFormSpectrum identity{p, p, 1.0};
            REQUIRE(cpd::quad_form_quantile(identity, x) ==
                    cpd::subgaussian_norm_quantile(p, x));  // exact
        }
    }

    cpd::QuadFormSpectrum bad{1.0, 5.0, 1.0};
    REQUIRE_THROWS_AS(cpd::quad_form_quantile(bad, 1.0), std::invalid_argument);
}

TEST_CASE("chi-square exceedance of z(B,x) stays under e^{-x}") {
    cpd::Rng rng(1234);
    const int draws = 100000;
    const double p = 5.0;
    cpd::QuadFormSpectrum identity{p, p, 1.0};
    for (double x : {1.0, 2.0, 3.0}) {
        double z2 = cpd::quad_form_quantile(identity, x);
        z2 *= z2;
        int exceed = 0;
        for (int i = 0; i < draws; ++i) {
            double q = 0.0;
            for (int j = 0; j < 5; ++j) {
                double v = rng.normal();
                q += v * v;
            }
            if (q > z2) ++exceed;
        }
        double rate = static_cast<double>(exceed) / draws;
        REQUIRE(rate <= std::exp(-x) + 0.005);
    }
}

TEST_CASE("norm quantile coverage for standard Gaussian vectors") {
    for (double p : {2.0, 5.0, 10.0}) {
        for (double x : {1.0, 2.0}) {
            cpd::Rng rng(static_cast<std::uint64_t>(1000 * p + x));
            const int draws = 100000;
            double z = cpd::subgaussian_norm_quantile(p, x);
            int exceed = 0;
            for (int i = 0; i < draws; ++i) {
                double q = 0.0;
                for (int j = 0; j < static_cast<int>(p); ++j) {
                    double v = rng.normal();
                    q += v * v;
                }
                if (std::sqrt(q) > z) ++exceed;
            }
            REQUIRE(static_cast<double>(exceed) / draws <= 2.0 * std::exp(-x) + 0.01);
        }
    }
}

TEST_CASE("minimal detectable shift") {
    REQUIRE(cpd::min_detectable_shift(1.0, 1.0, 0.0, 0.0) ==
            Approx(5.0 * std::pow(std::log(2.0), 0.25)).margin(1e-12));
    REQUIRE(cpd::min_detectable_shift(1.0, 1.0, 0.0, 0.0) == Approx(4.562).margin(1e-3));
    REQUIRE(cpd::min_detectable_shift(1.0, 5.0, 1.0, 0.0) == Approx(11.113).margin(1e-3));

    // Additivity in the spread term.
    double base = cpd::min_detectable_shift(3.0, 10.0, 1.0, 0.5);
    REQUIRE(cpd::min_detectable_shift(3.0, 10.0, 1.0, 1.5) == Approx(base + 21.0).margin(1e-12));

    // Monotone in every argument.
    REQUIRE(cpd::min_detectable_shift(2.0, 10.0, 1.0, 0.0) >
            cpd::min_detectable_shift(1.0, 10.0, 1.0, 0.0));
    REQUIRE(cpd::min_detectable_shift(1.0, 20.0, 1.0, 0.0) >
            cpd::min_detectable_shift(1.0, 10.0, 1.0, 0.0));
    REQUIRE(cpd::min_detectable_shift(1.0, 10.0, 2.0, 0.0) >
            cpd::min_detectable_shift(1.0, 10.0, 1.0, 0.0));
}

TEST_CASE("TP variance bound formula, scaling and simulation sanity") {
    cpd::TpVarianceBound b = cpd::tp_variance_bound(1.0, 1.0, 0.0);
    REQUIRE(b.variance_bound == Approx((2.0 / 3.0) * std::sqrt(std::log(2.0))).margin(1e-12));
    REQUIRE(b.critical_value_bound ==
            Approx(std::sqrt(2.0 / 3.0) * std::pow(std::log(2.0), 0.25)).margin(1e-12));

    // Doubling h multiplies the variance bound by 4 sqrt((x+log 4h)/(x+log 2h)).
    double x = 0.7, h = 12.0, p = 4.0;
    double ratio = cpd::tp_variance_bound(p, 2.0 * h, x).variance_bound /
                   cpd::tp_variance_bound(p, h, x).variance_bound;
    double expected = 4.0 * std::sqrt((x + std::log(4.0 * h)) / (x + std::log(2.0 * h)));
    REQUIRE(ratio == Approx(expected).margin(1e-12));

    // Simulated variance of sum_t P(t) |xi_lr(t)| with standard Gaussian
    // score vectors stays below the bound.
    const std::size_t hh = 20, pp = 5;
    cpd::Rng rng(555);
    const int reps = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        double stat = 0.0;
        for (std::size_t t = 0; t < 2 * hh; ++t) {
            double offset = static_cast<double>(t) - static_cast<double>(hh);
            double weight = 0.5 - std::abs(offset) / static_cast<double>(hh);
            double norm2 = 0.0;
            for (std::size_t j = 0; j < pp; ++j) {
                double v = rng.normal();
                norm2 += v * v;
            }
            stat += weight * std::sqrt(norm2);
        }
        sum += stat;
        sum2 += stat * stat;
    }
    double mean = sum / reps;
    double var = sum2 / reps - mean * mean;
    REQUIRE(var < cpd::tp_variance_bound(pp, hh, 0.0).variance_bound);
}

TEST_CASE("theory validators reject bad arguments") {
    REQUIRE_THROWS_AS(cpd::subgaussian_norm_quantile(0.5, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(cpd::subgaussian_norm_quantile(1.0, -1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(cpd::min_detectable_shift(1.0, 0.5, 1.0, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(cpd::min_detectable_shift(1.0, 1.0, 1.0, -0.1), std::invalid_argument);
}
