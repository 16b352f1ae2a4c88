#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cpd/data.hpp"
#include "helpers.hpp"

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("load_series parses CSV with and without header") {
    auto path = write_temp("cpd_const.csv", "0.0\n0.0\n0.0\n");
    cpd::TimeSeries s = cpd::load_series(path, cpd::SeriesFormat::Csv);
    REQUIRE(s.n == 3);
    REQUIRE(s.p == 1);
    REQUIRE(s.values == std::vector<double>{0.0, 0.0, 0.0});

    auto with_header = write_temp("cpd_header.csv", "a,b\n1,2\n3,4\n");
    cpd::TimeSeries h = cpd::load_series(with_header, cpd::SeriesFormat::Csv);
    REQUIRE(h.n == 2);
    REQUIRE(h.p == 2);
    REQUIRE(h.values == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("load_series handles a 500x5 file") {
    std::string row = "0.1,0.2,0.3,0.4,0.5\n";
    std::string content;
    for (int i = 0; i < 500; ++i) content += row;
    auto path = write_temp("cpd_wide.csv", content);
    cpd::TimeSeries s = cpd::load_series(path, cpd::SeriesFormat::Csv);
    REQUIRE(s.n == 500);
    REQUIRE(s.p == 5);
}

TEST_CASE("series need at least two observations") {
    REQUIRE_THROWS_AS(cpd::TimeSeries::from_rows({{1.0}}), cpd::DimensionMismatchError);
    REQUIRE_THROWS_AS(cpd::TimeSeries::from_rows({}), cpd::DimensionMismatchError);
}

TEST_CASE("load_series rejects ragged rows") {
    auto path = write_temp("cpd_ragged.csv", "1,2\n1,2,3\n");
    REQUIRE_THROWS_AS(cpd::load_series(path, cpd::SeriesFormat::Csv), cpd::DimensionMismatchError);
}

TEST_CASE("load_series rejects malformed cells") {
    auto path = write_temp("cpd_bad.csv", "1,2\nx,4\n");
    REQUIRE_THROWS_AS(cpd::load_series(path, cpd::SeriesFormat::Csv), cpd::ParseError);
}

TEST_CASE("json round trip preserves values and order") {
    cpd::TimeSeries s = helpers::gaussian_series(20, 3, 11);
    auto dir = std::filesystem::temp_directory_path();
    auto jpath = (dir / "cpd_series.json").string();
    auto cpath = (dir / "cpd_series.csv").string();
    cpd::save_series(s, jpath, cpd::SeriesFormat::Json);
    cpd::save_series(s, cpath, cpd::SeriesFormat::Csv);
    cpd::TimeSeries j = cpd::load_series(jpath, cpd::SeriesFormat::Json);
    cpd::TimeSeries c = cpd::load_series(cpath, cpd::SeriesFormat::Csv);
    REQUIRE(j.values == s.values);
    REQUIRE(c.values == s.values);
}

TEST_CASE("generate_piecewise is deterministic with boundary bookkeeping") {
    std::vector<cpd::SegmentSpec> segs = {
        {250, cpd::SegmentFamily::GaussianMean, std::vector<double>(5, 0.0)},
        {250, cpd::SegmentFamily::GaussianMean, std::vector<double>(5, 0.25)},
    };
    cpd::GeneratedSeries a = cpd::generate_piecewise(segs, 77);
    cpd::GeneratedSeries b = cpd::generate_piecewise(segs, 77);
    REQUIRE(a.series.n == 500);
    REQUIRE(a.series.p == 5);
    REQUIRE(a.true_change_points == std::vector<std::size_t>{250});
    REQUIRE(a.series.values == b.series.values);

    cpd::GeneratedSeries c = cpd::generate_piecewise(segs, 78);
    REQUIRE(a.series.values != c.series.values);

    cpd::GeneratedSeries single =
        cpd::generate_piecewise({{10, cpd::SegmentFamily::Poisson, {1.0}}}, 5);
    REQUIRE(single.true_change_points.empty());
    REQUIRE(single.series.n == 10);
    for (double v : single.series.values) {
        REQUIRE(v >= 0.0);
        REQUIRE(v == std::floor(v));
    }
}

TEST_CASE("generate_piecewise rejects mixed dimensions") {
    REQUIRE_THROWS_AS(
        cpd::generate_piecewise({{5, cpd::SegmentFamily::GaussianMean, {0.0, 0.0}},
                                 {5, cpd::SegmentFamily::GaussianMean, {0.0}}},
                                1),
        cpd::DimensionMismatchError);
}

TEST_CASE("gaussian segment sample mean is tight for long segments") {
    cpd::GeneratedSeries g = cpd::generate_piecewise(
        {{20000, cpd::SegmentFamily::GaussianMean, {1.5, -2.0}}}, 123);
    for (std::size_t j = 0; j < 2; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < g.series.n; ++i) sum += g.series.values[i * 2 + j];
        double mean = sum / static_cast<double>(g.series.n);
        double target = j == 0 ? 1.5 : -2.0;
        REQUIRE(std::abs(mean - target) < 5.0 / std::sqrt(20000.0));
    }
}

TEST_CASE("abrupt transitions reduce to piecewise generation") {
    cpd::GeneratedSeries t =
        cpd::generate_transition(cpd::TransitionKind::AbruptMean, {0.0}, {1.0}, 0, 50, 50, 9);
    cpd::GeneratedSeries p = cpd::generate_piecewise(
        {{50, cpd::SegmentFamily::GaussianMean, {0.0}}, {50, cpd::SegmentFamily::GaussianMean, {1.0}}},
        9);
    REQUIRE(t.series.values == p.series.values);
    REQUIRE(t.true_change_points == p.true_change_points);

    REQUIRE_THROWS_AS(
        cpd::generate_transition(cpd::TransitionKind::AbruptMean, {0.0}, {1.0}, 3, 50, 50, 9),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        cpd::generate_transition(cpd::TransitionKind::SmoothMean, {0.0}, {1.0}, 0, 50, 50, 9),
        std::invalid_argument);
}

TEST_CASE("smooth transitions interpolate means linearly") {
    // Same seed, same layout: subtracting the zero-mean run isolates the
    // deterministic mean profile exactly.
    cpd::GeneratedSeries shifted =
        cpd::generate_transition(cpd::TransitionKind::SmoothMean, {0.0}, {1.0}, 10, 5, 5, 31);
    cpd::GeneratedSeries flat =
        cpd::generate_transition(cpd::TransitionKind::SmoothMean, {0.0}, {0.0}, 10, 5, 5, 31);
    REQUIRE(shifted.series.n == 5 + 9 + 5);
    // Offsets 0..10 from the last pre point carry means 0.0, 0.1, ..., 1.0.
    std::size_t last_pre = 4;
    for (int j = 0; j <= 10; ++j) {
        double mean = shifted.series.values[last_pre + j] - flat.series.values[last_pre + j];
        REQUIRE(mean == Catch::Approx(0.1 * j).margin(1e-12));
    }
    REQUIRE(shifted.true_change_points == std::vector<std::size_t>{5 + 4});
}

TEST_CASE("abrupt variance switch changes the second moment only") {
    cpd::GeneratedSeries g = cpd::generate_transition(cpd::TransitionKind::AbruptVariance,
                                                      {0.0, 1.0}, {0.0, 4.0}, 0, 20000, 20000, 17);
    auto sample_var = [&](std::size_t begin, std::size_t end) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            s += g.series.values[i];
            s2 += g.series.values[i] * g.series.values[i];
        }
        double m = static_cast<double>(end - begin);
        double mean = s / m;
        return s2 / m - mean * mean;
    };
    REQUIRE(sample_var(0, 20000) == Catch::Approx(1.0).margin(0.1));
    REQUIRE(sample_var(20000, 40000) == Catch::Approx(4.0).margin(0.4));
}

TEST_CASE("metadata file captures the generating run") {
    cpd::GeneratedSeries g = cpd::generate_piecewise(
        {{6, cpd::SegmentFamily::GaussianMean, {0.0}}, {6, cpd::SegmentFamily::GaussianMean, {1.0}}},
        21);
    auto path = (std::filesystem::temp_directory_path() / "cpd_meta.json").string();
    cpd::save_metadata(g, path);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(text.find("\"n\": 12") != std::string::npos);
    REQUIRE(text.find("\"seed\": 21") != std::string::npos);
    REQUIRE(text.find("true_change_points") != std::string::npos);
}
