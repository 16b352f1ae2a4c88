#include "cpd/data.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cpd/rng.hpp"

namespace cpd {

namespace {

bool looks_numeric(const std::string& token) {
    char* end = nullptr;
    std::string t = token;
    // Trim surrounding whitespace before probing.
    std::size_t a = t.find_first_not_of(" \t\r");
    if (a == std::string::npos) return false;
    std::size_t b = t.find_last_not_of(" \t\r");
    t = t.substr(a, b - a + 1);
    std::strtod(t.c_str(), &end);
    return end != t.c_str() && *end == '\0';
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& token, std::size_t line_no) {
    char* end = nullptr;
    std::size_t a = token.find_first_not_of(" \t\r");
    if (a == std::string::npos) {
        throw ParseError("line " + std::to_string(line_no) + ": empty cell");
    }
    std::size_t b = token.find_last_not_of(" \t\r");
    std::string t = token.substr(a, b - a + 1);
    double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0') {
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + t + "'");
    }
    return v;
}

TimeSeries load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    TimeSeries s;
    std::string line;
    std::size_t line_no = 0;
    bool first_content_line = true;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (first_content_line) {
            first_content_line = false;
            bool all_numeric = true;
            for (const auto& c : cells) all_numeric = all_numeric && looks_numeric(c);
            if (!all_numeric) continue;  // optional header
        }
        row.clear();
        for (const auto& c : cells) row.push_back(parse_cell(c, line_no));
        if (s.n > 0 && row.size() != s.p) {
            throw DimensionMismatchError("line " + std::to_string(line_no) + " has " +
                                         std::to_string(row.size()) + " columns, expected " +
                                         std::to_string(s.p));
        }
        s.append_row(row);
    }
    s.validate();
    return s;
}

TimeSeries load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!j.is_array()) throw ParseError(path + ": expected an array of arrays");
    TimeSeries s;
    std::vector<double> row;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& jr = j[i];
        if (!jr.is_array()) throw ParseError(path + ": row " + std::to_string(i) + " is not an array");
        row.clear();
        for (const auto& v : jr) {
            if (!v.is_number()) throw ParseError(path + ": non-numeric entry in row " + std::to_string(i));
            row.push_back(v.get<double>());
        }
        if (s.n > 0 && row.size() != s.p) {
            throw DimensionMismatchError(path + ": row " + std::to_string(i) + " has " +
                                         std::to_string(row.size()) + " columns, expected " +
                                         std::to_string(s.p));
        }
        s.append_row(row);
    }
    s.validate();
    return s;
}

void sample_segment(const SegmentSpec& seg, Rng& rng, TimeSeries& out) {
    std::vector<double> row(seg.dim());
    for (std::size_t t = 0; t < seg.length; ++t) {
        switch (seg.family) {
            case SegmentFamily::GaussianMean:
                for (std::size_t j = 0; j < row.size(); ++j) row[j] = seg.params[j] + rng.normal();
                break;
            case SegmentFamily::GaussianMeanVar:
                row[0] = rng.normal(seg.params[0], std::sqrt(seg.params[1]));
                break;
            case SegmentFamily::Poisson:
                row[0] = static_cast<double>(rng.poisson(seg.params[0]));
                break;
        }
        out.append_row(row);
    }
}

}  // namespace

void SegmentSpec::validate() const {
    if (length < 1) throw std::invalid_argument("segment length must be >= 1");
    switch (family) {
        case SegmentFamily::GaussianMean:
            if (params.empty()) throw std::invalid_argument("gaussian-mean segment needs a mean vector");
            break;
        case SegmentFamily::GaussianMeanVar:
            if (params.size() != 2) throw std::invalid_argument("gaussian-meanvar segment needs {mean, variance}");
            if (params[1] <= 0.0) throw std::invalid_argument("segment variance must be > 0");
            break;
        case SegmentFamily::Poisson:
            if (params.size() != 1) throw std::invalid_argument("poisson segment needs {rate}");
            if (params[0] <= 0.0) throw std::invalid_argument("segment rate must be > 0");
            break;
    }
}

std::size_t SegmentSpec::dim() const {
    return family == SegmentFamily::GaussianMean ? params.size() : 1;
}

TimeSeries load_series(const std::string& path, SeriesFormat format) {
    return format == SeriesFormat::Csv ? load_csv(path) : load_json(path);
}

void save_series(const TimeSeries& series, const std::string& path, SeriesFormat format) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    if (format == SeriesFormat::Csv) {
        char buf[32];
        for (std::size_t i = 0; i < series.n; ++i) {
            for (std::size_t j = 0; j < series.p; ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", series.values[i * series.p + j]);
                out << (j ? "," : "") << buf;
            }
            out << '\n';
        }
    } else {
        nlohmann::json j = nlohmann::json::array();
        for (std::size_t i = 0; i < series.n; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t k = 0; k < series.p; ++k) row.push_back(series.values[i * series.p + k]);
            j.push_back(row);
        }
        out << j.dump(2) << '\n';
    }
}

void save_metadata(const GeneratedSeries& g, const std::string& path) {
    nlohmann::ordered_json j;
    j["n"] = g.series.n;
    j["p"] = g.series.p;
    j["true_change_points"] = g.true_change_points;
    j["seed"] = g.seed;
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << j.dump(2) << '\n';
}

GeneratedSeries generate_piecewise(const std::vector<SegmentSpec>& segments, std::uint64_t seed) {
    if (segments.empty()) throw std::invalid_argument("at least one segment is required");
    std::size_t dim = segments.front().dim();
    for (const auto& seg : segments) {
        seg.validate();
        if (seg.dim() != dim) {
            throw DimensionMismatchError("segments disagree on dimension");
        }
    }
    GeneratedSeries g;
    g.seed = seed;
    Rng rng(seed);
    std::size_t cum = 0;
    for (std::size_t k = 0; k < segments.size(); ++k) {
        sample_segment(segments[k], rng, g.series);
        cum += segments[k].length;
        if (k + 1 < segments.size()) g.true_change_points.push_back(cum);
    }
    g.series.validate();
    return g;
}

GeneratedSeries generate_transition(TransitionKind kind, const std::vector<double>& pre_params,
                                    const std::vector<double>& post_params, std::size_t width,
                                    std::size_t pre_length, std::size_t post_length,
                                    std::uint64_t seed) {
    if (pre_params.size() != post_params.size()) {
        throw DimensionMismatchError("pre/post parameter dimensions differ");
    }
    switch (kind) {
        case TransitionKind::AbruptMean: {
            if (width != 0) throw std::invalid_argument("abrupt-mean requires width 0");
            return generate_piecewise({{pre_length, SegmentFamily::GaussianMean, pre_params},
                                       {post_length, SegmentFamily::GaussianMean, post_params}},
                                      seed);
        }
        case TransitionKind::AbruptVariance: {
            if (width != 0) throw std::invalid_argument("abrupt-variance requires width 0");
            return generate_piecewise({{pre_length, SegmentFamily::GaussianMeanVar, pre_params},
                                       {post_length, SegmentFamily::GaussianMeanVar, post_params}},
                                      seed);
        }
        case TransitionKind::SmoothMean: {
            if (width < 1) throw std::invalid_argument("smooth-mean requires width >= 1");
            GeneratedSeries g;
            g.seed = seed;
            Rng rng(seed);
            std::size_t dim = pre_params.size();
            std::vector<double> row(dim);
            auto emit = [&](const std::vector<double>& mean) {
                for (std::size_t j = 0; j < dim; ++j) row[j] = mean[j] + rng.normal();
                g.series.append_row(row);
            };
            for (std::size_t t = 0; t < pre_length; ++t) emit(pre_params);
            std::vector<double> mean(dim);
            for (std::size_t j = 1; j < width; ++j) {
                double f = static_cast<double>(j) / static_cast<double>(width);
                for (std::size_t k = 0; k < dim; ++k) {
                    mean[k] = pre_params[k] + f * (post_params[k] - pre_params[k]);
                }
                emit(mean);
            }
            for (std::size_t t = 0; t < post_length; ++t) emit(post_params);
            g.true_change_points.push_back(pre_length + (width - 1) / 2);
            g.series.validate();
            return g;
        }
    }
    throw std::invalid_argument("unknown transition kind");
}

SegmentFamily segment_family_from_name(const std::string& name) {
    if (name == "gaussian-mean") return SegmentFamily::GaussianMean;
    if (name == "gaussian-meanvar") return SegmentFamily::GaussianMeanVar;
    if (name == "poisson") return SegmentFamily::Poisson;
    throw std::invalid_argument("unknown segment family: " + name);
}

std::string segment_family_name(SegmentFamily family) {
    switch (family) {
        case SegmentFamily::GaussianMean: return "gaussian-mean";
        case SegmentFamily::GaussianMeanVar: return "gaussian-meanvar";
        case SegmentFamily::Poisson: return "poisson";
    }
    return "?";
}

}  // namespace cpd
