#include "cpd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "cpd/types.hpp"

namespace cpd {

namespace {

double plogp(double count, double n) {
    if (count <= 0.0) return 0.0;
    double q = count / n;
    return -q * std::log(q);
}

}  // namespace

void Partition::validate() const {
    if (n < 1) throw std::invalid_argument("partition length must be >= 1");
    std::size_t prev = 0;
    for (std::size_t b : boundaries) {
        if (b < 1 || b > n - 1) throw std::invalid_argument("boundary out of (0, n)");
        if (b <= prev) throw std::invalid_argument("boundaries must be strictly increasing");
        prev = b;
    }
}

std::vector<std::size_t> Partition::segment_lengths() const {
    std::vector<std::size_t> lengths;
    std::size_t prev = 0;
    for (std::size_t b : boundaries) {
        lengths.push_back(b - prev);
        prev = b;
    }
    lengths.push_back(n - prev);
    return lengths;
}

double entropy(const Partition& partition) {
    partition.validate();
    double s = 0.0;
    for (std::size_t len : partition.segment_lengths()) {
        s += plogp(static_cast<double>(len), static_cast<double>(partition.n));
    }
    return s;
}

double nmi(const Partition& x, const Partition& y) {
    x.validate();
    y.validate();
    if (x.n != y.n) throw DimensionMismatchError("partitions cover different lengths");

    double hx = entropy(x);
    double hy = entropy(y);
    if (hx + hy == 0.0) return 1.0;  // both trivial: identical partitions

    // The overlap of one x-segment and one y-segment is the interval between
    // consecutive merged cut points, so joint entropy comes from the merge.
    std::vector<std::size_t> cuts;
    cuts.reserve(x.boundaries.size() + y.boundaries.size() + 2);
    cuts.push_back(0);
    cuts.insert(cuts.end(), x.boundaries.begin(), x.boundaries.end());
    cuts.insert(cuts.end(), y.boundaries.begin(), y.boundaries.end());
    cuts.push_back(x.n);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double hxy = 0.0;
    for (std::size_t i = 1; i < cuts.size(); ++i) {
        hxy += plogp(static_cast<double>(cuts[i] - cuts[i - 1]), static_cast<double>(x.n));
    }
    return 2.0 * (hx + hy - hxy) / (hx + hy);
}

LocalizationStats localization_stats(const std::vector<LocalizationRun>& runs) {
    if (runs.empty()) throw std::invalid_argument("no runs");
    LocalizationStats s;
    std::size_t detected = 0;
    double err = 0.0;
    for (const auto& r : runs) {
        if (r.detected) {
            ++detected;
            err += std::abs(r.tau_hat - r.tau_star);
        }
    }
    s.power = static_cast<double>(detected) / static_cast<double>(runs.size());
    s.mean_abs_error = detected == 0 ? std::numeric_limits<double>::quiet_NaN()
                                     : err / static_cast<double>(detected);
    return s;
}

double convergence_slope(const std::vector<std::pair<double, double>>& errors) {
    std::vector<double> xs, ys;
    for (const auto& [h, err] : errors) {
        if (!(h > 0.0)) throw std::invalid_argument("h values must be positive");
        if (!(err > 0.0)) throw std::invalid_argument("errors must be positive (floor zeros first)");
        xs.push_back(std::log(h));
        ys.push_back(std::log(err));
    }
    std::sort(xs.begin(), xs.end());
    if (std::unique(xs.begin(), xs.end()) - xs.begin() < 3) {
        throw std::invalid_argument("need at least 3 distinct h values");
    }
    xs.clear();
    for (const auto& [h, err] : errors) xs.push_back(std::log(h));

    double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return -slope;
}

Partition load_partition(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    Partition p;
    if (!j.is_object() || !j.contains("n") || !j.contains("boundaries")) {
        throw ParseError(path + ": expected {\"n\": ..., \"boundaries\": [...]}");
    }
    p.n = j["n"].get<std::size_t>();
    p.boundaries = j["boundaries"].get<std::vector<std::size_t>>();
    p.validate();
    return p;
}

}  // namespace cpd
