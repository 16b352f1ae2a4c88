#include "cpd/pattern.hpp"

#include <cmath>
#include <stdexcept>

namespace cpd {

namespace {

double triangle_value(int k, std::size_t h) {
    return 0.5 - static_cast<double>(std::abs(k)) / static_cast<double>(h);
}

}  // namespace

double Pattern::sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

double Pattern::abs_sum() const {
    double s = 0.0;
    for (double w : weights) s += std::abs(w);
    return s;
}

Pattern make_pattern(PatternKind kind, std::size_t h, std::size_t plateau,
                     PatternNormalization norm) {
    if (h < 1) throw std::invalid_argument("pattern half-width must be >= 1");
    Pattern p;
    p.kind = kind;
    p.h = h;
    p.norm = norm;

    const int hh = static_cast<int>(h);
    switch (kind) {
        case PatternKind::Indicator: {
            p.first_offset = 0;
            p.weights = {1.0};
            break;
        }
        case PatternKind::Triangle: {
            p.first_offset = -hh;
            p.weights.resize(2 * h);
            for (int k = -hh; k < hh; ++k) p.weights[k + hh] = triangle_value(k, h);
            break;
        }
        case PatternKind::Trapezium: {
            if (plateau >= 2 * h) throw std::invalid_argument("trapezium plateau must be < 2h");
            p.first_offset = -hh;
            p.weights.resize(2 * h);
            // Flat top of the given width, then re-centered to zero sum.
            const int m = static_cast<int>(plateau) / 2;
            double top = triangle_value(m, h);
            double total = 0.0;
            for (int k = -hh; k < hh; ++k) {
                double v = std::min(triangle_value(k, h), top);
                p.weights[k + hh] = v;
                total += v;
            }
            double correction = total / static_cast<double>(2 * h);
            for (double& w : p.weights) w -= correction;
            break;
        }
        case PatternKind::Horn: {
            // Antisymmetric ramp from -1/2 to +1/2 across the window.
            p.first_offset = -hh;
            p.weights.resize(2 * h);
            for (int k = -hh; k < hh; ++k) {
                p.weights[k + hh] = (static_cast<double>(k) + 0.5) / (2.0 * h - 1.0);
            }
            break;
        }
    }

    if (norm == PatternNormalization::L1) {
        double a = p.abs_sum();
        if (a <= 0.0) throw std::invalid_argument("cannot l1-normalize a zero pattern");
        for (double& w : p.weights) w /= a;
    }
    return p;
}

double tp_statistic(const LrtSeries& lrt, const Pattern& pattern, std::size_t tau) {
    // Every tap with nonzero weight must land inside the position range.
    for (std::size_t i = 0; i < pattern.weights.size(); ++i) {
        if (pattern.weights[i] == 0.0) continue;
        long long t = static_cast<long long>(tau) + pattern.first_offset + static_cast<long long>(i);
        if (t < static_cast<long long>(lrt.first) || t > static_cast<long long>(lrt.last())) {
            throw std::invalid_argument("pattern tap out of the LRT position range at tau=" +
                                        std::to_string(tau));
        }
    }
    double s = 0.0;
    for (std::size_t i = 0; i < pattern.weights.size(); ++i) {
        double w = pattern.weights[i];
        if (w == 0.0) continue;
        std::size_t t = tau + static_cast<std::size_t>(pattern.first_offset + static_cast<int>(i));
        s += w * lrt.at(t);
    }
    return s;
}

std::pair<std::size_t, std::size_t> admissible_tau_range(std::size_t n, std::size_t h) {
    if (n < 4 * h) throw std::invalid_argument("series too short for the admissible tau range");
    return {2 * h, n - 2 * h};
}

TpSeries tp_series(const LrtSeries& lrt, const Pattern& pattern) {
    const std::size_t n = lrt.last() + lrt.h;  // positions run [h, n-h]
    auto [lo, hi] = admissible_tau_range(n, lrt.h);
    TpSeries out;
    out.tau_first = lo;
    out.values.reserve(hi - lo + 1);
    for (std::size_t tau = lo; tau <= hi; ++tau) out.values.push_back(tp_statistic(lrt, pattern, tau));
    return out;
}

MaxTp max_tp(const LrtSeries& lrt, const Pattern& pattern) {
    TpSeries tp = tp_series(lrt, pattern);
    if (tp.values.empty()) throw std::invalid_argument("empty admissible range");
    MaxTp best{tp.tau_first, tp.values.front()};
    for (std::size_t i = 1; i < tp.values.size(); ++i) {
        if (tp.values[i] > best.value) {
            best.value = tp.values[i];
            best.tau = tp.tau_first + i;
        }
    }
    return best;
}

PatternKind pattern_kind_from_name(const std::string& name) {
    if (name == "triangle") return PatternKind::Triangle;
    if (name == "trapezium") return PatternKind::Trapezium;
    if (name == "horn") return PatternKind::Horn;
    if (name == "indicator") return PatternKind::Indicator;
    throw std::invalid_argument("unknown pattern kind: " + name);
}

std::string pattern_kind_name(PatternKind kind) {
    switch (kind) {
        case PatternKind::Triangle: return "triangle";
        case PatternKind::Trapezium: return "trapezium";
        case PatternKind::Horn: return "horn";
        case PatternKind::Indicator: return "indicator";
    }
    return "?";
}

}  // namespace cpd
