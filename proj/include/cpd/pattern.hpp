#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cpd/lrt.hpp"

namespace cpd {

enum class PatternKind { Triangle, Trapezium, Horn, Indicator };
enum class PatternNormalization { Raw, L1 };

// Discrete change-point pattern on the 2h offsets -h..h-1 (the span of LRT
// centers whose windows cover one 2h-wide transition). Triangle, trapezium
// and horn are zero-sum; indicator is the single tap P(0) = 1.
struct Pattern {
    PatternKind kind = PatternKind::Triangle;
    std::size_t h = 0;
    int first_offset = 0;          // -h (0 for indicator)
    std::vector<double> weights;   // aligned to first_offset
    PatternNormalization norm = PatternNormalization::Raw;

    double sum() const;
    double abs_sum() const;
    int min_offset() const { return first_offset; }
    int max_offset() const { return first_offset + static_cast<int>(weights.size()) - 1; }
};

// plateau: flat-top width for the trapezium (ignored otherwise), must be < 2h.
Pattern make_pattern(PatternKind kind, std::size_t h, std::size_t plateau = 0,
                     PatternNormalization norm = PatternNormalization::Raw);

// TP_h(tau) = sum_k P(k) * sqrt(2 T_h(tau + k)); requires every pattern tap
// to land inside the LRT position range. No implicit normalization.
double tp_statistic(const LrtSeries& lrt, const Pattern& pattern, std::size_t tau);

struct MaxTp {
    std::size_t tau = 0;
    double value = 0.0;
};

// Argmax of TP over the admissible range [2h, n-2h]; ties break toward the
// smallest tau.
MaxTp max_tp(const LrtSeries& lrt, const Pattern& pattern);

// TP over every admissible tau; positions are tau_first + index.
struct TpSeries {
    std::size_t tau_first = 0;
    std::vector<double> values;
};

TpSeries tp_series(const LrtSeries& lrt, const Pattern& pattern);

// Admissible tau range for a series of n points at scale h: [2h, n-2h].
std::pair<std::size_t, std::size_t> admissible_tau_range(std::size_t n, std::size_t h);

PatternKind pattern_kind_from_name(const std::string& name);
std::string pattern_kind_name(PatternKind kind);

}  // namespace cpd
