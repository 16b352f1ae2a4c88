#pragma once

#include <optional>

namespace cpd {

// High-probability norm bound for a p-dimensional sub-Gaussian vector at
// confidence e^{-x}: sqrt(p + 2 sqrt(p x) + 2 x). The tail branch beyond
// x_c = g^2/4 needs the sub-Gaussian range g, supplied explicitly.
double subgaussian_norm_quantile(double p, double x,
                                 std::optional<double> g = std::nullopt);

// Spectrum summary of the quadratic-form matrix B.
struct QuadFormSpectrum {
    double trace = 0.0;       // tr(B)
    double trace_sq = 0.0;    // tr(B^2)
    double lambda_max = 0.0;  // largest eigenvalue

    void validate() const;
};

// Quantile of |B^{1/2} gamma| for standard Gaussian gamma:
// sqrt(tr B + 2 sqrt(tr B^2) sqrt(x) + 2 lambda x), with an optional tail
// branch beyond x_c = g^2/4.
double quad_form_quantile(const QuadFormSpectrum& spectrum, double x,
                          std::optional<double> g = std::nullopt);

// The simplified bound sqrt(tr B) + sqrt(2 lambda x).
double quad_form_quantile_simple(const QuadFormSpectrum& spectrum, double x);

// Sufficient parameter-jump size for abrupt-change detection with a triangle
// pattern: 5 p^{1/4} (x + log 2h)^{1/4} e^{x/2} + 21 * spread.
double min_detectable_shift(double p, double h, double x, double spread);

struct TpVarianceBound {
    double variance_bound = 0.0;        // (2/3) h^2 sqrt(p) (x + log 2h)^{1/2}
    double critical_value_bound = 0.0;  // sqrt(2/3) h p^{1/4} (x + log 2h)^{1/4} e^{x/2}
};

TpVarianceBound tp_variance_bound(double p, double h, double x);

}  // namespace cpd
