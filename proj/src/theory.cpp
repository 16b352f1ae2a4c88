#include "cpd/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace cpd {

namespace {

void check_px(double p, double x) {
    if (!(p >= 1.0)) throw std::invalid_argument("dimension p must be >= 1");
    if (!(x >= 0.0)) throw std::invalid_argument("exponent x must be >= 0");
}

}  // namespace

double subgaussian_norm_quantile(double p, double x, std::optional<double> g) {
    check_px(p, x);
    if (g) {
        if (!(*g > 0.0)) throw std::invalid_argument("sub-Gaussian range g must be > 0");
        double xc = (*g) * (*g) / 4.0;
        if (x > xc) return *g + 2.0 * (x - xc) / *g;
    }
    return std::sqrt(p + 2.0 * std::sqrt(p * x) + 2.0 * x);
}

void QuadFormSpectrum::validate() const {
    if (!(lambda_max > 0.0)) throw std::invalid_argument("lambda_max must be > 0");
    if (!(trace >= lambda_max)) throw std::invalid_argument("trace must be >= lambda_max");
    if (!(trace_sq >= 0.0) || trace_sq > lambda_max * trace * (1.0 + 1e-12)) {
        throw std::invalid_argument("spectrum inconsistency: need tr(B^2) <= lambda_max * tr(B)");
    }
}

double quad_form_quantile(const QuadFormSpectrum& spectrum, double x, std::optional<double> g) {
    spectrum.validate();
    if (!(x >= 0.0)) throw std::invalid_argument("exponent x must be >= 0");
    double v = std::sqrt(spectrum.trace_sq);
    if (g) {
        if (!(*g > 0.0)) throw std::invalid_argument("sub-Gaussian range g must be > 0");
        double xc = (*g) * (*g) / 4.0;
        if (x > xc) {
            double lambda = spectrum.lambda_max;
            double zc = std::sqrt(spectrum.trace + v * (*g) + lambda * (*g) * (*g) / 2.0);
            double gc = std::sqrt(spectrum.trace / lambda + (*g) * v / lambda + (*g) * (*g) / 2.0) /
                        (1.0 + v / (lambda * (*g)));
            return zc + 2.0 * lambda * (x - xc) / gc;
        }
    }
    // v sqrt(x) written as sqrt(tr(B^2) x) so the identity spectrum reduces
    // bit-exactly to the sub-Gaussian norm quantile.
    return std::sqrt(spectrum.trace + 2.0 * std::sqrt(spectrum.trace_sq * x) +
                     2.0 * spectrum.lambda_max * x);
}

double quad_form_quantile_simple(const QuadFormSpectrum& spectrum, double x) {
    spectrum.validate();
    if (!(x >= 0.0)) throw std::invalid_argument("exponent x must be >= 0");
    return std::sqrt(spectrum.trace) + std::sqrt(2.0 * spectrum.lambda_max * x);
}

double min_detectable_shift(double p, double h, double x, double spread) {
    check_px(p, x);
    if (!(h >= 1.0)) throw std::invalid_argument("half-window h must be >= 1");
    if (!(spread >= 0.0)) throw std::invalid_argument("spread must be >= 0");
    return 5.0 * std::pow(p, 0.25) * std::pow(x + std::log(2.0 * h), 0.25) * std::exp(x / 2.0) +
           21.0 * spread;
}

TpVarianceBound tp_variance_bound(double p, double h, double x) {
    check_px(p, x);
    if (!(h >= 1.0)) throw std::invalid_argument("half-window h must be >= 1");
    double logs = std::sqrt(x + std::log(2.0 * h));
    TpVarianceBound b;
    b.variance_bound = (2.0 / 3.0) * h * h * std::sqrt(p) * logs;
    b.critical_value_bound =
        std::sqrt(2.0 / 3.0) * h * std::pow(p, 0.25) * std::sqrt(logs) * std::exp(x / 2.0);
    return b;
}

}  // namespace cpd
