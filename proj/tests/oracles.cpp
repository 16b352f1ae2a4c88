#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

namespace {

double term(const cpd::Model& model, const cpd::TimeSeries& series, std::size_t i,
            std::span<const double> theta) {
    switch (model.family()) {
        case cpd::Family::GaussianMean: {
            double q = 0.0;
            for (std::size_t j = 0; j < series.p; ++j) {
                double r = series.values[i * series.p + j] - theta[j];
                q += r * r;
            }
            return -0.5 * q;
        }
        case cpd::Family::GaussianMeanVar: {
            double r = series.values[i] - theta[0];
            return -0.5 * std::log(theta[1]) - r * r / (2.0 * theta[1]) -
                   0.91893853320467274178;
        }
        case cpd::Family::Poisson: {
            double y = series.values[i];
            int sign = 0;
            return y * std::log(theta[0]) - theta[0] - ::lgamma_r(y + 1.0, &sign);
        }
        case cpd::Family::Glm: {
            auto psi = model.factor(i);
            double u = 0.0;
            for (std::size_t j = 0; j < psi.size(); ++j) u += psi[j] * theta[j];
            return series.values[i] * u - model.link().g(u);
        }
    }
    return 0.0;
}

std::vector<double> naive_mle(const cpd::Model& model, const cpd::TimeSeries& series,
                              std::size_t begin, std::size_t end) {
    const double m = static_cast<double>(end - begin);
    switch (model.family()) {
        case cpd::Family::GaussianMean: {
            std::vector<double> mean(series.p, 0.0);
            for (std::size_t i = begin; i < end; ++i) {
                for (std::size_t j = 0; j < series.p; ++j) mean[j] += series.values[i * series.p + j];
            }
            for (double& v : mean) v /= m;
            return mean;
        }
        case cpd::Family::Poisson: {
            double s = 0.0;
            for (std::size_t i = begin; i < end; ++i) s += series.values[i];
            return {std::max(s / m, model.variance_floor())};
        }
        case cpd::Family::GaussianMeanVar: {
            double s = 0.0;
            for (std::size_t i = begin; i < end; ++i) s += series.values[i];
            double mu = s / m;
            double q = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                double r = series.values[i] - mu;
                q += r * r;
            }
            return {mu, std::max(q / m, model.variance_floor())};
        }
        case cpd::Family::Glm: {
            if (model.param_dim() != 1) {
                throw std::invalid_argument("oracle glm MLE supports scalar parameters only");
            }
            // Coarse-to-fine grid search.
            double lo = -10.0, hi = 10.0;
            std::vector<double> theta(1);
            for (int round = 0; round < 4; ++round) {
                double best = -std::numeric_limits<double>::infinity();
                double best_theta = lo;
                for (int k = 0; k <= 400; ++k) {
                    theta[0] = lo + (hi - lo) * k / 400.0;
                    double v = window_loglik(model, series, begin, end, theta);
                    if (v > best) {
                        best = v;
                        best_theta = theta[0];
                    }
                }
                double span = (hi - lo) / 400.0;
                lo = best_theta - 4.0 * span;
                hi = best_theta + 4.0 * span;
            }
            return {(lo + hi) / 2.0};
        }
    }
    return {};
}

}  // namespace

double window_loglik(const cpd::Model& model, const cpd::TimeSeries& series, std::size_t begin,
                     std::size_t end, std::span<const double> theta,
                     std::span<const double> weights) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        double w = weights.empty() ? 1.0 : weights[i - begin];
        s += w * term(model, series, i, theta);
    }
    return s;
}

std::vector<double> window_gradient(const cpd::Model& model, const cpd::TimeSeries& series,
                                    std::size_t begin, std::size_t end,
                                    std::span<const double> theta,
                                    std::span<const double> weights) {
    std::vector<double> g(model.param_dim(), 0.0);
    for (std::size_t i = begin; i < end; ++i) {
        double w = weights.empty() ? 1.0 : weights[i - begin];
        switch (model.family()) {
            case cpd::Family::GaussianMean:
                for (std::size_t j = 0; j < series.p; ++j) {
                    g[j] += w * (series.values[i * series.p + j] - theta[j]);
                }
                break;
            case cpd::Family::Poisson:
                g[0] += w * (series.values[i] / theta[0] - 1.0);
                break;
            case cpd::Family::GaussianMeanVar: {
                double r = series.values[i] - theta[0];
                g[0] += w * r / theta[1];
                g[1] += w * (-0.5 / theta[1] + r * r / (2.0 * theta[1] * theta[1]));
                break;
            }
            case cpd::Family::Glm: {
                auto psi = model.factor(i);
                double u = 0.0;
                for (std::size_t j = 0; j < psi.size(); ++j) u += psi[j] * theta[j];
                double c = w * (series.values[i] - model.link().dg(u));
                for (std::size_t j = 0; j < psi.size(); ++j) g[j] += c * psi[j];
                break;
            }
        }
    }
    return g;
}

double naive_lrt(const cpd::Model& model, const cpd::TimeSeries& series, std::size_t t,
                 std::size_t h) {
    std::vector<double> left = naive_mle(model, series, t - h, t);
    std::vector<double> right = naive_mle(model, series, t, t + h);
    std::vector<double> full = naive_mle(model, series, t - h, t + h);
    return window_loglik(model, series, t - h, t, left) +
           window_loglik(model, series, t, t + h, right) -
           window_loglik(model, series, t - h, t + h, full);
}

double grid_sup_shifted(const cpd::Model& model, const cpd::TimeSeries& series,
                        std::size_t left_begin, std::size_t left_end, std::size_t right_begin,
                        std::size_t right_end, std::span<const double> shift,
                        std::span<const double> weights_left, std::span<const double> weights_right,
                        std::size_t points) {
    const std::size_t dim = model.param_dim();
    if (dim > 2) throw std::invalid_argument("grid oracle supports 1- and 2-d parameters only");

    auto objective = [&](std::span<const double> theta) {
        std::vector<double> shifted(dim);
        for (std::size_t j = 0; j < dim; ++j) shifted[j] = theta[j] + shift[j];
        // Domain guards keep the grid finite.
        if (model.family() == cpd::Family::Poisson && (theta[0] <= 0.0 || shifted[0] <= 0.0)) {
            return -std::numeric_limits<double>::infinity();
        }
        if (model.family() == cpd::Family::GaussianMeanVar &&
            (theta[1] <= 0.0 || shifted[1] <= 0.0)) {
            return -std::numeric_limits<double>::infinity();
        }
        return window_loglik(model, series, left_begin, left_end, theta, weights_left) +
               window_loglik(model, series, right_begin, right_end, shifted, weights_right);
    };

    std::vector<double> center = naive_mle(model, series, left_begin, left_end);
    double m = static_cast<double>(left_end - left_begin + right_end - right_begin);
    double se = std::max(1.0 / std::sqrt(m), 1e-3);

    std::vector<double> lo(dim), hi(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        lo[j] = center[j] - 5.0 * se * std::max(1.0, std::abs(center[j]));
        hi[j] = center[j] + 5.0 * se * std::max(1.0, std::abs(center[j]));
    }

    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> theta(dim);
    if (dim == 1) {
        for (int round = 0; round < 2; ++round) {
            double best_theta = lo[0];
            for (std::size_t k = 0; k < points; ++k) {
                theta[0] = lo[0] + (hi[0] - lo[0]) * static_cast<double>(k) /
                                       static_cast<double>(points - 1);
                double v = objective(theta);
                if (v > best) {
                    best = v;
                    best_theta = theta[0];
                }
            }
            double span = (hi[0] - lo[0]) / static_cast<double>(points - 1);
            lo[0] = best_theta - 3.0 * span;
            hi[0] = best_theta + 3.0 * span;
        }
        return best;
    }
    const std::size_t side = 151;
    for (int round = 0; round < 3; ++round) {
        std::vector<double> best_theta = {lo[0], lo[1]};
        for (std::size_t a = 0; a < side; ++a) {
            theta[0] = lo[0] + (hi[0] - lo[0]) * static_cast<double>(a) / (side - 1);
            for (std::size_t b = 0; b < side; ++b) {
                theta[1] = lo[1] + (hi[1] - lo[1]) * static_cast<double>(b) / (side - 1);
                double v = objective(theta);
                if (v > best) {
                    best = v;
                    best_theta = theta;
                }
            }
        }
        for (std::size_t j = 0; j < 2; ++j) {
            double span = (hi[j] - lo[j]) / (side - 1);
            lo[j] = best_theta[j] - 3.0 * span;
            hi[j] = best_theta[j] + 3.0 * span;
        }
    }
    return best;
}

}  // namespace oracle
