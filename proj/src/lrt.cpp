#include "cpd/lrt.hpp"

#include <algorithm>
#include <cmath>

#include "cpd/rng.hpp"

namespace cpd {

namespace {

void check_window_args(const TimeSeries& series, std::size_t h) {
    series.validate();
    if (h < 1) throw std::invalid_argument("window half-width must be >= 1");
    if (series.n < 2 * h) throw std::invalid_argument("series too short for h=" + std::to_string(h));
}

// Cumulative sums S[i] = sum of rows 0..i-1 (p columns each).
std::vector<double> prefix_sums(const TimeSeries& series) {
    std::vector<double> s((series.n + 1) * series.p, 0.0);
    for (std::size_t i = 0; i < series.n; ++i) {
        for (std::size_t j = 0; j < series.p; ++j) {
            s[(i + 1) * series.p + j] = s[i * series.p + j] + series.values[i * series.p + j];
        }
    }
    return s;
}

struct ScalarPrefix {
    std::vector<double> y;
    std::vector<double> y2;
};

ScalarPrefix scalar_prefix(const TimeSeries& series) {
    ScalarPrefix s;
    s.y.assign(series.n + 1, 0.0);
    s.y2.assign(series.n + 1, 0.0);
    for (std::size_t i = 0; i < series.n; ++i) {
        double v = series.values[i];
        s.y[i + 1] = s.y[i] + v;
        s.y2[i + 1] = s.y2[i] + v * v;
    }
    return s;
}

// Poisson kernel: sum_i y_i log(rate) - m * rate, the lgamma terms cancel in
// every split difference.
double poisson_kernel(double sum_y, double m, double rate) {
    return sum_y * std::log(rate) - m * rate;
}

double poisson_rate(double sum_y, double m, double floor) {
    return std::max(sum_y / m, floor);
}

// Gaussian mean/variance kernel with the 2*pi constant dropped.
double meanvar_kernel(double m, double centered_ss, double v) {
    return -0.5 * m * std::log(v) - centered_ss / (2.0 * v);
}

struct MeanVarStats {
    double mu;
    double v;            // floored variance
    double centered_ss;  // sum (y - mu)^2
};

MeanVarStats meanvar_stats(const ScalarPrefix& pre, std::size_t b, std::size_t e, double floor) {
    double m = static_cast<double>(e - b);
    double sy = pre.y[e] - pre.y[b];
    double sy2 = pre.y2[e] - pre.y2[b];
    double mu = sy / m;
    double css = std::max(sy2 - mu * mu * m, 0.0);
    return {mu, std::max(css / m, floor), css};
}

double lrt_from_prefix(const Model& model, const TimeSeries& series, const ScalarPrefix* scalar,
                       const std::vector<double>* gauss, std::size_t t, std::size_t h) {
    switch (model.family()) {
        case Family::GaussianMean: {
            const std::size_t p = series.p;
            const double* s = gauss->data();
            double q = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                double left = s[t * p + j] - s[(t - h) * p + j];
                double right = s[(t + h) * p + j] - s[t * p + j];
                double d = (right - left) / static_cast<double>(h);
                q += d * d;
            }
            return 0.25 * static_cast<double>(h) * q;
        }
        case Family::Poisson: {
            double m = static_cast<double>(h);
            double yl = scalar->y[t] - scalar->y[t - h];
            double yr = scalar->y[t + h] - scalar->y[t];
            double fl = model.variance_floor();
            double rl = poisson_rate(yl, m, fl);
            double rr = poisson_rate(yr, m, fl);
            double rf = poisson_rate(yl + yr, 2.0 * m, fl);
            double v = poisson_kernel(yl, m, rl) + poisson_kernel(yr, m, rr) -
                       poisson_kernel(yl + yr, 2.0 * m, rf);
            return std::max(v, 0.0);
        }
        case Family::GaussianMeanVar: {
            double m = static_cast<double>(h);
            double fl = model.variance_floor();
            MeanVarStats l = meanvar_stats(*scalar, t - h, t, fl);
            MeanVarStats r = meanvar_stats(*scalar, t, t + h, fl);
            MeanVarStats f = meanvar_stats(*scalar, t - h, t + h, fl);
            double v = meanvar_kernel(m, l.centered_ss, l.v) + meanvar_kernel(m, r.centered_ss, r.v) -
                       meanvar_kernel(2.0 * m, f.centered_ss, f.v);
            return std::max(v, 0.0);
        }
        case Family::Glm:
            break;
    }
    // Generic route: three MLE fits.
    MleResult left = model.mle(series, t - h, t);
    MleResult right = model.mle(series, t, t + h);
    MleResult full = model.mle(series, t - h, t + h);
    if (!left.converged || !right.converged || !full.converged) {
        throw std::runtime_error("MLE did not converge at position " + std::to_string(t));
    }
    return std::max(left.loglik + right.loglik - full.loglik, 0.0);
}

}  // namespace

double lrt_at(const Model& model, const TimeSeries& series, std::size_t t, std::size_t h) {
    check_window_args(series, h);
    model.check_series(series);
    if (t < h || t + h > series.n) {
        throw std::invalid_argument("center " + std::to_string(t) + " out of range for h=" +
                                    std::to_string(h));
    }
    if (model.family() == Family::Glm) {
        return lrt_from_prefix(model, series, nullptr, nullptr, t, h);
    }
    if (model.family() == Family::GaussianMean) {
        auto pre = prefix_sums(series);
        return lrt_from_prefix(model, series, nullptr, &pre, t, h);
    }
    auto pre = scalar_prefix(series);
    return lrt_from_prefix(model, series, &pre, nullptr, t, h);
}

LrtSeries lrt_series(const Model& model, const TimeSeries& series, std::size_t h) {
    check_window_args(series, h);
    model.check_series(series);
    LrtSeries out;
    out.h = h;
    out.first = h;
    out.values.resize(series.n - 2 * h + 1);

    if (model.family() == Family::Glm) {
        for (std::size_t t = h; t + h <= series.n; ++t) {
            out.values[t - h] = std::sqrt(2.0 * lrt_from_prefix(model, series, nullptr, nullptr, t, h));
        }
        return out;
    }

    std::vector<double> gauss;
    ScalarPrefix scalar;
    if (model.family() == Family::GaussianMean) {
        gauss = prefix_sums(series);
    } else {
        scalar = scalar_prefix(series);
    }
    for (std::size_t t = h; t + h <= series.n; ++t) {
        double v = lrt_from_prefix(model, series, &scalar, &gauss, t, h);
        out.values[t - h] = std::sqrt(std::max(v, 0.0) * 2.0);
    }
    return out;
}

ShiftCache make_shift_cache(const Model& model, const TimeSeries& series, std::size_t h) {
    check_window_args(series, h);
    model.check_series(series);
    ShiftCache cache;
    cache.h = h;
    cache.first = h;
    cache.dim = model.param_dim();
    const std::size_t count = series.n - 2 * h + 1;
    cache.delta.resize(count * cache.dim);

    switch (model.family()) {
        case Family::GaussianMean: {
            auto pre = prefix_sums(series);
            const std::size_t p = series.p;
            for (std::size_t t = h; t + h <= series.n; ++t) {
                for (std::size_t j = 0; j < p; ++j) {
                    double left = (pre[t * p + j] - pre[(t - h) * p + j]) / static_cast<double>(h);
                    double right = (pre[(t + h) * p + j] - pre[t * p + j]) / static_cast<double>(h);
                    cache.delta[(t - h) * p + j] = right - left;
                }
            }
            break;
        }
        case Family::Poisson: {
            auto pre = scalar_prefix(series);
            double m = static_cast<double>(h);
            double fl = model.variance_floor();
            for (std::size_t t = h; t + h <= series.n; ++t) {
                double rl = poisson_rate(pre.y[t] - pre.y[t - h], m, fl);
                double rr = poisson_rate(pre.y[t + h] - pre.y[t], m, fl);
                cache.delta[t - h] = rr - rl;
            }
            break;
        }
        case Family::GaussianMeanVar: {
            auto pre = scalar_prefix(series);
            double fl = model.variance_floor();
            for (std::size_t t = h; t + h <= series.n; ++t) {
                MeanVarStats l = meanvar_stats(pre, t - h, t, fl);
                MeanVarStats r = meanvar_stats(pre, t, t + h, fl);
                cache.delta[(t - h) * 2] = r.mu - l.mu;
                cache.delta[(t - h) * 2 + 1] = r.v - l.v;
            }
            break;
        }
        case Family::Glm: {
            for (std::size_t t = h; t + h <= series.n; ++t) {
                MleResult left = model.mle(series, t - h, t);
                MleResult right = model.mle(series, t, t + h);
                for (std::size_t j = 0; j < cache.dim; ++j) {
                    cache.delta[(t - h) * cache.dim + j] = right.theta[j] - left.theta[j];
                }
            }
            break;
        }
    }
    return cache;
}

LrtSeries weighted_bootstrap_lrt_series_with_weights(const Model& model, const TimeSeries& series,
                                                     std::size_t h, std::span<const double> weights,
                                                     const ShiftCache* cache) {
    check_window_args(series, h);
    model.check_series(series);
    if (weights.size() != series.n) {
        throw DimensionMismatchError("bootstrap weights must cover the whole series");
    }
    if (cache && (cache->h != h || cache->dim != model.param_dim())) {
        throw std::invalid_argument("shift cache does not match this (series, h)");
    }

    LrtSeries out;
    out.h = h;
    out.first = h;
    out.values.resize(series.n - 2 * h + 1);

    ShiftCache local;
    if (!cache) {
        local = make_shift_cache(model, series, h);
        cache = &local;
    }

    if (model.family() == Family::GaussianMean) {
        // Closed form, valid for any weight signs with nonzero window mass:
        // 2 T = (a_l a_r / (a_l + a_r)) * |theta_l - theta_r + delta|^2.
        const std::size_t p = series.p;
        std::vector<double> pw(series.n + 1, 0.0);
        std::vector<double> pwy((series.n + 1) * p, 0.0);
        for (std::size_t i = 0; i < series.n; ++i) {
            pw[i + 1] = pw[i] + weights[i];
            for (std::size_t j = 0; j < p; ++j) {
                pwy[(i + 1) * p + j] = pwy[i * p + j] + weights[i] * series.values[i * p + j];
            }
        }
        const double eps = 1e-12 * static_cast<double>(h);
        for (std::size_t t = h; t + h <= series.n; ++t) {
            double al = pw[t] - pw[t - h];
            double ar = pw[t + h] - pw[t];
            if (std::abs(al) < eps || std::abs(ar) < eps || std::abs(al + ar) < eps) {
                ++out.solver_failures;
                out.values[t - h] = 0.0;
                continue;
            }
            auto delta = cache->at(t);
            double q = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                double tl = (pwy[t * p + j] - pwy[(t - h) * p + j]) / al;
                double tr = (pwy[(t + h) * p + j] - pwy[t * p + j]) / ar;
                double d = tl - tr + delta[j];
                q += d * d;
            }
            double two_t = (al * ar / (al + ar)) * q;
            out.values[t - h] = std::sqrt(std::max(two_t, 0.0));
        }
        return out;
    }

    for (std::size_t t = h; t + h <= series.n; ++t) {
        auto wl = weights.subspan(t - h, h);
        auto wr = weights.subspan(t, h);
        MleResult left = model.mle(series, t - h, t, wl);
        MleResult right = model.mle(series, t, t + h, wr);
        ShiftedPairResult sup = model.mle_shifted_pair(series, t - h, t, t, t + h, cache->at(t), wl, wr);
        if (!left.converged || !right.converged || !sup.converged) {
            ++out.solver_failures;
        }
        double two_t = 2.0 * (left.loglik + right.loglik - sup.value);
        out.values[t - h] = std::sqrt(std::max(two_t, 0.0));
    }
    return out;
}

LrtSeries weighted_bootstrap_lrt_series(const Model& model, const TimeSeries& series, std::size_t h,
                                        std::uint64_t seed, const ShiftCache* cache) {
    Rng rng(seed);
    std::vector<double> weights(series.n);
    for (double& w : weights) w = 1.0 + rng.normal();
    return weighted_bootstrap_lrt_series_with_weights(model, series, h, weights, cache);
}

LrtSeries empirical_bootstrap_lrt_series_with_indices(const Model& model, const TimeSeries& series,
                                                      std::size_t h,
                                                      std::span<const std::size_t> indices) {
    check_window_args(series, h);
    model.check_series(series);
    if (indices.size() != series.n) {
        throw DimensionMismatchError("bootstrap indices must cover the whole series");
    }
    TimeSeries resampled;
    resampled.n = series.n;
    resampled.p = series.p;
    resampled.values.resize(series.n * series.p);
    for (std::size_t i = 0; i < series.n; ++i) {
        std::size_t k = indices[i];
        if (k >= series.n) throw std::invalid_argument("bootstrap index out of range");
        for (std::size_t j = 0; j < series.p; ++j) {
            resampled.values[i * series.p + j] = series.values[k * series.p + j];
        }
    }

    if (model.family() == Family::Glm) {
        // Terms l_{k(i)} keep their own factors, so psi rows are resampled
        // together with the observations.
        std::vector<double> factors(series.n * model.param_dim());
        for (std::size_t i = 0; i < series.n; ++i) {
            auto psi = model.factor(indices[i]);
            std::copy(psi.begin(), psi.end(), factors.begin() + i * model.param_dim());
        }
        Model resampled_model = Model::glm(model.link(), std::move(factors), model.param_dim());
        return lrt_series(resampled_model, resampled, h);
    }
    return lrt_series(model, resampled, h);
}

LrtSeries empirical_bootstrap_lrt_series(const Model& model, const TimeSeries& series, std::size_t h,
                                         std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> idx(series.n);
    for (auto& k : idx) k = static_cast<std::size_t>(rng.uniform_below(series.n));
    return empirical_bootstrap_lrt_series_with_indices(model, series, h, idx);
}

}  // namespace cpd
