#include "cpd/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// std::lgamma writes the global signgam, which races across worker threads.
double log_gamma(double x) {
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

bool all_zero(std::span<const double> w) {
    for (double v : w) {
        if (v != 0.0) return false;
    }
    return true;
}

double weight_at(std::span<const double> w, std::size_t i) {
    return w.empty() ? 1.0 : w[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Concave objective for the damped Newton ascent. `eval` returns the value
// and fills grad / neg_hess (row-major, dim x dim) when non-null; -inf marks
// an infeasible point. `project` clamps an iterate back into the domain.
struct Objective {
    virtual ~Objective() = default;
    virtual std::size_t dim() const = 0;
    virtual double eval(std::span<const double> theta, double* grad, double* neg_hess) const = 0;
    virtual void project(std::span<double>) const {}
};

struct NewtonOutcome {
    std::vector<double> theta;
    double value = -kInf;
    int iterations = 0;
    bool converged = false;
};

bool solve_spd(const double* neg_hess, std::span<const double> grad, std::span<double> dir) {
    const std::size_t d = grad.size();
    if (d == 1) {
        if (!(neg_hess[0] > 0.0) || !std::isfinite(neg_hess[0])) return false;
        dir[0] = grad[0] / neg_hess[0];
        return true;
    }
    Eigen::Map<const Eigen::MatrixXd> h(neg_hess, d, d);
    if (!h.allFinite()) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) return false;
    Eigen::Map<const Eigen::VectorXd> g(grad.data(), d);
    Eigen::VectorXd x = llt.solve(g);
    if (!x.allFinite()) return false;
    for (std::size_t i = 0; i < d; ++i) dir[i] = x[i];
    return true;
}

// Newton with step halving on a concave objective. Gradient tolerance is
// checked before stepping, so a stationary start returns zero iterations.
NewtonOutcome damped_newton(const Objective& obj, std::vector<double> theta0,
                            double grad_tol = 1e-9, int max_iter = 100) {
    const std::size_t d = obj.dim();
    NewtonOutcome out;
    obj.project(theta0);
    std::vector<double> grad(d), neg_hess(d * d), dir(d), cand(d), cand_grad(d), cand_hess(d * d);
    double f = obj.eval(theta0, grad.data(), neg_hess.data());
    out.theta = theta0;
    out.value = f;
    if (!std::isfinite(f)) return out;

    for (int iter = 0; iter < max_iter; ++iter) {
        double gnorm = norm(grad);
        if (gnorm <= grad_tol * (1.0 + norm(out.theta))) {
            out.converged = true;
            return out;
        }
        if (!solve_spd(neg_hess.data(), grad, dir)) {
            return out;  // curvature lost; best feasible iterate, converged=false
        }
        double slope = dot(grad, dir);  // g' H^{-1} g > 0 for positive definite H
        bool accepted = false;
        if (slope <= 64.0 * std::abs(f) * 1e-16) {
            // The predicted gain is below the objective's float resolution, so
            // a value-based line search cannot measure progress. Take the pure
            // Newton step as long as it shrinks the gradient.
            for (std::size_t i = 0; i < d; ++i) cand[i] = out.theta[i] + dir[i];
            obj.project(cand);
            double fc = obj.eval(cand, cand_grad.data(), cand_hess.data());
            if (std::isfinite(fc) && norm(cand_grad) <= gnorm) {
                out.theta = cand;
                f = fc;
                grad = cand_grad;
                neg_hess = cand_hess;
                accepted = true;
            }
        } else {
            double step = 1.0;
            for (int halving = 0; halving < 60; ++halving) {
                for (std::size_t i = 0; i < d; ++i) cand[i] = out.theta[i] + step * dir[i];
                obj.project(cand);
                double fc = obj.eval(cand, cand_grad.data(), cand_hess.data());
                if (std::isfinite(fc) && fc >= f + 1e-4 * step * slope) {
                    out.theta = cand;
                    f = fc;
                    grad = cand_grad;
                    neg_hess = cand_hess;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
        }
        out.iterations = iter + 1;
        out.value = f;
        if (!accepted) {
            out.converged = gnorm <= grad_tol * (1.0 + norm(out.theta));
            return out;
        }
    }
    // Ran out of iterations; report the gradient state honestly.
    out.converged = norm(grad) <= grad_tol * (1.0 + norm(out.theta));
    return out;
}

// Per-term objective over one window; used for glm and for the generic
// Newton solver forced on closed-form families.
struct WindowObjective final : Objective {
    const Model& model;
    const TimeSeries& series;
    std::size_t begin, end;
    std::span<const double> weights;

    WindowObjective(const Model& m, const TimeSeries& s, std::size_t b, std::size_t e,
                    std::span<const double> w)
        : model(m), series(s), begin(b), end(e), weights(w) {}

    std::size_t dim() const override { return model.param_dim(); }

    void project(std::span<double> theta) const override {
        switch (model.family()) {
            case Family::Poisson:
                theta[0] = std::max(theta[0], model.variance_floor());
                break;
            case Family::GaussianMeanVar:
                theta[1] = std::max(theta[1], model.variance_floor());
                break;
            default:
                break;
        }
    }

    double eval(std::span<const double> theta, double* grad, double* neg_hess) const override {
        const std::size_t d = dim();
        if (grad) std::fill(grad, grad + d, 0.0);
        if (neg_hess) std::fill(neg_hess, neg_hess + d * d, 0.0);
        double value = 0.0;
        switch (model.family()) {
            case Family::GaussianMean: {
                for (std::size_t i = begin; i < end; ++i) {
                    double w = weight_at(weights, i - begin);
                    auto y = series.row(i);
                    double q = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        double r = y[j] - theta[j];
                        q += r * r;
                        if (grad) grad[j] += w * r;
                        if (neg_hess) neg_hess[j * d + j] += w;
                    }
                    value += -0.5 * w * q;
                }
                break;
            }
            case Family::Poisson: {
                double t = theta[0];
                if (t <= 0.0) return -kInf;
                for (std::size_t i = begin; i < end; ++i) {
                    double w = weight_at(weights, i - begin);
                    double y = series.values[i];
                    value += w * (y * std::log(t) - t - log_gamma(y + 1.0));
                    if (grad) grad[0] += w * (y / t - 1.0);
                    if (neg_hess) neg_hess[0] += w * y / (t * t);
                }
                break;
            }
            case Family::GaussianMeanVar: {
                double mu = theta[0], v = theta[1];
                if (v <= 0.0) return -kInf;
                constexpr double half_log_2pi = 0.91893853320467274178;
                for (std::size_t i = begin; i < end; ++i) {
                    double w = weight_at(weights, i - begin);
                    double r = series.values[i] - mu;
                    value += w * (-0.5 * std::log(v) - r * r / (2.0 * v) - half_log_2pi);
                    if (grad) {
                        grad[0] += w * r / v;
                        grad[1] += w * (-0.5 / v + r * r / (2.0 * v * v));
                    }
                    if (neg_hess) {
                        neg_hess[0] += w / v;
                        neg_hess[1] += w * r / (v * v);
                        neg_hess[2] += w * r / (v * v);
                        neg_hess[3] += w * (r * r / (v * v * v) - 0.5 / (v * v));
                    }
                }
                break;
            }
            case Family::Glm: {
                const auto& link = model.link();
                for (std::size_t i = begin; i < end; ++i) {
                    double w = weight_at(weights, i - begin);
                    double y = series.values[i];
                    auto psi = model.factor(i);
                    double u = dot(psi, theta);
                    double gu = link.g(u);
                    if (!std::isfinite(gu)) return -kInf;
                    value += w * (y * u - gu);
                    if (grad) {
                        double c = w * (y - link.dg(u));
                        for (std::size_t j = 0; j < d; ++j) grad[j] += c * psi[j];
                    }
                    if (neg_hess) {
                        double c = w * link.d2g(u);
                        for (std::size_t j = 0; j < d; ++j) {
                            for (std::size_t k = 0; k < d; ++k) neg_hess[j * d + k] += c * psi[j] * psi[k];
                        }
                    }
                }
                break;
            }
        }
        return value;
    }
};

// theta -> L(theta, left) + L(theta + shift, right), both windows weighted.
struct ShiftedObjective final : Objective {
    WindowObjective left;
    WindowObjective right;
    std::span<const double> shift;
    mutable std::vector<double> shifted;  // scratch

    ShiftedObjective(const Model& m, const TimeSeries& s, std::size_t lb, std::size_t le,
                     std::size_t rb, std::size_t re, std::span<const double> sh,
                     std::span<const double> wl, std::span<const double> wr)
        : left(m, s, lb, le, wl), right(m, s, rb, re, wr), shift(sh), shifted(sh.size()) {}

    std::size_t dim() const override { return left.dim(); }

    void project(std::span<double> theta) const override {
        const Model& m = left.model;
        switch (m.family()) {
            case Family::Poisson:
                theta[0] = std::max(theta[0], m.variance_floor() + std::max(0.0, -shift[0]));
                break;
            case Family::GaussianMeanVar:
                theta[1] = std::max(theta[1], m.variance_floor() + std::max(0.0, -shift[1]));
                break;
            default:
                break;
        }
    }

    double eval(std::span<const double> theta, double* grad, double* neg_hess) const override {
        const std::size_t d = dim();
        for (std::size_t j = 0; j < d; ++j) shifted[j] = theta[j] + shift[j];
        double fl = left.eval(theta, grad, neg_hess);
        if (!std::isfinite(fl)) return -kInf;
        if (grad) {
            scratch_grad.assign(d, 0.0);
        }
        if (neg_hess) {
            scratch_hess.assign(d * d, 0.0);
        }
        double fr = right.eval(shifted, grad ? scratch_grad.data() : nullptr,
                               neg_hess ? scratch_hess.data() : nullptr);
        if (!std::isfinite(fr)) return -kInf;
        if (grad) {
            for (std::size_t j = 0; j < d; ++j) grad[j] += scratch_grad[j];
        }
        if (neg_hess) {
            for (std::size_t j = 0; j < d * d; ++j) neg_hess[j] += scratch_hess[j];
        }
        return fl + fr;
    }

    mutable std::vector<double> scratch_grad;
    mutable std::vector<double> scratch_hess;
};

struct WeightedMoments {
    double w = 0.0;   // sum of weights
    double wy = 0.0;  // sum of w*y (scalar families)
    double wy2 = 0.0;
};

WeightedMoments scalar_moments(const TimeSeries& series, std::size_t begin, std::size_t end,
                               std::span<const double> weights) {
    WeightedMoments m;
    for (std::size_t i = begin; i < end; ++i) {
        double w = weight_at(weights, i - begin);
        double y = series.values[i];
        m.w += w;
        m.wy += w * y;
        m.wy2 += w * y * y;
    }
    return m;
}

}  // namespace

double GlmLink::g(double u) const {
    switch (kind) {
        case GlmLinkKind::Quadratic: return 0.5 * u * u;
        case GlmLinkKind::Exp: return std::exp(u);
        case GlmLinkKind::Logistic: return u > 30.0 ? u : std::log1p(std::exp(u));
    }
    return 0.0;
}

double GlmLink::dg(double u) const {
    switch (kind) {
        case GlmLinkKind::Quadratic: return u;
        case GlmLinkKind::Exp: return std::exp(u);
        case GlmLinkKind::Logistic: return 1.0 / (1.0 + std::exp(-u));
    }
    return 0.0;
}

double GlmLink::d2g(double u) const {
    switch (kind) {
        case GlmLinkKind::Quadratic: return 1.0;
        case GlmLinkKind::Exp: return std::exp(u);
        case GlmLinkKind::Logistic: {
            double s = 1.0 / (1.0 + std::exp(-u));
            return s * (1.0 - s);
        }
    }
    return 0.0;
}

double GlmLink::d3g(double u) const {
    switch (kind) {
        case GlmLinkKind::Quadratic: return 0.0;
        case GlmLinkKind::Exp: return std::exp(u);
        case GlmLinkKind::Logistic: {
            double s = 1.0 / (1.0 + std::exp(-u));
            return s * (1.0 - s) * (1.0 - 2.0 * s);
        }
    }
    return 0.0;
}

GlmLink GlmLink::from_name(const std::string& name) {
    if (name == "quadratic") return {GlmLinkKind::Quadratic};
    if (name == "exp") return {GlmLinkKind::Exp};
    if (name == "logistic") return {GlmLinkKind::Logistic};
    throw std::invalid_argument("unknown glm link: " + name);
}

std::string GlmLink::name() const {
    switch (kind) {
        case GlmLinkKind::Quadratic: return "quadratic";
        case GlmLinkKind::Exp: return "exp";
        case GlmLinkKind::Logistic: return "logistic";
    }
    return "?";
}

Model Model::gaussian_mean(std::size_t dim) {
    if (dim < 1) throw std::invalid_argument("gaussian-mean dimension must be >= 1");
    Model m;
    m.family_ = Family::GaussianMean;
    m.param_dim_ = dim;
    return m;
}

Model Model::gaussian_meanvar(double variance_floor) {
    if (variance_floor <= 0.0) throw std::invalid_argument("variance floor must be > 0");
    Model m;
    m.family_ = Family::GaussianMeanVar;
    m.param_dim_ = 2;
    m.floor_ = variance_floor;
    return m;
}

Model Model::poisson(double rate_floor) {
    if (rate_floor <= 0.0) throw std::invalid_argument("rate floor must be > 0");
    Model m;
    m.family_ = Family::Poisson;
    m.param_dim_ = 1;
    m.floor_ = rate_floor;
    return m;
}

Model Model::glm(GlmLink link, std::vector<double> factors, std::size_t factor_dim) {
    if (factor_dim < 1) throw std::invalid_argument("glm factor dimension must be >= 1");
    if (factors.empty() || factors.size() % factor_dim != 0) {
        throw DimensionMismatchError("glm factor matrix size must be a multiple of factor_dim");
    }
    Model m;
    m.family_ = Family::Glm;
    m.param_dim_ = factor_dim;
    m.link_ = link;
    m.factors_ = std::move(factors);
    m.factor_dim_ = factor_dim;
    return m;
}

Model Model::glm_from_series(GlmLink link, const TimeSeries& series) {
    if (!series.has_factors()) throw std::invalid_argument("series carries no factors");
    return glm(link, series.factors, series.factor_dim);
}

void Model::check_series(const TimeSeries& series) const {
    switch (family_) {
        case Family::GaussianMean:
            if (series.p != param_dim_) {
                throw DimensionMismatchError("gaussian-mean model dimension " +
                                             std::to_string(param_dim_) + " vs series dimension " +
                                             std::to_string(series.p));
            }
            break;
        case Family::GaussianMeanVar:
        case Family::Poisson:
        case Family::Glm:
            if (series.p != 1) {
                throw DimensionMismatchError(family_name(family_) + " expects scalar observations");
            }
            if (family_ == Family::Glm && factor_count() < series.n) {
                throw DimensionMismatchError("glm factor matrix shorter than the series");
            }
            break;
    }
}

double Model::loglik_term(std::span<const double> y, std::size_t index,
                          std::span<const double> theta) const {
    if (theta.size() != param_dim_) {
        throw DimensionMismatchError("theta dimension mismatch");
    }
    switch (family_) {
        case Family::GaussianMean: {
            if (y.size() != param_dim_) throw DimensionMismatchError("observation dimension mismatch");
            double q = 0.0;
            for (std::size_t j = 0; j < y.size(); ++j) {
                double r = y[j] - theta[j];
                q += r * r;
            }
            return -0.5 * q;
        }
        case Family::GaussianMeanVar: {
            double v = theta[1];
            if (v <= 0.0) throw DomainError("variance must be > 0");
            double r = y[0] - theta[0];
            constexpr double half_log_2pi = 0.91893853320467274178;
            return -0.5 * std::log(v) - r * r / (2.0 * v) - half_log_2pi;
        }
        case Family::Poisson: {
            double t = theta[0];
            if (t <= 0.0) throw DomainError("rate must be > 0");
            return y[0] * std::log(t) - t - log_gamma(y[0] + 1.0);
        }
        case Family::Glm: {
            auto psi = factor(index);
            double u = dot(psi, theta);
            return y[0] * u - link_.g(u);
        }
    }
    return 0.0;
}

double Model::loglik_window(const TimeSeries& series, std::size_t begin, std::size_t end,
                            std::span<const double> theta, std::span<const double> weights) const {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        s += weight_at(weights, i - begin) * loglik_term(series.row(i), i, theta);
    }
    return s;
}

MleResult Model::mle(const TimeSeries& series, std::size_t begin, std::size_t end,
                     std::span<const double> weights, SolverChoice solver) const {
    if (begin >= end || end > series.n) throw std::invalid_argument("empty or invalid window");
    if (!weights.empty()) {
        if (weights.size() != end - begin) {
            throw DimensionMismatchError("weights length must equal the window length");
        }
        if (all_zero(weights)) throw DegenerateWindowError("all-zero weights");
    }

    if (solver == SolverChoice::Newton || family_ == Family::Glm) {
        WindowObjective obj(*this, series, begin, end, weights);
        std::vector<double> theta0(param_dim_, 0.0);
        if (family_ == Family::Poisson || family_ == Family::GaussianMeanVar) {
            // Unweighted moments give a feasible interior start.
            WeightedMoments m = scalar_moments(series, begin, end, {});
            double mean = m.wy / m.w;
            if (family_ == Family::Poisson) {
                theta0[0] = std::max(mean, floor_);
            } else {
                theta0[0] = mean;
                theta0[1] = std::max(m.wy2 / m.w - mean * mean, floor_);
            }
        }
        NewtonOutcome out = damped_newton(obj, std::move(theta0));
        return {std::move(out.theta), out.value, out.iterations, out.converged};
    }

    MleResult r;
    r.theta.assign(param_dim_, 0.0);
    switch (family_) {
        case Family::GaussianMean: {
            double a = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                double w = weight_at(weights, i - begin);
                a += w;
                auto y = series.row(i);
                for (std::size_t j = 0; j < param_dim_; ++j) r.theta[j] += w * y[j];
            }
            if (a == 0.0) throw DegenerateWindowError("weights cancel to zero total mass");
            for (double& v : r.theta) v /= a;
            break;
        }
        case Family::Poisson: {
            WeightedMoments m = scalar_moments(series, begin, end, weights);
            if (m.w <= 0.0) {
                r.theta[0] = floor_;
                r.converged = false;
            } else {
                double mean = m.wy / m.w;
                if (mean < 0.0) {
                    r.theta[0] = floor_;
                    r.converged = false;  // negative-weight artifact
                } else {
                    r.theta[0] = std::max(mean, floor_);
                }
            }
            break;
        }
        case Family::GaussianMeanVar: {
            WeightedMoments m = scalar_moments(series, begin, end, weights);
            if (m.w <= 0.0) {
                WeightedMoments u = scalar_moments(series, begin, end, {});
                r.theta[0] = u.wy / u.w;
                r.theta[1] = floor_;
                r.converged = false;
            } else {
                double mu = m.wy / m.w;
                double v = m.wy2 / m.w - mu * mu;
                r.theta[0] = mu;
                if (v < 0.0) {
                    r.theta[1] = floor_;
                    r.converged = false;
                } else {
                    r.theta[1] = std::max(v, floor_);
                }
            }
            break;
        }
        case Family::Glm:
            break;  // handled above
    }
    r.loglik = loglik_window(series, begin, end, r.theta, weights);
    return r;
}

ShiftedPairResult Model::mle_shifted_pair(const TimeSeries& series, std::size_t left_begin,
                                          std::size_t left_end, std::size_t right_begin,
                                          std::size_t right_end, std::span<const double> shift,
                                          std::span<const double> weights_left,
                                          std::span<const double> weights_right) const {
    if (left_begin >= left_end || right_begin >= right_end) {
        throw std::invalid_argument("shifted pair needs nonempty windows");
    }
    if (shift.size() != param_dim_) throw DimensionMismatchError("shift dimension mismatch");
    bool wl_zero = !weights_left.empty() && all_zero(weights_left);
    bool wr_zero = !weights_right.empty() && all_zero(weights_right);
    if (wl_zero && wr_zero) throw DegenerateWindowError("all-zero weights");

    if (family_ == Family::GaussianMean) {
        // Weighted mean of left data and shift-corrected right data.
        ShiftedPairResult r;
        r.theta.assign(param_dim_, 0.0);
        double a = 0.0;
        for (std::size_t i = left_begin; i < left_end; ++i) {
            double w = weight_at(weights_left, i - left_begin);
            a += w;
            auto y = series.row(i);
            for (std::size_t j = 0; j < param_dim_; ++j) r.theta[j] += w * y[j];
        }
        for (std::size_t i = right_begin; i < right_end; ++i) {
            double w = weight_at(weights_right, i - right_begin);
            a += w;
            auto y = series.row(i);
            for (std::size_t j = 0; j < param_dim_; ++j) r.theta[j] += w * (y[j] - shift[j]);
        }
        if (a == 0.0) {
            r.converged = false;
            return r;
        }
        for (double& v : r.theta) v /= a;
        std::vector<double> shifted(param_dim_);
        for (std::size_t j = 0; j < param_dim_; ++j) shifted[j] = r.theta[j] + shift[j];
        r.value = loglik_window(series, left_begin, left_end, r.theta, weights_left) +
                  loglik_window(series, right_begin, right_end, shifted, weights_right);
        return r;
    }

    ShiftedObjective obj(*this, series, left_begin, left_end, right_begin, right_end, shift,
                         weights_left, weights_right);

    // Start from the weighted left MLE; with identity weights and the MLE
    // difference as shift this is already stationary.
    std::vector<double> theta0;
    MleResult left = mle(series, left_begin, left_end, weights_left);
    if (left.converged) {
        theta0 = left.theta;
    } else {
        theta0.assign(param_dim_, 0.0);
        if (family_ == Family::Poisson || family_ == Family::GaussianMeanVar) {
            WeightedMoments u = scalar_moments(series, left_begin, left_end, {});
            double mean = u.wy / u.w;
            theta0[0] = family_ == Family::Poisson ? std::max(mean, floor_) : mean;
            if (family_ == Family::GaussianMeanVar) {
                theta0[1] = std::max(u.wy2 / u.w - mean * mean, floor_);
            }
        }
    }
    NewtonOutcome out = damped_newton(obj, std::move(theta0));
    return {std::move(out.theta), out.value, out.iterations, out.converged};
}

Eigen::MatrixXd Model::glm_fisher(std::size_t begin, std::size_t end,
                                  std::span<const double> theta) const {
    if (family_ != Family::Glm) throw std::invalid_argument("glm_fisher requires the glm family");
    if (theta.size() != param_dim_) throw DimensionMismatchError("theta dimension mismatch");
    const auto d = static_cast<Eigen::Index>(param_dim_);
    Eigen::MatrixXd fisher = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = begin; i < end; ++i) {
        auto psi = factor(i);
        double u = dot(psi, theta);
        double c = link_.d2g(u);
        for (Eigen::Index j = 0; j < d; ++j) {
            for (Eigen::Index k = 0; k < d; ++k) {
                fisher(j, k) += c * psi[static_cast<std::size_t>(j)] * psi[static_cast<std::size_t>(k)];
            }
        }
    }
    return fisher;
}

Family Model::family_from_name(const std::string& name) {
    if (name == "gaussian-mean") return Family::GaussianMean;
    if (name == "gaussian-meanvar") return Family::GaussianMeanVar;
    if (name == "poisson") return Family::Poisson;
    if (name == "glm") return Family::Glm;
    throw std::invalid_argument("unknown model family: " + name);
}

std::string Model::family_name(Family family) {
    switch (family) {
        case Family::GaussianMean: return "gaussian-mean";
        case Family::GaussianMeanVar: return "gaussian-meanvar";
        case Family::Poisson: return "poisson";
        case Family::Glm: return "glm";
    }
    return "?";
}

}  // namespace cpd
