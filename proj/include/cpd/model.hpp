#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpd/types.hpp"

namespace cpd {

inline constexpr double kDefaultVarianceFloor = 1e-12;

enum class Family { GaussianMean, GaussianMeanVar, Poisson, Glm };

enum class GlmLinkKind { Quadratic, Exp, Logistic };

// Link g of the GLM likelihood l_i(theta) = y_i psi_i'theta - g(psi_i'theta).
// g must be strictly convex on the evaluated range; g'' and g''' are exposed
// for the Newton solver and curvature diagnostics.
struct GlmLink {
    GlmLinkKind kind = GlmLinkKind::Exp;

    double g(double u) const;
    double dg(double u) const;
    double d2g(double u) const;
    double d3g(double u) const;

    static GlmLink from_name(const std::string& name);
    std::string name() const;
};

struct MleResult {
    std::vector<double> theta;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = true;
};

struct ShiftedPairResult {
    std::vector<double> theta;  // argmax of theta -> L(theta, left) + L(theta + shift, right)
    double value = 0.0;
    int iterations = 0;
    bool converged = true;
};

enum class SolverChoice { Auto, Newton };

// A likelihood family with per-term log-likelihood, weighted MLE, and the
// shift-coupled pair solver used by the weighted bootstrap.
//
// Dropped additive constants per family (identical across theta, so they
// cancel in every LRT difference):
//   gaussian-mean:    -(p/2) log 2*pi per term
//   gaussian-meanvar: -(1/2) log 2*pi per term
//   poisson:          none (the full log-pmf including -log y! is returned)
//   glm:              the base-measure term of the underlying family
class Model {
public:
    static Model gaussian_mean(std::size_t dim);
    static Model gaussian_meanvar(double variance_floor = kDefaultVarianceFloor);
    static Model poisson(double rate_floor = kDefaultVarianceFloor);
    static Model glm(GlmLink link, std::vector<double> factors, std::size_t factor_dim);
    // Convenience: takes the factor matrix from the series' covariates.
    static Model glm_from_series(GlmLink link, const TimeSeries& series);

    Family family() const { return family_; }
    std::size_t param_dim() const { return param_dim_; }
    double variance_floor() const { return floor_; }
    const GlmLink& link() const { return link_; }
    std::size_t factor_count() const { return factor_dim_ == 0 ? 0 : factors_.size() / factor_dim_; }
    std::span<const double> factor(std::size_t i) const {
        return {factors_.data() + i * factor_dim_, factor_dim_};
    }

    // l_i(theta); `index` selects psi_i and is only consulted by the glm family.
    double loglik_term(std::span<const double> y, std::size_t index,
                       std::span<const double> theta) const;

    // Sum of w_i l_i(theta) over [begin, end); weights default to 1.
    double loglik_window(const TimeSeries& series, std::size_t begin, std::size_t end,
                         std::span<const double> theta, std::span<const double> weights = {}) const;

    MleResult mle(const TimeSeries& series, std::size_t begin, std::size_t end,
                  std::span<const double> weights = {}, SolverChoice solver = SolverChoice::Auto) const;

    // argmax and value of theta -> L(theta, left) + L(theta + shift, right),
    // both sides under the given weights.
    ShiftedPairResult mle_shifted_pair(const TimeSeries& series, std::size_t left_begin,
                                       std::size_t left_end, std::size_t right_begin,
                                       std::size_t right_end, std::span<const double> shift,
                                       std::span<const double> weights_left = {},
                                       std::span<const double> weights_right = {}) const;

    // Fisher matrix sum_i g''(psi_i'theta) psi_i psi_i' over [begin, end).
    // Empty windows yield the zero matrix.
    Eigen::MatrixXd glm_fisher(std::size_t begin, std::size_t end,
                               std::span<const double> theta) const;

    // Validates that this model can be evaluated on the series.
    void check_series(const TimeSeries& series) const;

    static Family family_from_name(const std::string& name);
    static std::string family_name(Family family);

private:
    Model() = default;

    Family family_ = Family::GaussianMean;
    std::size_t param_dim_ = 1;
    double floor_ = kDefaultVarianceFloor;
    GlmLink link_;
    std::vector<double> factors_;
    std::size_t factor_dim_ = 0;
};

}  // namespace cpd
