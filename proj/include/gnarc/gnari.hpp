#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "gnarc/design.hpp"
#include "gnarc/dists.hpp"
#include "gnarc/forecast.hpp"
#include "gnarc/network.hpp"
#include "gnarc/optimize.hpp"
#include "gnarc/response.hpp"

namespace gnarc {

/// Innovation mean per node from the intercept entries (constant across
/// nodes for a global intercept, zero when the model has none).
inline Vec innovation_means(const ParamLayout& layout, const ParamVector& params) {
    const int n = layout.node_count();
    Vec lambda = Vec::Zero(n);
    if (layout.has_intercept())
        for (int i = 0; i < n; ++i) lambda[i] = params.values[layout.intercept(i)];
    return lambda;
}

/// Thinning-based count network model: coefficient multiplications act as
/// binomial thinning, innovations are Poisson with mean lambda_i.
struct GnariModel {
    Network net;
    ModelOrder order;
    ParamVector params;

    GnariModel(Network network, ModelOrder model_order, ParamVector coefficients)
        : net(std::move(network)), order(std::move(model_order)), params(std::move(coefficients)) {
        const ParamLayout layout(order, net.node_count());
        if (params.size() != layout.size())
            throw std::invalid_argument("parameter vector does not match order layout");
        validate_thinning(layout);
    }

    ParamLayout layout() const { return ParamLayout(order, net.node_count()); }

private:
    void validate_thinning(const ParamLayout& layout) const {
        for (int j = 1; j <= order.p; ++j) {
            if (layout.has_alpha(j))
                for (int i = 0; i < net.node_count(); ++i) {
                    const double a = params.values[layout.alpha(j, i)];
                    if (!(a >= 0.0 && a <= 1.0))
                        throw std::invalid_argument("alpha at lag " + std::to_string(j) +
                                                    " is not a valid thinning probability: " +
                                                    std::to_string(a));
                }
            for (int r = 1; r <= order.s[j - 1]; ++r) {
                const double b = params.values[layout.beta(j, r)];
                if (!(b >= 0.0 && b <= 1.0))
                    throw std::invalid_argument("beta at lag " + std::to_string(j) + ", stage " +
                                                std::to_string(r) +
                                                " is not a valid thinning probability: " +
                                                std::to_string(b));
            }
        }
        if (layout.has_intercept())
            for (int i = 0; i < net.node_count(); ++i)
                if (params.values[layout.intercept(i)] < 0.0)
                    throw std::invalid_argument("innovation mean must be non-negative");
    }
};

/// Simulates the one-layer thinning form: every stage-r neighbour q at lag
/// j is thinned with probability beta_{j,r} w_{i,q}, own lags with
/// alpha_{i,j}, plus a Poisson(lambda_i) innovation.  (Distributionally
/// identical to the nested-thinning form.)  Initial state is independent
/// Poisson(lambda_i); the first burn_in steps are discarded.
inline CountSeries simulate_gnari(const GnariModel& model, int t_len, int burn_in, Rng& rng) {
    if (t_len < 1) throw std::invalid_argument("series length must be >= 1");
    if (burn_in < 0) throw std::invalid_argument("burn-in must be non-negative");
    const int n = model.net.node_count();
    const int p = model.order.p;
    const ParamLayout layout = model.layout();
    const Vec lambda = innovation_means(layout, model.params);

    if (stationarity_margin(model.order, model.params, n) >= 1.0)
        std::cerr << "warning: parameters do not satisfy the sufficient stationarity "
                     "condition (margin >= 1); simulation may diverge\n";

    const int total = p + burn_in + t_len;
    Eigen::MatrixXi path(n, total);
    for (int t = 0; t < p; ++t)
        for (int i = 0; i < n; ++i) path(i, t) = static_cast<int>(poisson_sample(lambda[i], rng));

    for (int t = p; t < total; ++t) {
        for (int i = 0; i < n; ++i) {
            long acc = 0;
            for (int j = 1; j <= p; ++j) {
                if (layout.has_alpha(j))
                    acc += binomial_thin(model.params.values[layout.alpha(j, i)], path(i, t - j),
                                         rng);
                for (int r = 1; r <= model.order.s[j - 1]; ++r) {
                    const auto& set = model.net.stage_neighbours(i, r);
                    if (set.empty()) continue;
                    const double w = 1.0 / static_cast<double>(set.size());
                    const double prob = model.params.values[layout.beta(j, r)] * w;
                    for (int q : set) acc += binomial_thin(prob, path(q, t - j), rng);
                }
            }
            acc += poisson_sample(lambda[i], rng);
            path(i, t) = static_cast<int>(acc);
        }
    }
    return CountSeries(path.rightCols(t_len));
}

/// One-step conditional mean given the last p observations (column j-1 of
/// the window = values j steps back).
inline Vec gnari_conditional_mean(const Network& net, const ModelOrder& order,
                                  const ParamVector& params, const Mat& window) {
    return linear_predictor(net, order, params, window);
}

/// One-step conditional variance: lambda_i plus the thinning variances
/// alpha(1-alpha) X_own and beta w (1 - beta w) X_q accumulated over lags,
/// stages and neighbours.
inline Vec gnari_conditional_variance(const Network& net, const ModelOrder& order,
                                      const ParamVector& params, const Mat& window) {
    const int n = net.node_count();
    if (window.rows() != n || window.cols() < order.p)
        throw std::invalid_argument("history window must be N x p (insufficient history)");
    const ParamLayout layout(order, n);
    Vec var = innovation_means(layout, params);
    for (int i = 0; i < n; ++i) {
        for (int j = 1; j <= order.p; ++j) {
            if (layout.has_alpha(j)) {
                const double a = params.values[layout.alpha(j, i)];
                var[i] += a * (1.0 - a) * window(i, j - 1);
            }
            for (int r = 1; r <= order.s[j - 1]; ++r) {
                const auto& set = net.stage_neighbours(i, r);
                if (set.empty()) continue;
                const double w = 1.0 / static_cast<double>(set.size());
                const double prob = params.values[layout.beta(j, r)] * w;
                for (int q : set) var[i] += prob * (1.0 - prob) * window(q, j - 1);
            }
        }
    }
    return var;
}

/// Exact-to-tolerance conditional pmf of one node's next value: convolves
/// the own-lag binomial pmfs, the per-(lag, stage) Poisson-binomial pmfs
/// (each neighbour weight repeated count times), and a truncated Poisson
/// innovation pmf, then renormalizes.
inline std::vector<double> gnari_conditional_pmf(const Network& net, const ModelOrder& order,
                                                 const ParamVector& params,
                                                 const Eigen::MatrixXi& window, int node,
                                                 double tail_tol = 1e-10) {
    if (!(tail_tol > 0.0 && tail_tol <= 1e-3))
        throw std::invalid_argument("tail tolerance must lie in (0, 1e-3]");
    const int n = net.node_count();
    if (window.rows() != n || window.cols() < order.p)
        throw std::invalid_argument("history window must be N x p (insufficient history)");
    if (node < 0 || node >= n) throw std::out_of_range("node index out of range");
    const ParamLayout layout(order, n);

    const Vec lambda = innovation_means(layout, params);
    std::vector<double> pmf = poisson_pmf_truncated(lambda[node], tail_tol);
    for (int j = 1; j <= order.p; ++j) {
        if (layout.has_alpha(j)) {
            const double a = params.values[layout.alpha(j, node)];
            const int x = window(node, j - 1);
            if (a > 0.0 && x > 0)
                pmf = convolve_pmf(pmf, poisson_binomial_pmf(std::vector<double>(x, a)));
        }
        for (int r = 1; r <= order.s[j - 1]; ++r) {
            const auto& set = net.stage_neighbours(node, r);
            if (set.empty()) continue;
            const double w = 1.0 / static_cast<double>(set.size());
            const double prob = params.values[layout.beta(j, r)] * w;
            if (prob == 0.0) continue;
            std::vector<double> probs;
            for (int q : set)
                probs.insert(probs.end(), static_cast<std::size_t>(window(q, j - 1)), prob);
            if (!probs.empty()) pmf = convolve_pmf(pmf, poisson_binomial_pmf(probs));
        }
    }
    double total = 0.0;
    for (double v : pmf) total += v;
    for (double& v : pmf) v /= total;
    return pmf;
}

/// Plug-in sandwich covariance of the conditional least squares estimator:
/// (X'X)^{-1} (X' diag(conditional variance) X) (X'X)^{-1}, with the
/// conditional variance evaluated at the supplied coefficients.
inline Mat gnari_sandwich_covariance(const CountSeries& series, const Network& net,
                                     const ModelOrder& order, const ParamVector& params) {
    const Mat x = build_design(series, net, order);
    const int n = series.nodes();
    const int t_len = series.length();
    const ParamLayout layout(order, n);

    const Vec lambda = innovation_means(layout, params);
    Vec var(x.rows());
    long row = 0;
    for (int i = 0; i < n; ++i) {
        for (int t = order.p; t < t_len; ++t, ++row) {
            double v = lambda[i];
            for (int j = 1; j <= order.p; ++j) {
                if (layout.has_alpha(j)) {
                    const double a = params.values[layout.alpha(j, i)];
                    v += a * (1.0 - a) * series.data(i, t - j);
                }
                for (int r = 1; r <= order.s[j - 1]; ++r) {
                    const auto& set = net.stage_neighbours(i, r);
                    if (set.empty()) continue;
                    const double w = 1.0 / static_cast<double>(set.size());
                    const double prob = params.values[layout.beta(j, r)] * w;
                    for (int q : set) v += prob * (1.0 - prob) * series.data(q, t - j);
                }
            }
            var[row] = v;
        }
    }

    const Mat gram = x.transpose() * x;
    Eigen::FullPivLU<Mat> lu(gram);
    if (!lu.isInvertible())
        throw SingularSystemError("X'X singular in sandwich covariance", {});
    const Mat bread = lu.inverse();
    const Mat meat = x.transpose() * var.asDiagonal() * x;
    return bread * meat * bread;
}

/// Constrained conditional least squares: solves the normal equations and
/// returns that solution exactly when it is feasible; otherwise refines the
/// clipped solution by projected gradient until the KKT residual reaches
/// 1e-8.  Coefficients are boxed to [0,1] (thinning probabilities) and the
/// innovation mean to [0, inf).
inline FitResult fit_gnari_cls(const CountSeries& series, const Network& net,
                               const ModelOrder& order, double kkt_tol = 1e-8) {
    const Mat x = build_design(series, net, order);
    const Vec y = build_target(series, order.p);
    const ParamLayout layout(order, series.nodes());
    const auto bounds = layout.thinning_bounds();

    const BoxLsResult ls = box_constrained_least_squares(x, y, bounds, kkt_tol);

    FitResult fit;
    fit.model = "gnari";
    fit.method = "cls";
    fit.order = order;
    fit.params = ParamVector(ls.x, bounds);
    fit.objective = (y - x * ls.x).squaredNorm();
    fit.converged = ls.converged;
    fit.iterations = ls.iterations;
    fit.grad_norm = ls.kkt_residual;
    fit.covariance = gnari_sandwich_covariance(series, net, order, fit.params);
    fit.covariance_valid = ls.converged && ls.interior;
    return fit;
}

/// Stationary autocovariance blocks Gamma(0..h_max) of the stacked lag-1
/// embedding: solves Gamma'(0) = A Gamma'(0) A' + diag(B mu_Y) + Sigma_e by
/// fixed-point iteration (B = A elementwise-times (1 - A) is the thinning
/// variance matrix), then propagates Gamma'(h) = A^h Gamma'(0).
inline std::vector<Mat> gnari_autocovariance(const Network& net, const ModelOrder& order,
                                             const ParamVector& params, int h_max,
                                             double tol = 1e-12) {
    if (h_max < 0) throw std::invalid_argument("h_max must be non-negative");
    const int n = net.node_count();
    if (stationarity_margin(order, params, n) >= 1.0)
        throw std::invalid_argument("autocovariance requires the stationarity margin < 1");
    const ParamLayout layout(order, n);
    const int p = order.p;
    const long np = static_cast<long>(n) * p;

    const Mat a = companion_matrix(order, params, net);
    const Mat b = a.array() * (1.0 - a.array());
    const Vec lambda = innovation_means(layout, params);
    const Vec mu = stationary_mean(order, params, net, lambda);
    Vec mu_stacked(np);
    for (int j = 0; j < p; ++j) mu_stacked.segment(static_cast<long>(j) * n, n) = mu;

    Vec d_diag = b * mu_stacked;
    d_diag.head(n) += lambda;
    const Mat d = d_diag.asDiagonal();

    Mat gamma = d;
    for (long it = 0; it < 200000; ++it) {
        Mat next = a * gamma * a.transpose() + d;
        const double delta = (next - gamma).cwiseAbs().maxCoeff();
        gamma = std::move(next);
        if (delta <= tol) break;
        if (it == 199999)
            throw NumericalError("autocovariance fixed point failed to converge");
    }

    std::vector<Mat> out;
    out.reserve(h_max + 1);
    Mat gamma_h = gamma;
    out.push_back(gamma_h.topLeftCorner(n, n));
    for (int h = 1; h <= h_max; ++h) {
        gamma_h = a * gamma_h;
        out.push_back(gamma_h.topLeftCorner(n, n));
    }
    return out;
}

/// Recursive mean forecasts from a fitted thinning model (linear mean).
inline Mat predict_gnari(const Network& net, const FitResult& fit, const CountSeries& history,
                         int horizon) {
    return forecast_recursive(net, fit.order, fit.params, ResponseFunction::identity(), history,
                              horizon);
}

/// Conditional log-likelihood of the observed series under the thinning
/// model, evaluated through the exact conditional pmf.  Expensive; intended
/// for model comparison at desk scale, not as an optimization target.
inline double gnari_log_likelihood(const CountSeries& series, const Network& net,
                                   const ModelOrder& order, const ParamVector& params,
                                   double tail_tol = 1e-10) {
    const int n = series.nodes();
    const int t_len = series.length();
    if (t_len <= order.p) throw std::invalid_argument("series shorter than lag order");
    const ParamLayout layout(order, n);
    const Vec lambda = innovation_means(layout, params);

    double ll = 0.0;
    Eigen::MatrixXi window(n, order.p);
    for (int t = order.p; t < t_len; ++t) {
        for (int j = 1; j <= order.p; ++j) window.col(j - 1) = series.data.col(t - j);
        for (int i = 0; i < n; ++i) {
            // Extend the Poisson truncation so the observed value always
            // lies inside the support.
            std::vector<double> pmf = poisson_pmf_truncated(lambda[i], tail_tol, series.data(i, t));
            for (int j = 1; j <= order.p; ++j) {
                if (layout.has_alpha(j)) {
                    const double aj = params.values[layout.alpha(j, i)];
                    const int xj = window(i, j - 1);
                    if (aj > 0.0 && xj > 0)
                        pmf = convolve_pmf(pmf, poisson_binomial_pmf(std::vector<double>(xj, aj)));
                }
                for (int r = 1; r <= order.s[j - 1]; ++r) {
                    const auto& set = net.stage_neighbours(i, r);
                    if (set.empty()) continue;
                    const double w = 1.0 / static_cast<double>(set.size());
                    const double prob = params.values[layout.beta(j, r)] * w;
                    if (prob == 0.0) continue;
                    std::vector<double> probs;
                    for (int q : set)
                        probs.insert(probs.end(), static_cast<std::size_t>(window(q, j - 1)),
                                     prob);
                    if (!probs.empty()) pmf = convolve_pmf(pmf, poisson_binomial_pmf(probs));
                }
            }
            double total = 0.0;
            for (double v : pmf) total += v;
            const double prob_obs = pmf[series.data(i, t)] / total;
            ll += std::log(std::max(prob_obs, 1e-300));
        }
    }
    return ll;
}

}  // namespace gnarc
