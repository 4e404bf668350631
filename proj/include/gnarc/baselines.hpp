#pragma once

#include <Eigen/Dense>
#include <iostream>
#include <stdexcept>

#include "gnarc/design.hpp"
#include "gnarc/dists.hpp"
#include "gnarc/forecast.hpp"
#include "gnarc/network.hpp"
#include "gnarc/optimize.hpp"
#include "gnarc/response.hpp"

namespace gnarc {

/// Plain linear conditional least squares (unconstrained, identity
/// response) on the shared design matrix.
inline FitResult fit_gnar_cls(const CountSeries& series, const Network& net,
                              const ModelOrder& order) {
    const Mat x = build_design(series, net, order);
    const Vec y = build_target(series, order.p);
    const ParamLayout layout(order, series.nodes());

    const Vec beta = solve_normal_equations(x, y);
    const Vec resid = y - x * beta;

    FitResult fit;
    fit.model = "gnar";
    fit.method = "cls";
    fit.order = order;
    fit.params = ParamVector(beta, layout.unbounded());
    fit.objective = resid.squaredNorm();
    fit.converged = true;
    fit.iterations = 0;
    fit.grad_norm = (2.0 * x.transpose() * resid).lpNorm<Eigen::Infinity>();
    return fit;
}

/// Recursive linear mean forecasts.
inline Mat predict_gnar(const Network& net, const FitResult& fit, const CountSeries& history,
                        int horizon) {
    return forecast_recursive(net, fit.order, fit.params, ResponseFunction::identity(), history,
                              horizon);
}

/// Linear Poisson network autoregression of order one: conditional mean
/// beta0 + alpha1 X_{i,t-1} + beta1 * (row-normalized neighbour average),
/// all parameters non-negative, Poisson conditionals.  Structurally this is
/// the lag-1, stage-1, global-alpha layout with an additive intercept.
struct PnarModel {
    double beta0 = 0.0;
    double alpha1 = 0.0;
    double beta1 = 0.0;

    void validate() const {
        if (beta0 < 0.0 || alpha1 < 0.0 || beta1 < 0.0)
            throw std::invalid_argument("PNAR parameters must be non-negative");
    }
};

inline ModelOrder pnar_order() {
    ModelOrder order = ModelOrder::full(1, InterceptMode::additive);
    return order;
}

inline ParamVector pnar_params(const PnarModel& model, const Network& net) {
    model.validate();
    const ParamLayout layout(pnar_order(), net.node_count());
    Vec v(layout.size());
    v[layout.alpha(1)] = model.alpha1;
    v[layout.beta(1, 1)] = model.beta1;
    v[layout.intercept()] = model.beta0;
    return ParamVector(v, layout.nonnegative_bounds());
}

/// Spectral radius of G1 = beta1 W + alpha1 I; below one certifies the
/// stationarity condition.
inline double pnar_spectral_radius(const PnarModel& model, const Network& net) {
    const Mat g = model.beta1 * net.weight_matrix(1) +
                  model.alpha1 * Mat::Identity(net.node_count(), net.node_count());
    return g.eigenvalues().cwiseAbs().maxCoeff();
}

/// Conditionally independent Poisson draws given the past (no
/// contemporaneous copula dependence).
inline CountSeries simulate_pnar(const PnarModel& model, const Network& net, int t_len,
                                 int burn_in, Rng& rng) {
    model.validate();
    if (t_len < 1) throw std::invalid_argument("series length must be >= 1");
    if (burn_in < 0) throw std::invalid_argument("burn-in must be non-negative");
    const int n = net.node_count();
    const ModelOrder order = pnar_order();
    const ParamVector params = pnar_params(model, net);

    const int total = 1 + burn_in + t_len;
    Eigen::MatrixXi path(n, total);
    for (int i = 0; i < n; ++i) path(i, 0) = static_cast<int>(poisson_sample(model.beta0, rng));

    Mat window(n, 1);
    for (int t = 1; t < total; ++t) {
        for (int i = 0; i < n; ++i) window(i, 0) = static_cast<double>(path(i, t - 1));
        const Vec mean = linear_predictor(net, order, params, window);
        for (int i = 0; i < n; ++i) path(i, t) = static_cast<int>(poisson_sample(mean[i], rng));
    }
    return CountSeries(path.rightCols(t_len));
}

/// Quasi-maximum likelihood for the linear PNAR(1): maximizes the Poisson
/// quasi-log-likelihood sum [X log lambda - lambda] under non-negativity,
/// by projected-gradient ADAM from the clipped least-squares solution.
/// A conditional mean that hits zero against a positive count is floored at
/// 1e-10 with a warning.
inline FitResult fit_pnar1(const CountSeries& series, const Network& net,
                           OptimizerConfig cfg = {}) {
    const ModelOrder order = pnar_order();
    const Mat x = build_design(series, net, order);
    const Vec y = build_target(series, 1);
    const ParamLayout layout(order, series.nodes());

    // Clipped least-squares start; the intercept must begin strictly positive.
    Vec init = project_box(solve_normal_equations(x, y), layout.nonnegative_bounds());
    if (init[layout.intercept()] <= 0.0) init[layout.intercept()] = 1e-3;

    constexpr double kLambdaFloor = 1e-10;
    bool floored = false;
    auto obj_grad = [&](const Vec& beta, Vec& grad) {
        const Eigen::ArrayXd lam_raw = (x * beta).array();
        const Eigen::ArrayXd lam = lam_raw.max(kLambdaFloor);
        if ((lam_raw <= 0.0 && y.array() > 0.0).any()) floored = true;
        grad = -(x.transpose() * (y.array() / lam - 1.0).matrix());
        return lam.sum() - (y.array() * lam.log()).sum();
    };
    cfg.box = layout.nonnegative_bounds();
    const OptimResult opt = adam_minimize(obj_grad, init, cfg);
    if (floored)
        std::cerr << "warning: PNAR conditional mean floored at " << kLambdaFloor
                  << " against a positive count during fitting\n";

    FitResult fit;
    fit.model = "pnar";
    fit.method = "qmle";
    fit.order = order;
    fit.params = ParamVector(opt.x, layout.nonnegative_bounds());
    fit.objective = opt.objective;
    fit.converged = opt.converged;
    fit.iterations = opt.iterations;
    fit.grad_norm = opt.grad_norm;
    return fit;
}

/// Forecasts from the fitted PNAR mean recursion (identity response).
inline Mat predict_pnar(const Network& net, const FitResult& fit, const CountSeries& history,
                        int horizon) {
    return forecast_recursive(net, fit.order, fit.params, ResponseFunction::identity(), history,
                              horizon);
}

}  // namespace gnarc
