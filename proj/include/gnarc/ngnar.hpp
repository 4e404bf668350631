#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "gnarc/design.hpp"
#include "gnarc/dists.hpp"
#include "gnarc/forecast.hpp"
#include "gnarc/network.hpp"
#include "gnarc/optimize.hpp"
#include "gnarc/response.hpp"

namespace gnarc {

/// Count network model with conditional law X_{i,t} | past ~ Poisson(M_{i,t})
/// where M_{i,t} = g(linear predictor).  Coefficients are unconstrained
/// reals; negative network effects are the point of the model.
struct NgnarModel {
    Network net;
    ModelOrder order;
    ParamVector params;
    ResponseFunction response = ResponseFunction::softplus();

    NgnarModel(Network network, ModelOrder model_order, ParamVector coefficients,
               ResponseFunction rf = ResponseFunction::softplus())
        : net(std::move(network)),
          order(std::move(model_order)),
          params(std::move(coefficients)),
          response(rf) {
        if (params.size() != ParamLayout(order, net.node_count()).size())
            throw std::invalid_argument("parameter vector does not match order layout");
    }

    ParamLayout layout() const { return ParamLayout(order, net.node_count()); }
};

/// Simulates the response-function model.  Initial state draws each node
/// from Poisson(g(intercept_i)); an explicit initial window (column j-1 =
/// values j steps back) can be supplied instead, e.g. to probe ergodicity.
inline CountSeries simulate_ngnar(const NgnarModel& model, int t_len, int burn_in, Rng& rng,
                                  std::optional<Eigen::MatrixXi> initial = std::nullopt) {
    if (t_len < 1) throw std::invalid_argument("series length must be >= 1");
    if (burn_in < 0) throw std::invalid_argument("burn-in must be non-negative");
    const int n = model.net.node_count();
    const int p = model.order.p;
    const ParamLayout layout = model.layout();

    const int total = p + burn_in + t_len;
    Eigen::MatrixXi path(n, total);
    if (initial) {
        if (initial->rows() != n || initial->cols() != p)
            throw std::invalid_argument("initial window must be N x p");
        for (int j = 1; j <= p; ++j) path.col(p - j) = initial->col(j - 1);
    } else {
        for (int t = 0; t < p; ++t)
            for (int i = 0; i < n; ++i) {
                const double icpt =
                    layout.has_intercept() ? model.params.values[layout.intercept(i)] : 0.0;
                const double mean = model.response.value(icpt);
                if (mean < 0.0)
                    throw std::domain_error("negative initial mean " + std::to_string(mean) +
                                            "; response is not a valid Poisson mean here");
                path(i, t) = static_cast<int>(poisson_sample(mean, rng));
            }
    }

    Mat window(n, p);
    for (int t = p; t < total; ++t) {
        for (int j = 1; j <= p; ++j)
            for (int i = 0; i < n; ++i) window(i, j - 1) = static_cast<double>(path(i, t - j));
        const Vec eta = linear_predictor(model.net, model.order, model.params, window);
        for (int i = 0; i < n; ++i) {
            const double mean = model.response.value(eta[i]);
            if (!std::isfinite(mean))
                throw NumericalError("non-finite conditional mean at node " +
                                         std::to_string(i) + ", step " + std::to_string(t));
            if (mean < 0.0)
                throw std::domain_error("negative conditional mean " + std::to_string(mean) +
                                        " at node " + std::to_string(i) +
                                        "; response is not a valid Poisson mean here");
            path(i, t) = static_cast<int>(poisson_sample(mean, rng));
        }
    }
    return CountSeries(path.rightCols(t_len));
}

namespace detail {

inline FitResult make_ngnar_fit(const std::string& method, const ResponseFunction& response,
                                const ModelOrder& order, const ParamLayout& layout,
                                const OptimResult& opt) {
    FitResult fit;
    fit.model = "ngnar";
    fit.method = method;
    fit.response = response.name();
    fit.response_sharpness =
        response.kind() == ResponseFunction::Kind::softplus ? response.sharpness() : 1.0;
    fit.order = order;
    fit.params = ParamVector(opt.x, layout.unbounded());
    fit.objective = opt.objective;
    fit.converged = opt.converged;
    fit.iterations = opt.iterations;
    fit.grad_norm = opt.grad_norm;
    return fit;
}

}  // namespace detail

namespace detail {

// One deterministic initialization by default; multi_start > 0 adds that
// many seeded jittered restarts around the base point and keeps the best
// objective (the objective is not convex for curved responses).
template <typename ObjGrad>
OptimResult minimize_with_restarts(ObjGrad&& obj_grad, const Vec& base_init,
                                   const OptimizerConfig& cfg, int multi_start) {
    OptimResult best = adam_minimize(obj_grad, base_init, cfg);
    if (multi_start <= 0) return best;
    Rng rng(0x5eedULL);
    std::normal_distribution<double> jitter(0.0, 1.0);
    for (int s = 0; s < multi_start; ++s) {
        Vec start = base_init;
        for (int k = 0; k < start.size(); ++k)
            start[k] += jitter(rng) * 0.25 * std::max(1.0, std::abs(base_init[k]));
        const OptimResult trial = adam_minimize(obj_grad, start, cfg);
        if (trial.objective < best.objective) best = trial;
    }
    return best;
}

}  // namespace detail

/// Conditional least squares: minimizes ||Y - g(X b)||^2 by full-batch ADAM
/// with the analytic gradient -2 X'[(Y - g(X b)) .* g'(X b)], starting from
/// the linear normal-equation solution.
inline FitResult fit_ngnar_cls(const CountSeries& series, const Network& net,
                               const ModelOrder& order, const ResponseFunction& response,
                               OptimizerConfig cfg = {}, int multi_start = 0) {
    const Mat x = build_design(series, net, order);
    const Vec y = build_target(series, order.p);
    const ParamLayout layout(order, series.nodes());
    const Vec init = solve_normal_equations(x, y);

    auto obj_grad = [&](const Vec& beta, Vec& grad) {
        const Eigen::ArrayXd eta = (x * beta).array();
        const Eigen::ArrayXd mu = response.value(eta);
        const Eigen::ArrayXd resid = y.array() - mu;
        grad = -2.0 * (x.transpose() * (resid * response.grad(eta)).matrix());
        return (resid * resid).sum();
    };
    cfg.box.clear();
    const OptimResult opt = detail::minimize_with_restarts(obj_grad, init, cfg, multi_start);
    return detail::make_ngnar_fit("cls", response, order, layout, opt);
}

/// Conditional maximum likelihood for the Poisson family: maximizes
/// sum_k [y_k log mu_k - mu_k] with mu = g(X b), by ADAM on the negative
/// log-likelihood, initialized from the conditional least squares solution.
/// Requires a strictly positive response (softplus or exponential).
inline FitResult fit_ngnar_cmle(const CountSeries& series, const Network& net,
                                const ModelOrder& order, const ResponseFunction& response,
                                OptimizerConfig cfg = {}, int multi_start = 0) {
    if (!response.strictly_positive())
        throw std::invalid_argument("conditional MLE needs a strictly positive response "
                                    "(softplus or exponential), got " +
                                    response.name());
    const Mat x = build_design(series, net, order);
    const Vec y = build_target(series, order.p);
    const ParamLayout layout(order, series.nodes());

    OptimizerConfig cls_cfg = cfg;
    cls_cfg.record_trace = false;
    const FitResult cls = fit_ngnar_cls(series, net, order, response, cls_cfg, multi_start);

    auto obj_grad = [&](const Vec& beta, Vec& grad) {
        const Eigen::ArrayXd eta = (x * beta).array();
        const Eigen::ArrayXd mu = response.value(eta);
        // mu > 0 is guaranteed analytically; the floor only guards against
        // double underflow deep in the softplus tail.
        const Eigen::ArrayXd mu_safe = mu.max(1e-290);
        const Eigen::ArrayXd ratio = y.array() / mu_safe;
        grad = -(x.transpose() * ((ratio - 1.0) * response.grad(eta)).matrix());
        const double nll = mu.sum() - (y.array() * response.log_value(eta)).sum();
        return nll;
    };
    cfg.box.clear();
    const OptimResult opt =
        detail::minimize_with_restarts(obj_grad, cls.params.values, cfg, multi_start);
    return detail::make_ngnar_fit("cmle", response, order, layout, opt);
}

/// Recursive mean forecasts through the response function.
inline Mat predict_ngnar(const Network& net, const FitResult& fit, const CountSeries& history,
                         int horizon) {
    const ResponseFunction rf = ResponseFunction::from_name(
        fit.response.empty() ? "softplus" : fit.response, fit.response_sharpness);
    return forecast_recursive(net, fit.order, fit.params, rf, history, horizon);
}

}  // namespace gnarc
