#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnarc/baselines.hpp"
#include "gnarc/design.hpp"
#include "gnarc/gnari.hpp"
#include "gnarc/ngnar.hpp"
#include "gnarc/optimize.hpp"

namespace gnarc {

enum class ModelKind { gnar, gnari, ngnar_cls, ngnar_cmle };

inline std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::gnar: return "gnar";
        case ModelKind::gnari: return "gnari";
        case ModelKind::ngnar_cls: return "ngnar-cls";
        case ModelKind::ngnar_cmle: return "ngnar-cmle";
    }
    throw std::logic_error("unknown model kind");
}

struct SelectionStep {
    std::string removed;  // e.g. "alpha_3" or "beta_2_1"
    double bic;
};

struct BicSelection {
    ModelOrder order;
    double bic = 0.0;
    std::vector<SelectionStep> steps;
};

namespace detail {

// BIC for a least-squares fit: n log(RSS/n) + k log n.
inline double bic_cls(double rss, long n, int k) {
    const double r = std::max(rss, 1e-300);
    return static_cast<double>(n) * std::log(r / static_cast<double>(n)) +
           static_cast<double>(k) * std::log(static_cast<double>(n));
}

// BIC for a conditional-likelihood fit: -2 loglik + k log n.
inline double bic_cmle(double nll, long n, int k) {
    return 2.0 * nll + static_cast<double>(k) * std::log(static_cast<double>(n));
}

// Column indices of the reduced order inside the full-order design.
inline std::vector<int> subset_columns(const ParamLayout& full, const ModelOrder& reduced,
                                       int n_nodes) {
    std::vector<int> cols;
    for (int j = 1; j <= reduced.p; ++j) {
        if (reduced.alpha_mask[j - 1]) {
            const int count = reduced.global_alpha ? 1 : n_nodes;
            for (int i = 0; i < count; ++i) cols.push_back(full.alpha(j, i));
        }
        for (int r = 1; r <= reduced.s[j - 1]; ++r) cols.push_back(full.beta(j, r));
    }
    if (reduced.intercept != InterceptMode::none) {
        const int count = reduced.local_intercept ? n_nodes : 1;
        for (int i = 0; i < count; ++i) cols.push_back(full.intercept(i));
    }
    return cols;
}

}  // namespace detail

/// Backward deletion under BIC: starts from the full order (every alpha
/// lag included, one neighbourhood stage per lag) and repeatedly removes
/// the single alpha lag or beta stage whose deletion most improves BIC,
/// stopping at a local minimum.  Linear kinds (gnar, gnari) are refit
/// through the cached Gram system; the nonlinear kinds refit with ADAM per
/// candidate, which is markedly slower.  Candidates whose fit fails score
/// BIC = +inf rather than aborting the search.
inline BicSelection backward_bic_select(const CountSeries& series, const Network& net, int max_p,
                                        ModelKind kind,
                                        ResponseFunction response = ResponseFunction::softplus(),
                                        bool local_intercept = false,
                                        OptimizerConfig adam_cfg = {}) {
    if (max_p < 1) throw std::invalid_argument("max lag must be >= 1");
    const int n_nodes = series.nodes();
    const long n_obs = static_cast<long>(n_nodes) * (series.length() - max_p);
    if (n_obs <= 0) throw std::invalid_argument("series shorter than the maximum lag");

    const InterceptMode mode =
        kind == ModelKind::gnari ? InterceptMode::innovation_mean : InterceptMode::additive;
    ModelOrder current = ModelOrder::full(max_p, mode);
    current.local_intercept = local_intercept;

    const bool linear = kind == ModelKind::gnar || kind == ModelKind::gnari;
    const ParamLayout full_layout(current, n_nodes);

    // Gram cache for the linear fast path.
    Mat gram;
    Vec xty;
    double yty = 0.0;
    if (linear) {
        const Mat x = build_design(series, net, current);
        const Vec y = build_target(series, max_p);
        gram = x.transpose() * x;
        xty = x.transpose() * y;
        yty = y.squaredNorm();
    }

    auto evaluate = [&](const ModelOrder& order) -> double {
        const ParamLayout layout(order, n_nodes);
        const int k = layout.size();
        if (k == 0) return std::numeric_limits<double>::infinity();
        try {
            if (linear) {
                const auto cols = detail::subset_columns(full_layout, order, n_nodes);
                Mat g(k, k);
                Vec c(k);
                for (int a = 0; a < k; ++a) {
                    c[a] = xty[cols[a]];
                    for (int b = 0; b < k; ++b) g(a, b) = gram(cols[a], cols[b]);
                }
                Eigen::ColPivHouseholderQR<Mat> qr(g);
                if (qr.rank() < k) return std::numeric_limits<double>::infinity();
                const Vec beta = qr.solve(c);
                double rss;
                if (kind == ModelKind::gnar) {
                    rss = std::max(0.0, yty - 2.0 * c.dot(beta) + beta.dot(g * beta));
                } else {
                    ModelOrder tmp = order;
                    const auto box = ParamLayout(tmp, n_nodes).thinning_bounds();
                    rss = box_ls_gram(g, c, yty, beta, box).objective;
                }
                return detail::bic_cls(rss, n_obs, k);
            }
            // Nonlinear kinds: honest refit per candidate.  The candidate
            // order keeps p = max_p so the effective sample stays fixed.
            if (kind == ModelKind::ngnar_cls) {
                const FitResult fit = fit_ngnar_cls(series, net, order, response, adam_cfg);
                return detail::bic_cls(fit.objective, n_obs, k);
            }
            const FitResult fit = fit_ngnar_cmle(series, net, order, response, adam_cfg);
            return detail::bic_cmle(fit.objective, n_obs, k);
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    BicSelection selection;
    double best_bic = evaluate(current);

    while (true) {
        double step_best = best_bic;
        ModelOrder step_order = current;
        std::string removed;
        for (int j = 1; j <= max_p; ++j) {
            if (current.alpha_mask[j - 1]) {
                ModelOrder cand = current;
                cand.alpha_mask[j - 1] = 0;
                const double bic = evaluate(cand);
                if (bic < step_best) {
                    step_best = bic;
                    step_order = cand;
                    removed = "alpha_" + std::to_string(j);
                }
            }
            if (current.s[j - 1] > 0) {
                ModelOrder cand = current;
                cand.s[j - 1] -= 1;
                const double bic = evaluate(cand);
                if (bic < step_best) {
                    step_best = bic;
                    step_order = cand;
                    removed = "beta_" + std::to_string(j) + "_" +
                              std::to_string(current.s[j - 1]);
                }
            }
        }
        if (removed.empty()) break;
        current = step_order;
        best_bic = step_best;
        selection.steps.push_back({removed, best_bic});
    }

    selection.order = current;
    selection.bic = best_bic;
    return selection;
}

}  // namespace gnarc
