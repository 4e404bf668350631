#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnarc/design.hpp"

namespace gnarc {

/// ADAM settings; full-batch gradients only, optional per-coordinate box.
struct OptimizerConfig {
    double step = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long max_iterations = 50000;
    double grad_tolerance = 1e-6;
    std::vector<Bound> box;  // empty = unconstrained
    bool record_trace = false;

    void validate() const {
        if (!(step > 0.0)) throw std::invalid_argument("step size must be positive");
        if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
            throw std::invalid_argument("moment decays must lie in (0,1)");
        if (!(grad_tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
        if (max_iterations < 1) throw std::invalid_argument("need at least one iteration");
    }
};

struct TracePoint {
    long iteration;
    double objective;
    double grad_norm;
};

struct OptimResult {
    Vec x;
    double objective = 0.0;
    bool converged = false;
    long iterations = 0;
    double grad_norm = 0.0;
    std::vector<TracePoint> trace;
};

inline Vec project_box(Vec x, const std::vector<Bound>& box) {
    if (box.empty()) return x;
    if (static_cast<std::size_t>(x.size()) != box.size())
        throw std::invalid_argument("box bound count does not match dimension");
    for (int k = 0; k < x.size(); ++k) x[k] = std::min(std::max(x[k], box[k].lo), box[k].hi);
    return x;
}

/// First-order residual ||x - P_box(x - g)||_inf; reduces to ||g||_inf when
/// no box is active.
inline double projected_gradient_residual(const Vec& x, const Vec& grad,
                                          const std::vector<Bound>& box) {
    if (box.empty()) return grad.lpNorm<Eigen::Infinity>();
    return (x - project_box(x - grad, box)).lpNorm<Eigen::Infinity>();
}

/// ADAM with bias correction and optional projection onto the box after
/// each step.  The evaluator must be deterministic: f(x, grad_out) returns
/// the objective and fills the gradient.  Stops when the first-order
/// residual drops below the tolerance or iterations run out.  Non-finite
/// objectives or gradients abort with a diagnostic.
template <typename ObjGrad>
OptimResult adam_minimize(ObjGrad&& f, const Vec& init, const OptimizerConfig& cfg) {
    cfg.validate();
    const int dim = static_cast<int>(init.size());
    Vec x = project_box(init, cfg.box);
    Vec m = Vec::Zero(dim);
    Vec v = Vec::Zero(dim);
    Vec grad(dim);

    OptimResult result;
    double b1t = 1.0, b2t = 1.0;
    for (long it = 0; it <= cfg.max_iterations; ++it) {
        const double obj = f(x, grad);
        if (!std::isfinite(obj))
            throw NumericalError("non-finite objective at iteration " + std::to_string(it));
        if (!grad.allFinite())
            throw NumericalError("non-finite gradient at iteration " + std::to_string(it));

        const double residual = projected_gradient_residual(x, grad, cfg.box);
        if (cfg.record_trace) result.trace.push_back({it, obj, residual});
        if (residual <= cfg.grad_tolerance || it == cfg.max_iterations) {
            result.x = x;
            result.objective = obj;
            result.converged = residual <= cfg.grad_tolerance;
            result.iterations = it;
            result.grad_norm = residual;
            return result;
        }

        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
        v = cfg.beta2 * v.array().matrix() + (1.0 - cfg.beta2) * grad.array().square().matrix();
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        const Vec m_hat = m / (1.0 - b1t);
        const Vec v_hat = v / (1.0 - b2t);
        x -= (cfg.step * m_hat.array() / (v_hat.array().sqrt() + cfg.epsilon)).matrix();
        x = project_box(x, cfg.box);
    }
    throw std::logic_error("unreachable");
}

/// Thrown when X'X is singular or numerically near-singular; lists the
/// columns that pivoted out.
class SingularSystemError : public NumericalError {
public:
    SingularSystemError(std::string msg, std::vector<int> columns)
        : NumericalError(std::move(msg)), dependent_columns(std::move(columns)) {}
    std::vector<int> dependent_columns;
};

/// Least-squares solution of X b = Y through a column-pivoted QR of X.
/// Throws SingularSystemError when the system is rank deficient or the
/// condition estimate exceeds 1e12.
inline Vec solve_normal_equations(const Mat& x, const Vec& y) {
    if (x.rows() != y.size())
        throw std::invalid_argument("design rows and target length differ");
    if (x.rows() < x.cols())
        throw std::invalid_argument("fewer observations than coefficients");
    Eigen::ColPivHouseholderQR<Mat> qr(x);
    const int cols = static_cast<int>(x.cols());
    const auto& r_diag = qr.matrixR().diagonal();
    const double dmax = r_diag.cwiseAbs().maxCoeff();
    const double dmin = r_diag.cwiseAbs().minCoeff();
    const double cond = dmin > 0.0 ? dmax / dmin : std::numeric_limits<double>::infinity();
    if (qr.rank() < cols || cond > 1e12) {
        std::vector<int> bad;
        const auto perm = qr.colsPermutation().indices();
        for (int k = qr.rank(); k < cols; ++k) bad.push_back(perm[k]);
        if (bad.empty()) bad.push_back(perm[cols - 1]);
        std::string msg = "design matrix rank deficient or ill-conditioned (cond ~ " +
                          std::to_string(cond) + "); near-dependent columns:";
        for (int c : bad) msg += " " + std::to_string(c);
        throw SingularSystemError(msg, bad);
    }
    return qr.solve(y);
}

/// Worst-coordinate relative error between an analytic gradient and central
/// finite differences with per-coordinate step h * max(1, |x_k|).
template <typename F>
double finite_diff_grad_check(F&& objective, const Vec& analytic_grad, const Vec& point,
                              double h = 1e-6) {
    double worst = 0.0;
    Vec x = point;
    for (int k = 0; k < x.size(); ++k) {
        const double step = h * std::max(1.0, std::abs(point[k]));
        const double orig = x[k];
        x[k] = orig + step;
        const double fp = objective(x);
        x[k] = orig - step;
        const double fm = objective(x);
        x[k] = orig;
        const double fd = (fp - fm) / (2.0 * step);
        const double denom = std::max(std::abs(fd), 1e-10);
        worst = std::max(worst, std::abs(analytic_grad[k] - fd) / denom);
    }
    return worst;
}

/// Result of a box-constrained least-squares solve.
struct BoxLsResult {
    Vec x;
    double objective = 0.0;
    double kkt_residual = 0.0;
    bool converged = false;
    long iterations = 0;
    bool interior = true;  // no bound active at the solution
};

/// Box-constrained least squares expressed through the Gram system
/// (gram = X'X, xty = X'Y, yty = Y'Y), given the unconstrained solution.
/// Feasible unconstrained solutions are returned as-is; otherwise the
/// clipped solution is refined by diagonally preconditioned projected
/// gradient until the KKT residual ||b - P_box(b - grad)||_inf meets
/// kkt_tol.
inline BoxLsResult box_ls_gram(const Mat& gram, const Vec& xty, double yty,
                               const Vec& unconstrained, const std::vector<Bound>& box,
                               double kkt_tol = 1e-8, long max_iterations = 2000000) {
    const int k = static_cast<int>(gram.rows());
    auto objective_of = [&](const Vec& b) {
        return std::max(0.0, yty - 2.0 * xty.dot(b) + b.dot(gram * b));
    };

    BoxLsResult result;
    Vec beta = unconstrained;
    Vec grad = 2.0 * (gram * beta - xty);
    const bool feasible = box.empty() || ParamVector(beta, box).within_bounds();
    if (feasible) {
        result.x = beta;
        result.objective = objective_of(beta);
        result.kkt_residual = projected_gradient_residual(beta, grad, box);
        result.converged = true;
        return result;
    }

    beta = project_box(beta, box);

    // Diagonal preconditioning equalizes column scales; the box stays a box
    // under per-coordinate scaling.
    Vec scale(k);
    for (int c = 0; c < k; ++c) scale[c] = 1.0 / std::sqrt(std::max(gram(c, c), 1e-300));
    const Mat gram_s = scale.asDiagonal() * gram * scale.asDiagonal();

    // Lipschitz constant of the scaled gradient by power iteration.
    Vec pv = Vec::Ones(k).normalized();
    double lmax = 1.0;
    for (int it = 0; it < 200; ++it) {
        pv = gram_s * pv;
        lmax = pv.norm();
        if (lmax == 0.0) break;
        pv /= lmax;
    }
    const double step = 1.0 / std::max(2.0 * lmax, 1e-300);

    for (long it = 1; it <= max_iterations; ++it) {
        grad = 2.0 * (gram * beta - xty);
        result.kkt_residual = projected_gradient_residual(beta, grad, box);
        result.iterations = it - 1;
        if (result.kkt_residual <= kkt_tol) {
            result.converged = true;
            break;
        }
        Vec scaled_step = (scale.array().square() * grad.array()).matrix();
        beta = project_box(beta - step * scaled_step, box);
    }
    if (!result.converged) {
        grad = 2.0 * (gram * beta - xty);
        result.kkt_residual = projected_gradient_residual(beta, grad, box);
    }
    result.x = beta;
    result.objective = objective_of(beta);
    for (int c = 0; c < k; ++c)
        if (beta[c] <= box[c].lo || beta[c] >= box[c].hi) result.interior = false;
    return result;
}

/// Box-constrained least squares min ||Y - X b||^2; the unconstrained
/// candidate comes from an orthogonal decomposition of X.
inline BoxLsResult box_constrained_least_squares(const Mat& x, const Vec& y,
                                                 const std::vector<Bound>& box,
                                                 double kkt_tol = 1e-8,
                                                 long max_iterations = 2000000) {
    const Vec unconstrained = solve_normal_equations(x, y);
    return box_ls_gram(x.transpose() * x, x.transpose() * y, y.squaredNorm(), unconstrained, box,
                       kkt_tol, max_iterations);
}

}  // namespace gnarc
