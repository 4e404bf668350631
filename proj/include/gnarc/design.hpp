#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnarc/network.hpp"

namespace gnarc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Numerical failure (as opposed to input validation): singular systems,
/// non-finite objectives, diverging iterations.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// How the constant column of the design is interpreted.
enum class InterceptMode {
    innovation_mean,  // Poisson innovation mean (thinning models)
    additive,         // plain additive intercept in the linear predictor
    none,
};

inline std::string to_string(InterceptMode m) {
    switch (m) {
        case InterceptMode::innovation_mean: return "innovation_mean";
        case InterceptMode::additive: return "additive";
        case InterceptMode::none: return "none";
    }
    throw std::logic_error("unknown intercept mode");
}

inline InterceptMode intercept_mode_from_string(const std::string& s) {
    if (s == "innovation_mean") return InterceptMode::innovation_mean;
    if (s == "additive") return InterceptMode::additive;
    if (s == "none") return InterceptMode::none;
    throw std::invalid_argument("unknown intercept mode '" + s + "'");
}

/// Lag order p, per-lag neighbourhood stage depths s_j, per-lag
/// autoregressive inclusion mask I_j, and global/local flags.
struct ModelOrder {
    int p = 1;
    std::vector<int> s{1};
    std::vector<std::uint8_t> alpha_mask{1};
    bool global_alpha = true;
    InterceptMode intercept = InterceptMode::innovation_mean;
    bool local_intercept = false;

    void validate() const {
        if (p < 1) throw std::invalid_argument("lag order p must be >= 1");
        if (static_cast<int>(s.size()) != p || static_cast<int>(alpha_mask.size()) != p)
            throw std::invalid_argument("s and alpha_mask must both have length p");
        for (int sj : s)
            if (sj < 0) throw std::invalid_argument("stage depths must be non-negative");
        for (auto m : alpha_mask)
            if (m != 0 && m != 1) throw std::invalid_argument("alpha_mask entries must be 0 or 1");
    }

    int max_stage() const {
        int m = 0;
        for (int sj : s) m = std::max(m, sj);
        return m;
    }

    /// Order with p lags, every alpha included and one neighbourhood stage
    /// per lag.
    static ModelOrder full(int p, InterceptMode mode = InterceptMode::innovation_mean) {
        ModelOrder o;
        o.p = p;
        o.s.assign(p, 1);
        o.alpha_mask.assign(p, 1);
        o.intercept = mode;
        return o;
    }
};

/// Closed interval bound for one coefficient.
struct Bound {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

/// Maps (lag, stage, node) coordinates onto the flattened coefficient
/// layout (alpha_1, beta_{1,1}..beta_{1,s_1}, ..., alpha_p, beta_{p,1}..
/// beta_{p,s_p}, intercept(s)).  Local alphas expand node-within-lag;
/// local intercepts expand node-within-block at the tail.
class ParamLayout {
public:
    ParamLayout(const ModelOrder& order, int n_nodes) : order_(order), n_(n_nodes) {
        order_.validate();
        if (n_nodes < 1) throw std::invalid_argument("need at least one node");
        int idx = 0;
        alpha_start_.assign(order_.p, -1);
        beta_start_.assign(order_.p, -1);
        for (int j = 0; j < order_.p; ++j) {
            if (order_.alpha_mask[j]) {
                alpha_start_[j] = idx;
                idx += order_.global_alpha ? 1 : n_;
            }
            if (order_.s[j] > 0) {
                beta_start_[j] = idx;
                idx += order_.s[j];
            }
        }
        intercept_start_ = -1;
        if (order_.intercept != InterceptMode::none) {
            intercept_start_ = idx;
            idx += order_.local_intercept ? n_ : 1;
        }
        size_ = idx;
    }

    int size() const { return size_; }
    int node_count() const { return n_; }
    const ModelOrder& order() const { return order_; }

    bool has_alpha(int j) const { return alpha_start_[check_lag(j)] >= 0; }

    /// Index of alpha for lag j (1-based); node required when local.
    int alpha(int j, int node = 0) const {
        const int start = alpha_start_[check_lag(j)];
        if (start < 0)
            throw std::invalid_argument("alpha excluded at lag " + std::to_string(j));
        return order_.global_alpha ? start : start + node;
    }

    /// Index of beta for lag j, stage r (both 1-based).
    int beta(int j, int r) const {
        const int jj = check_lag(j);
        if (r < 1 || r > order_.s[jj])
            throw std::invalid_argument("stage " + std::to_string(r) + " outside [1," +
                                        std::to_string(order_.s[jj]) + "] at lag " +
                                        std::to_string(j));
        return beta_start_[jj] + (r - 1);
    }

    bool has_intercept() const { return intercept_start_ >= 0; }

    int intercept(int node = 0) const {
        if (intercept_start_ < 0) throw std::invalid_argument("model has no intercept");
        return order_.local_intercept ? intercept_start_ + node : intercept_start_;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out(size_);
        for (int j = 1; j <= order_.p; ++j) {
            if (has_alpha(j)) {
                if (order_.global_alpha) {
                    out[alpha(j)] = "alpha_" + std::to_string(j);
                } else {
                    for (int i = 0; i < n_; ++i)
                        out[alpha(j, i)] =
                            "alpha_" + std::to_string(j) + "_i" + std::to_string(i + 1);
                }
            }
            for (int r = 1; r <= order_.s[j - 1]; ++r)
                out[beta(j, r)] = "beta_" + std::to_string(j) + "_" + std::to_string(r);
        }
        if (has_intercept()) {
            const std::string base =
                order_.intercept == InterceptMode::innovation_mean ? "lambda" : "alpha_0";
            if (order_.local_intercept) {
                for (int i = 0; i < n_; ++i) out[intercept(i)] = base + "_i" + std::to_string(i + 1);
            } else {
                out[intercept()] = base;
            }
        }
        return out;
    }

    /// Box bounds for the thinning-model parameterization: alphas and betas
    /// in [0,1], intercepts in [0, inf).  Unconstrained models use
    /// unbounded() instead.
    std::vector<Bound> thinning_bounds() const {
        std::vector<Bound> b(size_);
        for (int j = 1; j <= order_.p; ++j) {
            if (has_alpha(j)) {
                const int count = order_.global_alpha ? 1 : n_;
                for (int i = 0; i < count; ++i) b[alpha(j, i)] = Bound{0.0, 1.0};
            }
            for (int r = 1; r <= order_.s[j - 1]; ++r) b[beta(j, r)] = Bound{0.0, 1.0};
        }
        if (has_intercept()) {
            const int count = order_.local_intercept ? n_ : 1;
            for (int i = 0; i < count; ++i)
                b[intercept(i)] = Bound{0.0, std::numeric_limits<double>::infinity()};
        }
        return b;
    }

    std::vector<Bound> unbounded() const { return std::vector<Bound>(size_); }

    /// Non-negativity on every coefficient (Poisson-mean models).
    std::vector<Bound> nonnegative_bounds() const {
        std::vector<Bound> b(size_);
        for (auto& bd : b) bd.lo = 0.0;
        return b;
    }

private:
    int check_lag(int j) const {
        if (j < 1 || j > order_.p)
            throw std::invalid_argument("lag " + std::to_string(j) + " outside [1," +
                                        std::to_string(order_.p) + "]");
        return j - 1;
    }

    ModelOrder order_;
    int n_;
    int size_;
    std::vector<int> alpha_start_, beta_start_;
    int intercept_start_;
};

/// Flattened coefficient vector plus per-entry closed bounds.
struct ParamVector {
    Vec values;
    std::vector<Bound> bounds;

    ParamVector() = default;
    ParamVector(Vec v, std::vector<Bound> b) : values(std::move(v)), bounds(std::move(b)) {
        if (static_cast<std::size_t>(values.size()) != bounds.size())
            throw std::invalid_argument("bounds length must match value length");
    }

    int size() const { return static_cast<int>(values.size()); }

    bool within_bounds(double tol = 0.0) const {
        for (int k = 0; k < size(); ++k)
            if (values[k] < bounds[k].lo - tol || values[k] > bounds[k].hi + tol) return false;
        return true;
    }

    void require_within_bounds() const {
        for (int k = 0; k < size(); ++k)
            if (values[k] < bounds[k].lo || values[k] > bounds[k].hi)
                throw std::invalid_argument("parameter " + std::to_string(k) + " = " +
                                            std::to_string(values[k]) + " violates bound [" +
                                            std::to_string(bounds[k].lo) + "," +
                                            std::to_string(bounds[k].hi) + "]");
    }

    static ParamVector zeros(const ParamLayout& layout, std::vector<Bound> bounds) {
        return ParamVector(Vec::Zero(layout.size()), std::move(bounds));
    }
};

/// Node-indexed N x T matrix of non-negative integer observations.
struct CountSeries {
    Eigen::MatrixXi data;  // N rows (nodes) x T columns (time)
    std::vector<std::string> node_ids;
    std::vector<std::string> time_index;

    CountSeries() = default;
    explicit CountSeries(Eigen::MatrixXi counts, std::vector<std::string> ids = {})
        : data(std::move(counts)), node_ids(std::move(ids)) {
        if (node_ids.empty())
            for (int i = 0; i < data.rows(); ++i) node_ids.push_back("n" + std::to_string(i + 1));
        if (static_cast<int>(node_ids.size()) != data.rows())
            throw std::invalid_argument("node id count does not match row count");
        for (int i = 0; i < data.rows(); ++i)
            for (int t = 0; t < data.cols(); ++t)
                if (data(i, t) < 0)
                    throw std::invalid_argument("negative count at node " + std::to_string(i) +
                                                ", time " + std::to_string(t));
    }

    int nodes() const { return static_cast<int>(data.rows()); }
    int length() const { return static_cast<int>(data.cols()); }
};

/// Estimated coefficients with estimation metadata, shared by every model.
struct FitResult {
    std::string model;     // gnar | gnari | ngnar | pnar
    std::string method;    // cls | cmle | qmle
    std::string response;  // response kind, empty for linear models
    double response_sharpness = 1.0;
    ModelOrder order;
    ParamVector params;
    double objective = 0.0;
    bool converged = false;
    long iterations = 0;
    double grad_norm = 0.0;  // final first-order (projected-gradient) residual
    std::optional<Mat> covariance;
    bool covariance_valid = false;
};

/// Target vector Y = (X_{1,p+1}..X_{1,T}, ..., X_{N,p+1}..X_{N,T}):
/// node-major outer, time-major inner.
inline Vec build_target(const CountSeries& series, int p) {
    const int n = series.nodes();
    const int t_len = series.length();
    if (t_len <= p)
        throw std::invalid_argument("series length " + std::to_string(t_len) +
                                    " must exceed lag order " + std::to_string(p));
    Vec y(static_cast<long>(n) * (t_len - p));
    long row = 0;
    for (int i = 0; i < n; ++i)
        for (int t = p; t < t_len; ++t) y[row++] = static_cast<double>(series.data(i, t));
    return y;
}

/// Weighted neighbour sum S_{t,i,r,j} = sum_q w_{i,q} X_{q,t-j} over the
/// stage-r neighbours of i.
inline double neighbour_sum(const CountSeries& series, const Network& net, int i, int t, int r,
                            int j) {
    const auto& set = net.stage_neighbours(i, r);
    if (set.empty()) return 0.0;
    const double w = 1.0 / static_cast<double>(set.size());
    double acc = 0.0;
    for (int q : set) acc += static_cast<double>(series.data(q, t - j));
    return acc * w;
}

/// Design matrix with one row per (node, time) pair in build_target order.
/// Columns follow the ParamLayout: own lagged values where I_j = 1,
/// neighbour sums per (j, r), then intercept column(s).
inline Mat build_design(const CountSeries& series, const Network& net, const ModelOrder& order) {
    order.validate();
    const int n = series.nodes();
    const int t_len = series.length();
    if (net.node_count() != n)
        throw std::invalid_argument("network has " + std::to_string(net.node_count()) +
                                    " nodes but series has " + std::to_string(n));
    if (t_len <= order.p)
        throw std::invalid_argument("series length " + std::to_string(t_len) +
                                    " must exceed lag order " + std::to_string(order.p));

    const ParamLayout layout(order, n);
    Mat x = Mat::Zero(static_cast<long>(n) * (t_len - order.p), layout.size());
    long row = 0;
    for (int i = 0; i < n; ++i) {
        for (int t = order.p; t < t_len; ++t, ++row) {
            for (int j = 1; j <= order.p; ++j) {
                if (layout.has_alpha(j))
                    x(row, layout.alpha(j, i)) = static_cast<double>(series.data(i, t - j));
                for (int r = 1; r <= order.s[j - 1]; ++r)
                    x(row, layout.beta(j, r)) = neighbour_sum(series, net, i, t, r, j);
            }
            if (layout.has_intercept()) x(row, layout.intercept(i)) = 1.0;
        }
    }
    return x;
}

/// max over nodes of sum_j (|alpha_{i,j}| + sum_r |beta_{j,r}|); a value
/// below one certifies the sufficient stationarity condition.
inline double stationarity_margin(const ModelOrder& order, const ParamVector& params,
                                  int n_nodes) {
    const ParamLayout layout(order, n_nodes);
    if (params.size() != layout.size())
        throw std::invalid_argument("parameter vector does not match order layout");
    double margin = 0.0;
    for (int i = 0; i < n_nodes; ++i) {
        double m = 0.0;
        for (int j = 1; j <= order.p; ++j) {
            if (layout.has_alpha(j)) m += std::abs(params.values[layout.alpha(j, i)]);
            for (int r = 1; r <= order.s[j - 1]; ++r)
                m += std::abs(params.values[layout.beta(j, r)]);
        }
        margin = std::max(margin, m);
    }
    return margin;
}

/// Lag-j coefficient matrix A_j = diag{alpha_{i,j}} + sum_r beta_{j,r} W^(r).
inline Mat lag_coefficient_matrix(const ModelOrder& order, const ParamVector& params,
                                  const Network& net, int j) {
    const int n = net.node_count();
    const ParamLayout layout(order, n);
    Mat a = Mat::Zero(n, n);
    if (layout.has_alpha(j))
        for (int i = 0; i < n; ++i) a(i, i) = params.values[layout.alpha(j, i)];
    for (int r = 1; r <= order.s[j - 1]; ++r)
        a += params.values[layout.beta(j, r)] * net.weight_matrix(r);
    return a;
}

/// Block companion matrix of the stacked lag-1 embedding: lag blocks
/// A_1..A_p across the top, identities on the sub-diagonal.
inline Mat companion_matrix(const ModelOrder& order, const ParamVector& params,
                            const Network& net) {
    const int n = net.node_count();
    const int p = order.p;
    Mat a = Mat::Zero(static_cast<long>(n) * p, static_cast<long>(n) * p);
    for (int j = 1; j <= p; ++j)
        a.block(0, static_cast<long>(n) * (j - 1), n, n) =
            lag_coefficient_matrix(order, params, net, j);
    for (int j = 1; j < p; ++j)
        a.block(static_cast<long>(n) * j, static_cast<long>(n) * (j - 1), n, n) =
            Mat::Identity(n, n);
    return a;
}

/// Stationary mean: solves (I - sum_j A_j) mu = lambda.
inline Vec stationary_mean(const ModelOrder& order, const ParamVector& params, const Network& net,
                           const Vec& innovation_means) {
    const int n = net.node_count();
    if (innovation_means.size() != n)
        throw std::invalid_argument("innovation mean vector must have one entry per node");
    Mat a_sum = Mat::Zero(n, n);
    for (int j = 1; j <= order.p; ++j) a_sum += lag_coefficient_matrix(order, params, net, j);
    Mat system = Mat::Identity(n, n) - a_sum;
    Eigen::FullPivLU<Mat> lu(system);
    if (!lu.isInvertible())
        throw NumericalError("stationary mean system is singular; parameters do not "
                                 "satisfy the stationarity condition");
    return lu.solve(innovation_means);
}

/// Linear predictor eta_i = intercept_i + sum_j (alpha_{i,j} X_{i,t-j} +
/// sum_r beta_{j,r} S_{i,r,j}) evaluated on a real-valued history window.
/// Column j-1 of the window holds the values j steps back.
inline Vec linear_predictor(const Network& net, const ModelOrder& order,
                            const ParamVector& params, const Mat& window) {
    const int n = net.node_count();
    if (window.rows() != n || window.cols() < order.p)
        throw std::invalid_argument("history window must be N x p (insufficient history)");
    const ParamLayout layout(order, n);
    if (params.size() != layout.size())
        throw std::invalid_argument("parameter vector does not match order layout");
    Vec eta = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        if (layout.has_intercept()) acc += params.values[layout.intercept(i)];
        for (int j = 1; j <= order.p; ++j) {
            if (layout.has_alpha(j)) acc += params.values[layout.alpha(j, i)] * window(i, j - 1);
            for (int r = 1; r <= order.s[j - 1]; ++r) {
                const auto& set = net.stage_neighbours(i, r);
                if (set.empty()) continue;
                double s = 0.0;
                for (int q : set) s += window(q, j - 1);
                acc += params.values[layout.beta(j, r)] * s / static_cast<double>(set.size());
            }
        }
        eta[i] = acc;
    }
    return eta;
}

/// Most recent p columns of a series as a real-valued window (column j-1 =
/// values j steps back from the end).
inline Mat history_window(const CountSeries& series, int p) {
    const int n = series.nodes();
    const int t_len = series.length();
    if (t_len < p) throw std::invalid_argument("insufficient history: need at least p columns");
    Mat w(n, p);
    for (int j = 1; j <= p; ++j)
        for (int i = 0; i < n; ++i) w(i, j - 1) = static_cast<double>(series.data(i, t_len - j));
    return w;
}

}  // namespace gnarc
