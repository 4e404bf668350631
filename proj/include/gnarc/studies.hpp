#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gnarc/baselines.hpp"
#include "gnarc/design.hpp"
#include "gnarc/eval.hpp"
#include "gnarc/gnari.hpp"
#include "gnarc/network.hpp"
#include "gnarc/ngnar.hpp"

namespace gnarc {

/// Runs fn(rep) for rep in [0, reps) on a small worker pool.  Each task
/// derives its own RNG from a per-replication seed, so reports do not
/// depend on scheduling or completion order.
template <typename Fn>
void for_each_replication(int reps, int threads, Fn&& fn) {
    if (reps < 1) throw std::invalid_argument("replication count must be >= 1");
    if (threads <= 1) {
        for (int r = 0; r < reps; ++r) fn(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(threads, reps);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) fn(r);
        });
    for (auto& t : pool) t.join();
}

/// Lag-1, stage-1, global-alpha coefficient vector (alpha, beta, intercept).
inline ParamVector lag1_params(const Network& net, double alpha, double beta, double intercept,
                               InterceptMode mode, bool thinning_box) {
    ModelOrder order = ModelOrder::full(1, mode);
    const ParamLayout layout(order, net.node_count());
    Vec v(layout.size());
    v[layout.alpha(1)] = alpha;
    v[layout.beta(1, 1)] = beta;
    v[layout.intercept()] = intercept;
    return ParamVector(v, thinning_box ? layout.thinning_bounds() : layout.unbounded());
}

// ---- parameter recovery studies ------------------------------------------

struct ParamStudyConfig {
    std::vector<int> lengths{50, 200, 500};
    int reps = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    int burn_in = 100;
    double alpha = 0.5;
    double beta = 0.4;
    double intercept = 10.0;  // innovation mean or additive intercept
    OptimizerConfig adam;     // nonlinear fits only
};

/// One (series length, estimation method) cell: per-parameter moments over
/// the successful replications, plus the raw estimates.
struct ParamStudyRow {
    int length = 0;
    std::string method;
    std::vector<std::string> param_names;
    Vec mean;
    Vec sd;
    Vec mean_se;  // average estimated standard errors (NaN when unavailable)
    std::vector<Vec> estimates;
    int failures = 0;
    int non_converged = 0;
};

struct ParamStudyReport {
    std::string study;
    std::vector<ParamStudyRow> rows;
    std::vector<double> truth;
};

/// Published benchmark moments for one study row (empty when the protocol
/// has no published counterpart).
struct BenchmarkMoments {
    std::vector<double> mean;
    std::vector<double> sd;
    bool available() const { return !mean.empty(); }
};

/// Benchmark means and standard deviations for the canonical thinning-model
/// recovery protocol (alpha 0.5, beta 0.4, innovation mean 10, five-node
/// demo network, 1000 replications).
inline BenchmarkMoments table1_reference(int length) {
    switch (length) {
        case 50: return {{0.482, 0.370, 14.8}, {0.053, 0.061, 6.57}};
        case 200: return {{0.496, 0.392, 11.3}, {0.025, 0.031, 2.96}};
        case 500: return {{0.497, 0.397, 10.6}, {0.015, 0.019, 1.73}};
        default: return {};
    }
}

/// Benchmark moments for the canonical softplus recovery protocol
/// (alpha 0.5, beta -0.4, intercept 10, 100 replications).
inline BenchmarkMoments table2_reference(int length, const std::string& method) {
    const bool cls = method == "cls";
    switch (length) {
        case 50:
            return cls ? BenchmarkMoments{{0.493, -0.407, 10.2}, {0.058, 0.067, 1.14}}
                       : BenchmarkMoments{{0.493, -0.404, 10.2}, {0.053, 0.065, 1.05}};
        case 200:
            return cls ? BenchmarkMoments{{0.504, -0.399, 9.92}, {0.029, 0.039, 0.639}}
                       : BenchmarkMoments{{0.503, -0.400, 9.96}, {0.027, 0.037, 0.622}};
        case 500:
            return cls ? BenchmarkMoments{{0.500, -0.397, 9.96}, {0.018, 0.024, 0.382}}
                       : BenchmarkMoments{{0.500, -0.397, 9.97}, {0.018, 0.021, 0.365}};
        default: return {};
    }
}

namespace detail {

inline void finalize_row(ParamStudyRow& row) {
    const int k = row.estimates.empty() ? 0 : static_cast<int>(row.estimates.front().size());
    row.mean = Vec::Constant(k, std::numeric_limits<double>::quiet_NaN());
    row.sd = Vec::Constant(k, std::numeric_limits<double>::quiet_NaN());
    if (row.estimates.empty()) return;
    const double m = static_cast<double>(row.estimates.size());
    Vec mean = Vec::Zero(k);
    for (const Vec& e : row.estimates) mean += e;
    mean /= m;
    Vec var = Vec::Zero(k);
    for (const Vec& e : row.estimates) var += (e - mean).array().square().matrix();
    row.mean = mean;
    row.sd = (var / std::max(m - 1.0, 1.0)).array().sqrt();
}

}  // namespace detail

/// Thinning-model recovery study: simulates the lag-1 process on the given
/// network for each configured length, fits by constrained conditional
/// least squares, and reports per-parameter means and standard deviations
/// next to the published benchmark values for this protocol.
inline ParamStudyReport run_table1(const Network& net, const ParamStudyConfig& cfg) {
    ParamStudyReport report;
    report.study = "table1";
    report.truth = {cfg.alpha, cfg.beta, cfg.intercept};

    const ModelOrder order = ModelOrder::full(1, InterceptMode::innovation_mean);
    const ParamVector truth =
        lag1_params(net, cfg.alpha, cfg.beta, cfg.intercept, InterceptMode::innovation_mean, true);
    const GnariModel model(net, order, truth);
    const ParamLayout layout(order, net.node_count());

    for (std::size_t ti = 0; ti < cfg.lengths.size(); ++ti) {
        const int t_len = cfg.lengths[ti];
        ParamStudyRow row;
        row.length = t_len;
        row.method = "cls";
        row.param_names = layout.names();
        std::vector<Vec> estimates(cfg.reps);
        std::vector<Vec> ses(cfg.reps);
        std::vector<int> status(cfg.reps, 0);  // 0 failed, 1 ok, 2 ok-not-converged
        for_each_replication(cfg.reps, cfg.threads, [&](int rep) {
            Rng rng(cfg.seed + static_cast<std::uint64_t>(ti) * cfg.reps + rep);
            try {
                const CountSeries series = simulate_gnari(model, t_len, cfg.burn_in, rng);
                const FitResult fit = fit_gnari_cls(series, net, order);
                estimates[rep] = fit.params.values;
                ses[rep] = fit.covariance ? fit.covariance->diagonal().array().max(0.0).sqrt()
                                          : Vec();
                status[rep] = fit.converged ? 1 : 2;
            } catch (const std::exception&) {
                status[rep] = 0;
            }
        });
        Vec se_sum = Vec::Zero(layout.size());
        int se_count = 0;
        for (int rep = 0; rep < cfg.reps; ++rep) {
            if (status[rep] == 0) {
                ++row.failures;
                continue;
            }
            if (status[rep] == 2) ++row.non_converged;
            row.estimates.push_back(estimates[rep]);
            if (ses[rep].size() == layout.size()) {
                se_sum += ses[rep];
                ++se_count;
            }
        }
        detail::finalize_row(row);
        row.mean_se = se_count > 0
                          ? Vec(se_sum / se_count)
                          : Vec(Vec::Constant(layout.size(),
                                              std::numeric_limits<double>::quiet_NaN()));
        report.rows.push_back(std::move(row));
    }
    return report;
}

/// Response-function model recovery study: same protocol with a negative
/// network coefficient, fitted by both conditional least squares and
/// conditional maximum likelihood (softplus response).
inline ParamStudyReport run_table2(const Network& net, ParamStudyConfig cfg,
                                   ResponseFunction response = ResponseFunction::softplus()) {
    ParamStudyReport report;
    report.study = "table2";
    report.truth = {cfg.alpha, cfg.beta, cfg.intercept};

    const ModelOrder order = ModelOrder::full(1, InterceptMode::additive);
    const ParamVector truth =
        lag1_params(net, cfg.alpha, cfg.beta, cfg.intercept, InterceptMode::additive, false);
    const NgnarModel model(net, order, truth, response);
    const ParamLayout layout(order, net.node_count());

    for (std::size_t ti = 0; ti < cfg.lengths.size(); ++ti) {
        const int t_len = cfg.lengths[ti];
        ParamStudyRow cls_row, cmle_row;
        cls_row.length = cmle_row.length = t_len;
        cls_row.method = "cls";
        cmle_row.method = "cmle";
        cls_row.param_names = cmle_row.param_names = layout.names();

        std::vector<Vec> cls_est(cfg.reps), cmle_est(cfg.reps);
        std::vector<int> cls_status(cfg.reps, 0), cmle_status(cfg.reps, 0);
        for_each_replication(cfg.reps, cfg.threads, [&](int rep) {
            Rng rng(cfg.seed + static_cast<std::uint64_t>(ti) * cfg.reps + rep);
            CountSeries series;
            try {
                series = simulate_ngnar(model, t_len, cfg.burn_in, rng);
            } catch (const std::exception&) {
                return;  // both fits fail for this replication
            }
            try {
                const FitResult fit = fit_ngnar_cls(series, net, order, response, cfg.adam);
                cls_est[rep] = fit.params.values;
                cls_status[rep] = fit.converged ? 1 : 2;
            } catch (const std::exception&) {
            }
            try {
                const FitResult fit = fit_ngnar_cmle(series, net, order, response, cfg.adam);
                cmle_est[rep] = fit.params.values;
                cmle_status[rep] = fit.converged ? 1 : 2;
            } catch (const std::exception&) {
            }
        });
        auto collect = [&](ParamStudyRow& row, const std::vector<Vec>& est,
                           const std::vector<int>& status) {
            for (int rep = 0; rep < cfg.reps; ++rep) {
                if (status[rep] == 0) {
                    ++row.failures;
                    continue;
                }
                if (status[rep] == 2) ++row.non_converged;
                row.estimates.push_back(est[rep]);
            }
            detail::finalize_row(row);
            row.mean_se =
                Vec::Constant(layout.size(), std::numeric_limits<double>::quiet_NaN());
        };
        collect(cls_row, cls_est, cls_status);
        collect(cmle_row, cmle_est, cmle_status);
        report.rows.push_back(std::move(cls_row));
        report.rows.push_back(std::move(cmle_row));
    }
    return report;
}

// ---- predictive comparison study ------------------------------------------

struct PredictiveStudyConfig {
    int reps = 500;
    std::uint64_t seed = 1;
    int threads = 1;
    int burn_in = 100;
    int train_len = 450;
    int test_len = 50;
    std::vector<int> horizons{1, 10, 50};
    std::vector<int> processes{0, 1, 2, 3};  // indices into the P1..P4 grid
    std::vector<int> models{0, 1, 2, 3};     // indices into the A..D grid
    OptimizerConfig adam;
};

inline const std::vector<std::string>& predictive_process_names() {
    static const std::vector<std::string> names{"P1", "P2", "P3", "P4"};
    return names;
}

inline const std::vector<std::string>& predictive_model_names() {
    static const std::vector<std::string> names{"gnari", "ngnar-cls", "ngnar-cmle", "pnar1"};
    return names;
}

/// Grid report: one cell per (model, process, horizon) holding the average
/// MSPE over replications; failures appear as explicit counts, never as
/// silently missing cells.
struct PredictiveStudyReport {
    std::vector<int> horizons;
    std::vector<int> processes;
    std::vector<int> models;
    // mean_mspe[m][p][h]; raw_mspe[m][p][h][rep] is NaN for failed fits.
    std::vector<std::vector<std::vector<double>>> mean_mspe;
    std::vector<std::vector<std::vector<std::vector<double>>>> raw_mspe;
    std::vector<std::vector<int>> failures;  // [m][p]
};

/// Simulates P1..P4, fits the four comparator models on the training split,
/// forecasts the test window, and aggregates MSPE at the requested
/// horizons.
inline PredictiveStudyReport run_table3(const Network& net, const PredictiveStudyConfig& cfg) {
    const int t_total = cfg.train_len + cfg.test_len;
    for (int h : cfg.horizons)
        if (h < 1 || h > cfg.test_len)
            throw std::invalid_argument("horizon outside the test window");

    const ModelOrder gnari_order = ModelOrder::full(1, InterceptMode::innovation_mean);
    const ModelOrder ngnar_order = ModelOrder::full(1, InterceptMode::additive);
    const ResponseFunction softplus = ResponseFunction::softplus();

    const int n_models = static_cast<int>(cfg.models.size());
    const int n_procs = static_cast<int>(cfg.processes.size());
    const int n_h = static_cast<int>(cfg.horizons.size());

    PredictiveStudyReport report;
    report.horizons = cfg.horizons;
    report.processes = cfg.processes;
    report.models = cfg.models;
    report.raw_mspe.assign(
        n_models, std::vector<std::vector<std::vector<double>>>(
                      n_procs, std::vector<std::vector<double>>(
                                   n_h, std::vector<double>(
                                            cfg.reps, std::numeric_limits<double>::quiet_NaN()))));
    report.failures.assign(n_models, std::vector<int>(n_procs, 0));

    for (int pi = 0; pi < n_procs; ++pi) {
        const int process = cfg.processes[pi];
        for_each_replication(cfg.reps, cfg.threads, [&](int rep) {
            // Seeding by the global process index keeps each process's data
            // identical whether or not the other processes are requested.
            Rng rng(cfg.seed + static_cast<std::uint64_t>(process) * cfg.reps + rep);
            CountSeries series;
            switch (process) {
                case 0: {
                    const GnariModel m(net, gnari_order,
                                       lag1_params(net, 0.5, 0.4, 10.0,
                                                   InterceptMode::innovation_mean, true));
                    series = simulate_gnari(m, t_total, cfg.burn_in, rng);
                    break;
                }
                case 1: {
                    const NgnarModel m(net, ngnar_order,
                                       lag1_params(net, 0.5, 0.4, 10.0, InterceptMode::additive,
                                                   false),
                                       softplus);
                    series = simulate_ngnar(m, t_total, cfg.burn_in, rng);
                    break;
                }
                case 2: {
                    const NgnarModel m(net, ngnar_order,
                                       lag1_params(net, 0.1, -0.8, 10.0, InterceptMode::additive,
                                                   false),
                                       softplus);
                    series = simulate_ngnar(m, t_total, cfg.burn_in, rng);
                    break;
                }
                case 3: {
                    const PnarModel m{10.0, 0.5, 0.4};
                    series = simulate_pnar(m, net, t_total, cfg.burn_in, rng);
                    break;
                }
                default: throw std::invalid_argument("process index outside P1..P4");
            }
            const auto [train, test] = split_train_test(series, cfg.train_len);
            const Mat truth = test.data.cast<double>();

            for (int mi = 0; mi < n_models; ++mi) {
                try {
                    Mat pred;
                    switch (cfg.models[mi]) {
                        case 0: {
                            const FitResult fit = fit_gnari_cls(train, net, gnari_order);
                            pred = predict_gnari(net, fit, train, cfg.test_len);
                            break;
                        }
                        case 1: {
                            const FitResult fit =
                                fit_ngnar_cls(train, net, ngnar_order, softplus, cfg.adam);
                            pred = predict_ngnar(net, fit, train, cfg.test_len);
                            break;
                        }
                        case 2: {
                            const FitResult fit =
                                fit_ngnar_cmle(train, net, ngnar_order, softplus, cfg.adam);
                            pred = predict_ngnar(net, fit, train, cfg.test_len);
                            break;
                        }
                        case 3: {
                            const FitResult fit = fit_pnar1(train, net, cfg.adam);
                            pred = predict_pnar(net, fit, train, cfg.test_len);
                            break;
                        }
                        default: throw std::invalid_argument("model index outside A..D");
                    }
                    for (int hi = 0; hi < n_h; ++hi) {
                        const int h = cfg.horizons[hi];
                        report.raw_mspe[mi][pi][hi][rep] =
                            mspe(pred.leftCols(h), truth.leftCols(h));
                    }
                } catch (const std::exception&) {
                    // Failure stays visible as a NaN cell and a count.
                }
            }
        });
        for (int mi = 0; mi < n_models; ++mi) {
            int fail = 0;
            for (int rep = 0; rep < cfg.reps; ++rep)
                if (std::isnan(report.raw_mspe[mi][pi][0][rep])) ++fail;
            report.failures[mi][pi] = fail;
        }
    }

    report.mean_mspe.assign(n_models,
                            std::vector<std::vector<double>>(n_procs, std::vector<double>(n_h)));
    for (int mi = 0; mi < n_models; ++mi)
        for (int pi = 0; pi < n_procs; ++pi)
            for (int hi = 0; hi < n_h; ++hi) {
                double sum = 0.0;
                int count = 0;
                for (int rep = 0; rep < cfg.reps; ++rep) {
                    const double v = report.raw_mspe[mi][pi][hi][rep];
                    if (!std::isnan(v)) {
                        sum += v;
                        ++count;
                    }
                }
                report.mean_mspe[mi][pi][hi] =
                    count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
            }
    return report;
}

}  // namespace gnarc
