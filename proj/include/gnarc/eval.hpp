#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gnarc/design.hpp"

namespace gnarc {

/// Mean squared prediction error over all N x h entries.
inline double mspe(const Mat& pred, const Mat& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw std::invalid_argument("prediction and truth shapes differ");
    return (pred - truth).array().square().mean();
}

/// Mean absolute prediction error over all N x h entries.
inline double mape(const Mat& pred, const Mat& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw std::invalid_argument("prediction and truth shapes differ");
    return (pred - truth).array().abs().mean();
}

/// Splits a series into (first train_len, remainder) preserving time order.
inline std::pair<CountSeries, CountSeries> split_train_test(const CountSeries& series,
                                                            int train_len) {
    const int t_len = series.length();
    if (train_len < 1 || train_len >= t_len)
        throw std::invalid_argument("train length must lie in [1, T-1]; test set would be empty");
    CountSeries train(series.data.leftCols(train_len), series.node_ids);
    CountSeries test(series.data.rightCols(t_len - train_len), series.node_ids);
    if (!series.time_index.empty()) {
        train.time_index.assign(series.time_index.begin(), series.time_index.begin() + train_len);
        test.time_index.assign(series.time_index.begin() + train_len, series.time_index.end());
    }
    return {std::move(train), std::move(test)};
}

/// Per-model aggregate prediction errors up to each requested horizon,
/// plus the forecast trajectories themselves.
struct EvalReport {
    std::vector<std::string> models;
    std::vector<int> horizons;
    std::vector<std::vector<double>> mspe_by_model;  // [model][horizon index]
    std::vector<std::vector<double>> mape_by_model;
    std::vector<Mat> forecasts;  // per model, N x H
};

/// Evaluates forecasts against the truth at every horizon h = 1..H:
/// the metric at h aggregates columns 1..h (prefix consistency).
inline EvalReport evaluate_forecasts(const std::vector<std::string>& models,
                                     const std::vector<Mat>& forecasts, const Mat& truth,
                                     const std::vector<int>& horizons) {
    if (models.size() != forecasts.size())
        throw std::invalid_argument("one forecast matrix required per model name");
    EvalReport report;
    report.models = models;
    report.horizons = horizons;
    report.forecasts = forecasts;
    for (const Mat& pred : forecasts) {
        if (pred.rows() != truth.rows())
            throw std::invalid_argument("forecast node count differs from truth");
        std::vector<double> ms, ma;
        for (int h : horizons) {
            if (h < 1 || h > truth.cols() || h > pred.cols())
                throw std::invalid_argument("horizon " + std::to_string(h) +
                                            " outside the available test window");
            ms.push_back(mspe(pred.leftCols(h), truth.leftCols(h)));
            ma.push_back(mape(pred.leftCols(h), truth.leftCols(h)));
        }
        report.mspe_by_model.push_back(std::move(ms));
        report.mape_by_model.push_back(std::move(ma));
    }
    return report;
}

inline std::vector<int> all_horizons(int h_max) {
    std::vector<int> h(h_max);
    for (int i = 0; i < h_max; ++i) h[i] = i + 1;
    return h;
}

}  // namespace gnarc
