#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "gnarc/design.hpp"
#include "gnarc/network.hpp"
#include "gnarc/response.hpp"

namespace gnarc {

/// Recursive mean forecasts: horizon 1 applies the conditional mean
/// g(linear predictor) to the observed history; later horizons substitute
/// earlier predicted means for unobserved values.  Forecasts are
/// real-valued means, never rounded.  Returns an N x H matrix.
inline Mat forecast_recursive(const Network& net, const ModelOrder& order,
                              const ParamVector& params, const ResponseFunction& response,
                              const CountSeries& history, int horizon) {
    if (horizon < 1) throw std::invalid_argument("forecast horizon must be >= 1");
    const int n = net.node_count();
    if (history.nodes() != n)
        throw std::invalid_argument("history node count does not match network");
    if (history.length() < order.p)
        throw std::invalid_argument("insufficient history: need at least p observations");

    Mat window = history_window(history, order.p);  // column j-1 = j steps back
    Mat out(n, horizon);
    for (int h = 0; h < horizon; ++h) {
        const Vec eta = linear_predictor(net, order, params, window);
        for (int i = 0; i < n; ++i) out(i, h) = response.value(eta[i]);
        if (order.p > 1) {
            for (int j = order.p - 1; j >= 1; --j) window.col(j) = window.col(j - 1);
        }
        window.col(0) = out.col(h);
    }
    return out;
}

}  // namespace gnarc
