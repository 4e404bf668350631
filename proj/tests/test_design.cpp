#include <doctest.h>

#include <random>
#include <vector>

#include "gnarc/design.hpp"
#include "gnarc/network.hpp"
#include "oracles.hpp"

using namespace gnarc;

namespace {

CountSeries random_series(int n, int t_len, unsigned seed, int max_count = 20) {
    std::mt19937 gen(seed);
    std::uniform_int_distribution<int> count(0, max_count);
    Eigen::MatrixXi data(n, t_len);
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < t_len; ++t) data(i, t) = count(gen);
    return CountSeries(data);
}

ParamVector lag1(const Network& net, double alpha, double beta, double icpt,
                 InterceptMode mode = InterceptMode::innovation_mean) {
    ModelOrder order = ModelOrder::full(1, mode);
    const ParamLayout layout(order, net.node_count());
    Vec v(layout.size());
    v[layout.alpha(1)] = alpha;
    v[layout.beta(1, 1)] = beta;
    v[layout.intercept()] = icpt;
    return ParamVector(v, layout.unbounded());
}

}  // namespace

TEST_SUITE_BEGIN("design");

TEST_CASE("target vector is node-major then time-major") {
    Eigen::MatrixXi data(2, 3);
    data << 1, 2, 3, 4, 5, 6;
    const Vec y = build_target(CountSeries(data), 1);
    REQUIRE(y.size() == 4);
    CHECK(y[0] == 2);
    CHECK(y[1] == 3);
    CHECK(y[2] == 5);
    CHECK(y[3] == 6);

    Eigen::MatrixXi single(1, 2);
    single << 7, 9;
    const Vec y1 = build_target(CountSeries(single), 1);
    REQUIRE(y1.size() == 1);
    CHECK(y1[0] == 9);

    CHECK_THROWS_AS(build_target(CountSeries(single), 2), std::invalid_argument);
}

TEST_CASE("target length is N(T - p)") {
    const CountSeries series = random_series(5, 500, 3);
    CHECK(build_target(series, 1).size() == 2495);
}

TEST_CASE("design shape and intercept column") {
    const Network net = build_network(five_node_adjacency());
    const CountSeries series = random_series(5, 500, 4);
    const Mat x = build_design(series, net, ModelOrder::full(1));
    CHECK(x.rows() == 2495);
    CHECK(x.cols() == 3);
    CHECK((x.col(2).array() == 1.0).all());
}

TEST_CASE("edgeless network zeroes the neighbour-sum column") {
    const Network net = build_network(Eigen::MatrixXi::Zero(3, 3));
    const CountSeries series = random_series(3, 10, 5);
    const Mat x = build_design(series, net, ModelOrder::full(1));
    CHECK((x.col(1).array() == 0.0).all());
}

TEST_CASE("single node with no stages reduces to an AR design") {
    const Network net = build_network(Eigen::MatrixXi::Zero(1, 1));
    Eigen::MatrixXi data(1, 5);
    data << 3, 1, 4, 1, 5;
    ModelOrder order;
    order.p = 2;
    order.s = {0, 0};
    order.alpha_mask = {1, 1};
    order.intercept = InterceptMode::additive;
    const Mat x = build_design(CountSeries(data), net, order);
    REQUIRE(x.rows() == 3);
    REQUIRE(x.cols() == 3);
    // Row for t=2 (0-based): lag-1 value, lag-2 value, intercept.
    CHECK(x(0, 0) == 1);
    CHECK(x(0, 1) == 3);
    CHECK(x(0, 2) == 1);
    CHECK(x(2, 0) == 1);
    CHECK(x(2, 1) == 4);
}

TEST_CASE("every design entry matches the direct formula") {
    const Network net = build_network(five_node_adjacency());
    const CountSeries series = random_series(5, 24, 6);
    ModelOrder order;
    order.p = 2;
    order.s = {2, 1};
    order.alpha_mask = {1, 1};
    const ParamLayout layout(order, 5);
    const Mat x = build_design(series, net, order);
    const int span = series.length() - order.p;

    for (int i = 0; i < 5; ++i) {
        for (int t = order.p; t < series.length(); ++t) {
            const long row = static_cast<long>(i) * span + (t - order.p);
            for (int j = 1; j <= order.p; ++j) {
                CHECK(x(row, layout.alpha(j)) == series.data(i, t - j));
                for (int r = 1; r <= order.s[j - 1]; ++r) {
                    double expect = 0.0;
                    const auto weights = net.stage_weights(i, r);
                    for (const auto& [q, w] : weights) expect += w * series.data(q, t - j);
                    CHECK(x(row, layout.beta(j, r)) == doctest::Approx(expect).epsilon(1e-14));
                }
            }
            CHECK(x(row, layout.intercept()) == 1.0);
        }
    }
}

TEST_CASE("noise-free linear process satisfies Y = X beta exactly") {
    // Two mutually connected nodes, alpha 0.25, beta 0.5, intercept 1: the
    // constant series at the fixed point 4 reproduces itself exactly.
    Eigen::MatrixXi adj(2, 2);
    adj << 0, 1, 1, 0;
    const Network net = build_network(adj);
    Eigen::MatrixXi data = Eigen::MatrixXi::Constant(2, 8, 4);
    const CountSeries series(data);
    const ParamVector params = lag1(net, 0.25, 0.5, 1.0);

    const Mat x = build_design(series, net, ModelOrder::full(1));
    const Vec y = build_target(series, 1);
    CHECK((y - x * params.values).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("design rows permute block-wise under node relabelling") {
    const Eigen::MatrixXi adj = five_node_adjacency();
    const std::vector<int> perm{2, 4, 0, 1, 3};
    Eigen::MatrixXi shuffled_adj(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) shuffled_adj(perm[i], perm[j]) = adj(i, j);

    const CountSeries series = random_series(5, 15, 8);
    Eigen::MatrixXi shuffled_data(5, 15);
    for (int i = 0; i < 5; ++i) shuffled_data.row(perm[i]) = series.data.row(i);

    const ModelOrder order = ModelOrder::full(1);
    const Mat x_base = build_design(series, build_network(adj), order);
    const Mat x_perm = build_design(CountSeries(shuffled_data), build_network(shuffled_adj), order);

    const int span = 14;
    for (int i = 0; i < 5; ++i)
        CHECK((x_base.middleRows(i * span, span) - x_perm.middleRows(perm[i] * span, span))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
}

TEST_CASE("stationarity margin") {
    const Network net = build_network(five_node_adjacency());
    CHECK(stationarity_margin(ModelOrder::full(1), lag1(net, 0.5, 0.4, 10.0), 5) ==
          doctest::Approx(0.9).epsilon(1e-15));
    CHECK(stationarity_margin(ModelOrder::full(1), lag1(net, 0.7, 0.4, 10.0), 5) ==
          doctest::Approx(1.1).epsilon(1e-15));
    CHECK(stationarity_margin(ModelOrder::full(1), lag1(net, 0.0, 0.0, 0.0), 5) == 0.0);
}

TEST_CASE("stationarity margin uses absolute values") {
    const Network net = build_network(five_node_adjacency());
    CHECK(stationarity_margin(ModelOrder::full(1), lag1(net, 0.5, -0.4, 10.0), 5) ==
          doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("companion matrix blocks and row sums") {
    const Network net = build_network(five_node_adjacency());
    const ModelOrder order = ModelOrder::full(1);
    const ParamVector params = lag1(net, 0.5, 0.4, 10.0);

    const Mat a1 = lag_coefficient_matrix(order, params, net, 1);
    const Mat comp = companion_matrix(order, params, net);
    CHECK((comp - a1).cwiseAbs().maxCoeff() == 0.0);  // p = 1: no padding

    // Per-stage weights sum to one, so every row sums to alpha + beta.
    for (int i = 0; i < 5; ++i) CHECK(a1.row(i).sum() == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(oracles::spectral_radius_power(a1) < 1.0);
}

TEST_CASE("margin below one implies spectral radius below one") {
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Network net = build_network(five_node_adjacency());
    ModelOrder order;
    order.p = 2;
    order.s = {1, 1};
    order.alpha_mask = {1, 1};
    const ParamLayout layout(order, 5);

    for (int trial = 0; trial < 100; ++trial) {
        // Four non-negative coefficients scaled to a margin below one.
        double raw[4] = {unif(gen), unif(gen), unif(gen), unif(gen)};
        const double total = raw[0] + raw[1] + raw[2] + raw[3];
        const double target = 0.2 + 0.75 * unif(gen);
        Vec v = Vec::Zero(layout.size());
        v[layout.alpha(1)] = raw[0] / total * target;
        v[layout.beta(1, 1)] = raw[1] / total * target;
        v[layout.alpha(2)] = raw[2] / total * target;
        v[layout.beta(2, 1)] = raw[3] / total * target;
        const ParamVector params(v, layout.unbounded());
        REQUIRE(stationarity_margin(order, params, 5) < 1.0);
        CHECK(oracles::spectral_radius_power(companion_matrix(order, params, net)) < 1.0);
    }
}

TEST_CASE("stationary mean solves the linear system") {
    const Network net = build_network(five_node_adjacency());
    const ModelOrder order = ModelOrder::full(1);

    const Vec mu =
        stationary_mean(order, lag1(net, 0.5, 0.4, 10.0), net, Vec::Constant(5, 10.0));
    for (int i = 0; i < 5; ++i) CHECK(mu[i] == doctest::Approx(100.0).epsilon(1e-10));

    const Vec mu0 = stationary_mean(order, lag1(net, 0.0, 0.0, 7.0), net, Vec::Constant(5, 7.0));
    for (int i = 0; i < 5; ++i) CHECK(mu0[i] == doctest::Approx(7.0).epsilon(1e-12));

    const Network solo = build_network(Eigen::MatrixXi::Zero(1, 1));
    ModelOrder ar;
    ar.p = 1;
    ar.s = {0};
    ar.alpha_mask = {1};
    const ParamLayout slayout(ar, 1);
    Vec v(slayout.size());
    v[slayout.alpha(1)] = 0.5;
    v[slayout.intercept()] = 5.0;
    const Vec mu1 = stationary_mean(ar, ParamVector(v, slayout.unbounded()), solo,
                                    Vec::Constant(1, 5.0));
    CHECK(mu1[0] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("stationary mean rejects a singular system") {
    const Network solo = build_network(Eigen::MatrixXi::Zero(1, 1));
    ModelOrder ar;
    ar.p = 1;
    ar.s = {0};
    ar.alpha_mask = {1};
    const ParamLayout layout(ar, 1);
    Vec v(layout.size());
    v[layout.alpha(1)] = 1.0;
    v[layout.intercept()] = 5.0;
    CHECK_THROWS_AS(stationary_mean(ar, ParamVector(v, layout.unbounded()), solo,
                                    Vec::Constant(1, 5.0)),
                    NumericalError);
}

TEST_CASE("parameter layout: local alphas order node-within-lag") {
    ModelOrder order = ModelOrder::full(2);
    order.global_alpha = false;
    const ParamLayout layout(order, 3);
    // Lag 1: alpha_1_i1..alpha_1_i3, beta_1_1; lag 2 likewise; intercept.
    CHECK(layout.size() == 3 + 1 + 3 + 1 + 1);
    CHECK(layout.alpha(1, 0) == 0);
    CHECK(layout.alpha(1, 2) == 2);
    CHECK(layout.beta(1, 1) == 3);
    CHECK(layout.alpha(2, 0) == 4);
    CHECK(layout.beta(2, 1) == 7);
    CHECK(layout.intercept() == 8);

    const auto names = layout.names();
    CHECK(names[0] == "alpha_1_i1");
    CHECK(names[3] == "beta_1_1");
    CHECK(names[8] == "lambda");
}

TEST_CASE("parameter layout: local intercepts and excluded alphas") {
    ModelOrder order;
    order.p = 2;
    order.s = {1, 0};
    order.alpha_mask = {0, 1};
    order.intercept = InterceptMode::additive;
    order.local_intercept = true;
    const ParamLayout layout(order, 4);
    CHECK(layout.size() == 1 + 1 + 4);
    CHECK_FALSE(layout.has_alpha(1));
    CHECK_THROWS_AS(layout.alpha(1), std::invalid_argument);
    CHECK(layout.beta(1, 1) == 0);
    CHECK(layout.alpha(2) == 1);
    CHECK(layout.intercept(3) == 5);
    CHECK(layout.names()[2] == "alpha_0_i1");
}

TEST_CASE("linear predictor agrees with the design row") {
    const Network net = build_network(five_node_adjacency());
    const CountSeries series = random_series(5, 9, 21);
    ModelOrder order;
    order.p = 2;
    order.s = {2, 1};
    order.alpha_mask = {1, 0};
    const ParamLayout layout(order, 5);

    std::mt19937 gen(3);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vec v(layout.size());
    for (int k = 0; k < v.size(); ++k) v[k] = unif(gen);
    const ParamVector params(v, layout.unbounded());

    const Mat x = build_design(series, net, order);
    const int span = series.length() - order.p;
    const int t = series.length() - 1;
    Mat window(5, order.p);
    for (int j = 1; j <= order.p; ++j)
        for (int i = 0; i < 5; ++i) window(i, j - 1) = series.data(i, t - j);

    // history_window looks one step past the end of the series.
    const Mat hw = history_window(series, order.p);
    for (int j = 1; j <= order.p; ++j)
        for (int i = 0; i < 5; ++i)
            CHECK(hw(i, j - 1) == series.data(i, series.length() - j));

    const Vec eta = linear_predictor(net, order, params, window);
    for (int i = 0; i < 5; ++i) {
        const long row = static_cast<long>(i) * span + (t - order.p);
        CHECK(eta[i] == doctest::Approx(x.row(row).dot(v)).epsilon(1e-12));
    }
}

TEST_CASE("local alphas expand into per-node design columns") {
    const Network net = build_network(five_node_adjacency());
    const CountSeries series = random_series(5, 8, 33, 9);
    ModelOrder order = ModelOrder::full(1);
    order.global_alpha = false;
    order.local_intercept = true;
    const ParamLayout layout(order, 5);
    const Mat x = build_design(series, net, order);
    REQUIRE(x.cols() == 5 + 1 + 5);
    const int span = 7;
    for (int i = 0; i < 5; ++i) {
        for (int t = 1; t < 8; ++t) {
            const long row = static_cast<long>(i) * span + (t - 1);
            for (int k = 0; k < 5; ++k) {
                CHECK(x(row, layout.alpha(1, k)) ==
                      (k == i ? series.data(i, t - 1) : 0));
                CHECK(x(row, layout.intercept(k)) == (k == i ? 1.0 : 0.0));
            }
        }
    }
}

TEST_CASE("count series rejects negative entries") {
    Eigen::MatrixXi bad(1, 2);
    bad << 1, -2;
    CHECK_THROWS_AS(CountSeries{bad}, std::invalid_argument);
}

TEST_SUITE_END();
