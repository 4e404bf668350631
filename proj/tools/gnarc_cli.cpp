// Command line front end: simulate / fit / forecast / eval / select-order /
// study / make-fixture.  Exit codes: 0 success, 1 validation error,
// 2 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gnarc/gnarc.hpp"

namespace {

using namespace gnarc;

struct AdamFlags {
    long max_iters = 50000;
    double tol = 1e-6;
    double step = 0.01;

    OptimizerConfig config() const {
        OptimizerConfig cfg;
        cfg.max_iterations = max_iters;
        cfg.grad_tolerance = tol;
        cfg.step = step;
        return cfg;
    }
};

void add_adam_flags(CLI::App* cmd, AdamFlags& flags) {
    cmd->add_option("--adam-iters", flags.max_iters, "ADAM iteration cap")->check(CLI::PositiveNumber);
    cmd->add_option("--adam-tol", flags.tol, "gradient infinity-norm tolerance");
    cmd->add_option("--adam-step", flags.step, "ADAM step size");
}

CountSeries maybe_truncate(const CountSeries& series, int train_len) {
    if (train_len <= 0) return series;
    return split_train_test(series, train_len).first;
}

ModelOrder order_from_flags(int p, std::vector<int> stages, std::vector<int> mask,
                            InterceptMode mode, bool local_icpt) {
    ModelOrder order;
    order.p = p;
    order.s = stages.empty() ? std::vector<int>(p, 1) : stages;
    if (mask.empty()) {
        order.alpha_mask.assign(p, 1);
    } else {
        order.alpha_mask.clear();
        for (int m : mask) order.alpha_mask.push_back(static_cast<std::uint8_t>(m));
    }
    order.intercept = mode;
    order.local_intercept = local_icpt;
    order.validate();
    return order;
}

bool canonical_protocol(const ParamStudyReport& report) {
    const std::vector<double> t1{0.5, 0.4, 10.0}, t2{0.5, -0.4, 10.0};
    return report.truth == (report.study == "table1" ? t1 : t2);
}

BenchmarkMoments study_reference(const ParamStudyReport& report, const ParamStudyRow& row) {
    if (!canonical_protocol(report)) return {};
    return report.study == "table1" ? table1_reference(row.length)
                                    : table2_reference(row.length, row.method);
}

void print_param_study(const ParamStudyReport& report) {
    std::cout << "study " << report.study << " (truth:";
    for (double v : report.truth) std::cout << " " << v;
    std::cout << ")\n";
    for (const auto& row : report.rows) {
        const BenchmarkMoments ref = study_reference(report, row);
        std::cout << "  T=" << row.length << " method=" << row.method
                  << " fits=" << row.estimates.size() << " failures=" << row.failures
                  << " non_converged=" << row.non_converged << "\n";
        for (std::size_t k = 0; k < row.param_names.size(); ++k) {
            std::cout << "    " << std::left << std::setw(10) << row.param_names[k]
                      << " mean=" << std::setw(10) << row.mean[static_cast<long>(k)]
                      << " sd=" << std::setw(10) << row.sd[static_cast<long>(k)];
            if (ref.available())
                std::cout << " reference=" << ref.mean[k] << " (" << ref.sd[k] << ")";
            std::cout << "\n";
        }
    }
}

void write_param_study_csv(const ParamStudyReport& report, const std::string& path) {
    auto out = gnarc::detail::open_output(path);
    out << "study,T,method,param,mean,sd,mean_se,reference_mean,reference_sd,fits,failures\n";
    for (const auto& row : report.rows) {
        const BenchmarkMoments ref = study_reference(report, row);
        for (std::size_t k = 0; k < row.param_names.size(); ++k) {
            out << report.study << "," << row.length << "," << row.method << ","
                << row.param_names[k] << ","
                << gnarc::detail::format_double(row.mean[static_cast<long>(k)]) << ","
                << gnarc::detail::format_double(row.sd[static_cast<long>(k)]) << ","
                << gnarc::detail::format_double(row.mean_se[static_cast<long>(k)]) << ",";
            if (ref.available())
                out << ref.mean[k] << "," << ref.sd[k];
            else
                out << ",";
            out << "," << row.estimates.size() << "," << row.failures << "\n";
        }
    }
}

void write_predictive_csv(const PredictiveStudyReport& report, const std::string& path) {
    auto out = gnarc::detail::open_output(path);
    out << "model,process,horizon,mean_mspe,failures\n";
    const auto& pnames = predictive_process_names();
    const auto& mnames = predictive_model_names();
    for (std::size_t mi = 0; mi < report.models.size(); ++mi)
        for (std::size_t pi = 0; pi < report.processes.size(); ++pi)
            for (std::size_t hi = 0; hi < report.horizons.size(); ++hi)
                out << mnames[report.models[mi]] << "," << pnames[report.processes[pi]] << ","
                    << report.horizons[hi] << ","
                    << gnarc::detail::format_double(report.mean_mspe[mi][pi][hi]) << ","
                    << report.failures[mi][pi] << "\n";
}

void print_predictive(const PredictiveStudyReport& report) {
    const auto& pnames = predictive_process_names();
    const auto& mnames = predictive_model_names();
    for (std::size_t hi = 0; hi < report.horizons.size(); ++hi) {
        std::cout << "horizon " << report.horizons[hi] << "\n";
        std::cout << "  " << std::left << std::setw(12) << "model";
        for (int p : report.processes) std::cout << std::setw(10) << pnames[p];
        std::cout << "\n";
        for (std::size_t mi = 0; mi < report.models.size(); ++mi) {
            std::cout << "  " << std::setw(12) << mnames[report.models[mi]];
            for (std::size_t pi = 0; pi < report.processes.size(); ++pi)
                std::cout << std::setw(10) << std::setprecision(4) << report.mean_mspe[mi][pi][hi];
            std::cout << "\n";
        }
    }
}

// ---- subcommand payloads --------------------------------------------------

int run_simulate(const std::string& model, const std::string& net_path, double alpha, double beta,
                 double lambda, double alpha0, double beta0, const std::string& response_name,
                 double softplus_c, int t_len, int burn_in, std::uint64_t seed,
                 const std::string& out_path) {
    std::vector<std::string> ids;
    const Network net = read_adjacency_csv(net_path, &ids);
    Rng rng(seed);
    CountSeries series;
    if (model == "gnari") {
        const GnariModel m(net, ModelOrder::full(1, InterceptMode::innovation_mean),
                           lag1_params(net, alpha, beta, lambda,
                                       InterceptMode::innovation_mean, true));
        series = simulate_gnari(m, t_len, burn_in, rng);
    } else if (model == "ngnar") {
        const NgnarModel m(net, ModelOrder::full(1, InterceptMode::additive),
                           lag1_params(net, alpha, beta, alpha0, InterceptMode::additive, false),
                           ResponseFunction::from_name(response_name, softplus_c));
        series = simulate_ngnar(m, t_len, burn_in, rng);
    } else if (model == "pnar") {
        series = simulate_pnar(PnarModel{beta0, alpha, beta}, net, t_len, burn_in, rng);
    } else {
        throw std::invalid_argument("unknown model '" + model + "' (gnari | ngnar | pnar)");
    }
    series.node_ids = ids;
    write_series_csv(series, out_path);
    std::cout << "wrote " << series.length() << "x" << series.nodes() << " series to " << out_path
              << "\n";
    return 0;
}

int run_fit(const std::string& model, const std::string& method, const std::string& net_path,
            const std::string& series_path, int train_len, int p, std::vector<int> stages,
            std::vector<int> mask, bool local_icpt, const std::string& response_name,
            double softplus_c, const std::string& order_path, const AdamFlags& adam,
            int multi_start, const std::string& out_path) {
    const Network net = read_adjacency_csv(net_path);
    const CountSeries series = maybe_truncate(read_series_csv(series_path), train_len);
    if (series.nodes() != net.node_count())
        throw std::invalid_argument("series and network disagree on the node count");

    const InterceptMode mode =
        model == "gnari" ? InterceptMode::innovation_mean : InterceptMode::additive;
    ModelOrder order;
    if (!order_path.empty()) {
        auto in = gnarc::detail::open_input(order_path);
        nlohmann::json j;
        in >> j;
        order = order_from_json(j.contains("order") ? j.at("order") : j);
        order.intercept = mode;
    } else {
        order = order_from_flags(p, std::move(stages), std::move(mask), mode, local_icpt);
    }

    FitResult fit;
    if (model == "gnar") {
        fit = fit_gnar_cls(series, net, order);
    } else if (model == "gnari") {
        fit = fit_gnari_cls(series, net, order);
    } else if (model == "ngnar") {
        const ResponseFunction rf = ResponseFunction::from_name(response_name, softplus_c);
        if (method == "cmle")
            fit = fit_ngnar_cmle(series, net, order, rf, adam.config(), multi_start);
        else if (method == "cls")
            fit = fit_ngnar_cls(series, net, order, rf, adam.config(), multi_start);
        else
            throw std::invalid_argument("ngnar method must be cls or cmle");
    } else if (model == "pnar") {
        fit = fit_pnar1(series, net, adam.config());
        const ParamLayout layout(fit.order, net.node_count());
        const PnarModel fitted{fit.params.values[layout.intercept()],
                               fit.params.values[layout.alpha(1)],
                               fit.params.values[layout.beta(1, 1)]};
        const double rho = pnar_spectral_radius(fitted, net);
        std::cout << "pnar stationarity certificate: spectral radius " << rho
                  << (rho < 1.0 ? " < 1\n" : " >= 1 (condition fails)\n");
    } else {
        throw std::invalid_argument("unknown model '" + model + "'");
    }
    write_fit_json(fit, net.node_count(), out_path);
    std::cout << "fit " << fit.model << "/" << fit.method << ": objective=" << fit.objective
              << " converged=" << (fit.converged ? "true" : "false")
              << " grad_norm=" << fit.grad_norm << " -> " << out_path << "\n";
    return 0;
}

int run_forecast(const std::string& fit_path, const std::string& net_path,
                 const std::string& series_path, int train_len, int horizon,
                 const std::string& out_path) {
    std::vector<std::string> ids;
    const Network net = read_adjacency_csv(net_path, &ids);
    const CountSeries history = maybe_truncate(read_series_csv(series_path), train_len);
    const FitResult fit = read_fit_json(fit_path);

    Mat pred;
    if (fit.model == "gnari")
        pred = predict_gnari(net, fit, history, horizon);
    else if (fit.model == "ngnar")
        pred = predict_ngnar(net, fit, history, horizon);
    else if (fit.model == "pnar")
        pred = predict_pnar(net, fit, history, horizon);
    else
        pred = predict_gnar(net, fit, history, horizon);
    write_forecast_csv(pred, history.node_ids, out_path);
    std::cout << "wrote " << horizon << "-step forecast to " << out_path << "\n";
    return 0;
}

int run_eval(const std::string& truth_path, int train_len,
             const std::vector<std::string>& pred_specs, std::vector<int> horizons,
             const std::string& report_path, const std::string& plot_path) {
    const CountSeries full = read_series_csv(truth_path);
    Mat truth;
    if (train_len > 0) {
        truth = split_train_test(full, train_len).second.data.cast<double>();
    } else {
        truth = full.data.cast<double>();
    }

    std::vector<std::string> models;
    std::vector<Mat> forecasts;
    for (const std::string& entry : pred_specs) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--pred expects name=path, got '" + entry + "'");
        models.push_back(entry.substr(0, eq));
        forecasts.push_back(read_forecast_csv(entry.substr(eq + 1)));
    }
    if (models.empty()) throw std::invalid_argument("at least one --pred name=path is required");

    int h_max = static_cast<int>(truth.cols());
    for (const Mat& f : forecasts) h_max = std::min(h_max, static_cast<int>(f.cols()));
    if (horizons.empty()) horizons = all_horizons(h_max);

    const EvalReport report = evaluate_forecasts(models, forecasts, truth, horizons);
    std::vector<ReportRow> rows;
    for (std::size_t m = 0; m < models.size(); ++m)
        for (std::size_t h = 0; h < horizons.size(); ++h)
            rows.push_back({models[m], "", horizons[h], report.mspe_by_model[m][h],
                            report.mape_by_model[m][h]});
    if (!report_path.empty()) write_report_csv(rows, report_path);
    if (!plot_path.empty()) write_plot_csv(report, plot_path);

    for (std::size_t m = 0; m < models.size(); ++m) {
        const std::size_t last = horizons.size() - 1;
        std::cout << models[m] << ": mspe(h=" << horizons[last]
                  << ")=" << report.mspe_by_model[m][last]
                  << " mape=" << report.mape_by_model[m][last] << "\n";
    }
    return 0;
}

int run_select_order(const std::string& model, const std::string& net_path,
                     const std::string& series_path, int train_len, int max_p, bool local_icpt,
                     const std::string& response_name, double softplus_c, const AdamFlags& adam,
                     const std::string& out_path) {
    const Network net = read_adjacency_csv(net_path);
    const CountSeries series = maybe_truncate(read_series_csv(series_path), train_len);

    ModelKind kind;
    if (model == "gnar")
        kind = ModelKind::gnar;
    else if (model == "gnari")
        kind = ModelKind::gnari;
    else if (model == "ngnar-cls")
        kind = ModelKind::ngnar_cls;
    else if (model == "ngnar-cmle")
        kind = ModelKind::ngnar_cmle;
    else
        throw std::invalid_argument("unknown selection model '" + model +
                                    "' (gnar | gnari | ngnar-cls | ngnar-cmle)");

    const BicSelection selection =
        backward_bic_select(series, net, max_p, kind,
                            ResponseFunction::from_name(response_name, softplus_c), local_icpt,
                            adam.config());

    nlohmann::json j;
    j["model"] = model;
    j["bic"] = selection.bic;
    j["order"] = order_to_json(selection.order);
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : selection.steps) steps.push_back({{"removed", s.removed}, {"bic", s.bic}});
    j["steps"] = steps;
    auto out = gnarc::detail::open_output(out_path);
    out << j.dump(2) << "\n";

    std::cout << "selected order for " << model << ": p=" << selection.order.p << " alpha_mask=[";
    for (std::size_t k = 0; k < selection.order.alpha_mask.size(); ++k)
        std::cout << (k ? "," : "") << int(selection.order.alpha_mask[k]);
    std::cout << "] s=[";
    for (std::size_t k = 0; k < selection.order.s.size(); ++k)
        std::cout << (k ? "," : "") << selection.order.s[k];
    std::cout << "] bic=" << selection.bic << " (" << selection.steps.size() << " deletions)\n";
    return 0;
}

int run_study(const std::string& which, int reps, std::uint64_t seed, int threads, bool quick,
              std::vector<int> lengths, int train_len, int test_len,
              std::vector<int> process_filter, std::vector<int> model_filter,
              const AdamFlags& adam, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const Network net = build_network(five_node_adjacency());

    if (which == "table1" || which == "table2") {
        ParamStudyConfig cfg;
        cfg.seed = seed;
        cfg.threads = threads;
        cfg.adam = adam.config();
        if (!lengths.empty()) cfg.lengths = lengths;
        if (which == "table1") {
            cfg.reps = reps > 0 ? reps : (quick ? 50 : 1000);
            const ParamStudyReport report = run_table1(net, cfg);
            print_param_study(report);
            write_param_study_csv(report, out_dir + "/table1_report.csv");
        } else {
            cfg.reps = reps > 0 ? reps : (quick ? 20 : 100);
            cfg.beta = -0.4;
            const ParamStudyReport report = run_table2(net, cfg);
            print_param_study(report);
            write_param_study_csv(report, out_dir + "/table2_report.csv");
        }
        return 0;
    }
    if (which == "table3") {
        PredictiveStudyConfig cfg;
        cfg.reps = reps > 0 ? reps : (quick ? 50 : 500);
        cfg.seed = seed;
        cfg.threads = threads;
        cfg.adam = adam.config();
        if (train_len > 0) cfg.train_len = train_len;
        if (test_len > 0) cfg.test_len = test_len;
        if (!process_filter.empty()) cfg.processes = process_filter;
        if (!model_filter.empty()) cfg.models = model_filter;
        const PredictiveStudyReport report = run_table3(net, cfg);
        print_predictive(report);
        write_predictive_csv(report, out_dir + "/table3_report.csv");
        return 0;
    }
    throw std::invalid_argument("unknown study '" + which + "' (table1 | table2 | table3)");
}

// Deterministic synthetic fixture shaped like the county-level case study:
// a bundled border-style edge list plus a simulated count panel with
// node-specific levels.
int run_make_fixture(const std::string& edges_path, int t_len, std::uint64_t seed,
                     const std::string& out_series, const std::string& out_net) {
    std::vector<std::string> ids;
    const Network net = read_edge_list_csv(edges_path, &ids);
    const int n = net.node_count();

    // Lag-1 thinning process with global alpha/beta and local innovation
    // means spanning roughly two orders of magnitude across nodes.
    ModelOrder order = ModelOrder::full(1, InterceptMode::innovation_mean);
    order.local_intercept = true;
    const ParamLayout layout(order, n);
    Vec values = Vec::Zero(layout.size());
    values[layout.alpha(1)] = 0.35;
    values[layout.beta(1, 1)] = 0.30;
    Rng level_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> level(0.0, 1.0);
    for (int i = 0; i < n; ++i)
        values[layout.intercept(i)] = 0.5 + 9.5 * std::pow(level(level_rng), 2.0);
    const GnariModel model(net, order, ParamVector(values, layout.thinning_bounds()));

    Rng rng(seed);
    CountSeries series = simulate_gnari(model, t_len, 200, rng);
    series.node_ids = ids;
    write_series_csv(series, out_series);

    if (!out_net.empty()) {
        auto out = gnarc::detail::open_output(out_net);
        for (int i = 0; i < n; ++i) out << (i ? "," : "") << ids[i];
        out << "\n";
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) out << (j ? "," : "") << net.adjacency()(i, j);
            out << "\n";
        }
    }
    std::cout << "wrote " << t_len << "x" << n << " fixture series to " << out_series << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"count network time series toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate a count network process");
    std::string sim_model = "gnari", sim_net, sim_out = "series.csv", sim_response = "softplus";
    double sim_alpha = 0.0, sim_beta = 0.0, sim_lambda = 0.0, sim_alpha0 = 0.0, sim_beta0 = 0.0;
    double sim_c = 1.0;
    int sim_t = 500, sim_burn = 100;
    std::uint64_t sim_seed = 1;
    sim->add_option("--model", sim_model, "gnari | ngnar | pnar");
    sim->add_option("--net", sim_net, "adjacency CSV")->required();
    sim->add_option("--alpha", sim_alpha, "lag-1 autoregressive coefficient");
    sim->add_option("--beta", sim_beta, "stage-1 network coefficient");
    sim->add_option("--lambda", sim_lambda, "innovation mean (gnari)");
    sim->add_option("--alpha0", sim_alpha0, "additive intercept (ngnar)");
    sim->add_option("--beta0", sim_beta0, "intercept (pnar)");
    sim->add_option("--response", sim_response, "ngnar response function");
    sim->add_option("--softplus-c", sim_c, "softplus sharpness");
    sim->add_option("--T", sim_t, "series length")->check(CLI::PositiveNumber);
    sim->add_option("--burn-in", sim_burn, "discarded initial steps");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--out", sim_out, "output series CSV");

    // fit
    auto* fit = app.add_subcommand("fit", "fit a model to a series");
    std::string fit_model = "gnari", fit_method = "cls", fit_net, fit_series, fit_order;
    std::string fit_response = "softplus", fit_out = "fit.json";
    int fit_train = 0, fit_p = 1, fit_multi_start = 0;
    double fit_c = 1.0;
    bool fit_local_icpt = false;
    std::vector<int> fit_s, fit_mask;
    AdamFlags fit_adam;
    fit->add_option("--model", fit_model, "gnar | gnari | ngnar | pnar");
    fit->add_option("--method", fit_method, "cls | cmle (ngnar only)");
    fit->add_option("--net", fit_net, "adjacency CSV")->required();
    fit->add_option("--series", fit_series, "series CSV")->required();
    fit->add_option("--train", fit_train, "fit on the first TRAIN observations");
    fit->add_option("--p", fit_p, "lag order")->check(CLI::PositiveNumber);
    fit->add_option("--s", fit_s, "per-lag stage depths");
    fit->add_option("--alpha-mask", fit_mask, "per-lag alpha inclusion (0/1)");
    fit->add_flag("--local-intercept", fit_local_icpt, "one intercept per node");
    fit->add_option("--response", fit_response, "ngnar response function");
    fit->add_option("--softplus-c", fit_c, "softplus sharpness");
    fit->add_option("--order", fit_order, "order JSON from select-order");
    fit->add_option("--multi-start", fit_multi_start,
                    "extra jittered ADAM restarts for ngnar fits (default 0: one "
                    "deterministic initialization)");
    fit->add_option("--out", fit_out, "output fit JSON");
    add_adam_flags(fit, fit_adam);

    // forecast
    auto* fc = app.add_subcommand("forecast", "forecast from a fit JSON");
    std::string fc_fit, fc_net, fc_series, fc_out = "forecast.csv";
    int fc_train = 0, fc_h = 1;
    fc->add_option("--fit", fc_fit, "fit JSON")->required();
    fc->add_option("--net", fc_net, "adjacency CSV")->required();
    fc->add_option("--series", fc_series, "history series CSV")->required();
    fc->add_option("--train", fc_train, "use only the first TRAIN observations as history");
    fc->add_option("--horizon", fc_h, "forecast horizon")->check(CLI::PositiveNumber);
    fc->add_option("--out", fc_out, "output forecast CSV");

    // eval
    auto* ev = app.add_subcommand("eval", "score forecasts against the truth");
    std::string ev_truth, ev_report = "report.csv", ev_plot;
    int ev_train = 0;
    std::vector<std::string> ev_preds;
    std::vector<int> ev_horizons;
    ev->add_option("--truth", ev_truth, "full series CSV")->required();
    ev->add_option("--train", ev_train, "truth = observations after the first TRAIN");
    ev->add_option("--pred", ev_preds, "model=forecast.csv (repeatable)")->required();
    ev->add_option("--horizons", ev_horizons, "horizons to report (default: all)");
    ev->add_option("--out", ev_report, "report CSV (model,process,horizon,mspe,mape)");
    ev->add_option("--plot", ev_plot, "plot CSV (horizon,model,mape)");

    // select-order
    auto* sel = app.add_subcommand("select-order", "backward BIC order selection");
    std::string sel_model = "gnar", sel_net, sel_series, sel_response = "softplus";
    std::string sel_out = "order.json";
    int sel_train = 0, sel_maxp = 14;
    double sel_c = 1.0;
    bool sel_local_icpt = false;
    AdamFlags sel_adam;
    sel->add_option("--model", sel_model, "gnar | gnari | ngnar-cls | ngnar-cmle");
    sel->add_option("--net", sel_net, "adjacency CSV")->required();
    sel->add_option("--series", sel_series, "series CSV")->required();
    sel->add_option("--train", sel_train, "select on the first TRAIN observations");
    sel->add_option("--max-p", sel_maxp, "maximum lag")->check(CLI::PositiveNumber);
    sel->add_flag("--local-intercept", sel_local_icpt, "one intercept per node");
    sel->add_option("--response", sel_response, "ngnar response function");
    sel->add_option("--softplus-c", sel_c, "softplus sharpness");
    sel->add_option("--out", sel_out, "output order JSON");
    add_adam_flags(sel, sel_adam);

    // study
    auto* st = app.add_subcommand("study", "replication studies on the five-node demo network");
    std::string st_which, st_out = "study_out", st_config;
    int st_reps = 0, st_threads = 1, st_train = 0, st_test = 0;
    std::uint64_t st_seed = 1;
    bool st_quick = false;
    std::vector<int> st_lengths, st_processes, st_models;
    AdamFlags st_adam;
    st->add_option("which", st_which, "table1 | table2 | table3")->required();
    st->add_option("--config", st_config, "key=value config file (flags override)");
    st->add_option("--reps", st_reps, "replication count");
    st->add_option("--seed", st_seed, "base RNG seed");
    st->add_option("--threads", st_threads, "worker threads");
    st->add_flag("--quick", st_quick, "reduced replication counts");
    st->add_option("--lengths", st_lengths, "series lengths (table1/table2)");
    st->add_option("--train", st_train, "training length (table3)");
    st->add_option("--test", st_test, "test length (table3)");
    st->add_option("--processes", st_processes, "process indices 0..3 (table3)");
    st->add_option("--models", st_models, "model indices 0..3 (table3)");
    st->add_option("--out", st_out, "output directory");
    add_adam_flags(st, st_adam);

    // make-fixture
    auto* mf = app.add_subcommand("make-fixture",
                                  "generate the synthetic county-shaped count panel");
    std::string mf_edges, mf_series = "fixture_series.csv", mf_net;
    int mf_t = 783;
    std::uint64_t mf_seed = 71;
    mf->add_option("--edges", mf_edges, "bundled edge list CSV")->required();
    mf->add_option("--T", mf_t, "panel length")->check(CLI::PositiveNumber);
    mf->add_option("--seed", mf_seed, "RNG seed");
    mf->add_option("--out-series", mf_series, "output series CSV");
    mf->add_option("--out-net", mf_net, "output adjacency CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed())
            return run_simulate(sim_model, sim_net, sim_alpha, sim_beta, sim_lambda, sim_alpha0,
                                sim_beta0, sim_response, sim_c, sim_t, sim_burn, sim_seed, sim_out);
        if (fit->parsed())
            return run_fit(fit_model, fit_method, fit_net, fit_series, fit_train, fit_p, fit_s,
                           fit_mask, fit_local_icpt, fit_response, fit_c, fit_order, fit_adam,
                           fit_multi_start, fit_out);
        if (fc->parsed()) return run_forecast(fc_fit, fc_net, fc_series, fc_train, fc_h, fc_out);
        if (ev->parsed())
            return run_eval(ev_truth, ev_train, ev_preds, ev_horizons, ev_report, ev_plot);
        if (sel->parsed())
            return run_select_order(sel_model, sel_net, sel_series, sel_train, sel_maxp,
                                    sel_local_icpt, sel_response, sel_c, sel_adam, sel_out);
        if (st->parsed()) {
            if (!st_config.empty()) {
                const auto cfg = read_config_file(st_config);
                auto get_int = [&](const char* key, int& target) {
                    if (cfg.count(key)) target = std::stoi(cfg.at(key));
                };
                if (cfg.count("seed")) st_seed = std::stoull(cfg.at("seed"));
                get_int("reps", st_reps);
                get_int("threads", st_threads);
                get_int("train", st_train);
                get_int("test", st_test);
            }
            return run_study(st_which, st_reps, st_seed, st_threads, st_quick, st_lengths,
                             st_train, st_test, st_processes, st_models, st_adam, st_out);
        }
        if (mf->parsed()) return run_make_fixture(mf_edges, mf_t, mf_seed, mf_series, mf_net);
    } catch (const gnarc::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
