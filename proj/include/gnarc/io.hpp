#pragma once

#include <Eigen/Dense>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gnarc/design.hpp"
#include "gnarc/eval.hpp"
#include "gnarc/network.hpp"
#include "gnarc/optimize.hpp"

namespace gnarc {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline bool parse_int(const std::string& s, long& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stol(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size();
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size();
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file '" + path + "' for reading");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file '" + path + "' for writing");
    return out;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Reads a count series CSV: header row of node ids, then one row of N
/// non-negative integers per time step.  Malformed rows are rejected with
/// their line number.
inline CountSeries read_series_csv(const std::string& path) {
    auto in = detail::open_input(path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("series file '" + path + "' is empty");
    const auto ids = detail::split_csv_line(line);
    const int n = static_cast<int>(ids.size());
    if (n == 0) throw std::runtime_error("series file '" + path + "' has an empty header");

    std::vector<std::vector<int>> rows;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (static_cast<int>(fields.size()) != n)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(n) + " fields, found " +
                                     std::to_string(fields.size()));
        std::vector<int> row(n);
        for (int i = 0; i < n; ++i) {
            long v;
            if (!detail::parse_int(fields[i], v) || v < 0)
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": count must be a non-negative integer, got '" +
                                         fields[i] + "'");
            row[i] = static_cast<int>(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("series file '" + path + "' has no observations");

    Eigen::MatrixXi data(n, static_cast<int>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (int i = 0; i < n; ++i) data(i, static_cast<int>(t)) = rows[t][i];
    return CountSeries(std::move(data), ids);
}

/// Writes a series in the same layout read_series_csv expects.
inline void write_series_csv(const CountSeries& series, const std::string& path) {
    auto out = detail::open_output(path);
    for (int i = 0; i < series.nodes(); ++i) out << (i ? "," : "") << series.node_ids[i];
    out << "\n";
    for (int t = 0; t < series.length(); ++t) {
        for (int i = 0; i < series.nodes(); ++i) out << (i ? "," : "") << series.data(i, t);
        out << "\n";
    }
}

/// Reads an N x N adjacency CSV of 0/1 entries, with an optional header
/// row of node identifiers.  Returns the network and the node ids.
inline Network read_adjacency_csv(const std::string& path,
                                  std::vector<std::string>* node_ids = nullptr) {
    auto in = detail::open_input(path);
    std::string line;
    std::vector<std::vector<std::string>> raw;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        raw.push_back(detail::split_csv_line(line));
    }
    if (raw.empty()) throw std::runtime_error("adjacency file '" + path + "' is empty");

    std::vector<std::string> ids;
    std::size_t first_row = 0;
    // Header detection: a non-numeric first field always means a header;
    // numeric node ids are still recognized when the row count exceeds the
    // column count by one.
    long probe;
    bool has_header = !detail::parse_int(raw[0][0], probe);
    if (!has_header && raw.size() == raw[0].size() + 1) has_header = true;
    if (has_header) {
        ids = raw[0];
        first_row = 1;
    }
    const std::size_t n = raw.size() - first_row;
    if (n == 0) throw std::runtime_error("adjacency file '" + path + "' has no matrix rows");
    if (has_header && ids.size() != n)
        throw std::runtime_error("adjacency header lists " + std::to_string(ids.size()) +
                                 " nodes but the matrix has " + std::to_string(n) + " rows");
    Eigen::MatrixXi adj(static_cast<int>(n), static_cast<int>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const auto& fields = raw[first_row + r];
        if (fields.size() != n)
            throw std::runtime_error(path + ": row " + std::to_string(r + first_row + 1) +
                                     " has " + std::to_string(fields.size()) +
                                     " fields, expected " + std::to_string(n));
        for (std::size_t c = 0; c < n; ++c) {
            long v;
            if (!detail::parse_int(fields[c], v))
                throw std::runtime_error(path + ": row " + std::to_string(r + first_row + 1) +
                                         ": entry '" + fields[c] + "' is not an integer");
            adj(static_cast<int>(r), static_cast<int>(c)) = static_cast<int>(v);
        }
    }
    if (node_ids) {
        if (has_header) {
            *node_ids = ids;
        } else {
            node_ids->clear();
            for (std::size_t i = 0; i < n; ++i) node_ids->push_back("n" + std::to_string(i + 1));
        }
    }
    return build_network(adj);
}

/// Reads an undirected edge list: first line holds every node id in order,
/// each following line one "a,b" edge.  Returns a symmetric network.
inline Network read_edge_list_csv(const std::string& path,
                                  std::vector<std::string>* node_ids = nullptr) {
    auto in = detail::open_input(path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("edge list '" + path + "' is empty");
    const auto ids = detail::split_csv_line(line);
    const int n = static_cast<int>(ids.size());
    std::map<std::string, int> index;
    for (int i = 0; i < n; ++i) {
        if (index.count(ids[i]))
            throw std::runtime_error("edge list '" + path + "': duplicate node id '" + ids[i] +
                                     "'");
        index[ids[i]] = i;
    }
    Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'a,b' edge");
        for (const auto& f : fields)
            if (!index.count(f))
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": unknown node id '" + f + "'");
        const int a = index[fields[0]], b = index[fields[1]];
        if (a == b)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": self-loop on '" +
                                     fields[0] + "'");
        adj(a, b) = 1;
        adj(b, a) = 1;
    }
    if (node_ids) *node_ids = ids;
    return build_network(adj);
}

/// Writes real-valued forecasts: header of node ids, one row per horizon.
inline void write_forecast_csv(const Mat& forecasts, const std::vector<std::string>& node_ids,
                               const std::string& path) {
    if (static_cast<int>(node_ids.size()) != forecasts.rows())
        throw std::invalid_argument("node id count does not match forecast rows");
    auto out = detail::open_output(path);
    for (std::size_t i = 0; i < node_ids.size(); ++i) out << (i ? "," : "") << node_ids[i];
    out << "\n";
    for (int h = 0; h < forecasts.cols(); ++h) {
        for (int i = 0; i < forecasts.rows(); ++i)
            out << (i ? "," : "") << detail::format_double(forecasts(i, h));
        out << "\n";
    }
}

/// Reads a forecast CSV back as an N x H matrix (nodes in header order).
inline Mat read_forecast_csv(const std::string& path,
                             std::vector<std::string>* node_ids = nullptr) {
    auto in = detail::open_input(path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("forecast file '" + path + "' is empty");
    const auto ids = detail::split_csv_line(line);
    const int n = static_cast<int>(ids.size());
    std::vector<std::vector<double>> rows;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (static_cast<int>(fields.size()) != n)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(n) + " fields");
        std::vector<double> row(n);
        for (int i = 0; i < n; ++i)
            if (!detail::parse_double(fields[i], row[i]))
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": entry '" +
                                         fields[i] + "' is not a number");
        rows.push_back(std::move(row));
    }
    Mat m(n, static_cast<int>(rows.size()));
    for (std::size_t h = 0; h < rows.size(); ++h)
        for (int i = 0; i < n; ++i) m(i, static_cast<int>(h)) = rows[h][i];
    if (node_ids) *node_ids = ids;
    return m;
}

// ---- JSON serialization -------------------------------------------------

inline nlohmann::json order_to_json(const ModelOrder& order) {
    return {{"p", order.p},
            {"s", order.s},
            {"alpha_mask", order.alpha_mask},
            {"global_alpha", order.global_alpha},
            {"intercept_mode", to_string(order.intercept)},
            {"local_intercept", order.local_intercept}};
}

inline ModelOrder order_from_json(const nlohmann::json& j) {
    ModelOrder order;
    order.p = j.at("p").get<int>();
    order.s = j.at("s").get<std::vector<int>>();
    order.alpha_mask = j.at("alpha_mask").get<std::vector<std::uint8_t>>();
    order.global_alpha = j.at("global_alpha").get<bool>();
    order.intercept = intercept_mode_from_string(j.at("intercept_mode").get<std::string>());
    order.local_intercept = j.at("local_intercept").get<bool>();
    order.validate();
    return order;
}

inline nlohmann::json fit_to_json(const FitResult& fit, int n_nodes) {
    nlohmann::json j;
    j["model"] = fit.model;
    j["method"] = fit.method;
    j["response"] = fit.response;
    j["response_c"] = fit.response_sharpness;
    j["order"] = order_to_json(fit.order);
    j["n_nodes"] = n_nodes;

    const ParamLayout layout(fit.order, n_nodes);
    nlohmann::json params;
    params["names"] = layout.names();
    params["values"] = std::vector<double>(fit.params.values.data(),
                                           fit.params.values.data() + fit.params.values.size());
    nlohmann::json lower = nlohmann::json::array(), upper = nlohmann::json::array();
    for (const Bound& b : fit.params.bounds) {
        lower.push_back(std::isinf(b.lo) ? nlohmann::json() : nlohmann::json(b.lo));
        upper.push_back(std::isinf(b.hi) ? nlohmann::json() : nlohmann::json(b.hi));
    }
    params["lower"] = lower;
    params["upper"] = upper;
    j["params"] = params;

    j["objective"] = fit.objective;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["grad_norm"] = fit.grad_norm;
    if (fit.covariance) {
        nlohmann::json cov = nlohmann::json::array();
        for (int r = 0; r < fit.covariance->rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (int c = 0; c < fit.covariance->cols(); ++c) row.push_back((*fit.covariance)(r, c));
            cov.push_back(row);
        }
        j["covariance"] = cov;
    } else {
        j["covariance"] = nullptr;
    }
    j["covariance_valid"] = fit.covariance_valid;
    return j;
}

inline FitResult fit_from_json(const nlohmann::json& j) {
    FitResult fit;
    fit.model = j.at("model").get<std::string>();
    fit.method = j.at("method").get<std::string>();
    fit.response = j.at("response").get<std::string>();
    fit.response_sharpness = j.value("response_c", 1.0);
    fit.order = order_from_json(j.at("order"));

    const auto& p = j.at("params");
    const auto values = p.at("values").get<std::vector<double>>();
    Vec v(static_cast<long>(values.size()));
    for (std::size_t k = 0; k < values.size(); ++k) v[static_cast<long>(k)] = values[k];
    std::vector<Bound> bounds(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto& lo = p.at("lower").at(k);
        const auto& hi = p.at("upper").at(k);
        bounds[k].lo = lo.is_null() ? -std::numeric_limits<double>::infinity() : lo.get<double>();
        bounds[k].hi = hi.is_null() ? std::numeric_limits<double>::infinity() : hi.get<double>();
    }
    fit.params = ParamVector(std::move(v), std::move(bounds));

    fit.objective = j.at("objective").get<double>();
    fit.converged = j.at("converged").get<bool>();
    fit.iterations = j.at("iterations").get<long>();
    fit.grad_norm = j.at("grad_norm").get<double>();
    if (!j.at("covariance").is_null()) {
        const auto rows = j.at("covariance").get<std::vector<std::vector<double>>>();
        Mat cov(static_cast<long>(rows.size()), static_cast<long>(rows.empty() ? 0 : rows[0].size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < rows[r].size(); ++c)
                cov(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
        fit.covariance = cov;
    }
    fit.covariance_valid = j.value("covariance_valid", false);
    return fit;
}

inline void write_fit_json(const FitResult& fit, int n_nodes, const std::string& path) {
    auto out = detail::open_output(path);
    out << fit_to_json(fit, n_nodes).dump(2) << "\n";
}

inline FitResult read_fit_json(const std::string& path) {
    auto in = detail::open_input(path);
    nlohmann::json j;
    in >> j;
    return fit_from_json(j);
}

/// Optimizer trace CSV: iteration, objective, gradient norm.
inline void write_trace_csv(const std::vector<TracePoint>& trace, const std::string& path) {
    auto out = detail::open_output(path);
    out << "iteration,objective,grad_norm\n";
    for (const auto& t : trace)
        out << t.iteration << "," << detail::format_double(t.objective) << ","
            << detail::format_double(t.grad_norm) << "\n";
}

/// One metrics row of the report CSV.
struct ReportRow {
    std::string model;
    std::string process;  // empty outside simulation studies
    int horizon = 0;
    double mspe = 0.0;
    double mape = 0.0;
};

inline void write_report_csv(const std::vector<ReportRow>& rows, const std::string& path) {
    auto out = detail::open_output(path);
    out << "model,process,horizon,mspe,mape\n";
    for (const auto& r : rows)
        out << r.model << "," << r.process << "," << r.horizon << ","
            << detail::format_double(r.mspe) << "," << detail::format_double(r.mape) << "\n";
}

/// Plot-ready CSV of aggregate MAPE against horizon, one row per
/// (horizon, model) pair.
inline void write_plot_csv(const EvalReport& report, const std::string& path) {
    auto out = detail::open_output(path);
    out << "horizon,model,mape\n";
    for (std::size_t h = 0; h < report.horizons.size(); ++h)
        for (std::size_t m = 0; m < report.models.size(); ++m)
            out << report.horizons[h] << "," << report.models[m] << ","
                << detail::format_double(report.mape_by_model[m][h]) << "\n";
}

/// Plain-text configuration: one "key = value" per line, '#' comments.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
    auto in = detail::open_input(path);
    std::map<std::string, std::string> cfg;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty key");
        cfg[key] = value;
    }
    return cfg;
}

}  // namespace gnarc
