#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "dag.hpp"
#include "data.hpp"
#include "estimators.hpp"
#include "trace.hpp"

namespace ebd {

using json = nlohmann::json;

/// Shortest decimal text that round-trips the double.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// ---- graphs ----

inline json dag_to_json(const Dag& g) {
    json edges = json::array();
    for (const Edge& e : g.edges()) edges.push_back({e.from, e.to});
    return {{"n", g.size()}, {"edges", std::move(edges)}};
}

inline Dag dag_from_json(const json& j) {
    Dag g(j.at("n").get<std::size_t>());
    for (const auto& e : j.at("edges")) g.add_edge(e.at(0).get<node_t>(), e.at(1).get<node_t>());
    return g;
}

/// One "i j" line per edge.
inline void write_edge_list(std::ostream& out, const Dag& g) {
    for (const Edge& e : g.edges()) out << e.from << ' ' << e.to << '\n';
}

/// Reads "i j" lines (blank lines and '#' comments skipped) into an n-node graph.
inline Dag read_edge_list(std::istream& in, std::size_t n) {
    Dag g(n);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::is_comment_or_blank(line)) continue;
        std::istringstream cells(line);
        long long i = -1;
        long long j = -1;
        std::string rest;
        if (!(cells >> i >> j) || (cells >> rest) || i < 0 || j < 0) {
            throw std::invalid_argument("edge list line " + std::to_string(line_no) + ": expected \"i j\"");
        }
        g.add_edge(static_cast<node_t>(i), static_cast<node_t>(j));
    }
    return g;
}

// ---- generative networks ----

inline json network_to_json(const GenerativeNetwork& net) {
    return {{"dag", dag_to_json(net.dag)}, {"cardinalities", net.cardinalities}, {"cpts", net.cpts}};
}

inline GenerativeNetwork network_from_json(const json& j) {
    GenerativeNetwork net{dag_from_json(j.at("dag")), j.at("cardinalities").get<std::vector<std::size_t>>(),
                          j.at("cpts").get<std::vector<std::vector<std::vector<double>>>>()};
    net.validate();
    return net;
}

inline json labels_to_json(const LabeledDataset& d) {
    json out = json::object();
    for (std::size_t v = 0; v < d.data.n_vars(); ++v) out[d.data.names()[v]] = d.labels[v];
    return out;
}

// ---- traces and matrices ----

inline void write_trace_csv(std::ostream& out, const ChainTrace& trace, const json& config = json::object()) {
    out << "# seed=" << trace.seed << " generator=" << trace.generator << " sampler=" << trace.sampler << '\n';
    out << "# config: " << config.dump() << '\n';
    out << "step,move,i,j,holding_weight,cum_time,log_score,aic\n";
    for (std::size_t t = 0; t < trace.records.size(); ++t) {
        const TraceRecord& r = trace.records[t];
        out << t + 1 << ',' << static_cast<char>(r.move.kind) << ',' << r.move.edge.from << ',' << r.move.edge.to << ','
            << format_double(r.holding_weight()) << ',' << format_double(r.cum_time) << ','
            << format_double(r.log_score) << ',' << format_double(r.aic) << '\n';
    }
}

/// Square matrix with node names as header row and first column; NaN cells print as "--".
inline void write_matrix_csv(std::ostream& out, const Square<double>& m, const std::vector<std::string>& names,
                             const json& config = json::object()) {
    out << "# config: " << config.dump() << '\n';
    out << "node";
    for (std::size_t j = 0; j < m.size(); ++j) out << ',' << names.at(j);
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << names.at(i);
        for (std::size_t j = 0; j < m.size(); ++j) {
            out << ',' << (std::isnan(m(i, j)) ? std::string("--") : format_double(m(i, j)));
        }
        out << '\n';
    }
}

struct NamedMatrix {
    std::vector<std::string> names;
    Square<double> values;
};

inline NamedMatrix read_matrix_csv(std::istream& in) {
    std::string line;
    NamedMatrix out;
    std::vector<std::vector<std::string>> rows;
    bool header = true;
    while (std::getline(in, line)) {
        if (detail::is_comment_or_blank(line)) continue;
        auto cells = detail::split_csv_line(line);
        if (header) {
            out.names.assign(cells.begin() + 1, cells.end());
            header = false;
            continue;
        }
        rows.push_back(std::move(cells));
    }
    const std::size_t n = out.names.size();
    if (header || rows.size() != n) throw std::invalid_argument("matrix csv: expected a square matrix with headers");
    out.values = Square<double>(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n + 1) throw std::invalid_argument("matrix csv: ragged row " + std::to_string(i + 1));
        for (std::size_t j = 0; j < n; ++j) {
            const std::string& cell = rows[i][j + 1];
            out.values(i, j) = (cell == "--" || cell == "nan") ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell);
        }
    }
    return out;
}

inline void write_score_series_csv(std::ostream& out, const ChainTrace& trace, const json& config = json::object()) {
    out << "# config: " << config.dump() << '\n';
    out << "step,cum_time,log_score,aic,best_aic\n";
    const auto points = score_series(trace);
    const auto best = best_so_far_aic(trace);
    for (std::size_t t = 0; t < points.size(); ++t) {
        out << t + 1 << ',' << format_double(points[t].cum_time) << ',' << format_double(points[t].log_score) << ','
            << format_double(points[t].aic) << ',' << format_double(best[t]) << '\n';
    }
}

}  // namespace ebd
