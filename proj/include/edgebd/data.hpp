#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "dag.hpp"

namespace ebd {

using state_t = std::uint32_t;

class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// M complete observations of N categorical variables, stored column-wise.
class Dataset {
public:
    Dataset() = default;

    /// `columns[v]` holds the M codes of variable v, each below `cardinalities[v]`.
    Dataset(std::vector<std::size_t> cardinalities, std::vector<std::vector<state_t>> columns,
            std::vector<std::string> names = {})
        : cards_(std::move(cardinalities)), columns_(std::move(columns)), names_(std::move(names)) {
        if (cards_.size() != columns_.size()) {
            throw data_error("dataset: " + std::to_string(cards_.size()) + " cardinalities for " +
                             std::to_string(columns_.size()) + " columns");
        }
        if (names_.empty()) {
            for (std::size_t v = 0; v < cards_.size(); ++v) names_.push_back("X" + std::to_string(v));
        }
        if (names_.size() != cards_.size()) throw data_error("dataset: name count does not match variable count");
        rows_ = columns_.empty() ? 0 : columns_.front().size();
        for (std::size_t v = 0; v < columns_.size(); ++v) {
            if (cards_[v] < 2) throw data_error("dataset: variable " + names_[v] + " needs at least two states");
            if (columns_[v].size() != rows_) throw data_error("dataset: column " + names_[v] + " has wrong length");
            for (state_t s : columns_[v]) {
                if (s >= cards_[v]) {
                    throw data_error("dataset: code " + std::to_string(s) + " out of range in column " + names_[v]);
                }
            }
        }
    }

    std::size_t n_vars() const noexcept { return cards_.size(); }
    std::size_t n_rows() const noexcept { return rows_; }
    std::size_t cardinality(node_t v) const { return cards_.at(v); }
    const std::vector<std::size_t>& cardinalities() const noexcept { return cards_; }
    std::span<const state_t> column(node_t v) const { return columns_.at(v); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<std::size_t> cards_;
    std::vector<std::vector<state_t>> columns_;
    std::vector<std::string> names_;
    std::size_t rows_ = 0;
};

/// A dataset read from text together with the label of every code.
struct LabeledDataset {
    Dataset data;
    /// labels[v][code] is the original cell text for that code.
    std::vector<std::vector<std::string>> labels;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline bool is_comment_or_blank(std::string_view line) {
    const auto t = trim(line);
    return t.empty() || t.front() == '#';
}

}  // namespace detail

/// Parses categorical CSV text. Lines starting with '#' are ignored.
///
/// Each column's labels become dense codes. A column whose labels are exactly
/// the integers 0..r-1 keeps those integers as codes; any other column is coded
/// in first-appearance order. Cardinalities are the distinct-label counts.
inline LabeledDataset parse_csv(std::istream& in, bool has_header) {
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::is_comment_or_blank(line)) continue;
        auto cells = detail::split_csv_line(line);
        if (header_pending) {
            names = std::move(cells);
            header_pending = false;
            continue;
        }
        const std::size_t width = rows.empty() ? (names.empty() ? cells.size() : names.size()) : rows.front().size();
        if (cells.size() != width) {
            throw data_error("csv line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                             " cells, found " + std::to_string(cells.size()));
        }
        for (std::size_t v = 0; v < cells.size(); ++v) {
            if (cells[v].empty()) {
                throw data_error("csv line " + std::to_string(line_no) + ": empty cell in column " +
                                 std::to_string(v + 1) + " (missing values are not supported)");
            }
        }
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw data_error("csv: no data rows");

    const std::size_t n = rows.front().size();
    LabeledDataset out;
    out.labels.resize(n);
    std::vector<std::vector<state_t>> columns(n, std::vector<state_t>(rows.size()));
    std::vector<std::size_t> cards(n);
    for (std::size_t v = 0; v < n; ++v) {
        std::unordered_map<std::string, state_t> codes;
        auto& labels = out.labels[v];
        for (std::size_t r = 0; r < rows.size(); ++r) {
            auto [it, inserted] = codes.try_emplace(rows[r][v], static_cast<state_t>(labels.size()));
            if (inserted) labels.push_back(rows[r][v]);
            columns[v][r] = it->second;
        }
        cards[v] = labels.size();
        if (cards[v] < 2) {
            const std::string name = names.empty() ? "column " + std::to_string(v + 1) : "column " + names[v];
            throw data_error("csv: " + name + " takes a single value '" + labels.front() +
                             "'; every variable needs at least two states");
        }

        // Keep integer codes when the labels are exactly 0..r-1.
        std::vector<state_t> remap(cards[v]);
        bool integral = true;
        std::vector<bool> seen(cards[v], false);
        for (std::size_t c = 0; c < cards[v] && integral; ++c) {
            const std::string& s = labels[c];
            std::size_t value = 0;
            integral = !s.empty() && s.size() <= 9 &&
                       std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
            if (integral) {
                value = std::stoul(s);
                integral = value < cards[v] && !seen[value] && (s.size() == 1 || s.front() != '0');
            }
            if (integral) {
                seen[value] = true;
                remap[c] = static_cast<state_t>(value);
            }
        }
        if (integral) {
            std::vector<std::string> sorted(cards[v]);
            for (std::size_t c = 0; c < cards[v]; ++c) sorted[remap[c]] = labels[c];
            labels = std::move(sorted);
            for (state_t& code : columns[v]) code = remap[code];
        }
    }
    if (names.empty()) {
        for (std::size_t v = 0; v < n; ++v) names.push_back("X" + std::to_string(v));
    }
    out.data = Dataset(std::move(cards), std::move(columns), std::move(names));
    return out;
}

inline LabeledDataset load_csv(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    return parse_csv(in, has_header);
}

/// Writes a header row of variable names followed by one row of codes per observation.
inline void write_csv(std::ostream& out, const Dataset& d) {
    for (std::size_t v = 0; v < d.n_vars(); ++v) out << (v ? "," : "") << d.names()[v];
    out << '\n';
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        for (std::size_t v = 0; v < d.n_vars(); ++v) out << (v ? "," : "") << d.column(v)[r];
        out << '\n';
    }
}

/// A DAG with one categorical conditional distribution per node and parent configuration.
///
/// Parent configurations are indexed mixed-radix over the parents in increasing
/// node order, the lowest-numbered parent being the most significant digit.
struct GenerativeNetwork {
    Dag dag;
    std::vector<std::size_t> cardinalities;
    /// cpts[v][config] is a probability vector of length cardinalities[v].
    std::vector<std::vector<std::vector<double>>> cpts;

    std::size_t config_count(node_t v) const {
        std::size_t q = 1;
        for (node_t p : dag.parents(v)) q *= cardinalities[p];
        return q;
    }

    void validate() const {
        if (cardinalities.size() != dag.size() || cpts.size() != dag.size()) {
            throw data_error("network: cardinalities/cpts do not match node count");
        }
        for (node_t v = 0; v < dag.size(); ++v) {
            if (cpts[v].size() != config_count(v)) {
                throw data_error("network: node " + std::to_string(v) + " has " + std::to_string(cpts[v].size()) +
                                 " cpt rows, expected " + std::to_string(config_count(v)));
            }
            for (const auto& row : cpts[v]) {
                if (row.size() != cardinalities[v]) throw data_error("network: cpt row has wrong width");
                double sum = 0.0;
                for (double p : row) {
                    if (!(p >= 0.0)) throw data_error("network: negative probability");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-12) throw data_error("network: cpt row does not sum to 1");
            }
        }
    }
};

/// Nodes of g ordered so that every parent precedes its children.
inline std::vector<node_t> topological_order(const Dag& g) {
    const std::size_t n = g.size();
    std::vector<std::size_t> indegree(n);
    std::vector<node_t> order;
    order.reserve(n);
    for (node_t v = 0; v < n; ++v) {
        indegree[v] = g.parent_count(v);
        if (indegree[v] == 0) order.push_back(v);
    }
    for (std::size_t k = 0; k < order.size(); ++k) {
        g.adjacency().for_each_in_row(order[k], [&](std::size_t c) {
            if (--indegree[c] == 0) order.push_back(c);
        });
    }
    return order;
}

/// Draws every CPT row from a symmetric Dirichlet(concentration).
template <class Rng>
GenerativeNetwork random_cpts(const Dag& dag, std::vector<std::size_t> cardinalities, double concentration,
                              Rng& rng) {
    if (!(concentration > 0.0)) throw std::invalid_argument("random_cpts: concentration must be positive");
    if (cardinalities.size() != dag.size()) throw std::invalid_argument("random_cpts: cardinality count mismatch");
    GenerativeNetwork net{dag, std::move(cardinalities), {}};
    std::gamma_distribution<double> gamma(concentration, 1.0);
    net.cpts.resize(dag.size());
    for (node_t v = 0; v < dag.size(); ++v) {
        const std::size_t q = net.config_count(v);
        net.cpts[v].assign(q, std::vector<double>(net.cardinalities[v]));
        for (auto& row : net.cpts[v]) {
            double sum = 0.0;
            for (double& p : row) sum += (p = gamma(rng));
            if (sum <= 0.0) {
                // every draw underflowed; fall back to a point mass on a random state
                std::uniform_int_distribution<std::size_t> pick(0, row.size() - 1);
                row[pick(rng)] = sum = 1.0;
            }
            for (double& p : row) p /= sum;
        }
    }
    return net;
}

/// Samples m observations ancestrally in topological order.
template <class Rng>
Dataset generate(const GenerativeNetwork& net, std::size_t m, Rng& rng, std::vector<std::string> names = {}) {
    net.validate();
    const std::size_t n = net.dag.size();
    std::vector<std::vector<state_t>> columns(n, std::vector<state_t>(m));
    const auto order = topological_order(net.dag);
    std::vector<std::vector<node_t>> parents(n);
    for (node_t v = 0; v < n; ++v) parents[v] = net.dag.parents(v);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t r = 0; r < m; ++r) {
        for (node_t v : order) {
            std::size_t config = 0;
            for (node_t p : parents[v]) config = config * net.cardinalities[p] + columns[p][r];
            const auto& row = net.cpts[v][config];
            const double u = unif(rng);
            double acc = 0.0;
            state_t s = 0;
            // last state with positive mass absorbs rounding
            state_t last_positive = 0;
            for (state_t k = 0; k < row.size(); ++k) {
                if (row[k] > 0.0) last_positive = k;
            }
            s = last_positive;
            for (state_t k = 0; k < row.size(); ++k) {
                acc += row[k];
                if (u < acc && row[k] > 0.0) {
                    s = k;
                    break;
                }
            }
            columns[v][r] = s;
        }
    }
    return Dataset(net.cardinalities, std::move(columns), std::move(names));
}

}  // namespace ebd
