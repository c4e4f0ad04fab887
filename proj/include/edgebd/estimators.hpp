#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "common.hpp"
#include "dag.hpp"
#include "trace.hpp"

namespace ebd {

/// Time-weighted edge marginals from one or more chains.
struct EdgeProbEstimate {
    Square<double> probabilities;
    /// log of the accumulated holding weight
    double log_total_weight = neg_inf;
    std::size_t n_jumps = 0;

    double total_weight() const noexcept { return std::exp(log_total_weight); }
};

/// Fraction of (holding-weighted) time each edge is present, after dropping
/// the first floor(burn_in_fraction * records) records.
inline EdgeProbEstimate edge_probabilities(const ChainTrace& trace, double burn_in_fraction = 0.1) {
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
        throw std::invalid_argument("burn-in fraction must lie in [0, 1)");
    }
    const auto skip = static_cast<std::size_t>(std::floor(burn_in_fraction * static_cast<double>(trace.records.size())));
    if (skip >= trace.records.size()) throw std::invalid_argument("edge_probabilities: no records after burn-in");

    double shift = neg_inf;
    for (std::size_t t = skip; t < trace.records.size(); ++t) shift = std::max(shift, trace.records[t].log_holding);

    const std::size_t n = trace.initial.size();
    Square<double> acc(n, 0.0);
    double total = 0.0;
    std::size_t t = 0;
    trace.replay([&](const Dag& g, const TraceRecord& r) {
        if (t++ < skip) return;
        const double w = std::exp(r.log_holding - shift);
        total += w;
        for (node_t i = 0; i < n; ++i) {
            g.adjacency().for_each_in_row(i, [&](std::size_t j) { acc(i, j) += w; });
        }
    });

    EdgeProbEstimate est{Square<double>(n, 0.0), shift + std::log(total), trace.records.size() - skip};
    for (node_t i = 0; i < n; ++i) {
        for (node_t j = 0; j < n; ++j) est.probabilities(i, j) = std::min(1.0, acc(i, j) / total);
    }
    return est;
}

/// Pools chains, weighting each by its total holding weight.
inline EdgeProbEstimate pool_estimates(std::span<const EdgeProbEstimate> chains) {
    if (chains.empty()) throw std::invalid_argument("pool_estimates: no chains");
    const std::size_t n = chains.front().probabilities.size();
    double shift = neg_inf;
    for (const auto& c : chains) {
        if (c.probabilities.size() != n) throw std::invalid_argument("pool_estimates: size mismatch");
        shift = std::max(shift, c.log_total_weight);
    }
    EdgeProbEstimate out{Square<double>(n, 0.0), neg_inf, 0};
    double total = 0.0;
    for (const auto& c : chains) {
        const double w = std::exp(c.log_total_weight - shift);
        total += w;
        out.n_jumps += c.n_jumps;
        for (node_t i = 0; i < n; ++i) {
            for (node_t j = 0; j < n; ++j) out.probabilities(i, j) += w * c.probabilities(i, j);
        }
    }
    for (node_t i = 0; i < n; ++i) {
        for (node_t j = 0; j < n; ++j) out.probabilities(i, j) = std::min(1.0, out.probabilities(i, j) / total);
    }
    out.log_total_weight = shift + std::log(total);
    return out;
}

/// Entrywise |estimate - exact|; the diagonal is NaN (no self-edges).
inline Square<double> error_table(const Square<double>& estimate, const Square<double>& exact) {
    if (estimate.size() != exact.size()) {
        throw std::invalid_argument("error_table: " + std::to_string(estimate.size()) + "-node estimate vs " +
                                    std::to_string(exact.size()) + "-node exact matrix");
    }
    const std::size_t n = exact.size();
    Square<double> out(n, 0.0);
    for (node_t i = 0; i < n; ++i) {
        for (node_t j = 0; j < n; ++j) {
            out(i, j) = i == j ? std::numeric_limits<double>::quiet_NaN() : std::abs(estimate(i, j) - exact(i, j));
        }
    }
    return out;
}

inline double max_abs_error(const Square<double>& table) {
    double worst = 0.0;
    for (double v : table.values()) {
        if (!std::isnan(v)) worst = std::max(worst, v);
    }
    return worst;
}

inline double mean_abs_error(const Square<double>& table) {
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : table.values()) {
        if (std::isnan(v)) continue;
        sum += v;
        ++count;
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

struct ScorePoint {
    double cum_time = 0.0;
    double log_score = 0.0;
    double aic = 0.0;
};

inline std::vector<ScorePoint> score_series(const ChainTrace& trace) {
    std::vector<ScorePoint> out;
    out.reserve(trace.records.size());
    for (const TraceRecord& r : trace.records) out.push_back({r.cum_time, r.log_score, r.aic});
    return out;
}

/// Running minimum of the AIC column.
inline std::vector<double> best_so_far_aic(const ChainTrace& trace) {
    std::vector<double> out;
    out.reserve(trace.records.size());
    double best = std::numeric_limits<double>::infinity();
    for (const TraceRecord& r : trace.records) out.push_back(best = std::min(best, r.aic));
    return out;
}

/// Highest-scoring graph among the records; ties go to the earliest visit.
inline std::pair<Dag, double> best_graph(const ChainTrace& trace) {
    if (trace.records.empty()) throw std::invalid_argument("best_graph: empty trace");
    Dag best;
    double best_score = neg_inf;
    bool first = true;
    trace.replay([&](const Dag& g, const TraceRecord& r) {
        if (first || r.log_score > best_score) {
            best = g;
            best_score = r.log_score;
            first = false;
        }
    });
    return {std::move(best), best_score};
}

}  // namespace ebd
