#pragma once

// Test-only helpers and oracles. Nothing here calls into the code paths it
// is used to check.

#include <functional>
#include <map>
#include <set>
#include <random>
#include <vector>

#include <edgebd/edgebd.hpp>

namespace ebd::test {

/// 1->2, 1->3, 2->4, 3->4 with zero-based labels.
inline Dag fig1() {
    const std::vector<Edge> e{{0, 1}, {0, 2}, {1, 3}, {2, 3}};
    return Dag(4, e);
}

/// Random DAG: random node order, each forward pair kept with probability p.
inline Dag random_dag(std::size_t n, double p, std::mt19937_64& rng) {
    std::vector<node_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution keep(p);
    Dag g(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (keep(rng)) g.add_edge(order[a], order[b]);
        }
    }
    return g;
}

/// Data generated from `dag` with Dirichlet(concentration) CPTs.
inline Dataset seeded_data(const Dag& dag, std::size_t card, std::size_t rows, std::uint64_t seed,
                           double concentration = 1.0) {
    std::mt19937_64 rng(seed);
    const auto net = random_cpts(dag, std::vector<std::size_t>(dag.size(), card), concentration, rng);
    return generate(net, rows, rng);
}

/// Transitive closure by Floyd-Warshall on a plain boolean matrix.
inline std::vector<std::vector<bool>> closure_oracle(const Dag& g) {
    const std::size_t n = g.size();
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (const Edge& e : g.edges()) r[e.from][e.to] = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (r[i][k] && r[k][j]) r[i][j] = true;
    return r;
}

inline bool reach_matches_oracle(const Dag& g) {
    const auto r = closure_oracle(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j)
            if (r[i][j] != g.reaches(i, j)) return false;
    return true;
}

/// Cycle detection by DFS colouring over an explicit edge list.
inline bool has_cycle(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<std::vector<node_t>> out(n);
    for (const Edge& e : edges) out[e.from].push_back(e.to);
    std::vector<int> colour(n, 0);
    std::function<bool(node_t)> visit = [&](node_t v) {
        colour[v] = 1;
        for (node_t c : out[v]) {
            if (colour[c] == 1) return true;
            if (colour[c] == 0 && visit(c)) return true;
        }
        colour[v] = 2;
        return false;
    };
    for (node_t v = 0; v < n; ++v)
        if (colour[v] == 0 && visit(v)) return true;
    return false;
}

/// log P(D | G) through the chain rule: each observation's child state is
/// predicted from the Dirichlet posterior given all earlier rows with the same
/// parent configuration, (alpha + n_ck) / (r alpha + n_c).
inline double sequential_log_marginal(const Dataset& d, const Dag& g, double alpha) {
    double total = 0.0;
    for (node_t j = 0; j < g.size(); ++j) {
        const auto pa = g.parents(j);
        const double r = static_cast<double>(d.cardinality(j));
        std::map<std::vector<state_t>, std::map<state_t, double>> cell;
        std::map<std::vector<state_t>, double> config;
        for (std::size_t row = 0; row < d.n_rows(); ++row) {
            std::vector<state_t> key;
            for (node_t p : pa) key.push_back(d.column(p)[row]);
            const state_t k = d.column(j)[row];
            total += std::log((alpha + cell[key][k]) / (r * alpha + config[key]));
            cell[key][k] += 1.0;
            config[key] += 1.0;
        }
    }
    return total;
}

/// Maximized log-likelihood and free-parameter count by direct counting.
inline double aic_oracle(const Dataset& d, const Dag& g) {
    double loglik = 0.0;
    double params = 0.0;
    for (node_t j = 0; j < g.size(); ++j) {
        const auto pa = g.parents(j);
        double q = 1.0;
        for (node_t p : pa) q *= static_cast<double>(d.cardinality(p));
        params += (static_cast<double>(d.cardinality(j)) - 1.0) * q;
        std::map<std::vector<state_t>, std::map<state_t, double>> cell;
        std::map<std::vector<state_t>, double> config;
        for (std::size_t row = 0; row < d.n_rows(); ++row) {
            std::vector<state_t> key;
            for (node_t p : pa) key.push_back(d.column(p)[row]);
            cell[key][d.column(j)[row]] += 1.0;
            config[key] += 1.0;
        }
        for (const auto& [key, counts] : cell)
            for (const auto& [k, n_ck] : counts) loglik += n_ck * std::log(n_ck / config[key]);
    }
    return -2.0 * loglik + 2.0 * params;
}

/// Edges present in exactly the graphs in `dags`, with the given probabilities.
inline Square<double> marginals_oracle(const std::vector<Dag>& dags, const std::vector<double>& p) {
    const std::size_t n = dags.front().size();
    Square<double> out(n, 0.0);
    for (std::size_t k = 0; k < dags.size(); ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (dags[k].has_edge(i, j)) out(i, j) += p[k];
    return out;
}

struct FrequencyEstimate {
    double mean = 0.0;
    /// batch-means standard error
    double se = 0.0;
};

/// Holding-weighted visit frequency of every graph with a batch-means standard
/// error: the trace is cut into `batches` consecutive blocks, each block gives
/// its own weighted frequency, and se = sd(block frequencies) / sqrt(batches).
inline std::map<std::uint64_t, FrequencyEstimate> graph_frequencies(const ChainTrace& trace, std::size_t batches) {
    const std::size_t per = trace.records.size() / batches;
    std::vector<std::map<std::uint64_t, double>> block(batches);
    std::vector<double> block_weight(batches, 0.0);
    std::size_t t = 0;
    trace.replay([&](const Dag& g, const TraceRecord& r) {
        const std::size_t b = std::min(t++ / per, batches - 1);
        const double w = r.holding_weight();
        block[b][dag_key(g)] += w;
        block_weight[b] += w;
    });
    std::set<std::uint64_t> keys;
    for (const auto& b : block)
        for (const auto& [k, w] : b) keys.insert(k);
    std::map<std::uint64_t, FrequencyEstimate> out;
    for (std::uint64_t k : keys) {
        std::vector<double> f(batches);
        double mean = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            const auto it = block[b].find(k);
            f[b] = (it == block[b].end() ? 0.0 : it->second) / block_weight[b];
            mean += f[b] / static_cast<double>(batches);
        }
        double var = 0.0;
        for (double x : f) var += (x - mean) * (x - mean);
        var /= static_cast<double>(batches - 1);
        out[k] = {mean, std::sqrt(var / static_cast<double>(batches))};
    }
    return out;
}

}  // namespace ebd::test
