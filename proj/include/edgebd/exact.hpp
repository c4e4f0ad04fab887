#pragma once

#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "bd_sampler.hpp"
#include "common.hpp"
#include "dag.hpp"
#include "mh_sampler.hpp"
#include "score.hpp"

namespace ebd {

inline constexpr std::size_t max_enumeration_nodes = 5;

/// Row-major adjacency bits packed into an integer (bit i*n + j is edge i -> j).
inline std::uint64_t dag_key(const Dag& g) {
    if (g.size() > 8) throw std::invalid_argument("dag_key: graphs above 8 nodes do not fit the key");
    std::uint64_t key = 0;
    for (const Edge& e : g.edges()) key |= std::uint64_t{1} << (e.from * g.size() + e.to);
    return key;
}

namespace detail {

/// Acyclicity of a small adjacency bitmask by repeatedly peeling sources.
inline bool is_acyclic_mask(std::uint64_t adj, std::size_t n) {
    std::uint32_t remaining = (std::uint32_t{1} << n) - 1;
    bool progress = true;
    while (remaining != 0 && progress) {
        progress = false;
        for (std::size_t v = 0; v < n; ++v) {
            if (!((remaining >> v) & 1u)) continue;
            bool has_parent = false;
            for (std::size_t u = 0; u < n && !has_parent; ++u) {
                has_parent = ((remaining >> u) & 1u) && ((adj >> (u * n + v)) & 1u);
            }
            if (!has_parent) {
                remaining &= ~(std::uint32_t{1} << v);
                progress = true;
            }
        }
    }
    return remaining == 0;
}

}  // namespace detail

/// Every labeled DAG on n nodes, found by filtering all orientations of the
/// n(n-1) ordered pairs through a cycle check. Ordered by dag_key.
inline std::vector<Dag> enumerate_dags(std::size_t n) {
    if (n < 1 || n > max_enumeration_nodes) {
        throw std::invalid_argument("enumerate_dags: n = " + std::to_string(n) + " outside 1.." +
                                    std::to_string(max_enumeration_nodes) + " (n = 6 already has 3,781,503 DAGs)");
    }
    std::vector<Edge> pairs;
    for (node_t i = 0; i < n; ++i) {
        for (node_t j = 0; j < n; ++j) {
            if (i != j) pairs.push_back({i, j});
        }
    }
    std::vector<Dag> out;
    const std::uint64_t subsets = std::uint64_t{1} << pairs.size();
    for (std::uint64_t s = 0; s < subsets; ++s) {
        std::uint64_t adj = 0;
        for (std::size_t b = 0; b < pairs.size(); ++b) {
            if ((s >> b) & 1u) adj |= std::uint64_t{1} << (pairs[b].from * n + pairs[b].to);
        }
        if (!detail::is_acyclic_mask(adj, n)) continue;
        Dag g(n);
        for (std::size_t b = 0; b < pairs.size(); ++b) {
            if ((s >> b) & 1u) g.add_edge(pairs[b].from, pairs[b].to);
        }
        out.push_back(std::move(g));
    }
    std::sort(out.begin(), out.end(), [](const Dag& a, const Dag& b) { return dag_key(a) < dag_key(b); });
    return out;
}

/// The full posterior over DAGs on a small node set.
struct ExactPosterior {
    std::vector<Dag> dags;
    /// unnormalized log P(G | D); -inf for graphs outside the prior's support
    std::vector<double> log_weights;
    double log_z = 0.0;
    std::unordered_map<std::uint64_t, std::size_t> index;

    std::size_t size() const noexcept { return dags.size(); }
    double probability(std::size_t k) const { return std::exp(log_weights[k] - log_z); }
    std::vector<double> probabilities() const {
        std::vector<double> p(size());
        for (std::size_t k = 0; k < size(); ++k) p[k] = probability(k);
        return p;
    }
    std::size_t position(const Dag& g) const {
        auto it = index.find(dag_key(g));
        if (it == index.end()) throw std::out_of_range("graph not in enumerated posterior");
        return it->second;
    }
    /// Position of the highest-weight DAG (earliest on ties).
    std::size_t mode() const {
        return static_cast<std::size_t>(std::max_element(log_weights.begin(), log_weights.end()) - log_weights.begin());
    }
    /// Positions of the k most probable DAGs, best first.
    std::vector<std::size_t> top(std::size_t k) const {
        std::vector<std::size_t> order(size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return log_weights[a] > log_weights[b]; });
        order.resize(std::min(k, order.size()));
        return order;
    }
};

inline ExactPosterior exact_posterior(const ScoreModel& model) {
    ExactPosterior post;
    post.dags = enumerate_dags(model.n_vars());
    post.log_weights.reserve(post.dags.size());
    for (std::size_t k = 0; k < post.dags.size(); ++k) {
        post.log_weights.push_back(model.graph_log_score(post.dags[k]));
        post.index.emplace(dag_key(post.dags[k]), k);
    }
    post.log_z = log_sum_exp(post.log_weights);
    return post;
}

/// Posterior probability of every edge.
inline Square<double> exact_edge_marginals(const ExactPosterior& post) {
    const std::size_t n = post.dags.empty() ? 0 : post.dags.front().size();
    Square<double> out(n, 0.0);
    for (std::size_t k = 0; k < post.size(); ++k) {
        const double p = post.probability(k);
        if (p == 0.0) continue;
        for (const Edge& e : post.dags[k].edges()) out(e.from, e.to) += p;
    }
    return out;
}

/// max_y |sum_x pi_x Q_xy| for the birth-death generator Q built from the
/// sampler's own birth-rate tables and unit death rates. `pi` is indexed like
/// post.dags and need not be normalized.
inline double generator_stationarity_residual(const ExactPosterior& post, const ScoreModel& model,
                                              std::span<const double> pi) {
    if (pi.size() != post.size()) throw std::invalid_argument("stationarity: pi has wrong length");
    if (!post.dags.empty() && post.dags.front().size() > 4) {
        throw std::invalid_argument("stationarity check limited to n <= 4");
    }
    std::vector<double> flow(post.size(), 0.0);
    for (std::size_t x = 0; x < post.size(); ++x) {
        if (post.log_weights[x] == neg_inf) continue;
        const Dag& g = post.dags[x];
        const BirthRateTable table(g, model);
        double out_rate = 0.0;
        for (node_t j = 0; j < g.size(); ++j) {
            table.valid_mask().for_each_in_row(j, [&](std::size_t i) {
                Dag h = g;
                h.add_edge(i, j);
                const double rate = std::exp(table.log_rate(i, j));
                flow[post.position(h)] += pi[x] * rate;
                out_rate += rate;
            });
        }
        for (const Edge& e : g.edges()) {
            Dag h = g;
            h.remove_edge(e.from, e.to);
            flow[post.position(h)] += pi[x];
            out_rate += 1.0;
        }
        flow[x] -= pi[x] * out_rate;
    }
    double worst = 0.0;
    for (double f : flow) worst = std::max(worst, std::abs(f));
    return worst;
}

/// ||pi^T Q||_inf with pi the exact posterior.
inline double generator_stationarity_check(const ExactPosterior& post, const ScoreModel& model) {
    return generator_stationarity_residual(post, model, post.probabilities());
}

/// max over adjacent DAG pairs of |pi_x P_xy - pi_y P_yx| for the MH kernel.
inline double mh_balance_residual(const ExactPosterior& post, const ScoreModel& model, MhOptions opt = {}) {
    const auto pi = post.probabilities();
    std::vector<std::unordered_map<std::size_t, double>> transition(post.size());
    for (std::size_t x = 0; x < post.size(); ++x) {
        if (pi[x] == 0.0) continue;
        const Dag& g = post.dags[x];
        const Neighborhood nb(g, model, opt);
        const double propose = 1.0 / static_cast<double>(nb.size());
        for (std::size_t k = 0; k < nb.size(); ++k) {
            const Move mv = nb.at(k);
            Dag h = g;
            apply(h, mv);
            transition[x][post.position(h)] += propose * acceptance_probability(g, mv, model, opt);
        }
    }
    double worst = 0.0;
    for (std::size_t x = 0; x < post.size(); ++x) {
        for (const auto& [y, p_xy] : transition[x]) {
            const auto back = transition[y].find(x);
            const double p_yx = back == transition[y].end() ? 0.0 : back->second;
            worst = std::max(worst, std::abs(pi[x] * p_xy - pi[y] * p_yx));
        }
    }
    return worst;
}

}  // namespace ebd
