#pragma once

#include <cmath>
#include <cstring>
#include <list>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "dag.hpp"
#include "data.hpp"

namespace ebd {

/// Structure prior P(G): uniform, or exp(-beta * edge count).
struct GraphPrior {
    enum class Kind { uniform, edge_penalty };
    Kind kind = Kind::uniform;
    double beta = 0.0;

    static GraphPrior uniform() { return {}; }
    static GraphPrior edge_penalty(double beta) {
        if (!(beta >= 0.0)) throw std::invalid_argument("edge penalty beta must be >= 0");
        return {Kind::edge_penalty, beta};
    }

    double log_prior(std::size_t n_edges) const noexcept {
        return kind == Kind::uniform ? 0.0 : -beta * static_cast<double>(n_edges);
    }
    /// log P(G + e) - log P(G)
    double log_ratio_add() const noexcept { return kind == Kind::uniform ? 0.0 : -beta; }
};

struct ScoreOptions {
    /// Dirichlet hyperparameter of every cell.
    double alpha = 1.0;
    GraphPrior prior{};
    /// Parent sets larger than this have zero prior mass.
    std::optional<std::size_t> max_parents{};
    /// Caps the family cache (least recently used entries are evicted).
    std::optional<std::size_t> cache_capacity{};
};

/// Per-family sufficient summaries computed from one counting pass.
struct FamilyStats {
    /// log P(child column | parent columns) with parameters integrated out.
    double log_marginal = 0.0;
    /// sum_c sum_k N_ck log(N_ck / N_c)
    double max_log_likelihood = 0.0;
    /// (r - 1) * q, q the number of parent configurations
    double free_parameters = 0.0;
};

enum class EdgeChange { add, remove };

/// Dirichlet-multinomial family scores with memoization keyed by (child, parent set).
///
/// The cache is logically part of the value, so the scoring methods are const.
/// One instance must not be queried from several threads at once; give every
/// chain its own model over the shared, immutable Dataset.
class ScoreModel {
public:
    explicit ScoreModel(const Dataset& data, ScoreOptions options = {}) : data_(&data), opt_(options) {
        if (!(opt_.alpha > 0.0) || !std::isfinite(opt_.alpha)) {
            throw std::invalid_argument("alpha must be a positive finite number");
        }
        if (opt_.cache_capacity && *opt_.cache_capacity == 0) {
            throw std::invalid_argument("cache capacity must be positive");
        }
        const std::size_t m = data.n_rows();
        lg_cell_.resize(m + 1);
        for (std::size_t k = 0; k <= m; ++k) {
            lg_cell_[k] = std::lgamma(opt_.alpha + static_cast<double>(k)) - std::lgamma(opt_.alpha);
        }
        for (std::size_t r : data.cardinalities()) {
            if (lg_config_.size() <= r) lg_config_.resize(r + 1);
            if (!lg_config_[r].empty()) continue;
            const double ra = static_cast<double>(r) * opt_.alpha;
            auto& t = lg_config_[r];
            t.resize(m + 1);
            for (std::size_t k = 0; k <= m; ++k) t[k] = std::lgamma(ra) - std::lgamma(ra + static_cast<double>(k));
        }
    }

    const Dataset& dataset() const noexcept { return *data_; }
    const ScoreOptions& options() const noexcept { return opt_; }
    std::size_t n_vars() const noexcept { return data_->n_vars(); }

    bool admits_parent_count(std::size_t k) const noexcept { return !opt_.max_parents || k <= *opt_.max_parents; }

    /// Summaries for (child, parents); `parents` must be sorted ascending.
    FamilyStats family(node_t child, std::span<const node_t> parents) const {
        check_family(child, parents);
        std::string key = make_key(child, parents);
        if (auto hit = lookup(key)) return *hit;
        FamilyStats s = compute(child, parents);
        ++evaluations_;
        store(std::move(key), s);
        return s;
    }

    double family_log_score(node_t child, std::span<const node_t> parents) const {
        return family(child, parents).log_marginal;
    }

    /// Unnormalized log P(G); -inf when a parent set exceeds max_parents.
    double graph_log_prior(const Dag& g) const {
        if (opt_.max_parents) {
            for (node_t j = 0; j < g.size(); ++j) {
                if (g.parent_count(j) > *opt_.max_parents) return neg_inf;
            }
        }
        return opt_.prior.log_prior(g.edge_count());
    }

    /// Unnormalized log P(G | D) = log P(G) + sum_j log P(D_j | D_pa(j)).
    double graph_log_score(const Dag& g) const {
        check_graph(g);
        const double prior = graph_log_prior(g);
        if (prior == neg_inf) return neg_inf;
        double total = prior;
        for (node_t j = 0; j < g.size(); ++j) total += family_log_score(j, g.parents(j));
        return total;
    }

    /// log P(G' | D) - log P(G | D) for G' = G with i -> j added or removed.
    /// Only the family of j changes.
    double score_delta(const Dag& g, Edge e, EdgeChange change) const {
        check_graph(g);
        auto parents = g.parents(e.to);
        if (change == EdgeChange::add) {
            if (!g.is_valid_addition(e.from, e.to)) throw std::logic_error("score_delta: illegal addition");
            if (!admits_parent_count(parents.size() + 1)) {
                throw std::logic_error("score_delta: addition exceeds max_parents");
            }
            const double before = family_log_score(e.to, parents);
            parents.insert(std::upper_bound(parents.begin(), parents.end(), e.from), e.from);
            return family_log_score(e.to, parents) - before + opt_.prior.log_ratio_add();
        }
        if (!g.has_edge(e.from, e.to)) throw std::logic_error("score_delta: removing an absent edge");
        const double before = family_log_score(e.to, parents);
        parents.erase(std::find(parents.begin(), parents.end(), e.from));
        return family_log_score(e.to, parents) - before - opt_.prior.log_ratio_add();
    }

    double family_aic(node_t child, std::span<const node_t> parents) const {
        const FamilyStats s = family(child, parents);
        return -2.0 * s.max_log_likelihood + 2.0 * s.free_parameters;
    }

    /// -2 * (maximized log-likelihood) + 2 * (free parameters); lower is better.
    double aic(const Dag& g) const {
        check_graph(g);
        if (data_->n_rows() == 0) throw std::domain_error("aic: dataset has no rows");
        double total = 0.0;
        for (node_t j = 0; j < g.size(); ++j) total += family_aic(j, g.parents(j));
        return total;
    }

    /// Number of family computations that missed the cache.
    std::size_t evaluations() const noexcept { return evaluations_; }
    std::size_t cache_size() const noexcept { return cache_.size(); }
    void clear_cache() const {
        cache_.clear();
        lru_.clear();
    }

private:
    struct Entry {
        FamilyStats stats;
        std::list<std::string>::iterator lru_pos;
    };

    void check_graph(const Dag& g) const {
        if (g.size() != data_->n_vars()) {
            throw std::invalid_argument("graph has " + std::to_string(g.size()) + " nodes, dataset has " +
                                        std::to_string(data_->n_vars()) + " variables");
        }
    }

    void check_family(node_t child, std::span<const node_t> parents) const {
        const std::size_t n = data_->n_vars();
        if (child >= n) throw std::out_of_range("unknown node " + std::to_string(child));
        for (std::size_t k = 0; k < parents.size(); ++k) {
            if (parents[k] >= n) throw std::out_of_range("unknown parent " + std::to_string(parents[k]));
            if (parents[k] == child) throw std::invalid_argument("child " + std::to_string(child) + " among its parents");
            if (k > 0 && parents[k] <= parents[k - 1]) throw std::invalid_argument("parent set must be sorted and unique");
        }
        if (!admits_parent_count(parents.size())) {
            throw std::invalid_argument("parent set of size " + std::to_string(parents.size()) + " exceeds max_parents");
        }
    }

    static std::string make_key(node_t child, std::span<const node_t> parents) {
        std::string key(sizeof(std::uint32_t) * (parents.size() + 1), '\0');
        auto put = [&](std::size_t slot, node_t v) {
            const auto x = static_cast<std::uint32_t>(v);
            std::memcpy(key.data() + slot * sizeof x, &x, sizeof x);
        };
        put(0, child);
        for (std::size_t k = 0; k < parents.size(); ++k) put(k + 1, parents[k]);
        return key;
    }

    std::optional<FamilyStats> lookup(const std::string& key) const {
        auto it = cache_.find(key);
        if (it == cache_.end()) return std::nullopt;
        if (opt_.cache_capacity) lru_.splice(lru_.begin(), lru_, it->second.lru_pos);
        return it->second.stats;
    }

    void store(std::string key, const FamilyStats& s) const {
        if (!opt_.cache_capacity) {
            cache_.emplace(std::move(key), Entry{s, {}});
            return;
        }
        if (cache_.size() >= *opt_.cache_capacity) {
            cache_.erase(lru_.back());
            lru_.pop_back();
        }
        lru_.push_front(key);
        cache_.emplace(std::move(key), Entry{s, lru_.begin()});
    }

    /// One counting pass. Parent configurations are relabeled densely one parent
    /// at a time, so indices never exceed the row count.
    FamilyStats compute(node_t child, std::span<const node_t> parents) const {
        const std::size_t m = data_->n_rows();
        const std::size_t r = data_->cardinality(child);
        ids_.assign(m, 0);
        std::size_t configs = 1;
        double q = 1.0;
        for (node_t p : parents) {
            const std::size_t rp = data_->cardinality(p);
            q *= static_cast<double>(rp);
            const auto col = data_->column(p);
            relabel_.assign(configs * rp, -1);
            std::size_t next = 0;
            for (std::size_t row = 0; row < m; ++row) {
                auto& slot = relabel_[ids_[row] * rp + col[row]];
                if (slot < 0) slot = static_cast<std::int64_t>(next++);
                ids_[row] = static_cast<std::size_t>(slot);
            }
            configs = std::max<std::size_t>(next, 1);
        }

        counts_.assign(configs * r, 0);
        const auto child_col = data_->column(child);
        for (std::size_t row = 0; row < m; ++row) ++counts_[ids_[row] * r + child_col[row]];

        FamilyStats s;
        s.free_parameters = static_cast<double>(r - 1) * q;
        const auto& lg_config = lg_config_[r];
        for (std::size_t c = 0; c < configs; ++c) {
            std::size_t total = 0;
            for (std::size_t k = 0; k < r; ++k) total += counts_[c * r + k];
            if (total == 0) continue;
            s.log_marginal += lg_config[total];
            const double log_total = std::log(static_cast<double>(total));
            for (std::size_t k = 0; k < r; ++k) {
                const std::size_t n_ck = counts_[c * r + k];
                if (n_ck == 0) continue;
                s.log_marginal += lg_cell_[n_ck];
                s.max_log_likelihood += static_cast<double>(n_ck) * (std::log(static_cast<double>(n_ck)) - log_total);
            }
        }
        return s;
    }

    const Dataset* data_;
    ScoreOptions opt_;
    // lg_cell_[k] = lgamma(alpha + k) - lgamma(alpha)
    std::vector<double> lg_cell_;
    // lg_config_[r][k] = lgamma(r alpha) - lgamma(r alpha + k)
    std::vector<std::vector<double>> lg_config_;

    mutable std::unordered_map<std::string, Entry> cache_;
    mutable std::list<std::string> lru_;
    mutable std::size_t evaluations_ = 0;
    mutable std::vector<std::size_t> ids_;
    mutable std::vector<std::int64_t> relabel_;
    mutable std::vector<std::uint32_t> counts_;
};

}  // namespace ebd
