#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bit_matrix.hpp"
#include "common.hpp"
#include "dag.hpp"
#include "score.hpp"
#include "trace.hpp"

namespace ebd {

/// Log birth rates of every valid addition for the current graph.
///
/// With unit death rates, detailed balance fixes the birth rate of i -> j at
/// P(G + i->j | D) / P(G | D), a ratio of two family scores of j. Entries are
/// stored child-major, so the column touched by a move is one contiguous row.
///
/// The total birth rate is kept as shift + log(sum of exp(log_b - shift)).
/// Additive updates track a floating-point error bound and the sum is rebuilt
/// from the entries once that bound exceeds 1e-12 of the sum.
class BirthRateTable {
public:
    BirthRateTable() = default;

    /// Computes every rate from scratch.
    BirthRateTable(const Dag& g, const ScoreModel& model)
        : n_(g.size()),
          log_b_(n_ * n_, neg_inf),
          scaled_(n_ * n_, 0.0),
          valid_(addition_mask(g, model.options().max_parents)),
          n_edges_(g.edge_count()) {
        for (node_t j = 0; j < n_; ++j) {
            valid_.for_each_in_row(j, [&](std::size_t i) {
                log_b_[j * n_ + i] = model.score_delta(g, {i, j}, EdgeChange::add);
            });
        }
        valid_count_ = valid_.count();
        rebase();
    }

    std::size_t size() const noexcept { return n_; }

    bool valid(node_t i, node_t j) const { return valid_.test(j, i); }
    /// log b(G, i -> j); -inf when i -> j is not a valid addition.
    double log_rate(node_t i, node_t j) const { return log_b_[j * n_ + i]; }
    /// Child-major validity: bit i of row j is set iff i -> j may be added.
    const BitMatrix& valid_mask() const noexcept { return valid_; }
    std::size_t valid_count() const noexcept { return valid_count_; }

    double log_lambda_birth() const noexcept {
        return valid_count_ == 0 ? neg_inf : shift_ + std::log(scaled_sum_);
    }
    double lambda_birth() const noexcept { return std::exp(log_lambda_birth()); }
    double lambda_death() const noexcept { return static_cast<double>(n_edges_); }

    /// Birth edge chosen with probability proportional to its rate; u in [0, 1).
    Edge sample_birth(double u) const {
        if (valid_count_ == 0) throw std::logic_error("sample_birth: no valid additions");
        const double target = u * scaled_sum_;
        double acc = 0.0;
        Edge last{};
        for (node_t j = 0; j < n_; ++j) {
            bool found = false;
            Edge hit{};
            valid_.for_each_in_row(j, [&](std::size_t i) {
                if (found) return;
                last = {i, j};
                acc += scaled_[j * n_ + i];
                if (target < acc) {
                    hit = {i, j};
                    found = true;
                }
            });
            if (found) return hit;
        }
        return last;
    }

    /// Brings the table in line with `g`, the graph right after `move`.
    /// Recomputes the column of the moved edge's child plus every entry whose
    /// validity changed; returns the number of rates recomputed.
    std::size_t update(const Dag& g, const ScoreModel& model, const Move& move) {
        BitMatrix next = addition_mask(g, model.options().max_parents);
        n_edges_ = g.edge_count();
        std::size_t recomputed = 0;

        std::vector<node_t> touched_children{move.edge.to};
        if (move.kind == MoveKind::reversal) touched_children.push_back(move.edge.from);

        auto refresh = [&](node_t i, node_t j) {
            set_entry(j * n_ + i, model.score_delta(g, {i, j}, EdgeChange::add));
            ++recomputed;
        };

        for (node_t j = 0; j < n_; ++j) {
            const bool parents_changed =
                std::find(touched_children.begin(), touched_children.end(), j) != touched_children.end();
            const auto before = valid_.row(j);
            const auto after = next.row(j);
            for (std::size_t k = 0; k < before.size(); ++k) {
                BitMatrix::word_type lost = before[k] & ~after[k];
                BitMatrix::word_type gained = after[k] & ~before[k];
                BitMatrix::word_type kept = parents_changed ? (before[k] & after[k]) : 0;
                for (; lost != 0; lost &= lost - 1) {
                    clear_entry(j * n_ + k * BitMatrix::word_bits + static_cast<std::size_t>(std::countr_zero(lost)));
                }
                for (BitMatrix::word_type w = gained | kept; w != 0; w &= w - 1) {
                    refresh(k * BitMatrix::word_bits + static_cast<std::size_t>(std::countr_zero(w)), j);
                }
            }
        }
        valid_ = std::move(next);
        valid_count_ = valid_.count();
        if (needs_rebase_ || drift_ > 1e-12 * scaled_sum_ || (valid_count_ > 0 && scaled_sum_ < 1e-250) ||
            valid_count_ == 0) {
            rebase();
        }
        return recomputed;
    }

    /// Rebuilds the scaled weights and their sum from the stored log rates.
    void rebase() {
        shift_ = 0.0;
        bool any = false;
        for (node_t j = 0; j < n_; ++j) {
            valid_.for_each_in_row(j, [&](std::size_t i) {
                const double v = log_b_[j * n_ + i];
                shift_ = any ? std::max(shift_, v) : v;
                any = true;
            });
        }
        scaled_sum_ = 0.0;
        std::fill(scaled_.begin(), scaled_.end(), 0.0);
        for (node_t j = 0; j < n_; ++j) {
            valid_.for_each_in_row(j, [&](std::size_t i) {
                scaled_sum_ += (scaled_[j * n_ + i] = std::exp(log_b_[j * n_ + i] - shift_));
            });
        }
        drift_ = 0.0;
        needs_rebase_ = false;
        ++rebases_;
    }

    std::size_t rebase_count() const noexcept { return rebases_; }

private:
    static constexpr double eps = std::numeric_limits<double>::epsilon();

    void set_entry(std::size_t idx, double log_b) {
        const double old = scaled_[idx];
        log_b_[idx] = log_b;
        if (log_b - shift_ > 700.0) {
            needs_rebase_ = true;
            scaled_[idx] = 0.0;
            scaled_sum_ -= old;
            return;
        }
        const double w = std::exp(log_b - shift_);
        scaled_[idx] = w;
        scaled_sum_ += w - old;
        drift_ += eps * (w + old + std::abs(scaled_sum_));
    }

    void clear_entry(std::size_t idx) {
        const double old = scaled_[idx];
        log_b_[idx] = neg_inf;
        scaled_[idx] = 0.0;
        scaled_sum_ -= old;
        drift_ += eps * (old + std::abs(scaled_sum_));
    }

    std::size_t n_ = 0;
    std::vector<double> log_b_;
    std::vector<double> scaled_;
    BitMatrix valid_;
    std::size_t valid_count_ = 0;
    std::size_t n_edges_ = 0;
    double shift_ = 0.0;
    double scaled_sum_ = 0.0;
    double drift_ = 0.0;
    bool needs_rebase_ = false;
    std::size_t rebases_ = 0;
};

enum class HoldingMode {
    /// weight each state by 1 / (lambda_b + lambda_d)
    expected,
    /// weight each state by an Exponential(lambda_b + lambda_d) draw
    sampled,
};

/// Continuous-time edge birth-and-death process over DAGs whose invariant
/// distribution is P(G | D). Deaths have unit rate per edge; births use the
/// cached BirthRateTable.
class BirthDeathSampler {
public:
    BirthDeathSampler(Dag initial, const ScoreModel& model, HoldingMode mode = HoldingMode::expected)
        : g_(std::move(initial)), model_(&model), mode_(mode) {
        if (g_.size() < 2) throw std::invalid_argument("birth-death process needs at least two nodes");
        if (g_.size() != model.n_vars()) throw std::invalid_argument("initial graph does not match dataset");
        log_score_ = model.graph_log_score(g_);
        if (log_score_ == neg_inf) throw std::invalid_argument("initial graph violates max_parents");
        aic_ = model.dataset().n_rows() > 0 ? model.aic(g_) : std::numeric_limits<double>::quiet_NaN();
        table_ = BirthRateTable(g_, model);
    }

    const Dag& graph() const noexcept { return g_; }
    const BirthRateTable& rates() const noexcept { return table_; }
    const ScoreModel& model() const noexcept { return *model_; }
    HoldingMode holding_mode() const noexcept { return mode_; }
    double log_score() const noexcept { return log_score_; }
    double aic() const noexcept { return aic_; }

    double log_total_rate() const noexcept {
        const double deaths = table_.lambda_death();
        return log_add_exp(table_.log_lambda_birth(), deaths > 0 ? std::log(deaths) : neg_inf);
    }
    double death_probability() const noexcept {
        const double deaths = table_.lambda_death();
        return deaths > 0 ? std::exp(std::log(deaths) - log_total_rate()) : 0.0;
    }

    /// Picks the next jump: a uniformly chosen death with probability
    /// lambda_d / (lambda_b + lambda_d), otherwise a birth proportional to its rate.
    template <class Rng>
    Move choose_move(Rng& rng) const {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double u = unif(rng);
        if (u < death_probability()) {
            std::uniform_int_distribution<std::size_t> pick(0, g_.edge_count() - 1);
            return {MoveKind::death, nth_edge(pick(rng))};
        }
        return {MoveKind::birth, table_.sample_birth(unif(rng))};
    }

    /// log of the holding weight of the current state.
    template <class Rng>
    double sample_log_holding(Rng& rng) const {
        const double log_rate = log_total_rate();
        if (mode_ == HoldingMode::expected) return -log_rate;
        std::exponential_distribution<double> expo(1.0);
        double e = 0.0;
        while (e <= 0.0) e = expo(rng);
        return std::log(e) - log_rate;
    }

    /// The next move and the log holding time spent in the current state before it.
    template <class Rng>
    std::pair<Move, double> step(Rng& rng) const {
        const double log_holding = sample_log_holding(rng);
        return {choose_move(rng), log_holding};
    }

    /// Applies a birth or death and refreshes the affected rates; returns the
    /// number of birth rates recomputed.
    std::size_t apply_move(const Move& mv) {
        const node_t child = mv.edge.to;
        const auto parents_before = g_.parents(child);
        if (mv.kind == MoveKind::birth) {
            if (!table_.valid(mv.edge.from, mv.edge.to)) throw std::logic_error("apply_move: invalid birth");
            log_score_ += table_.log_rate(mv.edge.from, mv.edge.to);
        } else if (mv.kind == MoveKind::death) {
            log_score_ += model_->score_delta(g_, mv.edge, EdgeChange::remove);
        } else {
            throw std::logic_error("apply_move: only births and deaths are allowed");
        }
        apply(g_, mv);
        if (!std::isnan(aic_)) {
            aic_ += model_->family_aic(child, g_.parents(child)) - model_->family_aic(child, parents_before);
        }
        const std::size_t recomputed = table_.update(g_, *model_, mv);
        total_updates_ += recomputed;
        max_updates_ = std::max(max_updates_, recomputed);
        ++jumps_;
        return recomputed;
    }

    /// Runs n_jumps jumps; every record holds the state entered by the jump.
    template <class Rng>
    ChainTrace run(std::size_t n_jumps, Rng& rng, std::uint64_t seed = 0) {
        if (n_jumps == 0) throw std::invalid_argument("run: need at least one jump");
        ChainTrace trace;
        trace.initial = g_;
        trace.initial_log_score = log_score_;
        trace.initial_aic = aic_;
        trace.seed = seed;
        trace.sampler = "bd";
        trace.records.reserve(n_jumps);
        double cum_time = 0.0;
        for (std::size_t t = 0; t < n_jumps; ++t) {
            const Move mv = choose_move(rng);
            const std::size_t updates = apply_move(mv);
            const double log_holding = sample_log_holding(rng);
            cum_time += std::exp(log_holding);
            trace.records.push_back({mv, log_holding, cum_time, log_score_, aic_, static_cast<std::uint32_t>(updates)});
        }
        return trace;
    }

    std::size_t jumps() const noexcept { return jumps_; }
    std::size_t total_rate_updates() const noexcept { return total_updates_; }
    std::size_t max_rate_updates() const noexcept { return max_updates_; }

private:
    Edge nth_edge(std::size_t k) const {
        const BitMatrix& adj = g_.adjacency();
        for (node_t i = 0; i < g_.size(); ++i) {
            const std::size_t c = adj.row_count(i);
            if (k >= c) {
                k -= c;
                continue;
            }
            Edge out{};
            adj.for_each_in_row(i, [&](std::size_t j) {
                if (k-- == 0) out = {i, j};
            });
            return out;
        }
        throw std::logic_error("nth_edge: index out of range");
    }

    Dag g_;
    const ScoreModel* model_;
    HoldingMode mode_;
    BirthRateTable table_;
    double log_score_ = 0.0;
    double aic_ = 0.0;
    std::size_t jumps_ = 0;
    std::size_t total_updates_ = 0;
    std::size_t max_updates_ = 0;
};

}  // namespace ebd
