#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include "common.hpp"
#include "dag.hpp"
#include "score.hpp"
#include "trace.hpp"

namespace ebd {

struct MhOptions {
    /// Include edge reversals in the neighborhood.
    bool allow_reversal = false;
};

/// Neighborhood of g: valid additions, deletions and (optionally) reversals.
class Neighborhood {
public:
    Neighborhood(const Dag& g, const ScoreModel& model, MhOptions opt = {})
        : additions_(addition_mask(g, model.options().max_parents)), n_additions_(additions_.count()) {
        edges_ = g.edges();
        if (opt.allow_reversal) {
            for (const Edge& e : edges_) {
                if (reversible(g, e, model)) reversals_.push_back(e);
            }
        }
    }

    std::size_t size() const noexcept { return n_additions_ + edges_.size() + reversals_.size(); }

    /// The k-th move in (additions, deletions, reversals) order; additions are child-major.
    Move at(std::size_t k) const {
        if (k < n_additions_) {
            for (node_t j = 0; j < additions_.size(); ++j) {
                const std::size_t c = additions_.row_count(j);
                if (k >= c) {
                    k -= c;
                    continue;
                }
                Move out{};
                std::size_t seen = 0;
                additions_.for_each_in_row(j, [&](std::size_t i) {
                    if (seen++ == k) out = {MoveKind::birth, {i, j}};
                });
                return out;
            }
        }
        k -= n_additions_;
        if (k < edges_.size()) return {MoveKind::death, edges_[k]};
        k -= edges_.size();
        if (k < reversals_.size()) return {MoveKind::reversal, reversals_[k]};
        throw std::out_of_range("Neighborhood::at");
    }

    /// i -> j can be flipped iff no other directed path i ~> j exists and i
    /// can take one more parent.
    static bool reversible(const Dag& g, Edge e, const ScoreModel& model) {
        if (!model.admits_parent_count(g.parent_count(e.from) + 1)) return false;
        bool other_path = false;
        g.adjacency().for_each_in_row(e.from, [&](std::size_t c) {
            if (c != e.to && g.reachability().test(c, e.to)) other_path = true;
        });
        return !other_path;
    }

private:
    BitMatrix additions_;
    std::size_t n_additions_;
    std::vector<Edge> edges_;
    std::vector<Edge> reversals_;
};

/// log P(G' | D) - log P(G | D) for a single MH move.
inline double move_log_delta(const Dag& g, const Move& mv, const ScoreModel& model) {
    switch (mv.kind) {
    case MoveKind::birth: return model.score_delta(g, mv.edge, EdgeChange::add);
    case MoveKind::death: return model.score_delta(g, mv.edge, EdgeChange::remove);
    case MoveKind::reversal: {
        Dag without = g;
        without.remove_edge(mv.edge.from, mv.edge.to);
        return model.score_delta(g, mv.edge, EdgeChange::remove) +
               model.score_delta(without, {mv.edge.to, mv.edge.from}, EdgeChange::add);
    }
    case MoveKind::rejected: return 0.0;
    }
    return 0.0;
}

/// min(1, exp(delta) * |N(G)| / |N(G')|)
inline double acceptance_probability(const Dag& g, const Move& mv, const ScoreModel& model, MhOptions opt = {}) {
    Dag next = g;
    apply(next, mv);
    const double here = static_cast<double>(Neighborhood(g, model, opt).size());
    const double there = static_cast<double>(Neighborhood(next, model, opt).size());
    const double log_ratio = move_log_delta(g, mv, model) + std::log(here) - std::log(there);
    return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

/// Discrete-time structure MCMC with uniform single-edge proposals.
class MhChain {
public:
    MhChain(Dag initial, const ScoreModel& model, MhOptions opt = {})
        : g_(std::move(initial)), model_(&model), opt_(opt) {
        if (g_.size() < 2) throw std::invalid_argument("MH chain needs at least two nodes");
        if (g_.size() != model.n_vars()) throw std::invalid_argument("initial graph does not match dataset");
        log_score_ = model.graph_log_score(g_);
        if (log_score_ == neg_inf) throw std::invalid_argument("initial graph violates max_parents");
        aic_ = model.dataset().n_rows() > 0 ? model.aic(g_) : std::numeric_limits<double>::quiet_NaN();
    }

    const Dag& graph() const noexcept { return g_; }
    double log_score() const noexcept { return log_score_; }
    double aic() const noexcept { return aic_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t accepted() const noexcept { return accepted_; }

    /// Uniform draw from the neighborhood of the current graph.
    template <class Rng>
    Move propose(Rng& rng) const {
        const Neighborhood nb(g_, *model_, opt_);
        if (nb.size() == 0) throw std::logic_error("MH proposal: empty neighborhood");
        std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
        return nb.at(pick(rng));
    }

    /// One proposal plus accept/reject; returns the move taken (kind `rejected`
    /// carrying the proposed edge when the proposal was declined).
    template <class Rng>
    Move step(Rng& rng) {
        const Move proposal = propose(rng);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        ++steps_;
        const double accept = acceptance_probability(g_, proposal, *model_, opt_);
        if (unif(rng) >= accept) return {MoveKind::rejected, proposal.edge};
        ++accepted_;
        const double delta = move_log_delta(g_, proposal, *model_);
        std::vector<node_t> changed{proposal.edge.to};
        if (proposal.kind == MoveKind::reversal) changed.push_back(proposal.edge.from);
        double aic_before = 0.0;
        if (!std::isnan(aic_)) {
            for (node_t v : changed) aic_before += model_->family_aic(v, g_.parents(v));
        }
        apply(g_, proposal);
        log_score_ += delta;
        if (!std::isnan(aic_)) {
            double aic_after = 0.0;
            for (node_t v : changed) aic_after += model_->family_aic(v, g_.parents(v));
            aic_ += aic_after - aic_before;
        }
        return proposal;
    }

    /// Runs n_steps steps; every record has unit holding weight.
    template <class Rng>
    ChainTrace run(std::size_t n_steps, Rng& rng, std::uint64_t seed = 0) {
        if (n_steps == 0) throw std::invalid_argument("run: need at least one step");
        ChainTrace trace;
        trace.initial = g_;
        trace.initial_log_score = log_score_;
        trace.initial_aic = aic_;
        trace.seed = seed;
        trace.sampler = "mh";
        trace.records.reserve(n_steps);
        for (std::size_t t = 0; t < n_steps; ++t) {
            const Move mv = step(rng);
            trace.records.push_back({mv, 0.0, static_cast<double>(t + 1), log_score_, aic_, 0});
        }
        return trace;
    }

private:
    Dag g_;
    const ScoreModel* model_;
    MhOptions opt_;
    double log_score_ = 0.0;
    double aic_ = 0.0;
    std::size_t steps_ = 0;
    std::size_t accepted_ = 0;
};

}  // namespace ebd
