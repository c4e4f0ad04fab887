#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"
#include "dag.hpp"

namespace ebd {

enum class MoveKind : char {
    birth = 'B',
    death = 'D',
    /// MH only: i -> j replaced by j -> i
    reversal = 'V',
    /// MH only: proposal rejected, state unchanged
    rejected = 'R',
};

struct Move {
    MoveKind kind = MoveKind::birth;
    Edge edge{};
    friend bool operator==(const Move&, const Move&) = default;
};

/// Applies a move to g in place (rejections are no-ops).
inline void apply(Dag& g, const Move& mv) {
    switch (mv.kind) {
    case MoveKind::birth: g.add_edge(mv.edge.from, mv.edge.to); break;
    case MoveKind::death: g.remove_edge(mv.edge.from, mv.edge.to); break;
    case MoveKind::reversal:
        g.remove_edge(mv.edge.from, mv.edge.to);
        g.add_edge(mv.edge.to, mv.edge.from);
        break;
    case MoveKind::rejected: break;
    }
}

/// One jump (or MH step). The record describes the state the chain is in
/// after the move: its scores and how long the chain holds there.
struct TraceRecord {
    Move move{};
    /// log of the holding weight; 0 for discrete-time chains
    double log_holding = 0.0;
    /// process time at the end of this record's holding period
    double cum_time = 0.0;
    double log_score = 0.0;
    /// NaN when the dataset has no rows
    double aic = 0.0;
    /// birth-rate recomputations spent on this jump (BD only)
    std::uint32_t rate_updates = 0;

    double holding_weight() const noexcept { return std::exp(log_holding); }
};

/// Moves from a known initial graph; graphs are recovered by replay.
struct ChainTrace {
    Dag initial;
    double initial_log_score = 0.0;
    double initial_aic = 0.0;
    std::vector<TraceRecord> records;
    std::uint64_t seed = 0;
    std::string generator = "mt19937_64";
    /// "bd" or "mh"
    std::string sampler;

    /// Calls f(graph_after_record, record) for every record in order.
    template <class F>
    void replay(F&& f) const {
        Dag g = initial;
        for (const TraceRecord& r : records) {
            apply(g, r.move);
            f(static_cast<const Dag&>(g), r);
        }
    }

    Dag final_graph() const {
        Dag g = initial;
        for (const TraceRecord& r : records) apply(g, r.move);
        return g;
    }
};

}  // namespace ebd
