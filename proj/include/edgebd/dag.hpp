#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bit_matrix.hpp"
#include "common.hpp"

namespace ebd {

/// Directed acyclic graph on a fixed node set with a maintained reachability
/// closure, so that the cycle test for a candidate edge is a single bit lookup.
///
/// `reaches(a, b)` is true iff a directed path a -> ... -> b of at least one
/// edge exists. Insertions update the closure by an outer-product union;
/// removals recompute the rows of the removed edge's tail and its ancestors,
/// the only rows whose reachability can shrink.
class Dag {
public:
    Dag() = default;
    explicit Dag(std::size_t n) : n_(n), children_(n), parents_(n), reach_(n) {}

    Dag(std::size_t n, std::span<const Edge> edges) : Dag(n) {
        for (const Edge& e : edges) add_edge(e.from, e.to);
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t edge_count() const noexcept { return n_edges_; }

    bool has_edge(node_t i, node_t j) const {
        check_node(i);
        check_node(j);
        return children_.test(i, j);
    }
    bool reaches(node_t i, node_t j) const {
        check_node(i);
        check_node(j);
        return reach_.test(i, j);
    }

    /// True iff i -> j is absent and adding it closes no cycle.
    bool is_valid_addition(node_t i, node_t j) const {
        check_pair(i, j);
        return !children_.test(i, j) && !reach_.test(j, i);
    }

    void add_edge(node_t i, node_t j) {
        if (!is_valid_addition(i, j)) {
            throw std::logic_error("Dag::add_edge: " + std::to_string(i) + "->" + std::to_string(j) +
                                   (children_.test(i, j) ? " already present" : " would create a cycle"));
        }
        children_.set(i, j);
        parents_.set(j, i);
        ++n_edges_;

        // Every node reaching i (and i itself) now reaches j and all of j's descendants.
        const auto j_row = reach_.row(j);
        const std::size_t word = j / BitMatrix::word_bits;
        const auto j_bit = BitMatrix::word_type{1} << (j % BitMatrix::word_bits);
        for (node_t a = 0; a < n_; ++a) {
            if (a != i && !reach_.test(a, i)) continue;
            auto a_row = reach_.row(a);
            for (std::size_t k = 0; k < a_row.size(); ++k) a_row[k] |= j_row[k];
            a_row[word] |= j_bit;
        }
    }

    void remove_edge(node_t i, node_t j) {
        check_pair(i, j);
        if (!children_.test(i, j)) {
            throw std::logic_error("Dag::remove_edge: " + std::to_string(i) + "->" + std::to_string(j) +
                                   " not present");
        }
        children_.reset(i, j);
        parents_.reset(j, i);
        --n_edges_;

        // 0 = untouched, 1 = stale, 2 = recomputed
        std::vector<unsigned char> state(n_, 0);
        state[i] = 1;
        for (node_t a = 0; a < n_; ++a) {
            if (reach_.test(a, i)) state[a] = 1;
        }
        for (node_t a = 0; a < n_; ++a) {
            if (state[a] == 1) recompute_reach(a, state);
        }
    }

    /// Every valid addition in row-major (from, to) order.
    std::vector<Edge> valid_additions() const {
        std::vector<Edge> out;
        for (node_t i = 0; i < n_; ++i) {
            for (node_t j = 0; j < n_; ++j) {
                if (i != j && !children_.test(i, j) && !reach_.test(j, i)) out.push_back({i, j});
            }
        }
        return out;
    }

    /// Edges in row-major order.
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        out.reserve(n_edges_);
        for (node_t i = 0; i < n_; ++i) {
            children_.for_each_in_row(i, [&](std::size_t j) { out.push_back({i, j}); });
        }
        return out;
    }

    /// Parents of j in increasing order.
    std::vector<node_t> parents(node_t j) const {
        check_node(j);
        std::vector<node_t> out;
        parents_.for_each_in_row(j, [&](std::size_t p) { out.push_back(p); });
        return out;
    }
    std::size_t parent_count(node_t j) const {
        check_node(j);
        return parents_.row_count(j);
    }

    /// Row i holds the children of i.
    const BitMatrix& adjacency() const noexcept { return children_; }
    /// Row j holds the parents of j.
    const BitMatrix& parent_matrix() const noexcept { return parents_; }
    /// Row i holds every node reachable from i.
    const BitMatrix& reachability() const noexcept { return reach_; }

    friend bool operator==(const Dag&, const Dag&) = default;

private:
    void check_node(node_t v) const {
        if (v >= n_) {
            throw std::out_of_range("node " + std::to_string(v) + " out of range for " +
                                    std::to_string(n_) + "-node graph");
        }
    }
    void check_pair(node_t i, node_t j) const {
        check_node(i);
        check_node(j);
        if (i == j) throw std::invalid_argument("self-edge " + std::to_string(i) + "->" + std::to_string(i));
    }

    void recompute_reach(node_t a, std::vector<unsigned char>& state) {
        reach_.clear_row(a);
        children_.for_each_in_row(a, [&](std::size_t c) {
            if (state[c] == 1) recompute_reach(c, state);
            auto a_row = reach_.row(a);
            const auto c_row = reach_.row(c);
            for (std::size_t k = 0; k < a_row.size(); ++k) a_row[k] |= c_row[k];
            reach_.set(a, c);
        });
        state[a] = 2;
    }

    std::size_t n_ = 0;
    std::size_t n_edges_ = 0;
    BitMatrix children_;
    BitMatrix parents_;
    BitMatrix reach_;
};

/// Candidate-addition mask in child-major layout: bit i of row j is set iff
/// i -> j is a valid addition and j stays within `max_parents` after it.
inline BitMatrix addition_mask(const Dag& g, std::optional<std::size_t> max_parents = std::nullopt) {
    const std::size_t n = g.size();
    BitMatrix mask(n);
    for (node_t j = 0; j < n; ++j) {
        if (max_parents && g.parent_count(j) >= *max_parents) continue;
        auto out = mask.row(j);
        const auto reach = g.reachability().row(j);
        const auto parents = g.parent_matrix().row(j);
        for (std::size_t k = 0; k < out.size(); ++k) {
            out[k] = ~(reach[k] | parents[k]) & mask.tail_mask(k);
        }
        mask.reset(j, j);
    }
    return mask;
}

}  // namespace ebd
