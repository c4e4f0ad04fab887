#include <gtest/gtest.h>

#include "support.hpp"

using namespace ebd;

namespace {

/// Robinson's recurrence for labeled DAGs:
/// a(n) = sum_{k=1..n} (-1)^(k+1) C(n,k) 2^(k(n-k)) a(n-k).
std::vector<long long> robinson(std::size_t up_to) {
    std::vector<long long> a(up_to + 1, 0);
    a[0] = 1;
    for (std::size_t n = 1; n <= up_to; ++n) {
        long long total = 0;
        long long binom = 1;
        for (std::size_t k = 1; k <= n; ++k) {
            binom = binom * static_cast<long long>(n - k + 1) / static_cast<long long>(k);
            const long long term = binom * (1LL << (k * (n - k))) * a[n - k];
            total += (k % 2 == 1) ? term : -term;
        }
        a[n] = total;
    }
    return a;
}

}  // namespace

TEST(Exact, RobinsonOracle) {
    EXPECT_EQ(robinson(5), (std::vector<long long>{1, 1, 3, 25, 543, 29281}));
}

TEST(Exact, EnumerationCounts) {
    const auto a = robinson(5);
    for (std::size_t n = 1; n <= 5; ++n) {
        EXPECT_EQ(static_cast<long long>(enumerate_dags(n).size()), a[n]) << "n=" << n;
    }
}

TEST(Exact, FourNodesHas543) { EXPECT_EQ(enumerate_dags(4).size(), 543u); }

TEST(Exact, EnumerationRejectsLargeN) {
    EXPECT_THROW(enumerate_dags(6), std::invalid_argument);
    EXPECT_THROW(enumerate_dags(0), std::invalid_argument);
}

TEST(Exact, EnumeratedGraphsAreDistinctAndAcyclic) {
    const auto dags = enumerate_dags(4);
    std::set<std::uint64_t> keys;
    for (const Dag& g : dags) {
        EXPECT_TRUE(keys.insert(dag_key(g)).second);
        EXPECT_FALSE(test::has_cycle(4, g.edges()));
        EXPECT_TRUE(test::reach_matches_oracle(g));
    }
}

TEST(Exact, UniformWithoutData) {
    const Dataset d({2, 2, 2}, {{}, {}, {}});
    const ScoreModel m(d);
    const auto post = exact_posterior(m);
    ASSERT_EQ(post.size(), 25u);
    for (std::size_t k = 0; k < post.size(); ++k) EXPECT_NEAR(post.probability(k), 1.0 / 25, 1e-15);
}

TEST(Exact, NormalizationAndIndex) {
    const Dataset d = test::seeded_data(test::fig1(), 4, 50, 3);
    const ScoreModel m(d);
    const auto post = exact_posterior(m);
    double total = 0.0;
    for (std::size_t k = 0; k < post.size(); ++k) total += post.probability(k);
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (std::size_t k = 0; k < post.size(); ++k) EXPECT_EQ(post.position(post.dags[k]), k);
}

TEST(Exact, ModeIsScoreEquivalentToGenerator) {
    const Dataset d = test::seeded_data(test::fig1(), 4, 5000, 11);
    const ScoreModel m(d);
    const auto post = exact_posterior(m);
    const Dag& mode = post.dags[post.mode()];
    // same skeleton and v-structure as 1->2, 1->3, 2->4, 3->4
    for (node_t i = 0; i < 4; ++i)
        for (node_t j = 0; j < 4; ++j)
            if (i != j) {
                EXPECT_EQ(mode.has_edge(i, j) || mode.has_edge(j, i),
                          test::fig1().has_edge(i, j) || test::fig1().has_edge(j, i));
            }
    EXPECT_TRUE(mode.has_edge(1, 3));
    EXPECT_TRUE(mode.has_edge(2, 3));
    EXPECT_FALSE(mode.has_edge(1, 0) && mode.has_edge(2, 0));
    // The three members of the generator's equivalence class take the top three places.
    const std::set<std::uint64_t> cls{dag_key(test::fig1()),
                                      dag_key(Dag(4, std::vector<Edge>{{1, 0}, {0, 2}, {1, 3}, {2, 3}})),
                                      dag_key(Dag(4, std::vector<Edge>{{2, 0}, {0, 1}, {1, 3}, {2, 3}}))};
    std::set<std::uint64_t> top;
    for (std::size_t k : post.top(3)) top.insert(dag_key(post.dags[k]));
    EXPECT_EQ(top, cls);
}

TEST(Exact, PenaltyShiftsWeightsByEdgeCount) {
    const Dataset d = test::seeded_data(test::fig1(), 3, 60, 4);
    const ScoreModel plain(d);
    const ScoreModel penal(d, {.prior = GraphPrior::edge_penalty(0.8)});
    const auto a = exact_posterior(plain);
    const auto b = exact_posterior(penal);
    std::vector<double> shifted(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        shifted[k] = a.log_weights[k] - 0.8 * static_cast<double>(a.dags[k].edge_count());
        EXPECT_NEAR(b.log_weights[k], shifted[k], 1e-9);
    }
    const double z = log_sum_exp(shifted);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(b.probability(k), std::exp(shifted[k] - z), 1e-12);
}

TEST(Exact, TwoNodeMarginals) {
    const Dataset d({2, 2}, {{}, {}});
    const ScoreModel m(d);
    const auto marg = exact_edge_marginals(exact_posterior(m));
    EXPECT_NEAR(marg(0, 1), 1.0 / 3, 1e-15);
    EXPECT_NEAR(marg(1, 0), 1.0 / 3, 1e-15);
    EXPECT_EQ(marg(0, 0), 0.0);
}

TEST(Exact, MarginalsAreConsistent) {
    const Dataset d = test::seeded_data(test::fig1(), 4, 100, 5);
    const ScoreModel m(d);
    const auto post = exact_posterior(m);
    const auto marg = exact_edge_marginals(post);
    const auto oracle = test::marginals_oracle(post.dags, post.probabilities());
    for (node_t i = 0; i < 4; ++i) {
        EXPECT_EQ(marg(i, i), 0.0);
        for (node_t j = 0; j < 4; ++j) {
            EXPECT_NEAR(marg(i, j), oracle(i, j), 1e-12);
            EXPECT_GE(marg(i, j), 0.0);
            EXPECT_LE(marg(i, j) + marg(j, i), 1.0 + 1e-12);
        }
    }
}

TEST(Exact, StationarityTwoNodesNoData) {
    const Dataset d({2, 2}, {{}, {}});
    const ScoreModel m(d);
    EXPECT_LT(generator_stationarity_check(exact_posterior(m), m), 1e-12);
}

TEST(Exact, StationarityThreeNodes) {
    const Dataset d = test::seeded_data(Dag(3, std::vector<Edge>{{0, 1}, {0, 2}}), 3, 80, 6);
    const ScoreModel m(d, {.prior = GraphPrior::edge_penalty(0.4)});
    const auto post = exact_posterior(m);
    EXPECT_LT(generator_stationarity_check(post, m), 1e-9);

    auto pi = post.probabilities();
    pi[0] += 0.01;
    double total = 0.0;
    for (double p : pi) total += p;
    for (double& p : pi) p /= total;
    EXPECT_GT(generator_stationarity_residual(post, m, pi), 1e-6);
}

TEST(Exact, StationarityFourNodesWithCap) {
    const Dataset d = test::seeded_data(test::fig1(), 3, 50, 8);
    const ScoreModel m(d, {.max_parents = 1});
    const auto post = exact_posterior(m);
    EXPECT_LT(generator_stationarity_check(post, m), 1e-9);
}

TEST(Exact, StationarityRejectsFiveNodes) {
    const Dataset d({2, 2, 2, 2, 2}, {{}, {}, {}, {}, {}});
    const ScoreModel m(d);
    const auto post = exact_posterior(m);
    EXPECT_THROW((void)generator_stationarity_check(post, m), std::invalid_argument);
}
