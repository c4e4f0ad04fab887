#include <gtest/gtest.h>

#include "support.hpp"

using namespace ebd;

namespace {

Dataset columns(std::vector<std::vector<state_t>> cols, std::size_t card = 2) {
    const std::vector<std::size_t> cards(cols.size(), card);
    return Dataset(cards, std::move(cols));
}

const std::vector<node_t> none{};

}  // namespace

TEST(Score, EmptyDataGivesZero) {
    const Dataset d = columns({{}, {}, {}});
    const ScoreModel m(d);
    EXPECT_EQ(m.family_log_score(0, none), 0.0);
    EXPECT_EQ(m.family_log_score(2, std::vector<node_t>{0, 1}), 0.0);
}

TEST(Score, BinaryNoParents) {
    // lnG(2) - lnG(6) + 2 (lnG(3) - lnG(1)) = ln(4/120)
    const Dataset d = columns({{0, 0, 1, 1}});
    EXPECT_NEAR(ScoreModel(d).family_log_score(0, none), -3.4011973816621555, 1e-12);
}

TEST(Score, BinaryOneParent) {
    const Dataset d = columns({{0, 0, 1, 1}, {0, 1, 0, 1}});
    EXPECT_NEAR(ScoreModel(d).family_log_score(1, std::vector<node_t>{0}), -3.58351893845611, 1e-12);
}

TEST(Score, FamilyErrors) {
    const Dataset d = columns({{0, 1}, {1, 0}});
    const ScoreModel m(d, {.max_parents = 0});
    EXPECT_THROW((void)m.family_log_score(0, std::vector<node_t>{0}), std::invalid_argument);
    EXPECT_THROW((void)m.family_log_score(2, none), std::out_of_range);
    EXPECT_THROW((void)m.family_log_score(0, std::vector<node_t>{1}), std::invalid_argument);
}

TEST(Score, GraphPrior) {
    const Dataset d = columns({{}, {}, {}, {}});
    EXPECT_EQ(ScoreModel(d).graph_log_prior(test::fig1()), 0.0);
    const ScoreModel penal(d, {.prior = GraphPrior::edge_penalty(0.5)});
    EXPECT_EQ(penal.graph_log_prior(Dag(4)), 0.0);
    EXPECT_DOUBLE_EQ(penal.graph_log_prior(test::fig1()), -2.0);
    EXPECT_THROW(GraphPrior::edge_penalty(-1.0), std::invalid_argument);
}

TEST(Score, MaxParentsZeroesPrior) {
    const Dataset d = columns({{}, {}, {}, {}});
    const ScoreModel m(d, {.max_parents = 1});
    EXPECT_EQ(m.graph_log_prior(test::fig1()), neg_inf);
    EXPECT_EQ(m.graph_log_score(test::fig1()), neg_inf);
}

TEST(Score, GraphScoreWithoutData) {
    const Dataset d = columns({{}, {}, {}, {}});
    EXPECT_EQ(ScoreModel(d).graph_log_score(test::fig1()), 0.0);
}

TEST(Score, SingleNodeNetwork) {
    const Dataset d = columns({{0, 1, 1, 2, 0}}, 3);
    const ScoreModel m(d);
    EXPECT_EQ(m.graph_log_score(Dag(1)), m.family_log_score(0, none));
}

TEST(Score, GraphScoreMatchesSequentialPredictive) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const Dag gen = test::random_dag(3, 0.7, rng);
        const Dataset d = test::seeded_data(gen, 3, 40, 100 + rep);
        for (double alpha : {1.0, 0.5, 2.5}) {
            const ScoreModel m(d, {.alpha = alpha});
            const Dag g = test::random_dag(3, 0.6, rng);
            EXPECT_NEAR(m.graph_log_score(g), test::sequential_log_marginal(d, g, alpha), 1e-10);
        }
    }
}

TEST(Score, DeltaMatchesFullDifference) {
    std::mt19937_64 rng(17);
    const Dataset d = test::seeded_data(test::random_dag(5, 0.5, rng), 3, 60, 99);
    const ScoreModel m(d, {.prior = GraphPrior::edge_penalty(0.7)});
    for (int rep = 0; rep < 40; ++rep) {
        const Dag g = test::random_dag(5, 0.4, rng);
        const double base = m.graph_log_score(g);
        for (const Edge& e : g.valid_additions()) {
            Dag h = g;
            h.add_edge(e.from, e.to);
            const double up = m.score_delta(g, e, EdgeChange::add);
            EXPECT_NEAR(up, m.graph_log_score(h) - base, 1e-10);
            EXPECT_NEAR(up + m.score_delta(h, e, EdgeChange::remove), 0.0, 1e-12);
        }
    }
}

TEST(Score, DeltaIsZeroWithoutData) {
    const Dataset d = columns({{}, {}, {}});
    const ScoreModel m(d);
    const Dag g(3);
    EXPECT_EQ(m.score_delta(g, {0, 1}, EdgeChange::add), 0.0);
}

TEST(Score, DeltaRejectsIllegalMoves) {
    const Dataset d = columns({{0, 1}, {1, 0}, {0, 0}});
    const ScoreModel m(d);
    const std::vector<Edge> e{{0, 1}};
    const Dag g(3, e);
    EXPECT_THROW((void)m.score_delta(g, {1, 0}, EdgeChange::add), std::logic_error);
    EXPECT_THROW((void)m.score_delta(g, {1, 2}, EdgeChange::remove), std::logic_error);
}

TEST(Score, AicSingleBinaryVariable) {
    const Dataset d = columns({{0, 1}});
    EXPECT_NEAR(ScoreModel(d).aic(Dag(1)), 4.772588722239782, 1e-12);
}

TEST(Score, AicDeterministicColumn) {
    const Dataset d = columns({{0, 0, 0, 0}, {0, 1, 0, 1}}, 3);
    const ScoreModel m(d);
    const auto s = m.family(0, none);
    EXPECT_EQ(s.max_log_likelihood, 0.0);
    EXPECT_EQ(s.free_parameters, 2.0);
}

TEST(Score, AicMatchesCountingOracle) {
    const Dataset d = test::seeded_data(test::fig1(), 4, 300, 7);
    const ScoreModel m(d);
    EXPECT_NEAR(m.aic(test::fig1()), test::aic_oracle(d, test::fig1()), 1e-9);
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 10; ++rep) {
        const Dag g = test::random_dag(4, 0.5, rng);
        EXPECT_NEAR(m.aic(g), test::aic_oracle(d, g), 1e-9);
    }
}

TEST(Score, AicNeedsRows) {
    const Dataset d = columns({{}});
    EXPECT_THROW((void)ScoreModel(d).aic(Dag(1)), std::domain_error);
}

TEST(Score, CacheIsTransparent) {
    std::mt19937_64 rng(23);
    const Dataset d = test::seeded_data(test::random_dag(6, 0.4, rng), 3, 80, 5);
    const ScoreModel cached(d);
    const ScoreModel capped(d, {.cache_capacity = 3});
    for (int rep = 0; rep < 200; ++rep) {
        const Dag g = test::random_dag(6, 0.3, rng);
        for (node_t j = 0; j < 6; ++j) {
            const auto pa = g.parents(j);
            const double a = cached.family_log_score(j, pa);
            ScoreModel fresh(d);
            EXPECT_EQ(a, fresh.family_log_score(j, pa));
            EXPECT_EQ(a, capped.family_log_score(j, pa));
            EXPECT_EQ(a, cached.family_log_score(j, pa));
        }
    }
    EXPECT_LE(capped.cache_size(), 3u);
    EXPECT_LT(cached.evaluations(), 200u * 6u);
}

TEST(Score, FamilyScoresAreNonPositive) {
    const Dataset d = test::seeded_data(test::fig1(), 4, 50, 2);
    const ScoreModel m(d, {.alpha = 0.3});
    for (const Dag& g : enumerate_dags(4)) {
        for (node_t j = 0; j < 4; ++j) {
            const double s = m.family_log_score(j, g.parents(j));
            EXPECT_TRUE(std::isfinite(s));
            EXPECT_LE(s, 0.0);
        }
    }
}

TEST(Score, AppendingRowsNeverIncreasesFamilyScore) {
    const Dataset full = test::seeded_data(test::fig1(), 3, 120, 31);
    const std::vector<node_t> pa{1, 2};
    double previous = 0.0;
    for (std::size_t m = 1; m <= full.n_rows(); ++m) {
        std::vector<std::vector<state_t>> cols;
        for (node_t v = 0; v < 4; ++v) {
            auto c = full.column(v);
            cols.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(m));
        }
        const Dataset prefix(full.cardinalities(), std::move(cols));
        const double s = ScoreModel(prefix).family_log_score(3, pa);
        EXPECT_LT(s, previous);
        previous = s;
    }
}
