#include <gtest/gtest.h>

#include <cmath>

#include "abn/graph.hpp"
#include "oracles.hpp"

using namespace abn;

namespace {

// X1 -> X3 <- X2, X3 -> X4 on 0-based nodes.
Dag collider_chain() {
    Dag d(4);
    d.add_edge(0, 2);
    d.add_edge(1, 2);
    d.add_edge(2, 3);
    return d;
}

Cpdag make_cpdag(int n, std::set<std::pair<int, int>> dir, std::set<std::pair<int, int>> undir) {
    Cpdag g;
    g.n = n;
    g.directed = std::move(dir);
    g.undirected = std::move(undir);
    return g;
}

}  // namespace

TEST(IsAcyclic, EmptyGraph) { EXPECT_TRUE(is_acyclic({0, 0, 0})); }

TEST(IsAcyclic, ThreeCycle) {
    // 0 <- 2, 1 <- 0, 2 <- 1
    EXPECT_FALSE(is_acyclic({bit(2), bit(0), bit(1)}));
}

TEST(IsAcyclic, ColliderChainNetwork) { EXPECT_TRUE(is_acyclic(collider_chain().parents)); }

TEST(TopologicalOrder, ParentsPrecedeChildren) {
    const Dag d = collider_chain();
    const auto order = topological_order(d);
    std::vector<int> pos(4);
    for (int i = 0; i < 4; ++i) pos[order[i]] = i;
    for (auto [from, to] : d.edges()) EXPECT_LT(pos[from], pos[to]);
    EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3}));
}

TEST(TopologicalOrder, ChainHasUniqueOrder) {
    Dag d(3);
    d.add_edge(0, 1);
    d.add_edge(1, 2);
    EXPECT_EQ(topological_order(d), (std::vector<int>{0, 1, 2}));
}

TEST(TopologicalOrder, EmptyGraphIsPermutation) {
    auto order = topological_order(Dag(3));
    std::sort(order.begin(), order.end());
    EXPECT_EQ(order, (std::vector<int>{0, 1, 2}));
}

TEST(TopologicalOrder, ReportsCycle) {
    Dag d(3, {bit(2), bit(0), bit(1)});
    EXPECT_THROW(topological_order(d), std::invalid_argument);
    EXPECT_THROW(validate(d), std::invalid_argument);
}

TEST(RandomDag, ExtremeDensities) {
    Rng rng(7);
    for (int n : {1, 3, 8}) EXPECT_EQ(random_dag(n, 0.0, rng).edge_count(), 0);
    const Dag full = random_dag(3, 1.0, rng);
    EXPECT_EQ(full.edge_count(), 3);
    EXPECT_TRUE(is_acyclic(full.parents));
}

TEST(RandomDag, RejectsBadArguments) {
    Rng rng(1);
    EXPECT_THROW(random_dag(3, -0.1, rng), std::invalid_argument);
    EXPECT_THROW(random_dag(3, 1.5, rng), std::invalid_argument);
    EXPECT_THROW(random_dag(3, std::nan(""), rng), std::invalid_argument);
    EXPECT_THROW(random_dag(0, 0.5, rng), std::invalid_argument);
    EXPECT_THROW(random_dag(25, 0.5, rng), std::invalid_argument);
}

TEST(RandomDag, MeanEdgeCountMatchesBinomial) {
    Rng rng(2024);
    const int draws = 1000;
    double sum = 0, sum_sq = 0;
    for (int i = 0; i < draws; ++i) {
        const Dag d = random_dag(10, 0.8, rng);
        ASSERT_TRUE(is_acyclic(d.parents));
        sum += d.edge_count();
        sum_sq += d.edge_count() * d.edge_count();
    }
    const double mean = sum / draws;
    const double var = sum_sq / draws - mean * mean;
    EXPECT_NEAR(mean, 36.0, 3.0 * std::sqrt(var / draws));
}

TEST(ToCpdag, ChainIsFullyReversible) {
    Dag d(3);
    d.add_edge(0, 1);
    d.add_edge(1, 2);
    EXPECT_EQ(to_cpdag(d), make_cpdag(3, {}, {{0, 1}, {1, 2}}));
}

TEST(ToCpdag, ColliderIsCompelled) {
    Dag d(3);
    d.add_edge(0, 2);
    d.add_edge(1, 2);
    EXPECT_EQ(to_cpdag(d), make_cpdag(3, {{0, 2}, {1, 2}}, {}));
}

TEST(ToCpdag, ColliderChainAllCompelled) {
    EXPECT_EQ(to_cpdag(collider_chain()), make_cpdag(4, {{0, 2}, {1, 2}, {2, 3}}, {}));
}

TEST(ToCpdag, MatchesEquivalenceClassEnumeration) {
    for (int n = 1; n <= 4; ++n) {
        const auto classes = oracle::equivalence_classes(n);
        for (const auto& d : oracle::all_dags(n)) {
            const Cpdag got = to_cpdag(d);
            ASSERT_EQ(got, classes.at(oracle::class_key(d))) << "n=" << n;
            EXPECT_EQ(skeleton(got), skeleton(d));
        }
    }
}

TEST(Compare, IdenticalGraphs) {
    const Cpdag g = to_cpdag(collider_chain());
    const Metrics m = compare(g, g);
    EXPECT_EQ(m.tpr, 1.0);
    EXPECT_EQ(m.fpr, 0.0);
}

TEST(Compare, EmptyPrediction) {
    const Metrics m = compare(make_cpdag(4, {}, {}), to_cpdag(collider_chain()));
    EXPECT_EQ(m.tpr, 0.0);
    EXPECT_EQ(m.fpr, 0.0);
}

TEST(Compare, OneFalsePositive) {
    const Metrics m = compare(make_cpdag(3, {}, {{0, 1}, {1, 2}}), make_cpdag(3, {}, {{0, 1}}));
    EXPECT_EQ(m.tpr, 1.0);
    EXPECT_DOUBLE_EQ(m.fpr, 0.5);
    EXPECT_EQ(m.true_edges, 1);
    EXPECT_EQ(m.predicted_edges, 2);
}

TEST(Compare, OrientationMatters) {
    const Cpdag truth = make_cpdag(3, {{0, 2}, {1, 2}}, {});
    const Cpdag flipped = make_cpdag(3, {{2, 0}, {1, 2}}, {});
    const Metrics m = compare(flipped, truth);
    EXPECT_DOUBLE_EQ(m.tpr, 0.5);
    EXPECT_EQ(m.fpr, 0.0);
    EXPECT_EQ(compare(flipped, truth, /*skeleton_only=*/true).tpr, 1.0);
    // undirected prediction matches a directed truth edge
    EXPECT_EQ(compare(make_cpdag(3, {}, {{0, 2}, {1, 2}}), truth).tpr, 1.0);
}

TEST(Compare, EmptyTruth) {
    EXPECT_EQ(compare(make_cpdag(3, {}, {}), make_cpdag(3, {}, {})).tpr, 1.0);
    const Metrics m = compare(make_cpdag(3, {}, {{0, 1}}), make_cpdag(3, {}, {}));
    EXPECT_EQ(m.tpr, 0.0);
    EXPECT_DOUBLE_EQ(m.fpr, 1.0 / 3.0);
}

TEST(Compare, RejectsSizeMismatch) {
    EXPECT_THROW(compare(make_cpdag(3, {}, {}), make_cpdag(4, {}, {})), std::invalid_argument);
}

TEST(GraphProperties, RandomDagsSelfCompareAndKeepSkeleton) {
    Rng rng(99);
    for (int i = 0; i < 300; ++i) {
        const int n = 1 + static_cast<int>(uniform_below(rng, 10));
        const Dag d = random_dag(n, uniform01(rng), rng);
        ASSERT_NO_THROW(validate(d));
        const Cpdag g = to_cpdag(d);
        EXPECT_EQ(skeleton(g), skeleton(d));
        const Metrics m = compare(g, g);
        EXPECT_EQ(m.tpr, 1.0);
        EXPECT_EQ(m.fpr, 0.0);
    }
}
