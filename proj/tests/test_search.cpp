#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abn/search.hpp"

using namespace abn;

namespace {

// Scores on a 1/64 grid keep every sum exact, so ties and shifts are exact.
ScoreCache random_cache(Rng& rng, int n, int max_parents, bool dyadic) {
    ScoreCache cache(n, max_parents);
    std::vector<std::pair<int, NodeMask>> keys;
    cache.for_each([&](int j, NodeMask m, const CacheEntry&) { keys.emplace_back(j, m); });
    for (auto [j, m] : keys) {
        const double s = dyadic ? -static_cast<double>(uniform_below(rng, 64 * 40)) / 64.0 : uniform(rng, -40, 0);
        cache.set(j, m, s);
    }
    return cache;
}

NodeMask permute_mask(NodeMask m, const std::vector<int>& perm) {
    NodeMask out = 0;
    for (std::size_t k = 0; k < perm.size(); ++k)
        if (m & bit(static_cast<int>(k))) out |= bit(perm[k]);
    return out;
}

}  // namespace

TEST(BestParentSets, HandExample) {
    ScoreCache c(3, 2);
    for (int j = 0; j < 3; ++j)
        for (NodeMask m = 0; m < 8; ++m)
            if (c.contains(j, m)) c.set(j, m, -10.0);
    c.set(0, bit(1), -3.0);
    c.set(0, bit(2), -5.0);
    c.set(0, bit(1) | bit(2), -4.0);
    const BestParentTable t = best_parent_sets(c);
    EXPECT_EQ(t.best(0, 0).mask, 0u);
    EXPECT_EQ(t.best(0, bit(2)).mask, bit(2));
    EXPECT_EQ(t.best(0, bit(1) | bit(2)).mask, bit(1));
    EXPECT_EQ(t.best(0, bit(1) | bit(2)).score, -3.0);
    // all equal: lowest mask wins
    EXPECT_EQ(t.best(1, bit(0) | bit(2)).mask, 0u);
}

TEST(BestParentSets, MatchesSubsetEnumeration) {
    Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        const int max_parents = static_cast<int>(uniform_below(rng, 4));
        const ScoreCache c = random_cache(rng, 4, max_parents, false);
        const BestParentTable t = best_parent_sets(c);
        for (int j = 0; j < 4; ++j)
            for (NodeMask cand = 0; cand < 16; ++cand) {
                if (cand & bit(j)) continue;
                double best = -INFINITY;
                for (NodeMask sub = 0; sub < 16; ++sub)
                    if ((sub & ~cand) == 0 && c.contains(j, sub)) best = std::max(best, c.score(j, sub));
                EXPECT_EQ(t.best(j, cand).score, best);
                EXPECT_TRUE(c.contains(j, t.best(j, cand).mask));
            }
    }
}

TEST(CountDags, KnownSequence) {
    EXPECT_EQ(count_dags(1), 1u);
    EXPECT_EQ(count_dags(2), 3u);
    EXPECT_EQ(count_dags(3), 25u);
    EXPECT_EQ(count_dags(4), 543u);
    EXPECT_EQ(count_dags(5), 29281u);
}

TEST(ExactSearch, AgreesWithBruteForce) {
    Rng rng(2);
    for (int rep = 0; rep < 60; ++rep) {
        const int n = 1 + static_cast<int>(uniform_below(rng, 5));
        const int max_parents = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(n)));
        const ScoreCache c = random_cache(rng, n, max_parents, rep % 2 == 0);
        const SearchResult exact = exact_search(c);
        const SearchResult brute = brute_force_search(c);
        EXPECT_EQ(exact.total_score, brute.total_score) << "rep " << rep;
        EXPECT_NO_THROW(validate(exact.dag));
        for (int j = 0; j < n; ++j) EXPECT_LE(popcount(exact.dag.parents[j]), max_parents);
        EXPECT_EQ(exact.total_score, dag_score(c, exact.dag));
    }
}

TEST(ExactSearch, PrefersEmptyGraphWhenParentsOnlyCost) {
    ScoreCache c(4, 3);
    std::vector<std::pair<int, NodeMask>> keys;
    c.for_each([&](int j, NodeMask m, const CacheEntry&) { keys.emplace_back(j, m); });
    for (auto [j, m] : keys) c.set(j, m, -1.0 - popcount(m));
    const SearchResult r = exact_search(c);
    EXPECT_EQ(r.dag, Dag(4));
    EXPECT_EQ(r.total_score, -4.0);
}

TEST(ExactSearch, NeverSelectsFailedEntries) {
    Rng rng(3);
    ScoreCache c = random_cache(rng, 4, 3, true);
    // the best-looking family fails to fit
    c.set(2, bit(0) | bit(1), CacheEntry{});
    for (int j = 0; j < 4; ++j) c.set(j, 0, CacheEntry{});
    c.set(0, 0, -1.0);
    const SearchResult r = exact_search(c);
    EXPECT_TRUE(std::isfinite(r.total_score));
    EXPECT_NE(r.dag.parents[2], bit(0) | bit(1));
    EXPECT_EQ(r.total_score, brute_force_search(c).total_score);
}

TEST(ExactSearch, InvariantUnderRelabelling) {
    Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const ScoreCache c = random_cache(rng, 5, 4, true);
        std::vector<int> perm(5);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        ScoreCache relabelled(5, 4);
        c.for_each([&](int j, NodeMask m, const CacheEntry& e) { relabelled.set(perm[j], permute_mask(m, perm), e); });
        EXPECT_EQ(exact_search(c).total_score, exact_search(relabelled).total_score);
    }
}

TEST(ExactSearch, UniqueOptimumFollowsRelabelling) {
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const ScoreCache c = random_cache(rng, 5, 4, false);
        std::vector<int> perm(5);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        ScoreCache relabelled(5, 4);
        c.for_each([&](int j, NodeMask m, const CacheEntry& e) { relabelled.set(perm[j], permute_mask(m, perm), e); });
        const Dag a = exact_search(c).dag;
        const Dag b = exact_search(relabelled).dag;
        for (int j = 0; j < 5; ++j) EXPECT_EQ(b.parents[perm[j]], permute_mask(a.parents[j], perm));
    }
}

TEST(ExactSearch, PerNodeShiftKeepsTheOptimum) {
    Rng rng(6);
    for (int rep = 0; rep < 20; ++rep) {
        const ScoreCache c = random_cache(rng, 5, 3, true);
        ScoreCache shifted(5, 3);
        std::vector<double> shift(5);
        for (auto& s : shift) s = static_cast<double>(uniform_below(rng, 100));
        c.for_each([&](int j, NodeMask m, const CacheEntry& e) { shifted.set(j, m, e.log_score + shift[j]); });
        const SearchResult a = exact_search(c);
        const SearchResult b = exact_search(shifted);
        EXPECT_EQ(a.dag, b.dag);
        EXPECT_EQ(b.total_score, a.total_score + std::accumulate(shift.begin(), shift.end(), 0.0));
    }
}

TEST(BruteForceSearch, RejectsLargeGraphs) {
    EXPECT_THROW(brute_force_search(ScoreCache(6, 1)), std::invalid_argument);
}
