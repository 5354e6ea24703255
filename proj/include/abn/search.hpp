#pragma once

// Exact maximum-score DAG search by dynamic programming over node subsets,
// with a brute-force enumerator used as a test oracle for small n.
//
// Ties are broken towards the lowest parent bitmask and the lowest sink index,
// so the selected DAG is a deterministic function of the cache.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "abn/graph.hpp"
#include "abn/score.hpp"

namespace abn {

struct BestParents {
    double score = -std::numeric_limits<double>::infinity();
    NodeMask mask = 0;
};

/// For each node j and candidate set C (indexed by compress_mask(C, j)), the
/// best-scoring parent set contained in C.
class BestParentTable {
public:
    BestParentTable() = default;
    explicit BestParentTable(int n)
        : n_(n), table_(static_cast<std::size_t>(n), std::vector<BestParents>(std::size_t{1} << (n - 1))) {}

    int n_vars() const { return n_; }
    const BestParents& best(int node, NodeMask candidates) const {
        return table_[node][compress_mask(candidates, node)];
    }
    std::vector<BestParents>& row(int node) { return table_[node]; }

private:
    int n_ = 0;
    std::vector<std::vector<BestParents>> table_;
};

namespace detail {

// (score, mask) ordering: higher score wins, then the lower mask.
inline bool better(const BestParents& a, const BestParents& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.mask < b.mask;
}

}  // namespace detail

/// best(j, C) = max(cache(j, C), max_{c in C} best(j, C \ {c})), where the
/// direct term only exists when |C| <= max_parents.
inline BestParentTable best_parent_sets(const ScoreCache& cache) {
    const int n = cache.n_vars();
    BestParentTable t(n);
    const std::uint32_t count = std::uint32_t{1} << (n - 1);
    for (int j = 0; j < n; ++j) {
        auto& row = t.row(j);
        for (std::uint32_t c = 0; c < count; ++c) {
            const NodeMask candidates = expand_mask(c, j);
            BestParents best;
            if (popcount(candidates) <= cache.max_parents()) {
                best = {cache.score(j, candidates), candidates};
            }
            for (std::uint32_t rest = c; rest != 0; rest &= rest - 1) {
                const std::uint32_t low = rest & (~rest + 1);
                const BestParents& sub = row[c & ~low];
                if (detail::better(sub, best)) best = sub;
            }
            row[c] = best;
        }
    }
    return t;
}

/// Sum of the cache scores of the DAG's families, summed in node order.
inline double dag_score(const ScoreCache& cache, const Dag& dag) {
    double total = 0.0;
    for (int j = 0; j < dag.n; ++j) total += cache.score(j, dag.parents[j]);
    return total;
}

struct SearchResult {
    Dag dag;
    double total_score = -std::numeric_limits<double>::infinity();
};

/// Highest-scoring DAG: F(S) = max_{j in S} F(S \ {j}) + best(j, S \ {j}),
/// with F(empty) = 0, followed by back-tracking through the chosen sinks.
inline SearchResult exact_search(const ScoreCache& cache) {
    const int n = cache.n_vars();
    if (n < 1 || n > kMaxNodes) throw std::invalid_argument("variable count must be in [1, 24]");
    const BestParentTable best = best_parent_sets(cache);

    const std::size_t subsets = std::size_t{1} << n;
    std::vector<double> f(subsets, -std::numeric_limits<double>::infinity());
    std::vector<std::int8_t> sink(subsets, -1);
    f[0] = 0.0;
    for (std::size_t s = 1; s < subsets; ++s) {
        const auto set = static_cast<NodeMask>(s);
        for (int j = 0; j < n; ++j) {
            if (!(set & bit(j))) continue;
            const NodeMask rest = set & ~bit(j);
            const double value = f[rest] + best.best(j, rest).score;
            if (sink[s] < 0 || value > f[s]) {
                f[s] = value;
                sink[s] = static_cast<std::int8_t>(j);
            }
        }
    }

    SearchResult r;
    r.dag = Dag(n);
    NodeMask remaining = low_bits(n);
    while (remaining) {
        const int j = sink[remaining];
        remaining &= ~bit(j);
        r.dag.parents[j] = best.best(j, remaining).mask;
    }
    r.total_score = dag_score(cache, r.dag);
    return r;
}

/// Enumerates every DAG on n <= 5 nodes that the cache can score.
inline SearchResult brute_force_search(const ScoreCache& cache) {
    const int n = cache.n_vars();
    if (n > 5) throw std::invalid_argument("brute-force search is limited to 5 nodes");

    // Candidate parent sets per node, in ascending mask order.
    std::vector<std::vector<NodeMask>> options(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        for (NodeMask m = 0; m <= low_bits(n); ++m)
            if (cache.contains(j, m)) options[j].push_back(m);

    SearchResult best;
    bool found = false;
    std::vector<NodeMask> parents(static_cast<std::size_t>(n), 0);
    auto recurse = [&](auto&& self, int j) -> void {
        if (j == n) {
            if (!is_acyclic(parents)) return;
            const Dag dag(n, parents);
            const double s = dag_score(cache, dag);
            if (!found || s > best.total_score) {
                best = {dag, s};
                found = true;
            }
            return;
        }
        for (NodeMask m : options[j]) {
            parents[j] = m;
            self(self, j + 1);
        }
    };
    recurse(recurse, 0);
    return best;
}

/// Number of acyclic parent assignments the brute-force search visits.
inline std::size_t count_dags(int n) {
    std::size_t count = 0;
    std::vector<NodeMask> parents(static_cast<std::size_t>(n), 0);
    auto recurse = [&](auto&& self, int j) -> void {
        if (j == n) {
            count += is_acyclic(parents) ? 1 : 0;
            return;
        }
        for (NodeMask m = 0; m <= low_bits(n); ++m) {
            if (m & bit(j)) continue;
            parents[j] = m;
            self(self, j + 1);
        }
    };
    recurse(recurse, 0);
    return count;
}

}  // namespace abn
