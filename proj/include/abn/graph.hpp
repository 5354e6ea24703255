#pragma once

// DAGs as per-node parent bitmasks, essential graphs (CPDAGs), random DAG
// generation and edge-recovery metrics.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "abn/rng.hpp"

namespace abn {

using NodeMask = std::uint32_t;

inline constexpr int kMaxNodes = 24;

inline constexpr NodeMask bit(int node) { return NodeMask{1} << node; }

inline constexpr NodeMask low_bits(int n) {
    return n >= 32 ? ~NodeMask{0} : (NodeMask{1} << n) - 1;
}

inline int popcount(NodeMask m) { return std::popcount(m); }

/// Directed acyclic graph stored as one parent mask per node.
struct Dag {
    int n = 0;
    std::vector<NodeMask> parents;

    Dag() = default;
    explicit Dag(int nodes) : n(nodes), parents(static_cast<std::size_t>(nodes), 0) {}
    Dag(int nodes, std::vector<NodeMask> masks) : n(nodes), parents(std::move(masks)) {}

    bool has_edge(int from, int to) const { return (parents[to] & bit(from)) != 0; }
    void add_edge(int from, int to) { parents[to] |= bit(from); }

    int edge_count() const {
        int e = 0;
        for (NodeMask m : parents) e += popcount(m);
        return e;
    }

    /// Edges as (from, to), ordered by child then parent.
    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> out;
        for (int to = 0; to < n; ++to)
            for (int from = 0; from < n; ++from)
                if (has_edge(from, to)) out.emplace_back(from, to);
        return out;
    }

    friend bool operator==(const Dag&, const Dag&) = default;
};

/// Essential graph: compelled edges directed, reversible edges undirected.
/// Undirected pairs are stored with first < second.
struct Cpdag {
    int n = 0;
    std::set<std::pair<int, int>> directed;
    std::set<std::pair<int, int>> undirected;

    bool adjacent(int a, int b) const {
        return directed.contains({a, b}) || directed.contains({b, a}) ||
               undirected.contains({std::min(a, b), std::max(a, b)});
    }
    int edge_count() const { return static_cast<int>(directed.size() + undirected.size()); }

    friend bool operator==(const Cpdag&, const Cpdag&) = default;
};

struct Metrics {
    double tpr = 0.0;
    double fpr = 0.0;
    int true_edges = 0;
    int predicted_edges = 0;
    int true_positives = 0;
    int false_positives = 0;
};

/// True iff the parent masks admit a topological order.
inline bool is_acyclic(const std::vector<NodeMask>& parents) {
    const int n = static_cast<int>(parents.size());
    NodeMask placed = 0;
    for (int round = 0; round < n; ++round) {
        bool progressed = false;
        for (int j = 0; j < n; ++j) {
            if ((placed & bit(j)) == 0 && (parents[j] & ~placed) == 0) {
                placed |= bit(j);
                progressed = true;
            }
        }
        if (!progressed) break;
    }
    return placed == low_bits(n);
}

inline void validate(const Dag& dag) {
    if (dag.n < 1 || dag.n > kMaxNodes)
        throw std::invalid_argument("node count must be in [1, 24]");
    if (static_cast<int>(dag.parents.size()) != dag.n)
        throw std::invalid_argument("parent mask count differs from node count");
    for (int j = 0; j < dag.n; ++j) {
        if (dag.parents[j] & ~low_bits(dag.n))
            throw std::invalid_argument("parent mask uses bits beyond node count");
        if (dag.parents[j] & bit(j)) throw std::invalid_argument("self-loop in parent mask");
    }
    if (!is_acyclic(dag.parents)) throw std::invalid_argument("graph contains a directed cycle");
}

/// Kahn order; among ready nodes the lowest index goes first.
inline std::vector<int> topological_order(const Dag& dag) {
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(dag.n));
    NodeMask placed = 0;
    while (static_cast<int>(order.size()) < dag.n) {
        int next = -1;
        for (int j = 0; j < dag.n; ++j) {
            if ((placed & bit(j)) == 0 && (dag.parents[j] & ~placed) == 0) {
                next = j;
                break;
            }
        }
        if (next < 0) throw std::invalid_argument("graph contains a directed cycle");
        placed |= bit(next);
        order.push_back(next);
    }
    return order;
}

/// Random order, then each forward pair becomes an edge with probability `density`.
inline Dag random_dag(int n, double density, Rng& rng) {
    if (n < 1 || n > kMaxNodes) throw std::invalid_argument("node count must be in [1, 24]");
    if (!(density >= 0.0 && density <= 1.0))
        throw std::invalid_argument("density must lie in [0, 1]");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const auto k = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(i) + 1));
        std::swap(order[i], order[k]);
    }
    Dag dag(n);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (bernoulli(rng, density)) dag.add_edge(order[a], order[b]);
    return dag;
}

namespace detail {

inline std::pair<int, int> ordered(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

struct Pdag {
    int n;
    std::vector<NodeMask> in;       // directed parents
    std::vector<NodeMask> neighbor;  // undirected neighbours

    bool adjacent(int a, int b) const {
        return (in[a] & bit(b)) || (in[b] & bit(a)) || (neighbor[a] & bit(b));
    }
    void orient(int from, int to) {
        neighbor[from] &= ~bit(to);
        neighbor[to] &= ~bit(from);
        in[to] |= bit(from);
    }
};

// Meek R1: c -> a - b, c and b non-adjacent  =>  a -> b.
inline bool meek_r1(const Pdag& g, int a, int b) {
    for (int c = 0; c < g.n; ++c)
        if ((g.in[a] & bit(c)) && !g.adjacent(c, b)) return true;
    return false;
}

// Meek R2: a -> c -> b with a - b  =>  a -> b.
inline bool meek_r2(const Pdag& g, int a, int b) {
    for (int c = 0; c < g.n; ++c)
        if ((g.in[c] & bit(a)) && (g.in[b] & bit(c))) return true;
    return false;
}

// Meek R3: a - c1 -> b, a - c2 -> b, c1 and c2 non-adjacent, a - b  =>  a -> b.
inline bool meek_r3(const Pdag& g, int a, int b) {
    const NodeMask candidates = g.neighbor[a] & g.in[b];
    for (int c1 = 0; c1 < g.n; ++c1) {
        if (!(candidates & bit(c1))) continue;
        for (int c2 = c1 + 1; c2 < g.n; ++c2)
            if ((candidates & bit(c2)) && !g.adjacent(c1, c2)) return true;
    }
    return false;
}

}  // namespace detail

/// Essential graph of the Markov equivalence class of `dag`: v-structures are
/// compelled, then Meek rules R1-R3 are applied until nothing changes.
inline Cpdag to_cpdag(const Dag& dag) {
    const int n = dag.n;
    detail::Pdag g{n, std::vector<NodeMask>(n, 0), std::vector<NodeMask>(n, 0)};
    for (int child = 0; child < n; ++child) {
        for (int p = 0; p < n; ++p) {
            if (!dag.has_edge(p, child)) continue;
            bool compelled = false;
            for (int q = 0; q < n && !compelled; ++q)
                compelled = q != p && dag.has_edge(q, child) && !dag.has_edge(p, q) &&
                            !dag.has_edge(q, p);
            if (compelled) {
                g.in[child] |= bit(p);
            } else {
                g.neighbor[child] |= bit(p);
                g.neighbor[p] |= bit(child);
            }
        }
    }

    bool changed = true;
    while (changed) {
        changed = false;
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
                if (!(g.neighbor[a] & bit(b))) continue;
                if (detail::meek_r1(g, a, b) || detail::meek_r2(g, a, b) ||
                    detail::meek_r3(g, a, b)) {
                    g.orient(a, b);
                    changed = true;
                }
            }
        }
    }

    Cpdag out;
    out.n = n;
    for (int b = 0; b < n; ++b)
        for (int a = 0; a < n; ++a) {
            if (g.in[b] & bit(a)) out.directed.emplace(a, b);
            if (a < b && (g.neighbor[a] & bit(b))) out.undirected.emplace(a, b);
        }
    return out;
}

/// Edge recovery of `predicted` against `truth`. A predicted adjacency is a
/// true positive when it is an edge of the truth with compatible orientation
/// (undirected matches either direction). A false positive is a predicted
/// adjacency absent from the truth's skeleton; a misoriented edge counts as
/// neither. With `skeleton_only` orientation is ignored.
inline Metrics compare(const Cpdag& predicted, const Cpdag& truth, bool skeleton_only = false) {
    if (predicted.n != truth.n) throw std::invalid_argument("graphs have different node counts");
    const int n = truth.n;
    Metrics m;
    m.true_edges = truth.edge_count();
    m.predicted_edges = predicted.edge_count();

    auto orientation = [](const Cpdag& g, int a, int b) -> int {
        // +1: a->b, -1: b->a, 0: undirected, 2: absent
        if (g.directed.contains({a, b})) return 1;
        if (g.directed.contains({b, a})) return -1;
        if (g.undirected.contains({a, b})) return 0;
        return 2;
    };

    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const int p = orientation(predicted, a, b);
            if (p == 2) continue;
            const int t = orientation(truth, a, b);
            if (t == 2) {
                ++m.false_positives;
            } else if (skeleton_only || p == 0 || t == 0 || p == t) {
                ++m.true_positives;
            }
        }
    }

    const int non_edges = n * (n - 1) / 2 - m.true_edges;
    if (m.true_edges > 0)
        m.tpr = static_cast<double>(m.true_positives) / m.true_edges;
    else
        m.tpr = m.predicted_edges == 0 ? 1.0 : 0.0;
    m.fpr = non_edges > 0 ? static_cast<double>(m.false_positives) / non_edges : 0.0;
    return m;
}

/// Skeleton as ordered pairs (a < b).
inline std::set<std::pair<int, int>> skeleton(const Dag& dag) {
    std::set<std::pair<int, int>> s;
    for (auto [from, to] : dag.edges()) s.insert(detail::ordered(from, to));
    return s;
}

inline std::set<std::pair<int, int>> skeleton(const Cpdag& g) {
    std::set<std::pair<int, int>> s(g.undirected.begin(), g.undirected.end());
    for (auto [from, to] : g.directed) s.insert(detail::ordered(from, to));
    return s;
}

}  // namespace abn
