#pragma once

// Binary datasets, forward sampling from an additive (logistic) Bayesian
// network, regression designs for one node, and data-separation detection.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "abn/graph.hpp"
#include "abn/logistic.hpp"
#include "abn/lp.hpp"
#include "abn/rng.hpp"

namespace abn {

/// N x n matrix of 0/1 values, row-major.
struct Dataset {
    int n_vars = 0;
    int n_obs = 0;
    std::vector<std::uint8_t> values;

    Dataset() = default;
    Dataset(int vars, int obs)
        : n_vars(vars), n_obs(obs),
          values(static_cast<std::size_t>(vars) * static_cast<std::size_t>(obs), 0) {}

    std::uint8_t operator()(int row, int var) const {
        return values[static_cast<std::size_t>(row) * n_vars + var];
    }
    std::uint8_t& operator()(int row, int var) {
        return values[static_cast<std::size_t>(row) * n_vars + var];
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Logit-scale parameters of a binary additive network: one intercept per
/// node and one coefficient per edge, keyed (parent, child).
struct AbnParams {
    Dag dag;
    std::vector<double> intercept;
    std::map<std::pair<int, int>, double> edge_coef;

    double coef(int parent, int child) const {
        auto it = edge_coef.find({parent, child});
        return it == edge_coef.end() ? 0.0 : it->second;
    }

    /// Every edge of `dag` gets `coef`, every intercept `intercept`.
    static AbnParams uniform(const Dag& dag, double coef, double intercept = 0.0) {
        AbnParams p;
        p.dag = dag;
        p.intercept.assign(static_cast<std::size_t>(dag.n), intercept);
        for (auto e : dag.edges()) p.edge_coef[e] = coef;
        return p;
    }
};

inline void validate(const AbnParams& p) {
    validate(p.dag);
    if (static_cast<int>(p.intercept.size()) != p.dag.n)
        throw std::invalid_argument("intercept count differs from node count");
    for (double v : p.intercept)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite intercept");
    if (p.edge_coef.size() != static_cast<std::size_t>(p.dag.edge_count()))
        throw std::invalid_argument("edge coefficients do not match the graph's edges");
    for (const auto& [edge, value] : p.edge_coef) {
        if (edge.first < 0 || edge.first >= p.dag.n || edge.second < 0 || edge.second >= p.dag.n ||
            !p.dag.has_edge(edge.first, edge.second))
            throw std::invalid_argument("edge coefficient for an edge not in the graph");
        if (!std::isfinite(value)) throw std::invalid_argument("non-finite edge coefficient");
    }
}

/// Ancestral sampling: each row is drawn node by node in topological order.
inline Dataset sample(const AbnParams& params, int n_obs, Rng& rng) {
    validate(params);
    if (n_obs < 1) throw std::invalid_argument("n_obs must be at least 1");
    const int n = params.dag.n;
    const std::vector<int> order = topological_order(params.dag);

    // Dense per-child coefficient lists so the inner loop avoids map lookups.
    std::vector<std::vector<std::pair<int, double>>> terms(static_cast<std::size_t>(n));
    for (const auto& [edge, value] : params.edge_coef)
        terms[edge.second].emplace_back(edge.first, value);

    Dataset data(n, n_obs);
    for (int row = 0; row < n_obs; ++row) {
        for (int j : order) {
            double eta = params.intercept[j];
            for (auto [parent, value] : terms[j]) eta += value * data(row, parent);
            data(row, j) = bernoulli(rng, expit(eta)) ? 1 : 0;
        }
    }
    return data;
}

inline void check_node_and_mask(const Dataset& data, int node, NodeMask parent_mask) {
    if (node < 0 || node >= data.n_vars) throw std::invalid_argument("node index out of range");
    if (parent_mask & ~low_bits(data.n_vars))
        throw std::invalid_argument("parent mask uses bits beyond variable count");
    if (parent_mask & bit(node)) throw std::invalid_argument("node appears in its own parent set");
}

struct DesignRows {
    Eigen::MatrixXd x;  // N x (P+1), first column ones, parents ascending
    Eigen::VectorXd y;
};

inline DesignRows design_rows(const Dataset& data, int node, NodeMask parent_mask) {
    check_node_and_mask(data, node, parent_mask);
    std::vector<int> parents;
    for (int k = 0; k < data.n_vars; ++k)
        if (parent_mask & bit(k)) parents.push_back(k);

    DesignRows d{Eigen::MatrixXd(data.n_obs, static_cast<Eigen::Index>(parents.size()) + 1),
                 Eigen::VectorXd(data.n_obs)};
    for (int i = 0; i < data.n_obs; ++i) {
        d.x(i, 0) = 1.0;
        for (std::size_t c = 0; c < parents.size(); ++c)
            d.x(i, static_cast<Eigen::Index>(c) + 1) = data(i, parents[c]);
        d.y[i] = data(i, node);
    }
    return d;
}

/// The same regression as design_rows() collapsed onto distinct parent
/// configurations, ordered by configuration code (parent with the lowest
/// index is the least significant bit).
inline BinomialDesign binomial_design(const Dataset& data, int node, NodeMask parent_mask) {
    check_node_and_mask(data, node, parent_mask);
    std::vector<int> parents;
    for (int k = 0; k < data.n_vars; ++k)
        if (parent_mask & bit(k)) parents.push_back(k);
    const std::size_t configs = std::size_t{1} << parents.size();
    std::vector<double> trials(configs, 0.0), successes(configs, 0.0);
    for (int i = 0; i < data.n_obs; ++i) {
        std::size_t code = 0;
        for (std::size_t c = 0; c < parents.size(); ++c)
            code |= static_cast<std::size_t>(data(i, parents[c])) << c;
        trials[code] += 1.0;
        successes[code] += data(i, node);
    }
    Eigen::Index used = 0;
    for (double t : trials) used += t > 0 ? 1 : 0;

    const auto p = static_cast<Eigen::Index>(parents.size());
    BinomialDesign d{Eigen::MatrixXd(used, p + 1), Eigen::VectorXd(used), Eigen::VectorXd(used)};
    Eigen::Index r = 0;
    for (std::size_t code = 0; code < configs; ++code) {
        if (trials[code] == 0) continue;
        d.x(r, 0) = 1.0;
        for (Eigen::Index c = 0; c < p; ++c) d.x(r, c + 1) = static_cast<double>((code >> c) & 1U);
        d.trials[r] = trials[code];
        d.successes[r] = successes[code];
        ++r;
    }
    return d;
}

enum class SeparationStatus { none, quasi_complete, complete };

inline std::string_view to_string(SeparationStatus s) {
    switch (s) {
        case SeparationStatus::none: return "none";
        case SeparationStatus::quasi_complete: return "quasi_complete";
        case SeparationStatus::complete: return "complete";
    }
    return "none";
}

inline SeparationStatus separation_from_string(std::string_view s) {
    if (s == "none") return SeparationStatus::none;
    if (s == "quasi_complete") return SeparationStatus::quasi_complete;
    if (s == "complete") return SeparationStatus::complete;
    throw std::invalid_argument("unknown separation status");
}

namespace detail {

// Signed, de-duplicated constraint rows s_i * x_i with s = +1 for a success
// and -1 for a failure. Separation means some beta has all a_i.beta >= 0 with
// at least one strict (quasi) or all strict (complete).
inline std::vector<std::vector<double>> signed_rows(const BinomialDesign& d) {
    std::vector<std::vector<double>> rows;
    auto push_unique = [&rows](std::vector<double> r) {
        for (const auto& existing : rows)
            if (existing == r) return;
        rows.push_back(std::move(r));
    };
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(d.cols()));
        for (Eigen::Index k = 0; k < d.cols(); ++k) r[k] = d.x(i, k);
        if (d.successes[i] > 0) push_unique(r);
        if (d.successes[i] < d.trials[i]) {
            for (double& v : r) v = -v;
            push_unique(r);
        }
    }
    return rows;
}

// beta = u - v with 0 <= u, v <= 1. With `margin`, an extra variable t <= 1 is
// pushed under every a_i.beta and maximized; otherwise sum_i a_i.beta is.
inline double separation_lp(const std::vector<std::vector<double>>& a, int dim, bool margin) {
    lp::Problem p;
    p.vars = 2 * dim + (margin ? 1 : 0);
    p.objective.assign(static_cast<std::size_t>(p.vars), 0.0);
    for (const auto& row : a) {
        std::vector<double> c(static_cast<std::size_t>(p.vars), 0.0);
        for (int k = 0; k < dim; ++k) {
            c[k] = -row[k];
            c[dim + k] = row[k];
            if (!margin) {
                p.objective[k] += row[k];
                p.objective[dim + k] -= row[k];
            }
        }
        if (margin) c[2 * dim] = 1.0;
        p.add_row(std::move(c), 0.0);
    }
    for (int k = 0; k < p.vars; ++k) {
        std::vector<double> c(static_cast<std::size_t>(p.vars), 0.0);
        c[k] = 1.0;
        p.add_row(std::move(c), 1.0);
    }
    if (margin) p.objective[2 * dim] = 1.0;
    return lp::maximize(p).value;
}

}  // namespace detail

/// Classifies separation of a binomial regression by two small LPs: the
/// maximal common margin of a box-bounded functional (complete separation iff
/// positive) and the maximal total slack of a weakly separating functional
/// (some separation iff positive).
inline SeparationStatus detect_separation(const BinomialDesign& d) {
    if (d.observations() == 0) return SeparationStatus::none;
    const double ones = d.successes.sum();
    if (ones == 0 || ones == d.observations()) return SeparationStatus::complete;

    constexpr double tol = 1e-7;
    const auto rows = detail::signed_rows(d);
    const int dim = static_cast<int>(d.cols());
    if (detail::separation_lp(rows, dim, true) > tol) return SeparationStatus::complete;
    if (detail::separation_lp(rows, dim, false) > tol) return SeparationStatus::quasi_complete;
    return SeparationStatus::none;
}

inline SeparationStatus detect_separation(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    return detect_separation(bernoulli_design(x, y));
}

inline SeparationStatus detect_separation(const Dataset& data, int node, NodeMask parent_mask) {
    return detect_separation(binomial_design(data, node, parent_mask));
}

/// Fast screen: separation is suspected when the unpenalized Newton iterates
/// exceed `norm_limit` in Euclidean norm within `max_iter` steps. Cannot tell
/// complete from quasi-complete separation.
inline bool suspect_separation(const BinomialDesign& d, double norm_limit = 10.0, int max_iter = 25) {
    const MleResult r = logistic_mle(d, max_iter);
    return !r.coef.allFinite() || r.coef.norm() > norm_limit;
}

}  // namespace abn
