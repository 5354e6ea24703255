#pragma once

// Bayesian logistic node fits and node scores.
//
// A node's posterior mode is found by IRLS on the data augmented with one
// pseudo-observation per coefficient (value = prior mean, weight = 1 / working
// prior variance). Gaussian priors have a fixed working variance. A Student-t
// prior is treated as a scale mixture of normals: before every IRLS step an
// E-step resets the coefficient's working variance to
//     (df * scale^2 + (beta - mean)^2) / (df + 1),
// whose fixed point is the exact t posterior mode. The node score is the
// Laplace approximation of the log marginal likelihood at that mode.

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "abn/data.hpp"
#include "abn/graph.hpp"
#include "abn/logistic.hpp"

namespace abn {

// ---------------------------------------------------------------------------
// Priors

/// Prior on a single regression coefficient.
struct CoefficientPrior {
    enum class Family { normal, student_t };
    Family family = Family::normal;
    double mean = 0.0;
    double variance = 1.0;  // normal only
    double scale = 1.0;     // student_t only
    double df = 1.0;        // student_t only

    static CoefficientPrior normal(double mean, double variance) {
        return {Family::normal, mean, variance, 1.0, 1.0};
    }
    static CoefficientPrior student_t(double mean, double scale, double df) {
        return {Family::student_t, mean, 1.0, scale, df};
    }

    double log_density(double beta) const {
        const double r = beta - mean;
        if (family == Family::normal)
            return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * r * r / variance;
        return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
               0.5 * std::log(df * std::numbers::pi * scale * scale) -
               0.5 * (df + 1.0) * std::log1p(r * r / (df * scale * scale));
    }

    /// Second derivative of -log density.
    double curvature(double beta) const {
        if (family == Family::normal) return 1.0 / variance;
        const double r = beta - mean;
        const double a = df * scale * scale;
        return (df + 1.0) * (a - r * r) / ((a + r * r) * (a + r * r));
    }

    /// Variance of the Gaussian pseudo-observation used in the next IRLS step.
    double working_variance(double beta) const {
        if (family == Family::normal) return variance;
        const double r = beta - mean;
        return (df * scale * scale + r * r) / (df + 1.0);
    }
};

inline void validate(const CoefficientPrior& p) {
    if (!std::isfinite(p.mean)) throw std::invalid_argument("prior mean must be finite");
    if (p.family == CoefficientPrior::Family::normal) {
        if (!(p.variance > 0) || !std::isfinite(p.variance))
            throw std::invalid_argument("prior variance must be positive");
    } else {
        if (!(p.scale > 0) || !std::isfinite(p.scale))
            throw std::invalid_argument("prior scale must be positive");
        if (!(p.df >= 1)) throw std::invalid_argument("prior degrees of freedom must be >= 1");
    }
}

/// Zero-mean Gaussian with a large variance on every coefficient.
struct WeakGaussian {
    double variance = 1000.0;
};

/// Zero-centred Student-t; slopes and intercept have separate scales.
struct StudentT {
    double df = 1.0;
    double scale = 2.5;
    double intercept_scale = 10.0;
};

/// Gaussian centred on the true coefficients. The means are resolved from
/// the generating parameters; coefficients of absent edges get mean 0.
struct StrongGaussian {
    double variance = 0.1;
};

using Prior = std::variant<WeakGaussian, StudentT, StrongGaussian>;

inline std::string_view prior_name(const Prior& p) {
    switch (p.index()) {
        case 0: return "WI";
        case 1: return "ST";
        default: return "SI";
    }
}

inline void validate(const Prior& prior) {
    if (const auto* wi = std::get_if<WeakGaussian>(&prior)) {
        validate(CoefficientPrior::normal(0.0, wi->variance));
    } else if (const auto* st = std::get_if<StudentT>(&prior)) {
        validate(CoefficientPrior::student_t(0.0, st->scale, st->df));
        validate(CoefficientPrior::student_t(0.0, st->intercept_scale, st->df));
    } else {
        validate(CoefficientPrior::normal(0.0, std::get<StrongGaussian>(prior).variance));
    }
}

/// Per-coefficient priors for node `node` regressed on `parent_mask`, in
/// design-column order (intercept, then parents ascending). `truth` is
/// required for StrongGaussian and ignored otherwise.
inline std::vector<CoefficientPrior> coefficient_priors(const Prior& prior, int node,
                                                        NodeMask parent_mask,
                                                        const AbnParams* truth = nullptr) {
    std::vector<int> parents;
    for (int k = 0; k < kMaxNodes; ++k)
        if (parent_mask & bit(k)) parents.push_back(k);

    std::vector<CoefficientPrior> out;
    out.reserve(parents.size() + 1);
    if (const auto* wi = std::get_if<WeakGaussian>(&prior)) {
        out.assign(parents.size() + 1, CoefficientPrior::normal(0.0, wi->variance));
    } else if (const auto* st = std::get_if<StudentT>(&prior)) {
        out.push_back(CoefficientPrior::student_t(0.0, st->intercept_scale, st->df));
        for (std::size_t i = 0; i < parents.size(); ++i)
            out.push_back(CoefficientPrior::student_t(0.0, st->scale, st->df));
    } else {
        if (truth == nullptr)
            throw std::invalid_argument("the SI prior needs the true network parameters");
        const double v = std::get<StrongGaussian>(prior).variance;
        out.push_back(CoefficientPrior::normal(truth->intercept.at(node), v));
        for (int k : parents) out.push_back(CoefficientPrior::normal(truth->coef(k, node), v));
    }
    return out;
}

/// Prior for a bare design whose first column is the intercept.
inline std::vector<CoefficientPrior> coefficient_priors(const Prior& prior, Eigen::Index columns) {
    if (std::holds_alternative<StrongGaussian>(prior))
        throw std::invalid_argument("the SI prior needs explicit coefficient means");
    if (columns < 1) throw std::invalid_argument("design needs an intercept column");
    return coefficient_priors(prior, 0, low_bits(static_cast<int>(columns) - 1) << 1);
}

// ---------------------------------------------------------------------------
// Node fit

enum class FitStatus { ok, not_converged, singular_system, hessian_not_positive_definite };

inline std::string_view to_string(FitStatus s) {
    switch (s) {
        case FitStatus::ok: return "ok";
        case FitStatus::not_converged: return "not_converged";
        case FitStatus::singular_system: return "singular_system";
        case FitStatus::hessian_not_positive_definite: return "hessian_not_positive_definite";
    }
    return "ok";
}

struct FitOptions {
    double tolerance = 1e-8;  // sup-norm of the IRLS step
    int max_iterations = 200;
    bool classify_separation = true;
};

struct NodeFit {
    Eigen::VectorXd coef;
    Eigen::MatrixXd neg_hessian;
    double log_marginal = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int iterations = 0;
    SeparationStatus separation = SeparationStatus::none;
    FitStatus status = FitStatus::not_converged;
};

inline double log_prior(std::span<const CoefficientPrior> priors, const Eigen::VectorXd& beta) {
    double lp = 0.0;
    for (Eigen::Index k = 0; k < beta.size(); ++k) lp += priors[k].log_density(beta[k]);
    return lp;
}

inline double log_posterior(const BinomialDesign& d, std::span<const CoefficientPrior> priors,
                            const Eigen::VectorXd& beta) {
    return log_likelihood(d, beta) + log_prior(priors, beta);
}

/// Negative Hessian of the exact log posterior.
inline Eigen::MatrixXd negative_hessian(const BinomialDesign& d,
                                        std::span<const CoefficientPrior> priors,
                                        const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = d.x * beta;
    Eigen::VectorXd w(d.rows());
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const double mu = expit(eta[i]);
        w[i] = d.trials[i] * mu * (1.0 - mu);
    }
    Eigen::MatrixXd h = d.x.transpose() * w.asDiagonal() * d.x;
    for (Eigen::Index k = 0; k < beta.size(); ++k) h(k, k) += priors[k].curvature(beta[k]);
    return h;
}

/// Laplace approximation of log p(y) around the posterior mode of `fit`.
/// With no observations the marginal likelihood is exactly 1 and 0 is returned.
inline double log_marginal_likelihood(const NodeFit& fit, const BinomialDesign& d,
                                      std::span<const CoefficientPrior> priors) {
    if (!fit.converged) throw std::domain_error("node fit did not converge");
    if (d.observations() == 0) return 0.0;
    const Eigen::LLT<Eigen::MatrixXd> llt(fit.neg_hessian);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("negative Hessian is not positive definite");
    double log_det = 0.0;
    for (Eigen::Index k = 0; k < fit.neg_hessian.rows(); ++k)
        log_det += 2.0 * std::log(llt.matrixL()(k, k));
    if (!std::isfinite(log_det)) throw std::domain_error("negative Hessian is not positive definite");
    const auto dim = static_cast<double>(fit.coef.size());
    return log_posterior(d, priors, fit.coef) + 0.5 * dim * std::log(2.0 * std::numbers::pi) -
           0.5 * log_det;
}

inline double log_marginal_likelihood(const NodeFit& fit, const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& y,
                                      std::span<const CoefficientPrior> priors) {
    return log_marginal_likelihood(fit, bernoulli_design(x, y), priors);
}

/// Posterior mode by EM-within-IRLS; also fills the exact negative Hessian,
/// the Laplace log marginal likelihood and the separation class of the data.
inline NodeFit fit_node(const BinomialDesign& d, std::span<const CoefficientPrior> priors,
                        const FitOptions& opt = {}) {
    const Eigen::Index p = d.cols();
    if (static_cast<Eigen::Index>(priors.size()) != p)
        throw std::invalid_argument("one coefficient prior per design column is required");
    for (const auto& cp : priors) validate(cp);

    NodeFit fit;
    fit.coef.resize(p);
    for (Eigen::Index k = 0; k < p; ++k) fit.coef[k] = priors[k].mean;
    if (opt.classify_separation) fit.separation = detect_separation(d);

    double current = log_posterior(d, priors, fit.coef);
    Eigen::VectorXd precision(p), eta, resid(d.rows()), w(d.rows());
    for (int it = 1; it <= opt.max_iterations; ++it) {
        fit.iterations = it;
        for (Eigen::Index k = 0; k < p; ++k)
            precision[k] = 1.0 / priors[k].working_variance(fit.coef[k]);

        eta = d.x * fit.coef;
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            const double mu = expit(eta[i]);
            w[i] = d.trials[i] * mu * (1.0 - mu);
            resid[i] = d.successes[i] - d.trials[i] * mu;
        }
        Eigen::MatrixXd lhs = d.x.transpose() * w.asDiagonal() * d.x;
        lhs.diagonal() += precision;
        Eigen::VectorXd rhs = d.x.transpose() * resid;
        for (Eigen::Index k = 0; k < p; ++k)
            rhs[k] -= precision[k] * (fit.coef[k] - priors[k].mean);

        const Eigen::LLT<Eigen::MatrixXd> llt(lhs);
        if (llt.info() != Eigen::Success) {
            fit.status = FitStatus::singular_system;
            return fit;
        }
        const Eigen::VectorXd full_step = llt.solve(rhs);
        if (!full_step.allFinite()) {
            fit.status = FitStatus::singular_system;
            return fit;
        }

        // Step-halving guards against a drop of the exact log posterior;
        // differences at rounding level are not treated as a drop.
        const double slack = 1e-12 * (1.0 + std::abs(current));
        Eigen::VectorXd step = full_step;
        Eigen::VectorXd next = fit.coef + step;
        double candidate = log_posterior(d, priors, next);
        for (int halving = 0; halving < 30 && !(candidate >= current - slack); ++halving) {
            step *= 0.5;
            next = fit.coef + step;
            candidate = log_posterior(d, priors, next);
        }
        if (candidate >= current - slack) {
            fit.coef = next;
            current = candidate;
        }
        if (full_step.cwiseAbs().maxCoeff() < opt.tolerance) {
            fit.converged = true;
            break;
        }
    }

    fit.neg_hessian = negative_hessian(d, priors, fit.coef);
    if (!fit.converged) {
        fit.status = FitStatus::not_converged;
        return fit;
    }
    try {
        fit.log_marginal = log_marginal_likelihood(fit, d, priors);
        fit.status = FitStatus::ok;
    } catch (const std::domain_error&) {
        fit.status = FitStatus::hessian_not_positive_definite;
    }
    return fit;
}

inline NodeFit fit_node(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        std::span<const CoefficientPrior> priors, const FitOptions& opt = {}) {
    return fit_node(bernoulli_design(x, y), priors, opt);
}

inline NodeFit fit_node(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Prior& prior,
                        const FitOptions& opt = {}) {
    const auto priors = coefficient_priors(prior, x.cols());
    return fit_node(bernoulli_design(x, y), priors, opt);
}

// ---------------------------------------------------------------------------
// Score cache

/// Index of `mask` among the subsets of the other n-1 nodes (bit `node` removed).
inline std::uint32_t compress_mask(NodeMask mask, int node) {
    const NodeMask below = mask & (bit(node) - 1);
    return below | ((mask >> (node + 1)) << node);
}

inline NodeMask expand_mask(std::uint32_t index, int node) {
    const NodeMask below = index & (bit(node) - 1);
    return below | ((index >> node) << (node + 1));
}

struct CacheEntry {
    double log_score = -std::numeric_limits<double>::infinity();
    bool converged = false;
    SeparationStatus separation = SeparationStatus::none;
};

/// Log scores for every (node, parent set) with at most `max_parents`
/// parents. Storage is dense over the 2^(n-1) candidate sets of each node.
class ScoreCache {
public:
    ScoreCache() = default;
    ScoreCache(int n_vars, int max_parents) : n_(n_vars), max_parents_(max_parents) {
        if (n_vars < 1 || n_vars > kMaxNodes)
            throw std::invalid_argument("variable count must be in [1, 24]");
        if (max_parents < 0) throw std::invalid_argument("max_parents must be non-negative");
        if (max_parents_ > n_ - 1) max_parents_ = n_ - 1;
        entries_.assign(static_cast<std::size_t>(n_),
                        std::vector<CacheEntry>(std::size_t{1} << (n_ - 1)));
    }

    int n_vars() const { return n_; }
    int max_parents() const { return max_parents_; }

    bool contains(int node, NodeMask mask) const {
        return node >= 0 && node < n_ && (mask & bit(node)) == 0 &&
               (mask & ~low_bits(n_)) == 0 && popcount(mask) <= max_parents_;
    }

    const CacheEntry& entry(int node, NodeMask mask) const {
        if (!contains(node, mask)) throw std::out_of_range("no cache entry for this parent set");
        return entries_[node][compress_mask(mask, node)];
    }
    double score(int node, NodeMask mask) const { return entry(node, mask).log_score; }

    void set(int node, NodeMask mask, CacheEntry e) {
        if (!contains(node, mask)) throw std::out_of_range("no cache entry for this parent set");
        entries_[node][compress_mask(mask, node)] = e;
    }
    void set(int node, NodeMask mask, double log_score) { set(node, mask, CacheEntry{log_score, true}); }

    /// Number of (node, mask) pairs the cache covers.
    std::size_t size() const {
        std::size_t count = 0;
        for (int j = 0; j < n_; ++j)
            for (std::uint32_t c = 0; c < entries_[j].size(); ++c)
                if (popcount(expand_mask(c, j)) <= max_parents_) ++count;
        return count;
    }

    /// Calls f(node, mask, entry) in (node, compressed mask) order.
    template <class F>
    void for_each(F&& f) const {
        for (int j = 0; j < n_; ++j)
            for (std::uint32_t c = 0; c < entries_[j].size(); ++c) {
                const NodeMask m = expand_mask(c, j);
                if (popcount(m) <= max_parents_) f(j, m, entries_[j][c]);
            }
    }

    std::vector<std::string> diagnostics;

    friend bool operator==(const ScoreCache& a, const ScoreCache& b) {
        if (a.n_ != b.n_ || a.max_parents_ != b.max_parents_) return false;
        for (int j = 0; j < a.n_; ++j)
            for (std::size_t c = 0; c < a.entries_[j].size(); ++c) {
                const auto& x = a.entries_[j][c];
                const auto& y = b.entries_[j][c];
                if (std::bit_cast<std::uint64_t>(x.log_score) !=
                        std::bit_cast<std::uint64_t>(y.log_score) ||
                    x.converged != y.converged || x.separation != y.separation)
                    return false;
            }
        return true;
    }

private:
    int n_ = 0;
    int max_parents_ = 0;
    std::vector<std::vector<CacheEntry>> entries_;
};

/// Fit and Laplace score of one (node, parent set).
inline NodeFit score_parent_set(const Dataset& data, int node, NodeMask parent_mask,
                                const Prior& prior, const AbnParams* truth = nullptr,
                                const FitOptions& opt = {}) {
    const auto priors = coefficient_priors(prior, node, parent_mask, truth);
    return fit_node(binomial_design(data, node, parent_mask), priors, opt);
}

/// Scores every (node, parent set) with at most `max_parents` parents. Failed
/// fits get score -inf and a line in `diagnostics`. Entries are independent,
/// so `threads > 1` splits them across workers without changing the result.
inline ScoreCache build_score_cache(const Dataset& data, const Prior& prior, int max_parents,
                                    const AbnParams* truth = nullptr, unsigned threads = 1,
                                    const FitOptions& opt = {}) {
    validate(prior);
    if (std::holds_alternative<StrongGaussian>(prior)) {
        if (truth == nullptr)
            throw std::invalid_argument("the SI prior needs the true network parameters");
        if (truth->dag.n != data.n_vars)
            throw std::invalid_argument("true parameters and data disagree on variable count");
    }
    ScoreCache cache(data.n_vars, max_parents);

    std::vector<std::pair<int, NodeMask>> work;
    cache.for_each([&](int j, NodeMask m, const CacheEntry&) { work.emplace_back(j, m); });
    std::vector<CacheEntry> results(work.size());
    std::vector<std::string> errors(work.size());

    auto run = [&](std::size_t i) {
        const auto [j, m] = work[i];
        const NodeFit fit = score_parent_set(data, j, m, prior, truth, opt);
        CacheEntry e;
        e.converged = fit.converged;
        e.separation = fit.separation;
        if (fit.status == FitStatus::ok && std::isfinite(fit.log_marginal)) {
            e.log_score = fit.log_marginal;
        } else {
            errors[i] = "node " + std::to_string(j) + " parents " + std::to_string(m) + ": " +
                        std::string(to_string(fit.status));
        }
        results[i] = e;
    };

    if (threads <= 1) {
        for (std::size_t i = 0; i < work.size(); ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < work.size(); i = next++) run(i);
            });
    }

    for (std::size_t i = 0; i < work.size(); ++i) {
        cache.set(work[i].first, work[i].second, results[i]);
        if (!errors[i].empty()) cache.diagnostics.push_back(errors[i]);
    }
    return cache;
}

}  // namespace abn
