#pragma once

// Numerically careful logistic-link helpers shared by sampling, fitting and
// the separation screen.

#include <cmath>

#include <Eigen/Dense>

namespace abn {

inline double expit(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

/// log(1 + exp(eta)) without overflow.
inline double log1pexp(double eta) {
    if (eta > 35) return eta;
    if (eta < -35) return std::exp(eta);
    return std::log1p(std::exp(eta));
}

/// Rows of a binomial regression: pattern `x.row(i)` observed `trials[i]`
/// times with `successes[i]` ones. Bernoulli data is the case trials == 1.
struct BinomialDesign {
    Eigen::MatrixXd x;
    Eigen::VectorXd trials;
    Eigen::VectorXd successes;

    Eigen::Index rows() const { return x.rows(); }
    Eigen::Index cols() const { return x.cols(); }
    double observations() const { return trials.sum(); }
};

inline BinomialDesign bernoulli_design(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    return BinomialDesign{x, Eigen::VectorXd::Ones(x.rows()), y};
}

/// Binomial log-likelihood (without the constant binomial coefficients, which
/// vanish for Bernoulli rows and cancel in any comparison over the same data).
inline double log_likelihood(const BinomialDesign& d, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = d.x * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        ll += d.successes[i] * eta[i] - d.trials[i] * log1pexp(eta[i]);
    return ll;
}

struct MleResult {
    Eigen::VectorXd coef;
    int iterations = 0;
    bool converged = false;
};

/// Plain Newton-Raphson for the unpenalized logistic MLE, capped at
/// `max_iter` steps. On separated data the iterates run off to infinity.
inline MleResult logistic_mle(const BinomialDesign& d, int max_iter = 25, double tol = 1e-10) {
    const Eigen::Index p = d.cols();
    MleResult r;
    r.coef = Eigen::VectorXd::Zero(p);
    for (int it = 1; it <= max_iter; ++it) {
        const Eigen::VectorXd eta = d.x * r.coef;
        Eigen::VectorXd w(d.rows()), resid(d.rows());
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            const double mu = expit(eta[i]);
            w[i] = d.trials[i] * mu * (1.0 - mu);
            resid[i] = d.successes[i] - d.trials[i] * mu;
        }
        const Eigen::MatrixXd info = d.x.transpose() * w.asDiagonal() * d.x;
        const Eigen::VectorXd grad = d.x.transpose() * resid;
        const Eigen::VectorXd step = info.ldlt().solve(grad);
        r.iterations = it;
        if (!step.allFinite()) break;
        r.coef += step;
        if (step.cwiseAbs().maxCoeff() < tol) {
            r.converged = true;
            break;
        }
    }
    return r;
}

}  // namespace abn
