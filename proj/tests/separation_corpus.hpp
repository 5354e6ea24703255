#pragma once

// Random small regression problems spread across the three separation
// classes, plus the exact integer oracle's verdict for each.

#include <cmath>

#include "abn/data.hpp"
#include "oracles.hpp"

namespace test_corpus {

struct SeparationCase {
    abn::Dataset data;
    int node = 0;
    abn::NodeMask parent_mask = 0;
};

/// Up to three predictors, N between 2 and 200 (skewed small), skewed
/// predictor margins and steep coefficients.
inline SeparationCase random_separation_case(abn::Rng& rng) {
    const int p = static_cast<int>(abn::uniform_below(rng, 4));
    const int n = 2 + static_cast<int>(std::exp(abn::uniform(rng, 0.0, std::log(199.0))));
    SeparationCase c{abn::Dataset(p + 1, n), p, abn::low_bits(p)};
    std::vector<double> margin(static_cast<std::size_t>(p)), beta(static_cast<std::size_t>(p) + 1);
    for (auto& m : margin) m = abn::uniform(rng, 0.05, 0.95);
    for (auto& b : beta) b = abn::uniform(rng, -6.0, 6.0);
    for (int i = 0; i < n; ++i) {
        double eta = beta[0];
        for (int k = 0; k < p; ++k) {
            c.data(i, k) = abn::bernoulli(rng, margin[static_cast<std::size_t>(k)]) ? 1 : 0;
            eta += beta[static_cast<std::size_t>(k) + 1] * c.data(i, k);
        }
        c.data(i, p) = abn::bernoulli(rng, abn::expit(eta)) ? 1 : 0;
    }
    return c;
}

inline abn::SeparationStatus oracle_status(const SeparationCase& c) {
    std::vector<std::vector<int>> x;
    std::vector<int> y;
    for (int i = 0; i < c.data.n_obs; ++i) {
        std::vector<int> row;
        for (int k = 0; k < c.data.n_vars; ++k)
            if (c.parent_mask & abn::bit(k)) row.push_back(c.data(i, k));
        x.push_back(row);
        y.push_back(c.data(i, c.node));
    }
    switch (oracle::separation(x, y)) {
        case oracle::Sep::complete: return abn::SeparationStatus::complete;
        case oracle::Sep::quasi: return abn::SeparationStatus::quasi_complete;
        default: return abn::SeparationStatus::none;
    }
}

}  // namespace test_corpus
