#pragma once

// Dense tableau simplex for tiny LPs of the form
//   maximize c'x  subject to  A x <= b,  x >= 0,  with b >= 0,
// so the slack basis is feasible from the start and no phase one is needed.
// Bland's rule keeps degenerate pivots (common here: most rows have b = 0)
// from cycling.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace abn::lp {

struct Problem {
    int vars = 0;
    std::vector<double> objective;          // size vars
    std::vector<std::vector<double>> rows;  // each of size vars
    std::vector<double> rhs;                // non-negative

    void add_row(std::vector<double> coef, double bound) {
        rows.push_back(std::move(coef));
        rhs.push_back(bound);
    }
};

struct Solution {
    double value = 0.0;
    bool unbounded = false;
    std::vector<double> x;
};

inline Solution maximize(const Problem& p, double eps = 1e-12) {
    const int m = static_cast<int>(p.rows.size());
    const int n = p.vars;
    const int cols = n + m + 1;  // decision, slack, rhs
    std::vector<std::vector<double>> t(static_cast<std::size_t>(m) + 1,
                                       std::vector<double>(static_cast<std::size_t>(cols), 0.0));
    std::vector<int> basis(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        if (p.rhs[i] < 0) throw std::invalid_argument("lp: negative right-hand side");
        for (int j = 0; j < n; ++j) t[i][j] = p.rows[i][j];
        t[i][n + i] = 1.0;
        t[i][cols - 1] = p.rhs[i];
        basis[i] = n + i;
    }
    // Objective row holds reduced costs -c.
    for (int j = 0; j < n; ++j) t[m][j] = -p.objective[j];

    for (int iter = 0; iter < 10000; ++iter) {
        int enter = -1;
        for (int j = 0; j < n + m; ++j) {
            if (t[m][j] < -eps) {
                enter = j;
                break;
            }
        }
        if (enter < 0) break;

        int leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            if (t[i][enter] > eps) {
                const double ratio = t[i][cols - 1] / t[i][enter];
                if (ratio < best_ratio - eps ||
                    (std::abs(ratio - best_ratio) <= eps && basis[i] < basis[leave])) {
                    best_ratio = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) return Solution{std::numeric_limits<double>::infinity(), true, {}};

        const double pivot = t[leave][enter];
        for (double& v : t[leave]) v /= pivot;
        for (int i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const double f = t[i][enter];
            if (f == 0.0) continue;
            for (int j = 0; j < cols; ++j) t[i][j] -= f * t[leave][j];
        }
        basis[leave] = enter;
    }

    Solution s;
    s.value = t[m][cols - 1];
    s.x.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) s.x[basis[i]] = t[i][cols - 1];
    return s;
}

}  // namespace abn::lp
