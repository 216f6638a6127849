// SPDX-License-Identifier: MIT
// Brute-force references written without the library's operators. They walk
// the non-recombining trinomial tree, so they are exponential in the number
// of steps and only meant for small lattices away from the space boundary.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

struct Band {
    double var_lo;
    double var_hi;
    double sigma_hi;
};

// up/down weight of an h = sigma_hi sqrt(dt) step at variance v
inline double side_weight(double v, const Band& b) { return v / (2.0 * b.sigma_hi * b.sigma_hi); }

/// Linear expectation of phi(B_T) under constant variance v, summed over all 3^N paths.
inline double linear_paths(const std::function<double(double)>& phi, double v, const Band& b, double h, int N) {
    const double s = side_weight(v, b);
    const double w[3] = {s, 1.0 - 2.0 * s, s};
    double total = 0.0;
    std::vector<int> moves(static_cast<std::size_t>(N), 0);
    long long count = 1;
    for (int i = 0; i < N; ++i) count *= 3;
    for (long long c = 0; c < count; ++c) {
        long long r = c;
        double prob = 1.0;
        int j = 0;
        for (int i = 0; i < N; ++i) {
            const int m = static_cast<int>(r % 3);
            r /= 3;
            prob *= w[m];
            j += m - 1;
        }
        total += prob * phi(j * h);
    }
    return total;
}

/// Max over both endpoints at every history node of the tree: the sublinear expectation.
inline double tree_max(const std::function<double(double)>& phi, const Band& b, double h, int k, int N, int j) {
    if (k == N) return phi(j * h);
    const double up = tree_max(phi, b, h, k + 1, N, j + 1);
    const double mid = tree_max(phi, b, h, k + 1, N, j);
    const double dn = tree_max(phi, b, h, k + 1, N, j - 1);
    double best = -1e300;
    for (double v : {b.var_lo, b.var_hi}) {
        const double s = side_weight(v, b);
        best = std::max(best, s * up + (1.0 - 2.0 * s) * mid + s * dn);
    }
    return best;
}

/**
 * log E[exp(coef * max_k S(k, j_k))] over the tree with the exact running max.
 * S is given as a callback on (level, signed index).
 */
inline double tree_running_max_log(const std::function<double(int, int)>& S, double coef, const Band& b, int k,
                                   int N, int j, double M) {
    M = std::max(M, S(k, j));
    if (k == N) return coef * M;
    const double a = tree_running_max_log(S, coef, b, k + 1, N, j + 1, M);
    const double c = tree_running_max_log(S, coef, b, k + 1, N, j, M);
    const double d = tree_running_max_log(S, coef, b, k + 1, N, j - 1, M);
    const double top = std::max({a, c, d});
    double best = -1e300;
    for (double v : {b.var_lo, b.var_hi}) {
        const double s = side_weight(v, b);
        const double val = top + std::log(s * std::exp(a - top) + (1.0 - 2.0 * s) * std::exp(c - top) +
                                          s * std::exp(d - top));
        best = std::max(best, val);
    }
    return best;
}

}  // namespace oracle
