#pragma once

// Brute-force reference computations used only by tests. Each works from
// first principles and shares no code path with the library routine it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// gap[p][i] = max_j mu[p][j] - mu[p][i], by explicit double loop.
inline Matrix gaps(const Matrix& mu) {
    Matrix g(mu.size(), std::vector<double>(mu.front().size()));
    for (std::size_t p = 0; p < mu.size(); ++p) {
        double best = -1.0;
        for (double m : mu[p])
            if (m > best) best = m;
        for (std::size_t i = 0; i < mu[p].size(); ++i) g[p][i] = best - mu[p][i];
    }
    return g;
}

/// {i : exists p with gap[p][i] > alpha}.
inline std::set<int> subpar(const Matrix& g, double alpha) {
    std::set<int> out;
    for (std::size_t p = 0; p < g.size(); ++p)
        for (std::size_t i = 0; i < g[p].size(); ++i)
            if (g[p][i] > alpha) out.insert(static_cast<int>(i));
    return out;
}

inline double robust_agg_F(double n, double m, double lambda, double eps, double T, double width) {
    return width * std::sqrt(std::log(T) * (lambda * lambda / n + (1 - lambda) * (1 - lambda) / m)) +
           (1 - lambda) * eps;
}

struct Minimum {
    double lambda;
    double value;
};

/// Scan lambda = 0, step, 2*step, ..., 1 and keep the smallest F.
inline Minimum grid_scan_F(double n, double m, double eps, double T, double width, double step = 1e-6) {
    const double scale = width * std::sqrt(std::log(T));
    const auto F = [&](double lambda) {
        return scale * std::sqrt(lambda * lambda / n + (1 - lambda) * (1 - lambda) / m) + (1 - lambda) * eps;
    };
    Minimum best{0.0, F(0.0)};
    const auto steps = static_cast<std::int64_t>(std::llround(1.0 / step));
    for (std::int64_t k = 1; k <= steps; ++k) {
        const double lambda = static_cast<double>(k) / static_cast<double>(steps);
        const double v = F(lambda);
        if (v < best.value) best = {lambda, v};
    }
    return best;
}

/// Golden-section search on [0,1] down to bracket width `tol`.
inline Minimum golden_section_F(double n, double m, double eps, double T, double width, double tol = 1e-9) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = 1.0;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = robust_agg_F(n, m, x1, eps, T, width), f2 = robust_agg_F(n, m, x2, eps, T, width);
    while (hi - lo > tol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = robust_agg_F(n, m, x1, eps, T, width);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = robust_agg_F(n, m, x2, eps, T, width);
        }
    }
    Minimum best{(lo + hi) / 2.0, robust_agg_F(n, m, (lo + hi) / 2.0, eps, T, width)};
    for (double edge : {0.0, 1.0}) {
        const double v = robust_agg_F(n, m, edge, eps, T, width);
        if (v < best.value) best = {edge, v};
    }
    return best;
}

}  // namespace oracle
