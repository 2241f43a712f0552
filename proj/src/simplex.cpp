#include <algorithm>
#include <cmath>
#include <limits>

#include "switchnet/propfair.hpp"

namespace switchnet::detail {

ConvexWeights convex_weights(const std::vector<std::vector<double>>& points,
                             const std::vector<double>& target) {
    const std::size_t n = target.size();
    const std::size_t k = points.size();
    const std::size_t m = n + 1;
    const std::size_t cols = k + m;  // structural then artificial
    constexpr double eps = 1e-12;

    // Dense tableau: m constraint rows plus the phase-one cost row.
    std::vector<std::vector<double>> t(m + 1, std::vector<double>(cols + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) t[i][c] = points[c][i];
        t[i][cols] = std::max(target[i], 0.0);
    }
    for (std::size_t c = 0; c < k; ++c) t[n][c] = 1.0;
    t[n][cols] = 1.0;
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        t[i][k + i] = 1.0;
        basis[i] = k + i;
    }
    // Reduced costs of min sum(artificials): -column sums over constraint rows.
    for (std::size_t c = 0; c <= cols; ++c) {
        if (c >= k && c < cols) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += t[i][c];
        t[m][c] = -s;
    }

    const std::size_t max_pivots = 50 * (cols + m);
    for (std::size_t iter = 0; iter < max_pivots; ++iter) {
        // Bland: lowest-index column with negative reduced cost.
        std::size_t enter = cols;
        for (std::size_t c = 0; c < cols; ++c) {
            if (t[m][c] < -1e-11) {
                enter = c;
                break;
            }
        }
        if (enter == cols) break;
        std::size_t leave = m;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            if (t[i][enter] > eps) {
                const double ratio = t[i][cols] / t[i][enter];
                if (ratio < best - 1e-15 ||
                    (std::abs(ratio - best) <= 1e-15 && leave < m && basis[i] < basis[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave == m) break;  // unbounded direction cannot occur in phase one
        const double pv = t[leave][enter];
        for (auto& v : t[leave]) v /= pv;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const double f = t[i][enter];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c <= cols; ++c) t[i][c] -= f * t[leave][c];
        }
        basis[leave] = enter;
    }

    ConvexWeights out;
    out.lambda.assign(k, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double v = std::max(t[i][cols], 0.0);
        if (basis[i] < k) {
            out.lambda[basis[i]] = v;
        } else {
            out.infeasibility += v;
        }
    }
    // The target was clamped at zero; include that shift in the residual.
    for (double x : target) out.infeasibility += std::max(-x, 0.0);
    return out;
}

}  // namespace switchnet::detail
