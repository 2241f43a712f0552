#include "switchnet/propfair.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "switchnet/errors.hpp"
#include "switchnet/store_forward.hpp"

namespace switchnet {

namespace {

// Dual of max sum w_j log s_j s.t. A s <= 1 restricted to the pools that touch
// a positive-weight queue:  D(p) = sum_j w_j log(w_j / u_j) - W + sum_l p_l,
// u = A^T p. Minimized over p >= 0; s_j = w_j / u_j.
struct Dual {
    const CapacityPolytope& a;
    const std::vector<double>& w;
    std::vector<int> active_queues;
    std::vector<int> pools;

    bool usage(const Eigen::VectorXd& p, std::vector<double>& u) const {
        u.assign(a.num_queues(), 0.0);
        for (std::size_t k = 0; k < pools.size(); ++k) {
            for (int j : a.support(pools[k])) u[j] += p[k] * a.at(pools[k], j);
        }
        for (int j : active_queues) {
            if (!(u[j] > 0.0)) return false;
        }
        return true;
    }

    double value(const Eigen::VectorXd& p) const {
        std::vector<double> u;
        if (!usage(p, u)) return std::numeric_limits<double>::infinity();
        double d = p.sum();
        for (int j : active_queues) d += w[j] * (std::log(w[j] / u[j]) - 1.0);
        return d;
    }
};

}  // namespace

PfSolution pf_solve(const std::vector<double>& weights, const CapacityPolytope& polytope,
                    const PfOptions& options) {
    const std::size_t nq = polytope.num_queues();
    if (weights.size() != nq) {
        throw ValidationError("pf_solve: weight vector length does not match the polytope");
    }
    Dual dual{polytope, weights, {}, {}};
    double total = 0.0;
    for (std::size_t j = 0; j < nq; ++j) {
        if (weights[j] < 0.0 || !std::isfinite(weights[j])) {
            throw ValidationError("pf_solve: weights must be finite and nonnegative");
        }
        if (weights[j] > 0.0) {
            dual.active_queues.push_back(static_cast<int>(j));
            total += weights[j];
        }
    }
    if (dual.active_queues.empty()) {
        throw ValidationError("pf_solve: queue vector is zero");
    }
    for (std::size_t l = 0; l < polytope.num_pools(); ++l) {
        for (int j : polytope.support(l)) {
            if (weights[j] > 0.0) {
                dual.pools.push_back(static_cast<int>(l));
                break;
            }
        }
    }
    const std::size_t np = dual.pools.size();

    Eigen::VectorXd p = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(np), total / np);
    std::vector<double> u;
    Eigen::VectorXd g(np);
    Eigen::MatrixXd h(np, np);

    auto gradient = [&](const Eigen::VectorXd& price) {
        dual.usage(price, u);
        for (std::size_t k = 0; k < np; ++k) {
            double use = 0.0;
            for (int j : polytope.support(dual.pools[k])) {
                if (weights[j] > 0.0) use += polytope.at(dual.pools[k], j) * weights[j] / u[j];
            }
            g[k] = 1.0 - use;
        }
    };
    auto projected_residual = [&]() {
        double r = 0.0;
        for (std::size_t k = 0; k < np; ++k) {
            const double pg = p[k] > 0.0 ? g[k] : std::min(g[k], 0.0);
            r = std::max(r, std::abs(pg));
            r = std::max(r, p[k] * std::abs(g[k]) / total);
        }
        return r;
    };

    PfSolution sol;
    double fval = dual.value(p);
    gradient(p);
    std::size_t iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        if (projected_residual() <= options.tolerance) break;

        // Two-metric projection: prices pinned at zero with a positive gradient
        // move by steepest descent, the rest by a Newton step.
        Eigen::VectorXd proj = (p - g).cwiseMax(0.0);
        const double eps = std::min(1e-8 * total, (p - proj).norm());
        std::vector<bool> bound(np, false);
        for (std::size_t k = 0; k < np; ++k) bound[k] = p[k] <= eps && g[k] > 0.0;

        h.setZero();
        for (int j : dual.active_queues) {
            const double c = weights[j] / (u[j] * u[j]);
            for (std::size_t a = 0; a < np; ++a) {
                const double aa = polytope.at(dual.pools[a], j);
                if (aa == 0.0) continue;
                for (std::size_t b = 0; b < np; ++b) {
                    const double ab = polytope.at(dual.pools[b], j);
                    if (ab != 0.0) h(a, b) += c * aa * ab;
                }
            }
        }
        std::vector<int> free_idx;
        for (std::size_t k = 0; k < np; ++k) {
            if (!bound[k]) free_idx.push_back(static_cast<int>(k));
        }
        Eigen::VectorXd d = Eigen::VectorXd::Zero(np);
        if (!free_idx.empty()) {
            const auto nf = static_cast<Eigen::Index>(free_idx.size());
            Eigen::MatrixXd hf(nf, nf);
            Eigen::VectorXd gf(nf);
            double trace = 0.0;
            for (Eigen::Index a = 0; a < nf; ++a) {
                gf[a] = g[free_idx[a]];
                for (Eigen::Index b = 0; b < nf; ++b) hf(a, b) = h(free_idx[a], free_idx[b]);
                trace += hf(a, a);
            }
            // Rank-deficient pool matrices make the dual Hessian singular.
            hf.diagonal().array() += 1e-10 * trace / nf + 1e-300;
            Eigen::VectorXd df = -hf.ldlt().solve(gf);
            if (!df.allFinite() || df.dot(gf) >= 0.0) df = -gf;
            for (Eigen::Index a = 0; a < nf; ++a) d[free_idx[a]] = df[a];
        }
        for (std::size_t k = 0; k < np; ++k) {
            if (bound[k]) d[k] = -g[k] / std::max(h(k, k), 1e-12);
        }

        double step = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            Eigen::VectorXd trial = (p + step * d).cwiseMax(0.0);
            const double ft = dual.value(trial);
            // Armijo condition along the projection arc.
            const double decrease = -g.dot(trial - p);
            if (std::isfinite(ft) && fval - ft >= 1e-4 * decrease - 1e-15 * std::abs(fval)) {
                moved = (trial - p).norm() > 0.0;
                p = trial;
                fval = ft;
                break;
            }
            step *= 0.5;
        }
        gradient(p);
        if (!moved) break;
    }

    sol.iterations = iter;
    sol.prices.assign(polytope.num_pools(), 0.0);
    for (std::size_t k = 0; k < np; ++k) sol.prices[dual.pools[k]] = p[k];
    sol.allocation.assign(nq, 0.0);
    sol.objective = 0.0;
    dual.usage(p, u);
    for (int j : dual.active_queues) {
        sol.allocation[j] = weights[j] / u[j];
        sol.objective += weights[j] * std::log(sol.allocation[j]);
    }
    sol.kkt_residual = projected_residual();
    return sol;
}

PfSolution pf_solve(const QueueVector& q, const CapacityPolytope& polytope, const PfOptions& options) {
    std::vector<double> w(q.begin(), q.end());
    return pf_solve(w, polytope, options);
}

std::vector<double> sf_pf_gap(const QueueVector& q, const CapacityPolytope& polytope,
                              const std::vector<int>& c_list) {
    const auto pf = pf_solve(q, polytope);
    std::vector<double> gaps;
    for (int c : c_list) {
        if (c <= 0) throw ValidationError("sf_pf_gap: scale factors must be positive");
        QueueVector cq(q.size());
        for (std::size_t j = 0; j < q.size(); ++j) cq[j] = c * q[j];
        PhiCache cache;
        const auto sf = sf_allocation(cq, polytope, &cache);
        double gap = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) gap = std::max(gap, std::abs(sf[j] - pf.allocation[j]));
        gaps.push_back(gap);
    }
    return gaps;
}

std::size_t ScheduleDistribution::pick(double u) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < probability.size(); ++i) {
        acc += probability[i];
        if (u < acc) return i;
    }
    return probability.size() - 1;
}

ScheduleDistribution decompose_mean(const std::vector<double>& target, const ScheduleSet& schedules,
                                    double tolerance) {
    if (schedules.empty()) {
        throw ValidationError("decompose_mean: empty schedule set");
    }
    std::vector<std::vector<double>> pts;
    pts.reserve(schedules.size());
    for (const auto& s : schedules) {
        if (s.size() != target.size()) {
            throw ValidationError("decompose_mean: schedule length does not match the target");
        }
        pts.emplace_back(s.begin(), s.end());
    }
    const auto cw = detail::convex_weights(pts, target);
    if (cw.infeasibility > tolerance) {
        throw ValidationError("decompose_mean: target lies outside the schedule hull (residual " +
                              std::to_string(cw.infeasibility) + ")");
    }
    ScheduleDistribution dist;
    double mass = 0.0;
    for (double v : cw.lambda) mass += v;
    for (std::size_t k = 0; k < schedules.size(); ++k) {
        if (cw.lambda[k] > 0.0) {
            dist.support.push_back(schedules[k]);
            dist.probability.push_back(cw.lambda[k] / mass);
        }
    }
    dist.mean.assign(target.size(), 0.0);
    for (std::size_t i = 0; i < dist.support.size(); ++i) {
        for (std::size_t j = 0; j < target.size(); ++j) dist.mean[j] += dist.probability[i] * dist.support[i][j];
    }
    return dist;
}

}  // namespace switchnet
