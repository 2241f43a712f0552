#pragma once

// Proportional-fair allocation over <S>, its relation to the Store-Forward
// allocation at scale, and randomized schedules with a prescribed mean.

#include <cstddef>
#include <vector>

#include "switchnet/network.hpp"

namespace switchnet {

struct PfOptions {
    double tolerance = 1e-10;      // on the projected dual gradient
    std::size_t max_iterations = 100000;
};

struct PfSolution {
    std::vector<double> allocation;  // s*, zero where the weight is zero
    std::vector<double> prices;      // pool prices p_l >= 0
    double objective = 0.0;          // sum_j w_j log s*_j over w_j > 0
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
};

/// Maximizes sum_j w_j log s_j over A s <= 1, s >= 0 by projected Newton
/// steps on the pool prices with backtracking. Throws ValidationError for an
/// all-zero or negative weight vector.
PfSolution pf_solve(const std::vector<double>& weights, const CapacityPolytope& polytope,
                    const PfOptions& options = {});
PfSolution pf_solve(const QueueVector& q, const CapacityPolytope& polytope,
                    const PfOptions& options = {});

/// max_j |sigma^SF_j(cQ) - sigma^PF_j(Q)| for each c.
std::vector<double> sf_pf_gap(const QueueVector& q, const CapacityPolytope& polytope,
                              const std::vector<int>& c_list);

struct ScheduleDistribution {
    std::vector<Schedule> support;
    std::vector<double> probability;
    std::vector<double> mean;

    /// Index into support for a uniform draw u in [0, 1).
    std::size_t pick(double u) const;
};

/// Probability mass over `schedules` whose mean is `target`. Basic feasible
/// solution of the phase-one simplex with Bland's rule, so at most |J|+1
/// schedules carry mass and the result depends only on the input order.
/// Throws ValidationError when target lies outside conv(schedules) by more
/// than `tolerance`.
ScheduleDistribution decompose_mean(const std::vector<double>& target, const ScheduleSet& schedules,
                                    double tolerance = 1e-7);

namespace detail {

/// Phase-one simplex: lambda >= 0, sum lambda = 1, sum_k lambda_k x_k = target.
/// Returns lambda and the residual infeasibility (sum of artificials).
struct ConvexWeights {
    std::vector<double> lambda;
    double infeasibility = 0.0;
};
ConvexWeights convex_weights(const std::vector<std::vector<double>>& points,
                             const std::vector<double>& target);

}  // namespace detail

}  // namespace switchnet
