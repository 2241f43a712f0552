#pragma once

// Small statistics toolkit shared by the simulators and the analyses.

#include <cstddef>
#include <span>
#include <vector>

#include "switchnet/network.hpp"

namespace switchnet {

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;  // batch-means standard error
    std::size_t n = 0;    // underlying observations (samples or batches)
};

/// Time-weighted averages of a piecewise-constant vector signal on
/// [start, end), split into equal-length batches.
class TimeBatchMeans {
public:
    TimeBatchMeans(double start, double end, int batches, std::size_t dims);

    /// Signal holds `values` on [t0, t1); the part outside the window is ignored.
    void add(double t0, double t1, std::span<const double> values);
    std::vector<Estimate> estimates() const;
    double observed_time() const { return observed_; }

private:
    double start_, end_, width_;
    int batches_;
    std::size_t dims_;
    std::vector<std::vector<double>> integral_;  // [batch][dim]
    std::vector<double> duration_;
    double observed_ = 0.0;
};

/// Per-key sample means with batch assignment by timestamp.
class SampleBatchMeans {
public:
    SampleBatchMeans(double start, double end, int batches, std::size_t keys);

    void add(std::size_t key, double time, double value);
    std::vector<Estimate> estimates() const;

private:
    double start_, end_, width_;
    int batches_;
    std::vector<std::vector<double>> sum_;    // [key][batch]
    std::vector<std::vector<std::size_t>> count_;
};

/// Mean and standard error from equally weighted batch means.
Estimate batch_estimate(const std::vector<double>& batch_means, std::size_t n);

/// Upper tail P(X >= stat) for a chi-square variable with `dof` degrees of freedom.
double chi_square_sf(double stat, double dof);

/// Ordinary least-squares slope of y on x. Zero when x is constant.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

/// Standard error of the least-squares slope (classical formula).
double least_squares_slope_se(std::span<const double> x, std::span<const double> y);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

/// Joint occupancy histogram for a queue pair. Lengths at or above `cap` are
/// lumped into the last cell.
struct JointHistogram {
    int first = 0;
    int second = 0;
    int cap = 50;
    std::vector<double> mass;  // (cap+1)^2, row = first queue length
    double total = 0.0;

    JointHistogram() = default;
    JointHistogram(int first_queue, int second_queue, int cap_length = 50);

    void add(int a, int b, double weight = 1.0);
    double at(int a, int b) const { return mass[static_cast<std::size_t>(a) * (cap + 1) + b]; }
    std::vector<double> marginal_first() const;
    std::vector<double> marginal_second() const;
    /// Outer product of the marginals, scaled to the same total mass.
    JointHistogram product_of_marginals() const;
};

struct JointPair {
    JointHistogram joint;
    JointHistogram product;
};

/// Histogram of (Q_a, Q_b) over samples plus the product of its marginals.
/// Throws ValidationError on an empty sample set.
JointPair collect_joint(const std::vector<QueueVector>& samples, int a, int b, int cap = 50);

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    int rows = 0;
    int cols = 0;
};

/// Pearson chi-square test of independence on a count histogram. Sparse
/// categories are merged with their smaller neighbour until every expected
/// cell count is at least `min_expected`.
ChiSquareResult chi_square_independence(const JointHistogram& h, double min_expected = 5.0);

/// Goodness of fit of observed counts to probabilities (cells with p = 0 and
/// zero counts are skipped).
ChiSquareResult chi_square_goodness_of_fit(std::span<const double> counts, std::span<const double> probs);

}  // namespace switchnet
