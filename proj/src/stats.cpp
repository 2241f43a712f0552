#include "switchnet/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "switchnet/errors.hpp"

namespace switchnet {

TimeBatchMeans::TimeBatchMeans(double start, double end, int batches, std::size_t dims)
    : start_(start),
      end_(end),
      width_((end - start) / batches),
      batches_(batches),
      dims_(dims),
      integral_(static_cast<std::size_t>(batches), std::vector<double>(dims, 0.0)),
      duration_(static_cast<std::size_t>(batches), 0.0) {
    if (batches < 1 || !(end > start)) {
        throw ValidationError("batch means need a nonempty window and at least one batch");
    }
}

void TimeBatchMeans::add(double t0, double t1, std::span<const double> values) {
    t0 = std::max(t0, start_);
    t1 = std::min(t1, end_);
    if (!(t0 < t1)) return;
    int b = std::min(static_cast<int>((t0 - start_) / width_), batches_ - 1);
    while (t0 < t1 && b < batches_) {
        const double batch_end = b + 1 == batches_ ? end_ : start_ + (b + 1) * width_;
        const double seg_end = std::min(t1, batch_end);
        const double dt = seg_end - t0;
        if (dt > 0.0) {
            for (std::size_t d = 0; d < dims_; ++d) integral_[b][d] += values[d] * dt;
            duration_[b] += dt;
            observed_ += dt;
            t0 = seg_end;
        }
        ++b;
    }
}

std::vector<Estimate> TimeBatchMeans::estimates() const {
    std::vector<Estimate> out(dims_);
    for (std::size_t d = 0; d < dims_; ++d) {
        std::vector<double> means;
        double total = 0.0;
        for (int b = 0; b < batches_; ++b) {
            if (duration_[b] <= 0.0) continue;
            means.push_back(integral_[b][d] / duration_[b]);
            total += integral_[b][d];
        }
        out[d] = batch_estimate(means, means.size());
        if (observed_ > 0.0) out[d].mean = total / observed_;
    }
    return out;
}

SampleBatchMeans::SampleBatchMeans(double start, double end, int batches, std::size_t keys)
    : start_(start),
      end_(end),
      width_((end - start) / batches),
      batches_(batches),
      sum_(keys, std::vector<double>(static_cast<std::size_t>(batches), 0.0)),
      count_(keys, std::vector<std::size_t>(static_cast<std::size_t>(batches), 0)) {
    if (batches < 1 || !(end > start)) {
        throw ValidationError("batch means need a nonempty window and at least one batch");
    }
}

void SampleBatchMeans::add(std::size_t key, double time, double value) {
    if (time < start_ || time > end_) return;
    const int b = std::clamp(static_cast<int>((time - start_) / width_), 0, batches_ - 1);
    sum_[key][b] += value;
    ++count_[key][b];
}

std::vector<Estimate> SampleBatchMeans::estimates() const {
    std::vector<Estimate> out(sum_.size());
    for (std::size_t k = 0; k < sum_.size(); ++k) {
        std::vector<double> means;
        double total = 0.0;
        std::size_t n = 0;
        for (int b = 0; b < batches_; ++b) {
            if (count_[k][b] == 0) continue;
            means.push_back(sum_[k][b] / static_cast<double>(count_[k][b]));
            total += sum_[k][b];
            n += count_[k][b];
        }
        out[k] = batch_estimate(means, n);
        if (n > 0) out[k].mean = total / static_cast<double>(n);
    }
    return out;
}

Estimate batch_estimate(const std::vector<double>& batch_means, std::size_t n) {
    Estimate e;
    e.n = n;
    if (batch_means.empty()) return e;
    const double b = static_cast<double>(batch_means.size());
    e.mean = std::accumulate(batch_means.begin(), batch_means.end(), 0.0) / b;
    if (batch_means.size() > 1) {
        double ss = 0.0;
        for (double v : batch_means) ss += (v - e.mean) * (v - e.mean);
        e.std_error = std::sqrt(ss / (b - 1.0) / b);
    }
    return e;
}

double chi_square_sf(double stat, double dof) {
    if (dof <= 0.0) return 1.0;
    if (stat <= 0.0) return 1.0;
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

double least_squares_slope_se(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 3) return 0.0;
    const double slope = least_squares_slope(x, y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        const double r = y[i] - my - slope * (x[i] - mx);
        sse += r * r;
    }
    return sxx > 0.0 ? std::sqrt(sse / (n - 2) / sxx) : 0.0;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

JointHistogram::JointHistogram(int first_queue, int second_queue, int cap_length)
    : first(first_queue),
      second(second_queue),
      cap(cap_length),
      mass(static_cast<std::size_t>(cap_length + 1) * (cap_length + 1), 0.0) {}

void JointHistogram::add(int a, int b, double weight) {
    a = std::min(a, cap);
    b = std::min(b, cap);
    mass[static_cast<std::size_t>(a) * (cap + 1) + b] += weight;
    total += weight;
}

std::vector<double> JointHistogram::marginal_first() const {
    std::vector<double> m(cap + 1, 0.0);
    for (int a = 0; a <= cap; ++a) {
        for (int b = 0; b <= cap; ++b) m[a] += at(a, b);
    }
    return m;
}

std::vector<double> JointHistogram::marginal_second() const {
    std::vector<double> m(cap + 1, 0.0);
    for (int a = 0; a <= cap; ++a) {
        for (int b = 0; b <= cap; ++b) m[b] += at(a, b);
    }
    return m;
}

JointHistogram JointHistogram::product_of_marginals() const {
    JointHistogram p(first, second, cap);
    if (total <= 0.0) return p;
    const auto ma = marginal_first();
    const auto mb = marginal_second();
    for (int a = 0; a <= cap; ++a) {
        for (int b = 0; b <= cap; ++b) {
            p.mass[static_cast<std::size_t>(a) * (cap + 1) + b] = ma[a] * mb[b] / total;
        }
    }
    p.total = total;
    return p;
}

JointPair collect_joint(const std::vector<QueueVector>& samples, int a, int b, int cap) {
    if (samples.empty()) {
        throw ValidationError("collect_joint: no samples");
    }
    JointPair out{JointHistogram(a, b, cap), {}};
    for (const auto& q : samples) out.joint.add(q.at(a), q.at(b));
    out.product = out.joint.product_of_marginals();
    return out;
}

namespace {

// Contingency table whose categories are runs of adjacent histogram cells.
struct Table {
    std::vector<std::vector<double>> obs;
    std::vector<double> rows() const {
        std::vector<double> r(obs.size(), 0.0);
        for (std::size_t i = 0; i < obs.size(); ++i) {
            for (double v : obs[i]) r[i] += v;
        }
        return r;
    }
    std::vector<double> cols() const {
        std::vector<double> c(obs.empty() ? 0 : obs[0].size(), 0.0);
        for (const auto& row : obs) {
            for (std::size_t k = 0; k < row.size(); ++k) c[k] += row[k];
        }
        return c;
    }
    void merge_rows(std::size_t i, std::size_t into) {
        for (std::size_t k = 0; k < obs[i].size(); ++k) obs[into][k] += obs[i][k];
        obs.erase(obs.begin() + static_cast<std::ptrdiff_t>(i));
    }
    void merge_cols(std::size_t i, std::size_t into) {
        for (auto& row : obs) {
            row[into] += row[i];
            row.erase(row.begin() + static_cast<std::ptrdiff_t>(i));
        }
    }
};

std::size_t smaller_neighbour(const std::vector<double>& m, std::size_t i) {
    if (i == 0) return 1;
    if (i + 1 == m.size()) return i - 1;
    return m[i - 1] <= m[i + 1] ? i - 1 : i + 1;
}

}  // namespace

ChiSquareResult chi_square_independence(const JointHistogram& h, double min_expected) {
    Table t;
    t.obs.assign(h.cap + 1, std::vector<double>(h.cap + 1, 0.0));
    for (int a = 0; a <= h.cap; ++a) {
        for (int b = 0; b <= h.cap; ++b) t.obs[a][b] = h.at(a, b);
    }
    const double n = h.total;
    ChiSquareResult res;
    if (n <= 0.0) return res;

    while (t.obs.size() > 1 && t.obs[0].size() > 1) {
        const auto r = t.rows();
        const auto c = t.cols();
        const double rmin = *std::min_element(r.begin(), r.end());
        const double cmin = *std::min_element(c.begin(), c.end());
        if (rmin * cmin / n >= min_expected) break;
        // Merge the sparsest category of either margin into its smaller neighbour.
        if (rmin <= cmin) {
            const auto i = static_cast<std::size_t>(std::min_element(r.begin(), r.end()) - r.begin());
            const auto into = smaller_neighbour(r, i);
            t.merge_rows(i, into);
        } else {
            const auto i = static_cast<std::size_t>(std::min_element(c.begin(), c.end()) - c.begin());
            const auto into = smaller_neighbour(c, i);
            t.merge_cols(i, into);
        }
    }
    const auto r = t.rows();
    const auto c = t.cols();
    res.rows = static_cast<int>(r.size());
    res.cols = static_cast<int>(c.size());
    if (r.size() < 2 || c.size() < 2) return res;
    double stat = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        for (std::size_t k = 0; k < c.size(); ++k) {
            const double e = r[i] * c[k] / n;
            if (e > 0.0) stat += (t.obs[i][k] - e) * (t.obs[i][k] - e) / e;
        }
    }
    res.statistic = stat;
    res.dof = (res.rows - 1) * (res.cols - 1);
    res.p_value = chi_square_sf(stat, res.dof);
    return res;
}

ChiSquareResult chi_square_goodness_of_fit(std::span<const double> counts, std::span<const double> probs) {
    ChiSquareResult res;
    const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (n <= 0.0) return res;
    int cells = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = probs[i] * n;
        if (e <= 0.0) {
            if (counts[i] > 0.0) res.statistic = std::numeric_limits<double>::infinity();
            continue;
        }
        res.statistic += (counts[i] - e) * (counts[i] - e) / e;
        ++cells;
    }
    res.rows = cells;
    res.cols = 1;
    res.dof = std::max(cells - 1, 0);
    res.p_value = std::isfinite(res.statistic) ? chi_square_sf(res.statistic, res.dof) : 0.0;
    return res;
}

}  // namespace switchnet
