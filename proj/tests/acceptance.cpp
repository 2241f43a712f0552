// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "switchnet/analysis.hpp"
#include "switchnet/examples.hpp"
#include "switchnet/propfair.hpp"
#include "switchnet/simulators.hpp"
#include "switchnet/stats.hpp"
#include "switchnet/store_forward.hpp"

using namespace switchnet;

namespace {

using Clock = std::chrono::steady_clock;
using Matrix = std::vector<std::vector<double>>;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void for_each_q(int n, int total, const std::function<void(const QueueVector&)>& f) {
    QueueVector q(n, 0);
    std::function<void(int, int)> rec = [&](int j, int left) {
        if (j == n) {
            f(q);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            q[j] = v;
            rec(j + 1, left - v);
        }
        q[j] = 0;
    };
    rec(0, total);
}

// Pooled estimate over replications: mean of means, SE = sqrt(sum se^2) / k.
Estimate pool(const std::vector<Estimate>& reps) {
    Estimate e;
    double var = 0.0;
    for (const auto& r : reps) {
        e.mean += r.mean;
        var += r.std_error * r.std_error;
        e.n += r.n;
    }
    const double k = static_cast<double>(reps.size());
    e.mean /= k;
    e.std_error = std::sqrt(var) / k;
    return e;
}

double event_rate(const NetworkSpec& spec) {
    double r = 0.0;
    for (const auto& route : spec.routes) r += route.rate * static_cast<double>(route.hops() + 1);
    return r;
}

Outcome phi_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> nq(1, 4), np(1, 3);
    double worst = 0.0;
    long checked = 0;
    for (int net = 0; net < 50; ++net) {
        const int n = nq(rng);
        const int m = np(rng);
        const bool unit = net % 2 == 0;
        Matrix a(m, std::vector<double>(n, 0.0));
        for (auto& row : a) {
            for (auto& v : row) v = u(rng) < 0.45 ? 0.0 : (unit ? 1.0 : 0.1 + 2.4 * u(rng));
        }
        for (int j = 0; j < n; ++j) {
            bool covered = false;
            for (auto& row : a) covered = covered || row[j] > 0.0;
            if (!covered) a[static_cast<std::size_t>(j) % m][j] = unit ? 1.0 : 0.5 + u(rng);
        }
        CapacityPolytope p(a);
        for_each_q(n, 10, [&](const QueueVector& q) {
            const double exact = phi_bruteforce(q, p);
            const double dp = phi(q, p);
            worst = std::max(worst, std::abs(dp - exact) / exact);
            ++checked;
        });
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-10 && secs < 10.0,
            "max relative error " + fmt("%.2e", worst) + " over " + std::to_string(checked) + " vectors, " +
                fmt("%.2f", secs) + " s"};
}

Outcome sf_pf_limit() {
    const auto t0 = Clock::now();
    const std::vector<int> cs{8, 32, 128, 512};
    bool ok = true;
    std::string detail;

    auto single = polytope_of(example_network("single-pool"));
    double single_worst = 0.0;
    for (const QueueVector& q : {QueueVector{2, 1}, QueueVector{1, 1}, QueueVector{3, 5}}) {
        for (double g : sf_pf_gap(q, single, cs)) single_worst = std::max(single_worst, g);
    }
    // sigma^SF is exp of a difference of log Phi values near 3e4 at c = 512;
    // double rounding of those alone is of order 1e-11.
    ok = ok && single_worst <= 1e-10;
    detail += "single-pool max " + fmt("%.1e", single_worst);

    struct Case {
        const char* name;
        QueueVector q;
    };
    for (const Case& c : {Case{"tandem", {1, 1}}, Case{"four-cycle", {1, 1, 1, 1}}}) {
        auto gaps = sf_pf_gap(c.q, polytope_of(example_network(c.name)), cs);
        bool mono = true;
        for (std::size_t i = 1; i < gaps.size(); ++i) mono = mono && gaps[i] <= gaps[i - 1] + 1e-12;
        ok = ok && mono && gaps.back() <= 1e-2;
        detail += std::string("; ") + c.name + " gaps";
        for (double g : gaps) detail += " " + fmt("%.3g", g);
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 30.0;
    return {ok, detail + "; " + fmt("%.1f", secs) + " s"};
}

Outcome balance() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    double worst = 0.0, worst_total = 0.0;
    int nets = 0;
    for (const auto& info : list_examples()) {
        auto spec = example_network(info.name);
        auto a = polytope_of(spec);
        PhiCache cache;
        for (int i = 0; i < 1000; ++i) {
            auto x = random_state(spec, 4, rng);
            auto t = random_transition(x, spec, rng);
            auto rep = balance_check(x, t, spec, a, &cache);
            worst = std::max(worst, rep.residual);
            worst_total = std::max(worst_total, rep.total_residual);
        }
        ++nets;
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-12 && worst_total < 1e-12 && secs < 5.0,
            std::to_string(nets) + " networks x 1000 checks, max residual " + fmt("%.2e", worst) +
                ", max total-rate residual " + fmt("%.2e", worst_total) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome delay_formula() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    struct Case {
        const char* name;
        double expected;
    };
    for (const Case& c : {Case{"tandem", 4.0}, Case{"single-pool-route", 5.0}}) {
        auto spec = example_network(c.name);
        SimConfig cfg;
        cfg.seed = 1001;
        cfg.batches = 40;
        cfg.warmup_fraction = 0.05;
        cfg.horizon = std::ceil(1.1e6 / event_rate(spec));
        auto m = simulate_sf_ctmc(spec, polytope_of(spec), cfg);
        const auto& e = m.sojourn[0];
        const double z = (e.mean - c.expected) / e.std_error;
        ok = ok && std::abs(z) <= 3.0 && m.events >= 1000000;
        detail += std::string(detail.empty() ? "" : "; ") + c.name + " " + fmt("%.4f", e.mean) + " +- " +
                  fmt("%.4f", e.std_error) + " (z " + fmt("%.2f", z) + ", " + std::to_string(m.events) + " events)";
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 120.0;
    return {ok, detail + "; " + fmt("%.1f", secs) + " s"};
}

Outcome queue_formula() {
    const auto t0 = Clock::now();
    bool ok = true;
    int compared = 0;
    double worst_z = 0.0;
    std::string worst_at, failures;
    for (const auto& info : list_examples()) {
        for (double load : {0.5, 0.8}) {
            auto spec = scale_to_load(example_network(info.name), load);
            auto a = polytope_of(spec);
            SimConfig cfg;
            cfg.batches = 40;
            cfg.warmup_fraction = 0.05;
            cfg.horizon = std::ceil(1e6 / event_rate(spec));
            std::vector<std::vector<Estimate>> reps(spec.num_queues());
            for (std::uint64_t seed : {11, 12}) {
                cfg.seed = seed;
                auto m = simulate_sf_ctmc(spec, a, cfg);
                for (std::size_t j = 0; j < spec.num_queues(); ++j) reps[j].push_back(m.queue_mean[j]);
            }
            for (std::size_t j = 0; j < spec.num_queues(); ++j) {
                const auto e = pool(reps[j]);
                const double expected = expected_queue_length(static_cast<int>(j), spec, a);
                const double z = (e.mean - expected) / e.std_error;
                ++compared;
                const std::string at = info.name + "@" + fmt("%.1f", load) + ":" + spec.queues[j];
                if (std::abs(z) > std::abs(worst_z)) {
                    worst_z = z;
                    worst_at = at;
                }
                if (std::abs(z) > 3.0) {
                    ok = false;
                    failures += " " + at + " (" + fmt("%.3f", e.mean) + " vs " + fmt("%.3f", expected) + ", z " +
                                fmt("%.2f", z) + ")";
                }
            }
        }
    }
    std::string detail = std::to_string(compared) + " queue means, largest |z| " + fmt("%.2f", std::abs(worst_z)) +
                         " at " + worst_at + ", " + fmt("%.1f", seconds_since(t0)) + " s";
    if (!failures.empty()) detail += "; outside 3 SE:" + failures;
    return {ok, detail};
}

Outcome composition() {
    const auto t0 = Clock::now();
    auto spec = example_network("two-route");
    auto a = polytope_of(spec);
    SimConfig cfg;
    cfg.seed = 2024;
    cfg.horizon = 4e5;
    cfg.warmup_fraction = 0.05;
    cfg.snapshot_interval = 40.0;
    auto m = simulate_sf_ctmc(spec, a, cfg);

    // Queue q2 carries r1 and r2; stationary labels are i.i.d. with P(r) = a_r / a_j.
    const int j = 1;
    const double aj = spec.routes[0].rate + spec.routes[1].rate;
    std::vector<double> counts{m.composition[j][0], m.composition[j][1]};
    std::vector<double> law{spec.routes[0].rate / aj, spec.routes[1].rate / aj};
    std::vector<double> swapped{law[1], law[0]};
    auto fit = chi_square_goodness_of_fit(counts, law);
    auto power = chi_square_goodness_of_fit(counts, swapped);
    const bool ok = fit.p_value >= 0.001 && power.p_value < 0.001;
    return {ok, "two-route q2 labels r1 " + fmt("%.0f", counts[0]) + ", r2 " + fmt("%.0f", counts[1]) +
                    "; p " + fmt("%.3f", fit.p_value) + " against a_r/a_j, p " + fmt("%.2e", power.p_value) +
                    " with rates swapped; " + fmt("%.1f", seconds_since(t0)) + " s"};
}

Outcome independence() {
    const auto t0 = Clock::now();
    bool ok = true;
    int pairs = 0;
    double worst_corr = 0.0, worst_p = 1.0;
    std::string failures;
    std::uint64_t seed = 500;
    for (const char* name : {"k22", "four-cycle", "square-grid"}) {
        auto spec = example_network(name);
        auto a = polytope_of(spec);
        ExactSampler sampler(spec, a, ++seed);
        std::vector<QueueVector> samples;
        for (int i = 0; i < 100000; ++i) samples.push_back(sampler.draw_queue_lengths());
        const int n = static_cast<int>(spec.num_queues());
        for (int j = 0; j < n; ++j) {
            for (int k = j + 1; k < n; ++k) {
                if (share_pool(a, j, k)) continue;
                auto rep = independence_test(samples, j, k, a);
                ++pairs;
                worst_corr = std::max(worst_corr, std::abs(rep.correlation));
                worst_p = std::min(worst_p, rep.chi_square.p_value);
                if (rep.verdict != Verdict::IndependentConsistent) {
                    ok = false;
                    failures += std::string(" ") + name + ":" + spec.queues[j] + "~" + spec.queues[k] + " " +
                                to_string(rep.verdict);
                }
            }
        }
    }

    // Single pool at (0.3, 0.3): correlation by direct summation of the law.
    double m1 = 0, s11 = 0, s12 = 0, mass = 0;
    for (int tot = 0; tot <= 400; ++tot) {
        for (int x = 0; x <= tot; ++x) {
            const int y = tot - x;
            const double lc = std::lgamma(tot + 1.0) - std::lgamma(x + 1.0) - std::lgamma(y + 1.0);
            const double p = std::exp(lc + tot * std::log(0.3)) * 0.4;
            mass += p;
            m1 += p * x;
            s11 += p * x * x;
            s12 += p * x * y;
        }
    }
    const double brute = (s12 - m1 * m1) / (s11 - m1 * m1);
    auto spec = example_network("single-pool");
    spec.routes[0].rate = 0.3;
    spec.routes[1].rate = 0.3;
    ExactSampler sampler(spec, polytope_of(spec), 909);
    std::vector<QueueVector> samples;
    for (int i = 0; i < 100000; ++i) samples.push_back(sampler.draw_queue_lengths());
    auto rep = independence_test(samples, 0, 1, polytope_of(spec));
    const bool brute_ok = std::abs(mass - 1.0) < 1e-12 && std::abs(brute - 3.0 / 7.0) < 1e-9;
    const bool shared_ok = std::abs(rep.correlation - 3.0 / 7.0) <= 0.02;
    ok = ok && brute_ok && shared_ok;

    std::string detail = std::to_string(pairs) + " non-sharing pairs, max |corr| " + fmt("%.4f", worst_corr) +
                         ", min p " + fmt("%.4f", worst_p) + "; single-pool corr " + fmt("%.4f", rep.correlation) +
                         " (summation " + fmt("%.6f", brute) + "); " + fmt("%.1f", seconds_since(t0)) + " s";
    if (!failures.empty()) detail += "; failed:" + failures;
    return {ok, detail};
}

Outcome log_phi_limit() {
    const auto t0 = Clock::now();
    auto lim = phi_log_limit({2.0, 1.0}, polytope_of(example_network("single-pool")), {8, 32, 128, 512});
    bool decreasing = true;
    for (std::size_t i = 1; i < lim.gaps.size(); ++i) decreasing = decreasing && lim.gaps[i] < lim.gaps[i - 1];
    const double dist = std::abs(lim.values.back() - 1.9095);
    std::string detail = "values";
    for (double v : lim.values) detail += " " + fmt("%.5f", v);
    detail += "; |value(512) - 1.9095| " + fmt("%.2e", dist) + "; " + fmt("%.2f", seconds_since(t0)) + " s";
    return {dist <= 2e-2 && decreasing, detail};
}

Outcome ldp_properties() {
    bool ok = true;
    std::string detail;

    double at_zero = 0.0;
    for (const auto& info : list_examples()) {
        auto spec = example_network(info.name);
        const std::size_t n = spec.num_queues();
        std::vector<double> q(n, 0.0);
        std::vector<std::vector<double>> comp(n, std::vector<double>(spec.routes.size(), 0.0));
        for (std::size_t j = 0; j < n; ++j) {
            auto through = routes_through(spec, static_cast<int>(j));
            for (int r : through) comp[j][r] = 1.0 / static_cast<double>(through.size());
        }
        at_zero = std::max(at_zero, std::abs(ldp_rate(q, uniform_profile(q, comp), spec, polytope_of(spec))));
    }
    ok = ok && at_zero == 0.0;
    detail += "max |rate(0)| " + fmt("%.1e", at_zero);

    // Grid search over the composition at q2 of the two-route network.
    auto two = example_network("two-route");
    auto a2 = polytope_of(two);
    const double resolution = 1e-3;
    double best = 1e300, best_g = -1.0;
    for (int i = 1; i < 1000; ++i) {
        const double g = i * resolution;
        const std::vector<double> q{0.0, 1.5};
        const double v = ldp_rate(q, uniform_profile(q, {{1, 0}, {g, 1 - g}}), two, a2);
        if (v < best) {
            best = v;
            best_g = g;
        }
    }
    const double target_g = two.routes[0].rate / (two.routes[0].rate + two.routes[1].rate);
    ok = ok && std::abs(best_g - target_g) <= resolution;
    detail += "; grid minimizer " + fmt("%.3f", best_g) + " vs a_r/a_j " + fmt("%.3f", target_g);

    auto mm1 = example_network("mm1");
    auto a1 = polytope_of(mm1);
    double mm1_err = 0.0;
    for (double q : {0.25, 1.0, 3.0, 10.0}) {
        const double v = ldp_rate({q}, uniform_profile({q}, {{1.0}}), mm1, a1);
        mm1_err = std::max(mm1_err, std::abs(v - q * std::log(1.0 / mm1.routes[0].rate)));
    }
    ok = ok && mm1_err <= 1e-9;
    detail += "; M/M/1 max error " + fmt("%.1e", mm1_err);
    return {ok, detail};
}

Outcome schedulers() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;

    auto spec = scale_to_load(example_network("one-edge"), 0.8);
    auto a = polytope_of(spec);
    SimConfig cfg;
    cfg.seed = 31;
    cfg.horizon = 1e5;
    cfg.warmup_fraction = 0.0;
    cfg.snapshot_interval = 250.0;
    cfg.snapshot_fifo = true;
    cfg.initial_packets = std::vector<int>(spec.routes.size(), 400);
    auto m = simulate_ps(spec, a, schedules_of(spec), cfg);
    auto drift = lyapunov_drift(m, spec, a);
    std::vector<double> totals;
    for (const auto& s : m.snapshots) {
        double t = 0.0;
        for (int v : s.q) t += v;
        totals.push_back(t);
    }
    const double q_slope = least_squares_slope(drift.times, totals);
    const double q_se = least_squares_slope_se(drift.times, totals);
    const bool ps_ok = drift.slope <= 3.0 * drift.slope_se && q_slope <= 3.0 * q_se;
    ok = ok && ps_ok;
    detail += "PS one-edge@0.8 from 800 packets: rate slope " + fmt("%.3g", drift.slope) + " (se " +
              fmt("%.2g", drift.slope_se) + "), backlog slope " + fmt("%.3g", q_slope) + " (se " +
              fmt("%.2g", q_se) + ")";

    auto tandem = scale_to_load(example_network("tandem4"), 0.8);
    SimConfig bcfg;
    bcfg.seed = 32;
    bcfg.horizon = 1e5;
    auto b = simulate_bp(tandem, schedules_of(tandem), bcfg);
    bool ordered = true;
    detail += "; BP tandem4@0.8 means";
    for (std::size_t j = 0; j < b.queue_mean.size(); ++j) {
        detail += " " + fmt("%.3f", b.queue_mean[j].mean);
        if (j > 0) ordered = ordered && b.queue_mean[j].mean <= b.queue_mean[j - 1].mean;
    }
    ok = ok && ordered;
    return {ok, detail + "; " + fmt("%.1f", seconds_since(t0)) + " s"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"phi matches brute-force enumeration", phi_oracle},
        {"Store-Forward allocation tends to proportional fairness", sf_pf_limit},
        {"stationary law balances the reversed chain", balance},
        {"simulated sojourn matches the delay formula", delay_formula},
        {"simulated queue means match the queue-length formula", queue_formula},
        {"route composition follows a_r / a_j", composition},
        {"queues without a common pool are independent", independence},
        {"scaled log Phi converges to the fair-share entropy", log_phi_limit},
        {"rate function properties", ldp_properties},
        {"scheduler sanity", schedulers},
    };
    int failed = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", index - failed, index);
    return failed == 0 ? 0 : 1;
}
