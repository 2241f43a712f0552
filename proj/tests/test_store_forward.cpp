#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "switchnet/errors.hpp"
#include "switchnet/examples.hpp"
#include "switchnet/stats.hpp"
#include "switchnet/store_forward.hpp"

using namespace switchnet;

namespace {

using Matrix = std::vector<std::vector<double>>;

double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

CapacityPolytope random_polytope(std::mt19937_64& rng, int queues, int pools) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix a(pools, std::vector<double>(queues, 0.0));
    for (auto& row : a) {
        for (auto& v : row) v = u(rng) < 0.5 ? 0.0 : 0.2 + 1.5 * u(rng);
    }
    for (int j = 0; j < queues; ++j) {
        bool covered = false;
        for (auto& row : a) covered = covered || row[j] > 0.0;
        if (!covered) a[j % pools][j] = 0.3 + u(rng);
    }
    return CapacityPolytope(a);
}

// Every Q with entries summing to at most `total`.
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

}  // namespace

TEST_CASE("phi boundary values") {
    CapacityPolytope a(Matrix{{1, 1}});
    CHECK(phi({0, 0}, a) == 1.0);
    CHECK(log_phi({0, 0}, a) == 0.0);
    CHECK(phi({-1, 2}, a) == 0.0);
    CHECK(std::isinf(log_phi({2, -1}, a)));
    CHECK_THROWS_AS(log_phi({1, 1, 1}, a), ValidationError);
}

TEST_CASE("phi matches direct enumeration of pool splits") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 4;
        const int m = 1 + trial % 3;
        auto a = random_polytope(rng, n, m);
        for_each_q(n, 7, [&](const QueueVector& q) {
            const double exact = phi_bruteforce(q, a);
            const double dp = phi(q, a);
            CHECK(std::abs(dp - exact) <= 1e-10 * exact);
        });
    }
}

TEST_CASE("single pool closed form") {
    CapacityPolytope a(Matrix{{1, 1}});
    for (int c : {1, 3, 10, 64, 512}) {
        // Phi(2c, c) = (3c)! / ((2c)! c!)
        CHECK(log_phi({2 * c, c}, a) == doctest::Approx(log_binomial(3 * c, c)).epsilon(1e-12));
    }
    // The same value with a non-unit pool weight: Phi = C(n, k) w^n.
    CapacityPolytope b(Matrix{{0.5, 0.5}});
    CHECK(log_phi({40, 20}, b) == doctest::Approx(log_binomial(60, 20) + 60 * std::log(0.5)).epsilon(1e-12));
    CapacityPolytope big(Matrix{{3.0, 3.0}});
    CHECK(log_phi({400, 300}, big) == doctest::Approx(log_binomial(700, 300) + 700 * std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("decoupled pools give phi = 1") {
    CapacityPolytope id(Matrix{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    CHECK(phi({5, 0, 9}, id) == doctest::Approx(1.0));
    CHECK(log_phi({512, 512, 512}, id) == doctest::Approx(0.0));
}

TEST_CASE("Store-Forward allocation") {
    CapacityPolytope a(Matrix{{1, 1}});
    auto s = sf_allocation({2, 1}, a);
    CHECK(s[0] == doctest::Approx(2.0 / 3.0));
    CHECK(s[1] == doctest::Approx(1.0 / 3.0));
    CHECK(sf_allocation({0, 4}, a) == std::vector<double>{0.0, 1.0});

    // On any polytope the allocation lies in {s >= 0 : A s <= 1}.
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = random_polytope(rng, 3, 2);
        for_each_q(3, 6, [&](const QueueVector& q) {
            auto sigma = sf_allocation(q, p);
            CHECK(p.max_pool_usage(sigma) <= 1.0 + 1e-12);
            for (std::size_t j = 0; j < q.size(); ++j) {
                if (q[j] == 0) CHECK(sigma[j] == 0.0);
            }
        });
    }
}

TEST_CASE("phi cache is tied to one polytope") {
    PhiCache cache;
    CapacityPolytope a(Matrix{{1, 1}});
    CapacityPolytope b(Matrix{{1, 0.5}});
    const double v = log_phi({3, 2}, a, &cache);
    CHECK(cache.size() == 1);
    CHECK(log_phi({3, 2}, a, &cache) == v);
    CHECK_THROWS_AS(log_phi({3, 2}, b, &cache), std::logic_error);
    cache.clear();
    CHECK_NOTHROW(log_phi({3, 2}, b, &cache));
}

TEST_CASE("stationary law sums to one") {
    // Enumerate FIFO states up to a total packet count; the tail is geometric.
    auto spec = example_network("two-route");
    auto a = polytope_of(spec);
    const int cap = 40;
    double total = 0.0;
    for_each_q(2, cap, [&](const QueueVector& q) {
        // Queue 1 holds routes r1 (0) and r2 (1); sum over label sequences
        // in closed form: (a_r1 + a_r2)^Q_2.
        NetworkState s = NetworkState::empty(2);
        s.q = q;
        s.fifo[0].assign(q[0], 0);
        s.fifo[1].assign(q[1], 1);
        const double p = stationary_probability(s, spec, a);
        const double all_labels = p * std::pow((0.2 + 0.3) / 0.3, q[1]);
        total += all_labels;
    });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(stationary_normalizer(spec, a) == doctest::Approx(0.8 * 0.5));
}

TEST_CASE("state validation") {
    auto spec = example_network("two-route");
    NetworkState s = NetworkState::empty(2);
    s.q = {1, 0};
    CHECK_THROWS_AS(check_state(s, spec), ValidationError);  // FIFO length mismatch
    s.fifo[0] = {1};                                          // r2 does not visit q1
    CHECK_THROWS_AS(check_state(s, spec), ValidationError);
    s.fifo[0] = {0};
    CHECK_NOTHROW(check_state(s, spec));
    auto overloaded = scale_to_load(spec, 1.2);
    CHECK_THROWS_AS(stationary_weight(s, overloaded, polytope_of(overloaded)), InadmissibleLoad);
}

TEST_CASE("mean queue lengths and delays") {
    auto tandem = example_network("tandem");
    CHECK(expected_queue_length(0, tandem, polytope_of(tandem)) == doctest::Approx(1.0));
    CHECK(expected_delay(0, tandem, polytope_of(tandem)) == doctest::Approx(4.0));
    auto spr = example_network("single-pool-route");
    CHECK(expected_delay(0, spr, polytope_of(spr)) == doctest::Approx(5.0));
    auto mm1 = example_network("mm1");
    CHECK(expected_queue_length(0, mm1, polytope_of(mm1)) == doctest::Approx(1.0));
    // Little's law: sum_j E[Q_j] = sum_r a_r E[D_r].
    for (const char* name : {"two-route", "k22", "square-grid", "single-pool"}) {
        auto spec = example_network(name);
        auto a = polytope_of(spec);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t j = 0; j < spec.num_queues(); ++j) lhs += expected_queue_length(static_cast<int>(j), spec, a);
        for (std::size_t r = 0; r < spec.routes.size(); ++r) {
            rhs += spec.routes[r].rate * expected_delay(static_cast<int>(r), spec, a);
        }
        CHECK(lhs == doctest::Approx(rhs));
    }
}

TEST_CASE("exact sampler reproduces the stationary law") {
    auto spec = example_network("single-pool");
    auto a = polytope_of(spec);
    ExactSampler sampler(spec, a, 99);
    const int n = 200000;
    const int cap = 12;
    std::map<std::pair<int, int>, double> counts;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        auto q = sampler.draw_queue_lengths();
        s1 += q[0];
        s2 += q[1];
        counts[{std::min(q[0], cap), std::min(q[1], cap)}] += 1.0;
    }
    CHECK(s1 / n == doctest::Approx(expected_queue_length(0, spec, a)).epsilon(0.02));
    CHECK(s2 / n == doctest::Approx(expected_queue_length(1, spec, a)).epsilon(0.02));

    // P(Q) = Phi(Q) a1^Q1 a2^Q2 (1 - a_l); cells with small expectation are
    // lumped into one remainder cell.
    std::vector<double> obs, prob;
    double kept_prob = 0.0, kept_obs = 0.0;
    for (int x = 0; x < cap; ++x) {
        for (int y = 0; y < cap; ++y) {
            const double p = phi({x, y}, a) * std::pow(0.2, x) * std::pow(0.3, y) * 0.5;
            if (p * n < 5.0) continue;
            obs.push_back(counts[{x, y}]);
            prob.push_back(p);
            kept_prob += p;
            kept_obs += counts[{x, y}];
        }
    }
    obs.push_back(n - kept_obs);
    prob.push_back(1.0 - kept_prob);
    auto gof = chi_square_goodness_of_fit(obs, prob);
    CHECK(gof.p_value > 0.001);

    NetworkState one = exact_sampler(spec, a, 5);
    CHECK_NOTHROW(check_state(one, spec));
    CHECK(exact_sampler(spec, a, 5) == one);
}

TEST_CASE("exact sampler labels follow a_r / a_j") {
    auto spec = example_network("two-route");
    auto a = polytope_of(spec);
    ExactSampler sampler(spec, a, 17);
    double r1 = 0.0, total = 0.0;
    for (int i = 0; i < 50000; ++i) {
        auto s = sampler.draw();
        for (int r : s.state.fifo[1]) {
            r1 += r == 0;
            total += 1.0;
        }
        CHECK(s.occupancy.aggregate() == s.state.q);
    }
    CHECK(r1 / total == doctest::Approx(0.4).epsilon(0.02));
}
