#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <random>
#include <set>

#include "switchnet/errors.hpp"
#include "switchnet/examples.hpp"
#include "switchnet/network.hpp"

using namespace switchnet;

namespace {

using Matrix = std::vector<std::vector<double>>;

NetworkSpec two_queue(std::vector<Route> routes, Matrix a) {
    return {"t", {"q1", "q2"}, std::move(routes), CapacityPolytope(std::move(a))};
}

InterferenceGraph cycle(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i) e.emplace_back(std::min(i, (i + 1) % n), std::max(i, (i + 1) % n));
    return InterferenceGraph(n, e);
}

InterferenceGraph random_graph(int n, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(p);
    std::vector<std::pair<int, int>> e;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (coin(rng)) e.emplace_back(u, v);
        }
    }
    return InterferenceGraph(n, e);
}

// Induced subgraph on `mask` is a single cycle: connected and 2-regular.
bool induces_cycle(const InterferenceGraph& g, unsigned mask) {
    std::vector<int> vs;
    for (int v = 0; v < g.num_vertices(); ++v) {
        if (mask >> v & 1u) vs.push_back(v);
    }
    for (int v : vs) {
        int deg = 0;
        for (int w : vs) deg += v != w && g.adjacent(v, w);
        if (deg != 2) return false;
    }
    unsigned seen = 1u << vs[0];
    std::vector<int> stack{vs[0]};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : vs) {
            if (v != w && g.adjacent(v, w) && !(seen >> w & 1u)) {
                seen |= 1u << w;
                stack.push_back(w);
            }
        }
    }
    return seen == mask;
}

bool has_odd_hole(const InterferenceGraph& g) {
    const int n = g.num_vertices();
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        const int k = __builtin_popcount(mask);
        if (k >= 5 && k % 2 == 1 && induces_cycle(g, mask)) return true;
    }
    return false;
}

bool perfect_by_subsets(const InterferenceGraph& g) {
    return !has_odd_hole(g) && !has_odd_hole(g.complement());
}

}  // namespace

TEST_CASE("loads follow the pool sums") {
    SUBCASE("single pool, two local routes") {
        auto spec = two_queue({{"r1", {0}, 0.2}, {"r2", {1}, 0.3}}, {{1, 1}});
        auto l = compute_loads(spec, polytope_of(spec));
        CHECK(l.queue_load[0] == doctest::Approx(0.2));
        CHECK(l.queue_load[1] == doctest::Approx(0.3));
        CHECK(l.pool_load[0] == doctest::Approx(0.5));
        CHECK(l.admissible);
    }
    SUBCASE("route through both queues of a tandem") {
        auto spec = two_queue({{"r", {0, 1}, 0.5}}, {{1, 0}, {0, 1}});
        auto l = compute_loads(spec, polytope_of(spec));
        CHECK(l.queue_load == std::vector<double>{0.5, 0.5});
        CHECK(l.pool_load == std::vector<double>{0.5, 0.5});
        CHECK(l.admissible);
    }
    SUBCASE("overloaded pool") {
        auto spec = two_queue({{"r1", {0}, 0.6}, {"r2", {1}, 0.5}}, {{1, 1}});
        auto l = compute_loads(spec, polytope_of(spec));
        CHECK(l.pool_load[0] == doctest::Approx(1.1));
        CHECK_FALSE(l.admissible);
    }
    SUBCASE("dimension mismatch") {
        auto spec = two_queue({{"r1", {0}, 0.2}}, {{1, 1}});
        CHECK_THROWS_AS(compute_loads(spec, CapacityPolytope(Matrix{{1, 1, 1}})), ValidationError);
    }
}

TEST_CASE("loads are linear in the arrival rates") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix a(3, std::vector<double>(4));
        for (auto& row : a) {
            for (auto& v : row) v = u(rng) < 0.4 ? 0.0 : u(rng);
        }
        for (int j = 0; j < 4; ++j) a[j % 3][j] += 0.5;
        NetworkSpec spec{"lin", {"a", "b", "c", "d"}, {{"r1", {0, 2}, u(rng)}, {"r2", {3, 1}, u(rng)}}, CapacityPolytope(a)};
        NetworkSpec twice = spec;
        for (auto& r : twice.routes) r.rate *= 2.0;
        const auto p = polytope_of(spec);
        auto l1 = compute_loads(spec, p);
        auto l2 = compute_loads(twice, p);
        for (std::size_t j = 0; j < 4; ++j) CHECK(l2.queue_load[j] == doctest::Approx(2 * l1.queue_load[j]));
        for (std::size_t l = 0; l < 3; ++l) CHECK(l2.pool_load[l] == doctest::Approx(2 * l1.pool_load[l]));
    }
}

TEST_CASE("network validation names the offending field") {
    auto spec = two_queue({{"r1", {0, 0}, 0.2}}, {{1, 1}});
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("routes[0].path"), ValidationError);
    spec.routes[0].path = {};
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("routes[0].path"), ValidationError);
    spec.routes[0].path = {0, 5};
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec.routes[0].path = {0};
    spec.routes[0].rate = 0.0;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("routes[0].rate"), ValidationError);
    spec.routes[0].rate = 0.1;
    CHECK_NOTHROW(spec.validate());
}

TEST_CASE("polytope invariants") {
    CHECK_THROWS_AS(CapacityPolytope(Matrix{{1, 0}}), ValidationError);    // q2 in no pool
    CHECK_THROWS_AS(CapacityPolytope(Matrix{{1, -1}}), ValidationError);
    CapacityPolytope p(Matrix{{1, 0.5}, {0, 1}});
    CHECK(p.contains(0, 1));
    CHECK_FALSE(p.contains(1, 0));
    CHECK(p.pools_of(1) == std::vector<int>{0, 1});
    CHECK(p.has_full_row_rank());
    CHECK_FALSE(CapacityPolytope(Matrix{{1, 1}, {2, 2}}).has_full_row_rank());
    CHECK_FALSE(cliques_to_polytope(cycle(4)).has_full_row_rank());
}

TEST_CASE("interference graphs are simple") {
    CHECK_THROWS_AS(InterferenceGraph(3, {{0, 0}}), ValidationError);
    CHECK_THROWS_AS(InterferenceGraph(3, {{0, 1}, {1, 0}}), ValidationError);
    CHECK_THROWS_AS(InterferenceGraph(3, {{0, 3}}), ValidationError);
}

TEST_CASE("clique polytopes") {
    auto c4 = cliques_to_polytope(cycle(4));
    CHECK(c4.num_pools() == 4);
    for (std::size_t l = 0; l < 4; ++l) CHECK(c4.support(l).size() == 2);

    auto k22 = cliques_to_polytope(std::get<InterferenceGraph>(example_network("k22").capacity));
    CHECK(k22.num_pools() == 4);

    auto tri = cliques_to_polytope(InterferenceGraph(3, {{0, 1}, {0, 2}, {1, 2}}));
    REQUIRE(tri.num_pools() == 1);
    CHECK(tri.row(0) == std::vector<double>{1, 1, 1});

    auto lonely = cliques_to_polytope(InterferenceGraph(3, {{0, 1}}));
    CHECK(lonely.num_pools() == 2);
    CHECK(lonely.row(1) == std::vector<double>{0, 0, 1});

    CHECK_THROWS_AS(cliques_to_polytope(InterferenceGraph(0, {})), ValidationError);
}

TEST_CASE("maximal cliques match subset enumeration") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3 + trial % 6;
        auto g = random_graph(n, 0.5, rng);
        std::set<std::vector<int>> expected;
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            bool clique = true;
            for (int u = 0; u < n && clique; ++u) {
                for (int v = u + 1; v < n; ++v) {
                    if ((mask >> u & 1u) && (mask >> v & 1u) && !g.adjacent(u, v)) clique = false;
                }
            }
            if (!clique) continue;
            bool maximal = true;
            for (int w = 0; w < n && maximal; ++w) {
                if (mask >> w & 1u) continue;
                bool joins = true;
                for (int u = 0; u < n; ++u) {
                    if ((mask >> u & 1u) && !g.adjacent(u, w)) joins = false;
                }
                if (joins) maximal = false;
            }
            if (!maximal) continue;
            std::vector<int> c;
            for (int u = 0; u < n; ++u) {
                if (mask >> u & 1u) c.push_back(u);
            }
            expected.insert(c);
        }
        auto got = maximal_cliques(g);
        CHECK(std::is_sorted(got.begin(), got.end()));
        CHECK(std::set<std::vector<int>>(got.begin(), got.end()) == expected);
    }
}

TEST_CASE("schedule enumeration") {
    CHECK(enumerate_schedules(InterferenceGraph(2, {{0, 1}})) == ScheduleSet{{0, 0}, {1, 0}, {0, 1}});
    CHECK(enumerate_schedules(InterferenceGraph(2, {})) == ScheduleSet{{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    CHECK(enumerate_schedules(InterferenceGraph(3, {{0, 1}, {0, 2}, {1, 2}})) ==
          ScheduleSet{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    CHECK_THROWS_AS(enumerate_schedules(InterferenceGraph(25, {})), CapExceeded);
    CHECK_THROWS_AS(enumerate_schedules(InterferenceGraph(5, {}), 4), CapExceeded);
}

TEST_CASE("schedule sets are downward closed") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = random_graph(3 + trial % 7, 0.4, rng);
        auto s = enumerate_schedules(g);
        std::set<Schedule> all(s.begin(), s.end());
        for (const auto& sigma : s) {
            for (std::size_t j = 0; j < sigma.size(); ++j) {
                if (sigma[j] == 0) continue;
                Schedule less = sigma;
                less[j] = 0;
                CHECK(all.count(less) == 1);
            }
        }
    }
}

TEST_CASE("integer points of a matrix polytope") {
    auto s = enumerate_schedules(CapacityPolytope(Matrix{{1, 1}}));
    CHECK(s == ScheduleSet{{0, 0}, {0, 1}, {1, 0}});
    auto t = enumerate_schedules(CapacityPolytope(Matrix{{0.5, 0}, {0, 1}}));
    CHECK(t.size() == 6);  // s1 in {0,1,2}, s2 in {0,1}
}

TEST_CASE("perfect graph recognition") {
    CHECK_FALSE(is_perfect(cycle(5)));
    CHECK_FALSE(is_perfect(cycle(7)));
    CHECK_FALSE(is_perfect(cycle(7).complement()));
    CHECK(is_perfect(cycle(4)));
    CHECK(is_perfect(cycle(6)));
    CHECK(is_perfect(std::get<InterferenceGraph>(example_network("k22").capacity)));
    CHECK(is_perfect(std::get<InterferenceGraph>(example_network("square-grid").capacity)));
    CHECK(is_perfect(std::get<InterferenceGraph>(example_network("triangular-grid").capacity)));
    CHECK_THROWS_AS(is_perfect(InterferenceGraph(17, {})), CapExceeded);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 120; ++trial) {
        auto g = random_graph(5 + trial % 5, 0.45, rng);
        CHECK(is_perfect(g) == perfect_by_subsets(g));
    }
}

TEST_CASE("clique polytope vertices of perfect graphs are independent sets") {
    std::mt19937_64 rng(9);
    int checked = 0;
    for (int trial = 0; trial < 60 && checked < 12; ++trial) {
        const int n = 4 + trial % 3;
        auto g = random_graph(n, 0.5, rng);
        if (!is_perfect(g)) continue;
        ++checked;
        auto p = cliques_to_polytope(g);
        // Constraints: A s <= 1 and -s <= 0.
        std::vector<Eigen::VectorXd> rows;
        std::vector<double> rhs;
        for (std::size_t l = 0; l < p.num_pools(); ++l) {
            rows.push_back(Eigen::Map<const Eigen::VectorXd>(p.row(l).data(), n));
            rhs.push_back(1.0);
        }
        for (int j = 0; j < n; ++j) {
            rows.push_back(-Eigen::VectorXd::Unit(n, j));
            rhs.push_back(0.0);
        }
        const int m = static_cast<int>(rows.size());
        std::vector<int> pick(m, 0);
        std::fill(pick.begin(), pick.begin() + n, 1);
        std::sort(pick.begin(), pick.end());
        do {
            Eigen::MatrixXd M(n, n);
            Eigen::VectorXd b(n);
            int r = 0;
            for (int i = 0; i < m; ++i) {
                if (!pick[i]) continue;
                M.row(r) = rows[i].transpose();
                b(r++) = rhs[i];
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
            if (lu.rank() < n) continue;
            Eigen::VectorXd x = lu.solve(b);
            bool feasible = true;
            for (int i = 0; i < m; ++i) feasible = feasible && rows[i].dot(x) <= rhs[i] + 1e-9;
            if (!feasible) continue;
            for (int j = 0; j < n; ++j) {
                CHECK((std::abs(x(j)) < 1e-9 || std::abs(x(j) - 1.0) < 1e-9));
                for (int k = j + 1; k < n; ++k) {
                    if (x(j) > 0.5 && x(k) > 0.5) CHECK_FALSE(g.adjacent(j, k));
                }
            }
        } while (std::next_permutation(pick.begin(), pick.end()));
    }
    CHECK(checked >= 5);
}

TEST_CASE("capacity descriptions") {
    NetworkSpec listed{"s", {"q1", "q2"}, {{"r1", {0}, 0.1}}, ExplicitSchedules{{{0, 0}, {1, 0}}}};
    CHECK_THROWS_AS(polytope_of(listed), ValidationError);
    CHECK(schedules_of(listed).size() == 2);
    auto graph = example_network("one-edge");
    CHECK(polytope_of(graph).num_pools() == 1);
    CHECK(schedules_of(graph).size() == 3);
    CHECK(routes_through(example_network("two-route"), 1) == std::vector<int>{0, 1});
}
