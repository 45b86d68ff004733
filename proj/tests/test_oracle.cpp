#include "support.hpp"

#include "switchvi/bilateral.hpp"
#include "switchvi/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace switchvi;
using testing::blank_problem;

namespace {

Problem make(const testing::json& doc) { return Problem(testing::load(doc).spec); }

} // namespace

TEST_CASE("lattice shape") {
    const std::vector<double> x0 = {0.25};
    {
        const TreeModel t = build_tree(make(blank_problem(1, 1)), x0, 5);
        for (int l = 0; l <= 5; ++l) CHECK(t.level_size(l) == 1);
        CHECK(t.coordinates(5, 0) == x0);
        CHECK(t.probability(2, 0, 0, 1) == 1.0);
    }
    {
        auto doc = blank_problem(1, 1);
        doc["dynamics"]["sigma"] = {{"1"}};
        const TreeModel t = build_tree(make(doc), x0, 2);
        CHECK(t.level_size(1) == 3);
        CHECK(t.level_size(2) == 5);
        CHECK(t.total_nodes() == 9);
    }
    {
        auto doc = blank_problem(1, 1);
        doc["dynamics"] = {{"b", {"0", "0"}}, {"sigma", testing::matrix({{"1", "0"}, {"0", "0.5"}})}};
        testing::two_dimensional(doc);
        const std::vector<double> origin = {0.0, 0.0};
        const TreeModel t = build_tree(make(doc), origin, 3);
        CHECK(t.level_size(3) == 49);
    }
}

TEST_CASE("branch probabilities match the local moments") {
    auto doc = blank_problem(1, 1);
    doc["dynamics"] = {{"b", {"0.3*sin(x1)"}}, {"sigma", {{"0.8 + 0.1*cos(x1)"}}}};
    const Problem p = make(doc);
    const std::vector<double> x0 = {0.1};
    const TreeModel t = build_tree(p, x0, 40);
    Problem::Evaluator ev(p);
    for (int level = 0; level < 40; level += 7) {
        for (std::size_t n = 0; n < t.level_size(level); n += 5) {
            const std::vector<double> x = t.coordinates(level, n);
            ev.set_point(t.time(level), x);
            const double h = t.spacing(0);
            const double pd = t.probability(level, n, 0, 0), pm = t.probability(level, n, 0, 1),
                         pu = t.probability(level, n, 0, 2);
            CHECK(pd >= 0.0);
            CHECK(pu >= 0.0);
            CHECK(pd + pm + pu == doctest::Approx(1.0).epsilon(1e-14));
            CHECK((pu - pd) * h == doctest::Approx(ev.drift(0) * t.dt()).epsilon(1e-12));
            const double a = ev.vol(0, 0) * ev.vol(0, 0);
            CHECK((pu + pd) * h * h == doctest::Approx((a + ev.drift(0) * ev.drift(0) * t.dt()) * t.dt()).epsilon(1e-12));
        }
    }
}

TEST_CASE("lattice errors are loud") {
    const std::vector<double> x0 = {0.0};
    auto drift = blank_problem(1, 1);
    drift["dynamics"] = {{"b", {"5*x1 + 1"}}, {"sigma", {{"0.1"}}}};
    try {
        build_tree(make(drift), x0, 2);
        FAIL("expected a probability error");
    } catch (const OracleError& e) {
        CHECK(std::string(e.what()).find("steps") != std::string::npos);
    }
    auto corr = blank_problem(1, 1);
    corr["dynamics"] = {{"b", {"0", "0"}}, {"sigma", testing::matrix({{"1", "0"}, {"1", "1"}})}};
    testing::two_dimensional(corr);
    const std::vector<double> x2 = {0.0, 0.0};
    CHECK_THROWS_AS(build_tree(make(corr), x2, 2), OracleError);
    auto big = blank_problem(1, 1);
    big["dynamics"]["sigma"] = {{"1"}};
    CHECK_THROWS_AS(build_tree(make(big), x0, 100, TreeOptions{50}), OracleError);
}

TEST_CASE("switching game on small lattices") {
    SUBCASE("no steps returns the terminal data") {
        auto doc = blank_problem(2, 2);
        doc["terminal"]["h_2_2"] = "x1 + 1";
        doc["terminal"]["h_1_2"] = "0.5";
        doc["costs"]["g_upper_1_2"] = "3";
        const std::vector<double> x0 = {0.5};
        const OracleResult r = switching_game_value(build_tree(make(doc), x0, 0), make(doc));
        CHECK(r.root == std::vector<double>{0.0, 0.5, 0.0, 1.5});
    }
    SUBCASE("one step with a binding lower obstacle") {
        auto doc = blank_problem(2, 1);
        doc["terminal"]["h_2_1"] = "1";
        doc["costs"]["g_lower_1_2"] = "0.2";
        const Problem p = make(doc);
        const std::vector<double> x0 = {0.0};
        const OracleResult r = switching_game_value(build_tree(p, x0, 1), p);
        // Alternatives at the root for (1,1): continue with 0 or switch to (2,1) for 1 - 0.2.
        const double c11 = 0.0, c21 = 1.0;
        const double v21 = std::max(c21, c11 - 1.0);
        const double v11 = std::max(v21 - 0.2, c11);
        CHECK(r.root[0] == doctest::Approx(v11).epsilon(1e-15));
        CHECK(r.root[0] == doctest::Approx(0.8));
        CHECK(r.root[1] == doctest::Approx(v21));
    }
    SUBCASE("prohibitive costs give plain expectations") {
        auto doc = blank_problem(2, 2);
        doc["dynamics"]["sigma"] = {{"0.6"}};
        for (auto& [k, v] : doc["costs"].items()) v = "1e6";
        doc["terminal"]["h_1_1"] = "x1^2";
        doc["terminal"]["h_2_2"] = "exp(x1)";
        const Problem p = make(doc);
        const std::vector<double> x0 = {0.2};
        const TreeModel t = build_tree(p, x0, 30);
        const OracleResult r = switching_game_value(t, p);
        // Backward expectation over the same lattice, done directly.
        for (std::size_t pair : {0u, 3u}) {
            std::vector<double> next(t.level_size(30));
            for (std::size_t n = 0; n < next.size(); ++n) {
                const double x = t.coordinates(30, n)[0];
                next[n] = pair == 0 ? x * x : std::exp(x);
            }
            for (int level = 29; level >= 0; --level) {
                std::vector<double> cur(t.level_size(level));
                for (std::size_t n = 0; n < cur.size(); ++n) cur[n] = t.expect(level, n, next);
                next = cur;
            }
            CHECK(r.root[pair] == doctest::Approx(next[0]).epsilon(1e-13));
        }
        // closed forms with matched first two moments: E[X^2] = x0^2 + 0.36
        CHECK(r.root[0] == doctest::Approx(0.04 + 0.36).epsilon(1e-12));
    }
}

TEST_CASE("oracle agrees with the grid solver on the desk problem") {
    testing::Setup s(testing::load_shipped("d1.json"));
    const Solution sol = solve_bilateral(s.problem, s.grid, {});
    const std::vector<double> x0 = {0.0};
    const OracleResult r = switching_game_value(build_tree(s.problem, x0, 60), s.problem);
    for (std::size_t p = 0; p < 4; ++p) {
        CHECK(std::fabs(r.root[p] - interpolate(sol.field, s.problem.modes().pair(p), 0.0, x0)) <= 5e-2);
    }
    // penalized update at large penalties lands near the projected one
    OracleOptions pen;
    pen.update = NodalUpdate::penalized;
    pen.n = 1e4;
    pen.m = 1e4;
    const OracleResult q = switching_game_value(build_tree(s.problem, x0, 60), s.problem, pen);
    for (std::size_t p = 0; p < 4; ++p) CHECK(q.root[p] == doctest::Approx(r.root[p]).epsilon(1e-2));
}

TEST_CASE("two-obstacle stopping game") {
    const Problem still = make(blank_problem(1, 1));
    const std::vector<double> x0 = {0.0};
    auto e = [](const char* s) { return Expression::parse(s); };
    {
        const TreeModel t = build_tree(still, x0, 4);
        CHECK(dynkin_value(t, e("-1"), e("1"), e("0"), e("0")) == 0.0);
        // hand recursion v = min(0.5, v_next + 0.25) from 0
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v = std::max(-10.0, std::min(0.5, v + 0.25));
        CHECK(v == 0.5);
        CHECK(dynkin_value(t, e("-10"), e("0.5"), e("1"), e("0")) == doctest::Approx(v).epsilon(1e-15));
        CHECK(dynkin_value(t, e("0.3"), e("0.3"), e("1"), e("0.3")) == 0.3);
    }
    auto doc = blank_problem(1, 1);
    doc["dynamics"]["sigma"] = {{"1"}};
    const Problem bm = make(doc);
    const TreeModel t = build_tree(bm, x0, 50);
    // American-style band around a martingale payoff: obstacles that never bind reproduce E[xi]
    CHECK(dynkin_value(t, e("-100"), e("100"), e("0"), e("x1^2")) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS(dynkin_value(t, e("1"), e("0"), e("0"), e("0")));
    CHECK_THROWS(dynkin_value(t, e("-1"), e("1"), e("0"), e("t")));
}
