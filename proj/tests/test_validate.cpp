#include "support.hpp"

#include "switchvi/validate.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

using namespace switchvi;
using testing::blank_problem;
using testing::load;

namespace {

std::vector<SamplePoint> some_points() {
    std::vector<SamplePoint> pts;
    for (double t : {0.0, 0.5, 1.0}) {
        for (double x : {-1.0, 0.0, 1.0}) pts.push_back({t, {x}});
    }
    return pts;
}

void set_costs(testing::json& doc, int c1, int c2, const std::function<std::string(int, int)>& lower,
               const std::function<std::string(int, int)>& upper) {
    doc["costs"] = testing::json::object();
    for (int a = 1; a <= c1; ++a) {
        for (int b = 1; b <= c1; ++b) {
            if (a != b) doc["costs"]["g_lower_" + std::to_string(a) + "_" + std::to_string(b)] = lower(a, b);
        }
    }
    for (int a = 1; a <= c2; ++a) {
        for (int b = 1; b <= c2; ++b) {
            if (a != b) doc["costs"]["g_upper_" + std::to_string(a) + "_" + std::to_string(b)] = upper(a, b);
        }
    }
}

} // namespace

TEST_CASE("terminal compatibility") {
    const std::vector<std::vector<double>> xs = {{-1.0}, {0.0}, {1.0}};
    {
        const auto f = load(blank_problem(2, 2));
        CHECK(validate_terminal(Problem(f.spec), xs).ok);
    }
    {
        auto doc = blank_problem(2, 1);
        doc["terminal"]["h_1_1"] = "1";
        doc["costs"]["g_lower_2_1"] = "0.3";
        const auto f = load(doc);
        const TerminalCheck c = validate_terminal(Problem(f.spec), xs);
        CHECK_FALSE(c.ok);
        CHECK(c.pair == ModePair{2, 1});
        CHECK(c.side == "lower");
        CHECK(c.worst == doctest::Approx(0.7));
    }
    {
        // h = i + j with costs 10 everywhere; checked against a direct enumeration of both inequalities.
        auto doc = blank_problem(3, 3);
        for (int i = 1; i <= 3; ++i) {
            for (int j = 1; j <= 3; ++j) {
                doc["terminal"]["h_" + std::to_string(i) + "_" + std::to_string(j)] = std::to_string(i + j);
            }
        }
        set_costs(doc, 3, 3, [](int, int) { return "10"; }, [](int, int) { return "10"; });
        const auto f = load(doc);
        bool expected = true;
        for (int i = 1; i <= 3; ++i) {
            for (int j = 1; j <= 3; ++j) {
                for (int k = 1; k <= 3; ++k) {
                    if (k != i) expected = expected && (k + j) - 10 <= i + j;
                    if (k != j) expected = expected && i + j <= (i + k) + 10;
                }
            }
        }
        CHECK(expected);
        CHECK(validate_terminal(Problem(f.spec), xs).ok == expected);
    }
}

TEST_CASE("loop enumeration") {
    const auto loops = enumerate_loops(ModeSpace{2, 2}, 1000);
    REQUIRE_FALSE(loops.empty());
    // back-and-forth moves of one player come first, then the square in which both players move
    CHECK(loops.front() == std::vector<ModePair>{{1, 1}, {2, 1}, {1, 1}});
    const auto mixed = std::find_if(loops.begin(), loops.end(), [](const auto& l) {
        bool p1 = false, p2 = false;
        for (std::size_t q = 0; q + 1 < l.size(); ++q) (l[q].i != l[q + 1].i ? p1 : p2) = true;
        return p1 && p2;
    });
    REQUIRE(mixed != loops.end());
    CHECK(*mixed == std::vector<ModePair>{{1, 1}, {2, 1}, {2, 2}, {1, 2}, {1, 1}});
    for (const auto& l : loops) {
        CHECK(l.front() == l.back());
        for (std::size_t q = 0; q + 1 < l.size(); ++q) {
            CHECK(((l[q].i == l[q + 1].i) != (l[q].j == l[q + 1].j)));
        }
    }
    CHECK(enumerate_cycles(3).size() == 5); // 3 two-cycles + 2 three-cycles
}

TEST_CASE("no free loop") {
    {
        auto doc = blank_problem(3, 3);
        set_costs(
            doc, 3, 3, [](int a, int b) { return std::to_string(std::abs(a - b)); },
            [](int a, int b) { return "sqrt(2)*" + std::to_string(std::abs(a - b)); });
        const auto f = load(doc);
        const LoopReport r = validate_no_free_loop(Problem(f.spec), some_points());
        CHECK(r.no_free_loop.ok);
        CHECK(r.cycle_lower.ok);
        CHECK(r.cycle_upper.ok);
    }
    {
        auto doc = blank_problem(2, 2);
        set_costs(doc, 2, 2, [](int, int) { return "0"; }, [](int, int) { return "0"; });
        const auto f = load(doc);
        const LoopReport r = validate_no_free_loop(Problem(f.spec), some_points());
        CHECK_FALSE(r.no_free_loop.ok);
        REQUIRE(r.no_free_loop.witness);
        CHECK(r.no_free_loop.witness->loop == std::vector<ModePair>{{1, 1}, {2, 1}, {2, 2}, {1, 2}, {1, 1}});
        CHECK(r.no_free_loop.witness->sum == 0.0);
    }
    {
        // Unit costs on both sides: the mixed-sign square sums to -1+1-1+1 = 0.
        auto doc = blank_problem(2, 2);
        set_costs(doc, 2, 2, [](int, int) { return "1"; }, [](int, int) { return "1"; });
        const auto f = load(doc);
        const LoopReport r = validate_no_free_loop(Problem(f.spec), some_points());
        CHECK_FALSE(r.no_free_loop.ok);
        REQUIRE(r.no_free_loop.witness);
        CHECK(r.no_free_loop.witness->loop == std::vector<ModePair>{{1, 1}, {2, 1}, {2, 2}, {1, 2}, {1, 1}});
        CHECK(r.cycle_lower.ok);
        CHECK(r.cycle_upper.ok);
    }
    {
        // Irrational ratio between the two players' costs.
        const auto f = testing::load_shipped("d1.json");
        CHECK(validate_no_free_loop(Problem(f.spec), some_points()).no_free_loop.ok);
    }
}

TEST_CASE("cost sign and full report") {
    auto doc = blank_problem(2, 1);
    doc["costs"]["g_lower_1_2"] = "x1";
    const auto f = load(doc);
    const NonnegCheck c = validate_cost_nonneg(Problem(f.spec), some_points());
    CHECK_FALSE(c.ok);
    REQUIRE(c.witness);
    CHECK(c.witness->matrix == "g_lower");
    CHECK(c.witness->from == 1);
    CHECK(c.witness->to == 2);
    CHECK(c.witness->value == -1.0);
}

TEST_CASE("shipped fixtures") {
    auto run = [](const char* name) {
        testing::Setup s(testing::load_shipped(name));
        return validate(s.problem, grid_samples(*s.grid, 4000));
    };
    CHECK(run("d1.json").ok());
    CHECK(run("heat.json").ok());

    const ValidationReport loop = run("free_loop.json");
    CHECK(loop.terminal.ok);
    CHECK_FALSE(loop.loops.no_free_loop.ok);
    REQUIRE(loop.loops.no_free_loop.witness);
    CHECK(loop.loops.no_free_loop.witness->loop == std::vector<ModePair>{{1, 1}, {2, 1}, {2, 2}, {1, 2}, {1, 1}});

    const ValidationReport h3 = run("terminal_violation.json");
    CHECK_FALSE(h3.terminal.ok);
    CHECK(h3.loops.no_free_loop.ok);
    // pos(x)(i+j)/4 against costs 0.3 and 0.3*sqrt(2): worst at the box edge x = 3, lower side, pair (1,2)
    CHECK(h3.terminal.pair == ModePair{1, 2});
    CHECK(h3.terminal.x == std::vector<double>{3.0});
    CHECK(h3.terminal.worst == doctest::Approx(3.0 / 4 - 0.3));

    const ValidationReport neg = run("negative_cost.json");
    CHECK_FALSE(neg.cost_nonneg.ok);
}
