#include "support.hpp"

#include "switchvi/bilateral.hpp"
#include "switchvi/schemes.hpp"

#include <doctest.h>

#include <cmath>

using namespace switchvi;
using testing::blank_problem;

TEST_CASE("prohibitive costs leave the obstacles slack") {
    auto doc = blank_problem(2, 2);
    doc["dynamics"]["sigma"] = {{"0.5"}};
    for (auto& [k, v] : doc["costs"].items()) v = k.rfind("g_lower", 0) == 0 ? "1e6" : "1.5e6";
    doc["generators"]["f_1_1"] = "sin(x1)";
    doc["generators"]["f_2_1"] = "y_1_1 - y_2_1";
    doc["terminal"]["h_1_2"] = "x1";
    doc["grid"] = {{"lo", {-1}}, {"hi", {1}}, {"nodes", {21}}, {"time_steps", 10}};
    testing::Setup s(doc);
    PenalizedConfig free;
    free.fixed_point_tol = 1e-12;
    const Solution ref = solve_penalized(s.problem, s.grid, free);
    BilateralConfig cfg;
    cfg.tol = 1e-12;
    for (Variant v : {Variant::min_first, Variant::max_first}) {
        cfg.variant = v;
        CHECK(max_abs_diff(solve_bilateral(s.problem, s.grid, cfg).field, ref.field) <= 1e-10);
    }
}

TEST_CASE("zero data gives the zero solution") {
    auto doc = blank_problem(2, 3);
    doc["costs"]["g_upper_1_3"] = "0.25";
    doc["grid"]["time_steps"] = 4;
    testing::Setup s(doc);
    const Solution sol = solve_bilateral(s.problem, s.grid, {});
    for (double v : sol.field.data()) CHECK(v == 0.0);
}

TEST_CASE("solver meets its own termination contract") {
    testing::Setup s(testing::load_shipped("d1.json"));
    for (double tol : {1e-6, 1e-8}) {
        BilateralConfig cfg;
        cfg.tol = tol;
        const Solution sol = solve_bilateral(s.problem, s.grid, cfg);
        const ComplementarityResidual r = residual(sol.field, s.problem, Variant::min_first);
        CHECK(r.max_interior <= 10 * tol);
        const Feasibility f = feasibility(sol.field, s.problem, 10 * tol);
        CHECK(f.lower_violation <= 10 * tol);
        CHECK(f.upper_violation <= 10 * tol);
    }
}

TEST_CASE("residual of a broadcast terminal field") {
    auto doc = blank_problem(2, 1);
    doc["generators"]["f_1_1"] = "1";
    doc["generators"]["f_2_1"] = "1";
    doc["terminal"]["h_2_1"] = "x1";
    doc["costs"]["g_lower_1_2"] = "0.5";
    doc["costs"]["g_lower_2_1"] = "0.25";
    doc["grid"]["time_steps"] = 3;
    testing::Setup s(doc);
    ValueField f(s.grid, s.problem.modes());
    std::vector<double> h(f.slice_size());
    fill_terminal(s.problem, *s.grid, h);
    for (std::size_t sl = 0; sl < s.grid->slices(); ++sl) std::copy(h.begin(), h.end(), f.slice(sl).begin());

    for (Variant variant : {Variant::min_first, Variant::max_first}) {
        const ComplementarityResidual r = residual(f, s.problem, variant);
        const std::size_t nodes = s.grid->node_count();
        for (std::size_t sl = 0; sl < 3; ++sl) {
            for (std::size_t n = 0; n < nodes; ++n) {
                const double x = s.grid->coordinate(n, 0);
                // v11 = 0, v21 = x; the time derivative and the generator vanish, -f = -1
                const double lo11 = x - 0.5;
                const double lo21 = 0.0 - 0.25;
                const double pde = -1.0;
                const double up = INFINITY;
                auto rule = [&](double v, double lo) {
                    return variant == Variant::min_first ? std::min(v - lo, std::max(v - up, pde))
                                                         : std::max(v - up, std::min(v - lo, pde));
                };
                CHECK(r.at(sl, 0, n) == doctest::Approx(rule(0.0, lo11)));
                CHECK(r.at(sl, 1, n) == doctest::Approx(rule(x, lo21)));
            }
        }
    }
}

TEST_CASE("perturbing a converged node shows up in the residual") {
    testing::Setup s(testing::load_shipped("d1.json"));
    BilateralConfig cfg;
    Solution sol = solve_bilateral(s.problem, s.grid, cfg);
    const std::size_t slice = 30, node = 60, pair = 1;
    sol.field.at(slice, pair, node) += 1.0;
    const ComplementarityResidual r = residual(sol.field, s.problem, Variant::min_first);
    // Before the bump either the PDE part was >= 0 or v sat on U. Afterwards v - L, v - U and the
    // PDE part (which gains at least 1/dt) each grow by at least one where they mattered.
    CHECK(r.at(slice, pair, node) >= 1.0 - 1e-6);
}

TEST_CASE("comparison under a generator shift") {
    testing::Setup s(testing::load_shipped("d1.json"));
    const Solution base = solve_bilateral(s.problem, s.grid, {});
    const Solution up = solve_bilateral(s.problem.with_generator_shift(1.0), s.grid, {});
    CHECK(compare_sub_super(base.field, up.field) <= 1e-7);
    CHECK(compare_sub_super(base.field, base.field) == 0.0);
    CHECK(compare_sub_super(up.field, base.field) > 0.5);
}

TEST_CASE("max-first lies below min-first") {
    testing::Setup s(testing::load_shipped("d1.json"));
    BilateralConfig a;
    BilateralConfig b;
    b.variant = Variant::max_first;
    const Solution mn = solve_bilateral(s.problem, s.grid, a);
    const Solution mx = solve_bilateral(s.problem, s.grid, b);
    CHECK(compare_sub_super(mx.field, mn.field) <= 1e-7);
    MESSAGE("max |min_first - max_first| = " << max_abs_diff(mn.field, mx.field));
}

TEST_CASE("sweep start does not change the answer") {
    testing::Setup s(testing::load_shipped("d1.json"));
    BilateralConfig a;
    a.initial_guess = InitialGuess::zeros;
    BilateralConfig b;
    b.initial_guess = InitialGuess::terminal;
    CHECK(max_abs_diff(solve_bilateral(s.problem, s.grid, a).field, solve_bilateral(s.problem, s.grid, b).field) <=
          1e-7);
}

TEST_CASE("free loops are refused unless forced") {
    testing::Setup s(testing::load_shipped("free_loop.json"));
    CHECK_THROWS_AS(solve_bilateral(s.problem, s.grid, {}), AssumptionError);
    BilateralConfig cfg;
    cfg.force = true;
    cfg.max_iters = 50;
    // With zero costs every pair is squeezed to the same value; the iteration may or may not settle.
    try {
        solve_bilateral(s.problem, s.grid, cfg);
    } catch (const ConvergenceError&) {
    }
}

TEST_CASE("variant names") {
    CHECK(variant_from_string("min_first") == Variant::min_first);
    CHECK(variant_from_string("max") == Variant::max_first);
    CHECK(to_string(Variant::max_first) == "max_first");
    CHECK_THROWS(variant_from_string("middle"));
}
