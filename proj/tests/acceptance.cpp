// Acceptance suite: one line per criterion, tolerances as stated in the criteria.
//
//   switchvi_acceptance [--known-failure N]...
//
// Exit status is the number of failed criteria that were not declared known failures.

#include "switchvi/bilateral.hpp"
#include "switchvi/oracle.hpp"
#include "switchvi/problem_file.hpp"
#include "switchvi/schemes.hpp"
#include "switchvi/validate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

using namespace switchvi;

namespace {

struct Desk {
    ProblemFile file;
    Problem problem;
    std::shared_ptr<const Grid> grid;

    explicit Desk(const std::string& name)
        : file(load_problem_file(std::string(SWITCHVI_PROBLEMS_DIR) + "/" + name)), problem(file.spec),
          grid(std::make_shared<const Grid>(build_grid(file.grid, problem))) {}

    std::shared_ptr<const Grid> regrid(int nodes, int steps) const {
        GridSpec g = file.grid;
        g.nodes = {nodes};
        g.time_steps = steps;
        return std::make_shared<const Grid>(build_grid(g, problem));
    }
};

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

PenalizedConfig tight_penalized(PenaltyKind kind) {
    PenalizedConfig cfg;
    cfg.kind = kind;
    cfg.fixed_point_tol = 1e-10;
    return cfg;
}

BilateralConfig tight_bilateral() {
    BilateralConfig cfg;
    cfg.tol = 1e-8;
    return cfg;
}

Outcome double_monotonicity(const Desk& d) {
    const std::vector<double> levels = {0, 1, 2, 4, 8};
    std::vector<std::pair<double, double>> schedule;
    for (double n : levels) {
        for (double m : levels) schedule.emplace_back(n, m);
    }
    const ScheduleResult r = run_schedule(d.problem, d.grid, tight_penalized(PenaltyKind::doubly), schedule, 4);
    double vn = 0.0, vm = 0.0;
    for (const auto& c : r.checks) (c.index == 'n' ? vn : vm) = std::max(c.index == 'n' ? vn : vm, c.violation);
    return {vn <= 1e-7 && vm <= 1e-7 && r.checks.size() == 40,
            fmt("%.0f comparisons, increase-in-n violation %.2e, decrease-in-m violation %.2e (tol 1e-7)",
                static_cast<double>(r.checks.size()), vn, vm)};
}

Outcome family_ordering(const Desk& d) {
    const std::vector<double> levels = {1, 4, 16};
    std::vector<std::pair<double, double>> sn, sm;
    for (double q : levels) {
        sn.emplace_back(q, 0.0);
        sm.emplace_back(0.0, q);
    }
    const ScheduleResult lower = run_schedule(d.problem, d.grid, tight_penalized(PenaltyKind::upper_only), sn, 3);
    const ScheduleResult upper = run_schedule(d.problem, d.grid, tight_penalized(PenaltyKind::lower_only), sm, 3);
    double worst = 0.0;
    for (const auto& a : lower.members) {
        for (const auto& b : upper.members) worst = std::max(worst, compare_sub_super(a.field, b.field));
    }
    return {worst <= 1e-7, fmt("max over 9 pairs of (v_n - v^m)+ = %.2e (tol 1e-7)", worst)};
}

Outcome decreasing_limit(const Desk& d) {
    const StagnationResult st =
        run_to_stagnation(d.problem, d.grid, tight_penalized(PenaltyKind::lower_only), 1.0, 1e-4, 40);
    const Solution bil = solve_bilateral(d.problem, d.grid, tight_bilateral());
    const double gap = max_abs_diff(st.last.back().field, bil.field);
    return {st.stagnated && gap <= 5e-2,
            fmt("stagnated at m=%.0f (last change %.2e); gap to bilateral-min %.2e (tol 5e-2)", st.penalties.back(),
                st.changes.back(), gap)};
}

Outcome complementarity(const Desk& d) {
    const Solution sol = solve_bilateral(d.problem, d.grid, tight_bilateral());
    const ComplementarityResidual r = residual(sol.field, d.problem, Variant::min_first);
    const Feasibility f = feasibility(sol.field, d.problem, 1e-6);
    return {r.max_interior <= 1e-6 && f.lower_violation <= 1e-6 && f.upper_violation <= 1e-6,
            fmt("interior residual %.2e, lower violation %.2e, upper violation %.2e (tol 1e-6)", r.max_interior,
                f.lower_violation, f.upper_violation)};
}

Outcome oracle_equivalence(const Desk& d) {
    if (d.problem.generators_use_z()) return {false, "generators depend on z"};
    const std::vector<double> x0 = {0.0};
    auto gap_at = [&](int nodes, int steps) {
        const Solution sol = solve_bilateral(d.problem, d.regrid(nodes, steps), tight_bilateral());
        const OracleResult o = switching_game_value(build_tree(d.problem, x0, steps), d.problem);
        double gap = 0.0;
        for (std::size_t p = 0; p < o.root.size(); ++p) {
            gap = std::max(gap, std::fabs(o.root[p] - interpolate(sol.field, d.problem.modes().pair(p), 0.0, x0)));
        }
        return gap;
    };
    const double g30 = gap_at(61, 30);
    const double g60 = gap_at(121, 60);
    const double g120 = gap_at(241, 120);
    const bool decreasing = g60 <= 1.2 * g30 && g120 <= 1.2 * g60;
    return {g60 <= 5e-2 && decreasing,
            fmt("gap at 60 steps %.2e (tol 5e-2); refinement gaps 30/60/120: %.2e", g60, g30) +
                fmt(", %.2e, %.2e (each <= 1.2x previous)", g60, g120)};
}

Outcome uniqueness(const Desk& d) {
    BilateralConfig a = tight_bilateral();
    a.initial_guess = InitialGuess::zeros;
    BilateralConfig b = tight_bilateral();
    b.initial_guess = InitialGuess::terminal;
    const double gap =
        max_abs_diff(solve_bilateral(d.problem, d.grid, a).field, solve_bilateral(d.problem, d.grid, b).field);
    return {gap <= 1e-7, fmt("zeros vs terminal start, max gap %.2e (tol 1e-7)", gap)};
}

Outcome comparison(const Desk& d) {
    const Solution base = solve_bilateral(d.problem, d.grid, tight_bilateral());
    const Solution up = solve_bilateral(d.problem.with_generator_shift(0.1), d.grid, tight_bilateral());
    const double v = compare_sub_super(base.field, up.field);
    return {v <= 1e-7, fmt("(v_f - v_{f+0.1})+ = %.2e (tol 1e-7)", v)};
}

Outcome validators() {
    auto run = [](const char* name) {
        const Desk d(name);
        return validate(d.problem, grid_samples(*d.grid, 4000));
    };
    const ValidationReport ok = run("d1.json");
    const ValidationReport loop = run("free_loop.json");
    const ValidationReport h3 = run("terminal_violation.json");
    const std::vector<ModePair> square = {{1, 1}, {2, 1}, {2, 2}, {1, 2}, {1, 1}};
    const bool loop_ok = !loop.ok() && !loop.loops.no_free_loop.ok && loop.loops.no_free_loop.witness &&
                         loop.loops.no_free_loop.witness->loop == square &&
                         loop.loops.no_free_loop.witness->sum == 0.0;
    // Worst terminal-compatibility excess by direct enumeration over the same sample abscissae,
    // with h^{ij}(x) = pos(x)(i+j)/4 and costs 0.3 (player 1), 0.3*sqrt(2) (player 2).
    double worst = -INFINITY;
    double worst_x = 0.0;
    std::vector<double> pair_excess(4, -INFINITY);
    for (const auto& p : grid_samples(*Desk("terminal_violation.json").grid, 4000)) {
        const double x = p.x[0];
        auto h = [&](int i, int j) { return std::max(x, 0.0) * (i + j) / 4.0; };
        for (int i = 1; i <= 2; ++i) {
            for (int j = 1; j <= 2; ++j) {
                const double e = std::max(h(3 - i, j) - 0.3 - h(i, j), h(i, j) - h(i, 3 - j) - 0.3 * std::sqrt(2.0));
                auto& slot = pair_excess[static_cast<std::size_t>((i - 1) * 2 + (j - 1))];
                slot = std::max(slot, e);
                if (e > worst) {
                    worst = e;
                    worst_x = x;
                }
            }
        }
    }
    const double reported = pair_excess[static_cast<std::size_t>((h3.terminal.pair.i - 1) * 2 + (h3.terminal.pair.j - 1))];
    const bool h3_ok = !h3.ok() && !h3.terminal.ok && h3.loops.no_free_loop.ok && h3.terminal.x == std::vector<double>{worst_x} &&
                       std::fabs(h3.terminal.worst - worst) <= 1e-12 && std::fabs(reported - worst) <= 1e-12;
    return {ok.ok() && loop_ok && h3_ok,
            std::string("D1 ") + (ok.ok() ? "accepted" : "REJECTED") + "; zero-cost loop " +
                (loop_ok ? "rejected with witness " + describe(*loop.loops.no_free_loop.witness) : "NOT rejected") +
                "; terminal violation " +
                (h3_ok ? "rejected at pair " + to_string(h3.terminal.pair) + fmt(" x=%g, excess %.3g", worst_x, worst)
                       : "NOT rejected as expected")};
}

Outcome heat() {
    const Desk d("heat.json");
    const std::vector<double> origin = {0.0};
    auto error_at = [&](int steps) {
        const Solution sol = solve_bilateral(d.problem, d.regrid(121, steps), tight_bilateral());
        return std::fabs(interpolate(sol.field, {1, 1}, 0.0, origin) - 1.0);
    };
    const double e1 = error_at(60);
    const double e2 = error_at(120);
    const double order = std::log2(e1 / e2);
    return {e1 <= 2e-2 && order >= 1.0,
            fmt("|v(0,0) - 1| = %.3e at 60 steps (tol 2e-2), %.3e at 120 steps; observed order in dt %.2f (need >= 1)",
                e1, e2, order)};
}

Outcome variant_gap(const Desk& d) {
    BilateralConfig mx = tight_bilateral();
    mx.variant = Variant::max_first;
    const Solution a = solve_bilateral(d.problem, d.grid, tight_bilateral());
    const Solution b = solve_bilateral(d.problem, d.grid, mx);
    const double v = compare_sub_super(b.field, a.field);
    return {v <= 1e-7, fmt("(max_first - min_first)+ = %.2e (tol 1e-7); max |gap| %.2e reported, not asserted", v,
                           max_abs_diff(a.field, b.field))};
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> known;
    for (int a = 1; a < argc; ++a) {
        const std::string arg = argv[a];
        if (arg == "--known-failure" && a + 1 < argc) {
            known.insert(std::atoi(argv[++a]));
        } else {
            std::fprintf(stderr, "usage: %s [--known-failure N]...\n", argv[0]);
            return 64;
        }
    }

    const Desk d1("d1.json");
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "penalized double-index monotonicity", 120, [&] { return double_monotonicity(d1); }},
        {2, "family ordering", 120, [&] { return family_ordering(d1); }},
        {3, "decreasing limit identification", 180, [&] { return decreasing_limit(d1); }},
        {4, "complementarity residual and feasibility", 0, [&] { return complementarity(d1); }},
        {5, "oracle equivalence", 0, [&] { return oracle_equivalence(d1); }},
        {6, "uniqueness probe", 0, [&] { return uniqueness(d1); }},
        {7, "comparison audit", 0, [&] { return comparison(d1); }},
        {8, "validator correctness", 0, [] { return validators(); }},
        {9, "heat-equation benchmark", 0, [] { return heat(); }},
        {10, "max_first <= min_first", 0, [&] { return variant_gap(d1); }},
    };

    int unexpected = 0;
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += fmt("; runtime %.1f s over budget", secs);
        }
        const bool excused = !o.pass && known.count(c.id) > 0;
        failed += o.pass ? 0 : 1;
        unexpected += (o.pass || excused) ? 0 : 1;
        std::printf("[%s] %2d %-42s %6.2fs  %s%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str(),
                    excused ? "  [known failure]" : "");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria pass", static_cast<int>(criteria.size()) - failed, criteria.size());
    if (failed > unexpected) std::printf(" (%d known failure%s)", failed - unexpected, failed - unexpected == 1 ? "" : "s");
    std::printf("\n");
    return unexpected;
}
