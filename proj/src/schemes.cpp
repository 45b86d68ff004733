#include "switchvi/schemes.hpp"

#include "engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <optional>
#include <stdexcept>
#include <thread>

namespace switchvi {

std::vector<std::string> PenalizedConfig::check() const {
    if (!(n >= 0.0) || !(m >= 0.0) || !std::isfinite(n) || !std::isfinite(m)) {
        throw std::invalid_argument("penalties n and m must be finite and non-negative");
    }
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw std::invalid_argument("theta must lie in [0, 1]");
    }
    if (!(fixed_point_tol > 0.0)) {
        throw std::invalid_argument("fixed_point_tol must be positive");
    }
    if (max_inner_iters < 1) {
        throw std::invalid_argument("max_inner_iters must be at least 1");
    }
    if (!(damping > 0.0 && damping <= 1.0)) {
        throw std::invalid_argument("damping must lie in (0, 1]");
    }
    if (!(exp_shift_lambda >= 0.0) || !std::isfinite(exp_shift_lambda)) {
        throw std::invalid_argument("exp_shift_lambda must be finite and non-negative");
    }
    std::vector<std::string> warnings;
    if (theta < 1.0 && (n > 0.0 || m > 0.0)) {
        warnings.push_back("theta < 1 with non-zero penalties: large penalties need the fully implicit scheme");
    }
    return warnings;
}

namespace {

detail::EngineSettings engine_settings(const PenalizedConfig& cfg) {
    detail::EngineSettings s;
    switch (cfg.kind) {
    case PenaltyKind::doubly:
        s.rule = detail::NodalRule::penalized;
        s.n = cfg.n;
        s.m = cfg.m;
        break;
    case PenaltyKind::lower_only:
        s.rule = detail::NodalRule::reflect_lower;
        s.m = cfg.m;
        break;
    case PenaltyKind::upper_only:
        s.rule = detail::NodalRule::reflect_upper;
        s.n = cfg.n;
        break;
    }
    s.theta = cfg.theta;
    s.tol = cfg.fixed_point_tol;
    s.max_iters = cfg.max_inner_iters;
    s.damping = cfg.damping;
    s.lambda = cfg.exp_shift_lambda;
    s.init = cfg.initial_guess;
    return s;
}

} // namespace

SliceStats step_backward(const Problem& problem, std::shared_ptr<const Grid> grid, const PenalizedConfig& cfg,
                         std::size_t slice, std::span<const double> next, std::span<double> out) {
    cfg.check();
    if (slice >= static_cast<std::size_t>(grid->time_steps())) {
        throw std::invalid_argument("slice index out of range for a backward step");
    }
    std::vector<double> terminal;
    if (cfg.initial_guess == InitialGuess::terminal) {
        terminal.resize(next.size());
        fill_terminal(problem, *grid, terminal);
    }
    detail::SliceEngine engine(problem, grid, engine_settings(cfg));
    return engine.step(slice, next, out, terminal);
}

Solution solve_penalized(const Problem& problem, std::shared_ptr<const Grid> grid, const PenalizedConfig& cfg) {
    auto warnings = cfg.check();
    Solution sol = detail::backward_solve(problem, std::move(grid), engine_settings(cfg));
    sol.report.warnings.insert(sol.report.warnings.begin(), warnings.begin(), warnings.end());
    return sol;
}

double ScheduleResult::worst_violation() const {
    double worst = 0.0;
    for (const auto& c : checks) worst = std::max(worst, c.violation);
    return worst;
}

ScheduleResult run_schedule(const Problem& problem, std::shared_ptr<const Grid> grid, const PenalizedConfig& base,
                            const std::vector<std::pair<double, double>>& schedule, int threads) {
    if (schedule.empty()) {
        throw std::invalid_argument("penalty schedule is empty");
    }
    base.check();
    const std::size_t count = schedule.size();
    std::vector<std::optional<Solution>> slots(count);
    std::vector<std::exception_ptr> errors(count);

    auto solve_one = [&](std::size_t q) {
        try {
            PenalizedConfig cfg = base;
            cfg.n = schedule[q].first;
            cfg.m = schedule[q].second;
            slots[q].emplace(solve_penalized(problem, grid, cfg));
        } catch (...) {
            errors[q] = std::current_exception();
        }
    };

    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t q = 0; q < count; ++q) solve_one(q);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t q = next++; q < count; q = next++) solve_one(q);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    ScheduleResult result;
    result.schedule = schedule;
    for (auto& s : slots) result.members.push_back(std::move(*s));

    const bool check_n = base.kind != PenaltyKind::lower_only;
    const bool check_m = base.kind != PenaltyKind::upper_only;
    for (std::size_t a = 0; a < count; ++a) {
        const auto [na, ma] = schedule[a];
        std::optional<std::size_t> up_n;
        std::optional<std::size_t> up_m;
        for (std::size_t b = 0; b < count; ++b) {
            const auto [nb, mb] = schedule[b];
            if (mb == ma && nb > na && (!up_n || nb < schedule[*up_n].first)) up_n = b;
            if (nb == na && mb > ma && (!up_m || mb < schedule[*up_m].second)) up_m = b;
        }
        if (check_n && up_n) {
            const double v = max_excess(result.members[a].field, result.members[*up_n].field);
            result.checks.push_back({a, *up_n, 'n', v});
        }
        if (check_m && up_m) {
            const double v = max_excess(result.members[*up_m].field, result.members[a].field);
            result.checks.push_back({a, *up_m, 'm', v});
        }
    }
    return result;
}

StagnationResult run_to_stagnation(const Problem& problem, std::shared_ptr<const Grid> grid,
                                   const PenalizedConfig& base, double start, double change_tol, int max_members) {
    if (!(start > 0.0) || !(change_tol > 0.0) || max_members < 2) {
        throw std::invalid_argument("stagnation run needs start > 0, change_tol > 0 and at least two members");
    }
    StagnationResult out;
    double penalty = start;
    for (int q = 0; q < max_members; ++q, penalty *= 2.0) {
        PenalizedConfig cfg = base;
        if (base.kind != PenaltyKind::upper_only) cfg.m = penalty;
        if (base.kind != PenaltyKind::lower_only) cfg.n = penalty;
        Solution sol = solve_penalized(problem, grid, cfg);
        out.penalties.push_back(penalty);
        if (!out.last.empty()) {
            const double change = max_abs_diff(out.last.back().field, sol.field);
            out.changes.push_back(change);
            if (out.last.size() == 2) out.last.erase(out.last.begin());
            out.last.push_back(std::move(sol));
            if (change < change_tol) {
                out.stagnated = true;
                break;
            }
        } else {
            out.last.push_back(std::move(sol));
        }
    }
    return out;
}

} // namespace switchvi
