#pragma once

#include "switchvi/solver.hpp"

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace switchvi {

/// doubly: both penalties, no hard obstacle.
/// lower_only: the decreasing family in m. Hard lower obstacle, upper side penalized by m.
/// upper_only: the increasing family in n. Hard upper obstacle, lower side penalized by n.
struct PenalizedConfig {
    PenaltyKind kind = PenaltyKind::doubly;
    double n = 0.0;
    double m = 0.0;
    double theta = 1.0;
    double fixed_point_tol = 1e-10;
    int max_inner_iters = 500;
    double damping = 1.0;
    double exp_shift_lambda = 0.0;
    InitialGuess initial_guess = InitialGuess::previous_slice;

    /// Throws std::invalid_argument on out-of-range fields; returns warnings for legal but risky settings.
    std::vector<std::string> check() const;
};

/// One backward step from slice+1 to slice. Both spans use the [pair][node] layout.
SliceStats step_backward(const Problem& problem, std::shared_ptr<const Grid> grid, const PenalizedConfig& cfg,
                         std::size_t slice, std::span<const double> next, std::span<double> out);

/// Full backward sweep. Throws ConvergenceError when a slice does not settle.
Solution solve_penalized(const Problem& problem, std::shared_ptr<const Grid> grid, const PenalizedConfig& cfg);

struct MonotonicityCheck {
    std::size_t from = 0; // schedule indices
    std::size_t to = 0;
    char index = 'n';     // which penalty grew
    double violation = 0.0;
};

struct ScheduleResult {
    std::vector<std::pair<double, double>> schedule;
    std::vector<Solution> members;
    std::vector<MonotonicityCheck> checks;

    double worst_violation() const;
};

/// Solves every (n, m) of the schedule and checks the orderings of the family between consecutive
/// comparable entries: same m and the next larger n, or same n and the next larger m.
/// Doubly: increasing in n, decreasing in m. lower_only: decreasing in m. upper_only: increasing in n.
ScheduleResult run_schedule(const Problem& problem, std::shared_ptr<const Grid> grid, const PenalizedConfig& base,
                            const std::vector<std::pair<double, double>>& schedule, int threads = 1);

struct StagnationResult {
    std::vector<double> penalties;
    std::vector<double> changes; // max-norm change between consecutive members
    bool stagnated = false;
    std::vector<Solution> last; // the final one or two members
};

/// Runs a one-sided family with the free penalty doubling from `start` until the successive change
/// drops below `change_tol` or `max_members` solves have been made.
StagnationResult run_to_stagnation(const Problem& problem, std::shared_ptr<const Grid> grid,
                                   const PenalizedConfig& base, double start, double change_tol, int max_members);

} // namespace switchvi
