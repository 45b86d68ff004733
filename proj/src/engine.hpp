#pragma once

#include "switchvi/solver.hpp"

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace switchvi::detail {

// What the nodal update does with the root c of the (possibly penalized) implicit equation.
enum class NodalRule {
    penalized,     // v = c
    reflect_lower, // v = max(L, c)
    reflect_upper, // v = min(U, c)
    min_first,     // v = max(L, min(U, c))
    max_first,     // v = min(U, max(L, c))
};

/// Root of  a v - r - a_lo (lower - v)^+ + a_hi (v - upper)^+ = 0  for a > 0, a_lo, a_hi >= 0.
/// Infinite obstacles must come with a zero weight.
double penalized_root(double a, double r, double a_lo, double lower, double a_hi, double upper);

struct EngineSettings {
    NodalRule rule = NodalRule::penalized;
    double n = 0.0; // weight of (v - L)^-
    double m = 0.0; // weight of (v - U)^+
    double theta = 1.0;
    double tol = 1e-10;
    int max_iters = 500;
    double damping = 1.0;
    double lambda = 0.0;
    InitialGuess init = InitialGuess::previous_slice;
};

/// Backward step of the theta-scheme on one slice, solved by symmetric nodal Gauss-Seidel.
/// Values cross the interface in the original variables; with lambda > 0 the iteration runs on
/// e^{lambda t} v with costs rescaled accordingly, which is the same discrete system.
class SliceEngine {
public:
    SliceEngine(const Problem& problem, std::shared_ptr<const Grid> grid, EngineSettings settings);

    SliceStats step(std::size_t slice, std::span<const double> next, std::span<double> out,
                    std::span<const double> terminal);

    /// Nodal complementarity residual of (current at slice, next at slice+1), in PDE units.
    void residual(std::size_t slice, std::span<const double> current, std::span<const double> next,
                  std::span<double> out);

    const MonotonicityInfo& monotonicity() const { return mono_; }

private:
    struct Local {
        double a;     // 1 - dt theta W0
        double r;     // everything not multiplied by the own value
        double lower; // L, or -inf
        double upper; // U, or +inf
    };

    void prepare(std::size_t slice, std::span<const double> next);
    const SliceOperator& op_at(std::size_t slice);
    Local assemble(std::size_t pair, std::size_t node, std::span<const double> v);
    double nodal_value(const Local& loc) const;
    double nodal_residual(const Local& loc, double v) const;
    double generator(std::size_t pair, std::size_t node, std::span<const double> v);
    [[noreturn]] void non_finite(std::size_t pair, std::size_t node, double value) const;

    const Problem& problem_;
    std::shared_ptr<const Grid> grid_;
    EngineSettings cfg_;
    Problem::Evaluator eval_;
    std::size_t lambda_;
    std::size_t nodes_;

    std::optional<SliceOperator> op_;
    std::size_t op_slice_ = static_cast<std::size_t>(-1);
    std::optional<SliceOperator> op_prev_;
    std::size_t op_prev_slice_ = static_cast<std::size_t>(-1);

    // Per-slice state.
    std::size_t slice_ = 0;
    double t_ = 0.0;
    double scale_ = 1.0;
    const SliceOperator* op_now_ = nullptr;
    std::vector<double> base_;        // [pair][node]
    std::vector<double> cost_lower_;  // [node][count1^2], scaled
    std::vector<double> cost_upper_;  // [node][count2^2], scaled
    std::vector<double> f_cache_;     // [pair][node] when f depends on (t, x) only
    bool f_cached_ = false;

    std::vector<double> work_;
    std::vector<double> ybar_;
    std::vector<double> grad_;
    std::vector<double> zbuf_;
    MonotonicityInfo mono_;
};

/// Terminal slice set to h, then step() from the last slice down to 0. Throws ConvergenceError.
Solution backward_solve(const Problem& problem, std::shared_ptr<const Grid> grid, const EngineSettings& settings);

} // namespace switchvi::detail
