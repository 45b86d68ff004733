#pragma once

#include "switchvi/model.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace switchvi {

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TreeOptions {
    std::size_t max_nodes = 20'000'000; // over all levels
};

/// Recombining trinomial lattice, tensorized over the state dimensions and anchored at x0.
/// The spacing of each dimension is fixed by the coefficients at (0, x0); branch probabilities
/// are matched to the local drift and variance at every node, so the first two moments of each
/// step are exact there.
class TreeModel {
public:
    int steps() const { return steps_; }
    double dt() const { return dt_; }
    double horizon() const { return horizon_; }
    int dim() const { return static_cast<int>(x0_.size()); }
    std::span<const double> x0() const { return x0_; }
    double spacing(int c) const { return spacing_[static_cast<std::size_t>(c)]; }
    double time(int level) const;

    std::size_t level_size(int level) const;
    std::size_t total_nodes() const;
    std::vector<double> coordinates(int level, std::size_t node) const;

    /// Branch probability of dimension c at a node; branch 0 = down, 1 = stay, 2 = up.
    double probability(int level, std::size_t node, int c, int branch) const;

    /// E[v_{level+1} | node], with `next` indexed by the nodes of level+1.
    double expect(int level, std::size_t node, std::span<const double> next) const;

    /// E[v_{level+1} (dX_c - E dX_c) | node].
    double covariation(int level, std::size_t node, std::span<const double> next, int c) const;

private:
    friend TreeModel build_tree(const Problem& problem, std::span<const double> x0, int steps,
                                const TreeOptions& options);

    int width(int level, int c) const;
    std::size_t offset(int level) const { return level_offset_[static_cast<std::size_t>(level)]; }

    int steps_ = 0;
    double dt_ = 0.0;
    double horizon_ = 0.0;
    std::vector<double> x0_;
    std::vector<double> spacing_; // 0 marks a dimension without motion
    std::vector<std::size_t> level_offset_;
    std::vector<double> probs_; // [global node][c][3]
};

TreeModel build_tree(const Problem& problem, std::span<const double> x0, int steps, const TreeOptions& options = {});

enum class NodalUpdate {
    projection, // v = max(L, min(U, c))
    penalized,  // v = c + dt (n (v - L)^- - m (v - U)^+), own value implicit
};

enum class ZEstimate {
    automatic,  // regression when drift and volatility are constant, zero otherwise
    zero,
    regression,
};

struct OracleOptions {
    NodalUpdate update = NodalUpdate::projection;
    double n = 0.0;
    double m = 0.0;
    ZEstimate z = ZEstimate::automatic;
    double tol = 1e-12;
    int max_sweeps = 0; // 0: Lambda^2 for the projection, 1e6 for the penalized update
};

struct OracleResult {
    std::vector<double> root; // one value per mode pair, flat order
    int max_sweeps_used = 0;
    double max_defect = 0.0;
};

/// Backward induction for the switching game. At each node the continuation value
/// c = E[v_next] + f(t, x, E[v_next], z) dt is fixed and the nodal system over mode pairs is
/// iterated to its fixed point, pairs swept in lexicographic order and then in reverse.
OracleResult switching_game_value(const TreeModel& tree, const Problem& problem, const OracleOptions& options = {});

/// Two-obstacle stopping game: v = max(L, min(U, E[v_next] + g dt)), v(T) = xi.
/// Expressions are functions of t and x1..xk (xi of x only).
double dynkin_value(const TreeModel& tree, const Expression& lower, const Expression& upper, const Expression& running,
                    const Expression& terminal);

} // namespace switchvi
