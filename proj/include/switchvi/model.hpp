#pragma once

#include "switchvi/expr.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace switchvi {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A pair of modes (i, j): i for the maximizing player, j for the minimizing one. 1-based.
struct ModePair {
    int i = 1;
    int j = 1;

    friend bool operator==(const ModePair&, const ModePair&) = default;
};

/// Mode sets of both players. Pairs are flattened row-major: flat = (i-1)*count2 + (j-1).
struct ModeSpace {
    int count1 = 1;
    int count2 = 1;

    int size() const { return count1 * count2; }
    std::size_t flat(ModePair p) const { return static_cast<std::size_t>((p.i - 1) * count2 + (p.j - 1)); }
    ModePair pair(std::size_t flat) const {
        return {static_cast<int>(flat) / count2 + 1, static_cast<int>(flat) % count2 + 1};
    }
    bool contains(ModePair p) const { return p.i >= 1 && p.i <= count1 && p.j >= 1 && p.j <= count2; }

    friend bool operator==(const ModeSpace&, const ModeSpace&) = default;
};

std::string to_string(ModePair p);

/// Complete game data as written by the user.
struct ProblemSpec {
    int dim_k = 1;
    int dim_d = 1;
    double horizon = 1.0;
    ModeSpace modes;
    std::vector<Expression> drift;       // k, functions of (t, x)
    std::vector<Expression> vol;         // k*d row-major, functions of (t, x)
    std::vector<Expression> generator;   // Lambda, functions of (t, x, y, z)
    std::vector<Expression> cost_lower;  // count1*count1 row-major, diagonal is zero
    std::vector<Expression> cost_upper;  // count2*count2 row-major, diagonal is zero
    std::vector<Expression> terminal;    // Lambda, functions of x
};

/// Switching costs frozen at one point (t, x).
struct SwitchingCosts {
    ModeSpace modes;
    std::vector<double> lower; // count1*count1, lower[(i-1)*count1 + (k-1)]
    std::vector<double> upper; // count2*count2, upper[(j-1)*count2 + (l-1)]

    double lower_cost(int i, int k) const { return lower[static_cast<std::size_t>((i - 1) * modes.count1 + (k - 1))]; }
    double upper_cost(int j, int l) const { return upper[static_cast<std::size_t>((j - 1) * modes.count2 + (l - 1))]; }
};

/// Value of an obstacle and the mode attaining it (0 when the index set is empty).
struct ObstacleValue {
    double value;
    int arg;
};

constexpr double kNoLowerObstacle = -std::numeric_limits<double>::infinity();
constexpr double kNoUpperObstacle = std::numeric_limits<double>::infinity();

/// max_{k != i} (v^{kj} - lower_cost(i, k)); ties go to the smallest k.
ObstacleValue lower_obstacle(std::span<const double> values, const SwitchingCosts& costs, ModePair p);

/// min_{l != j} (v^{il} + upper_cost(j, l)); ties go to the smallest l.
ObstacleValue upper_obstacle(std::span<const double> values, const SwitchingCosts& costs, ModePair p);

enum class PenaltyKind { doubly, lower_only, upper_only };

std::string to_string(PenaltyKind kind);
PenaltyKind penalty_kind_from_string(const std::string& s);

/// f + n (y - L)^- - m (y - U)^+ with the terms dropped according to kind.
double penalize(PenaltyKind kind, double n, double m, double f, double y, double lower, double upper);

/// Compiled, immutable problem. Safe to share across threads.
class Problem {
public:
    explicit Problem(ProblemSpec spec);

    const ProblemSpec& spec() const { return spec_; }
    int dim_k() const { return spec_.dim_k; }
    int dim_d() const { return spec_.dim_d; }
    double horizon() const { return spec_.horizon; }
    const ModeSpace& modes() const { return spec_.modes; }
    const VarLayout& layout() const { return layout_; }

    /// True when some generator reads a z component.
    bool generators_use_z() const { return uses_z_; }
    /// True when some generator reads a y component.
    bool generators_use_y() const { return uses_y_; }
    /// True when drift and volatility are constant expressions.
    bool constant_coefficients() const { return constant_coefficients_; }

    ObstacleValue obstacle_lower(std::span<const double> values, ModePair p, double t, std::span<const double> x) const;
    ObstacleValue obstacle_upper(std::span<const double> values, ModePair p, double t, std::span<const double> x) const;

    double penalized_generator(PenaltyKind kind, double n, double m, ModePair p, double t, std::span<const double> x,
                               std::span<const double> ybar, std::span<const double> z) const;

    SwitchingCosts costs_at(double t, std::span<const double> x) const;

    /// Same problem with every generator replaced by f^{ij} + shift.
    Problem with_generator_shift(double shift) const;

    class Evaluator;

private:
    friend class Evaluator;

    ProblemSpec spec_;
    VarLayout layout_;
    std::vector<CompiledExpr> drift_;
    std::vector<CompiledExpr> vol_;
    std::vector<CompiledExpr> generator_;
    std::vector<CompiledExpr> cost_lower_;
    std::vector<CompiledExpr> cost_upper_;
    std::vector<CompiledExpr> terminal_;
    bool uses_z_ = false;
    bool uses_y_ = false;
    bool constant_coefficients_ = true;
};

/// Per-thread scratch for evaluating a Problem's coefficients at a point.
class Problem::Evaluator {
public:
    explicit Evaluator(const Problem& problem);

    void set_point(double t, std::span<const double> x);
    void set_y(std::span<const double> y);
    void set_z(std::span<const double> z);

    double drift(int c) const;
    double vol(int c, int r) const;
    double generator(std::size_t flat_pair) const;
    double terminal(std::size_t flat_pair) const;
    void costs(SwitchingCosts& out) const;

private:
    const Problem* problem_;
    std::vector<double> slots_;
    std::size_t x_offset_;
    std::size_t y_offset_;
    std::size_t z_offset_;
};

} // namespace switchvi
