#pragma once

#include "switchvi/solver.hpp"

#include <memory>
#include <string>
#include <vector>

namespace switchvi {

/// min_first: min{v - L, max{v - U, -dv/dt - Lv - f}} = 0.
/// max_first: max{v - U, min{v - L, -dv/dt - Lv - f}} = 0.
enum class Variant { min_first, max_first };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct BilateralConfig {
    Variant variant = Variant::min_first;
    double tol = 1e-8;
    int max_iters = 2000;
    double theta = 1.0;
    double damping = 1.0;
    InitialGuess initial_guess = InitialGuess::previous_slice;
    bool force = false; // run even if the no-free-loop check fails
};

/// Raised when the no-free-loop condition fails on the grid samples and the run is not forced.
class AssumptionError : public SolverError {
public:
    using SolverError::SolverError;
};

/// Projected Gauss-Seidel on every slice: the unconstrained implicit nodal value is projected
/// onto the band [L, U] in the order of the chosen variant, with fresh obstacle values.
Solution solve_bilateral(const Problem& problem, std::shared_ptr<const Grid> grid, const BilateralConfig& cfg);

struct ComplementarityResidual {
    std::shared_ptr<const Grid> grid;
    ModeSpace modes;
    std::vector<double> values; // [slice][pair][node], slices 0..steps-1
    double max_interior = 0.0;
    double max_all = 0.0;
    std::size_t worst_slice = 0;
    ModePair worst_pair{};
    std::size_t worst_node = 0;

    double at(std::size_t slice, std::size_t flat_pair, std::size_t node) const {
        return values[(slice * static_cast<std::size_t>(modes.size()) + flat_pair) * grid->node_count() + node];
    }
};

/// Discrete residual with the solver's own stencils; worst_* locate the largest interior value.
ComplementarityResidual residual(const ValueField& field, const Problem& problem, Variant variant,
                                 double theta = 1.0);

/// max (sub - super)^+ over slices, pairs and nodes.
double compare_sub_super(const ValueField& sub, const ValueField& super);

struct Feasibility {
    double lower_violation = 0.0; // max (L - v)^+
    double upper_violation = 0.0; // max (v - U)^+ over nodes where v - L > active_threshold
};

Feasibility feasibility(const ValueField& field, const Problem& problem, double active_threshold);

} // namespace switchvi
