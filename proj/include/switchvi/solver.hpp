#pragma once

#include "switchvi/grid.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace switchvi {

/// Starting point of the nodal iteration on each slice.
enum class InitialGuess {
    previous_slice, // the already computed slice at t + dt
    zeros,
    terminal, // the terminal data broadcast to every slice
};

std::string to_string(InitialGuess g);
InitialGuess initial_guess_from_string(const std::string& s);

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The slice iteration hit its cap before the defect fell below tolerance.
class ConvergenceError : public SolverError {
public:
    ConvergenceError(std::string message, std::size_t slice, double defect, int iterations)
        : SolverError(std::move(message)), slice_(slice), defect_(defect), iterations_(iterations) {}

    std::size_t slice() const { return slice_; }
    double defect() const { return defect_; }
    int iterations() const { return iterations_; }

private:
    std::size_t slice_;
    double defect_;
    int iterations_;
};

struct SliceStats {
    int iterations = 0;
    double defect = 0.0;
    bool converged = false;
    ModePair worst_pair{};
    std::size_t worst_node = 0;
};

struct SolveReport {
    std::vector<int> iterations; // per slice 0..steps-1
    std::vector<double> residual;
    MonotonicityInfo monotonicity;
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;

    long total_iterations() const;
    double max_residual() const;
};

struct Solution {
    ValueField field;
    SolveReport report;
};

/// Terminal data h^{ij} on the nodes, layout [pair][node].
void fill_terminal(const Problem& problem, const Grid& grid, std::span<double> out);

} // namespace switchvi
