#pragma once

#include "switchvi/model.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace switchvi {

/// A space-time sample point.
struct SamplePoint {
    double t = 0.0;
    std::vector<double> x;
};

constexpr double kValidationTolerance = 1e-12;

struct TerminalCheck {
    bool ok = true;
    double worst = -std::numeric_limits<double>::infinity(); // signed; > 0 means violated
    ModePair pair{};
    std::vector<double> x;
    std::string side; // "lower" or "upper"
};

struct LoopWitness {
    std::vector<ModePair> loop; // closed: loop.front() == loop.back()
    SamplePoint at;
    double sum = 0.0; // with the first sign convention (-lower, +upper)
};

struct LoopCheck {
    bool ok = true;
    std::optional<LoopWitness> witness;
    std::size_t loops = 0;
    std::size_t violations = 0;
    bool truncated = false;
};

struct CycleWitness {
    std::vector<int> cycle; // closed
    SamplePoint at;
    double sum = 0.0;
};

struct CycleCheck {
    bool ok = true;
    std::optional<CycleWitness> witness;
};

struct NonnegWitness {
    std::string matrix; // "g_lower" or "g_upper"
    int from = 0;
    int to = 0;
    SamplePoint at;
    double value = 0.0;
};

struct NonnegCheck {
    bool ok = true;
    std::optional<NonnegWitness> witness;
};

struct LoopReport {
    LoopCheck no_free_loop;
    CycleCheck cycle_lower; // simple cycles of player 1, sum of lower costs > 0
    CycleCheck cycle_upper; // simple cycles of player 2, sum of upper costs > 0
};

/// Certifies the terminal-compatibility and no-free-loop conditions at the sampled points only.
struct ValidationReport {
    TerminalCheck terminal;
    LoopReport loops;
    NonnegCheck cost_nonneg;
    std::vector<std::string> warnings;

    bool ok() const {
        return terminal.ok && loops.no_free_loop.ok && loops.cycle_lower.ok && loops.cycle_upper.ok && cost_nonneg.ok;
    }
};

TerminalCheck validate_terminal(const Problem& problem, const std::vector<std::vector<double>>& xs);

/// Simple closed walks in the mode-pair graph where each move changes exactly one player's mode.
/// Each loop starts at its smallest flat pair; player-1 moves are explored before player-2 moves.
std::vector<std::vector<ModePair>> enumerate_loops(const ModeSpace& modes, std::size_t cap, bool* truncated = nullptr);

/// Simple cycles over {1..count}, canonical start at the smallest element.
std::vector<std::vector<int>> enumerate_cycles(int count);

LoopReport validate_no_free_loop(const Problem& problem, const std::vector<SamplePoint>& samples,
                                 std::size_t loop_cap = 2'000'000);

NonnegCheck validate_cost_nonneg(const Problem& problem, const std::vector<SamplePoint>& samples);

/// Finite-difference Lipschitz estimates and cross-monotonicity probes of the generators.
/// Produces warnings only.
std::vector<std::string> coefficient_warnings(const Problem& problem, const std::vector<SamplePoint>& samples);

ValidationReport validate(const Problem& problem, const std::vector<SamplePoint>& samples);

std::string describe(const LoopWitness& w);
std::string describe(const CycleWitness& w, const char* player);

} // namespace switchvi
