#include "switchvi/bilateral.hpp"

#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace switchvi {

std::string to_string(Variant v) {
    return v == Variant::min_first ? "min_first" : "max_first";
}

Variant variant_from_string(const std::string& s) {
    if (s == "min_first" || s == "min") return Variant::min_first;
    if (s == "max_first" || s == "max") return Variant::max_first;
    throw std::invalid_argument("unknown bilateral variant '" + s + "' (expected min_first or max_first)");
}

namespace {

detail::EngineSettings engine_settings(Variant variant, double theta, double tol, int max_iters, double damping,
                                       InitialGuess init) {
    detail::EngineSettings s;
    s.rule = variant == Variant::min_first ? detail::NodalRule::min_first : detail::NodalRule::max_first;
    s.theta = theta;
    s.tol = tol;
    s.max_iters = max_iters;
    s.damping = damping;
    s.init = init;
    return s;
}

} // namespace

Solution solve_bilateral(const Problem& problem, std::shared_ptr<const Grid> grid, const BilateralConfig& cfg) {
    std::vector<std::string> notes;
    const LoopReport loops = validate_no_free_loop(problem, grid_samples(*grid, 2000));
    std::string failure;
    if (!loops.no_free_loop.ok) {
        failure = "no-free-loop condition fails: " + describe(*loops.no_free_loop.witness);
    } else if (!loops.cycle_lower.ok) {
        failure = "cycle condition fails: " + describe(*loops.cycle_lower.witness, "player 1");
    } else if (!loops.cycle_upper.ok) {
        failure = "cycle condition fails: " + describe(*loops.cycle_upper.witness, "player 2");
    }
    if (!failure.empty()) {
        if (!cfg.force) {
            throw AssumptionError(failure + " (the projection may cycle; pass force to run anyway)");
        }
        notes.push_back("forced past failed check: " + failure);
    }

    Solution sol = detail::backward_solve(
        problem, std::move(grid),
        engine_settings(cfg.variant, cfg.theta, cfg.tol, cfg.max_iters, cfg.damping, cfg.initial_guess));
    sol.report.warnings.insert(sol.report.warnings.begin(), notes.begin(), notes.end());
    return sol;
}

ComplementarityResidual residual(const ValueField& field, const Problem& problem, Variant variant, double theta) {
    const Grid& g = field.grid();
    if (!(field.modes() == problem.modes())) {
        throw std::invalid_argument("field and problem have different mode spaces");
    }
    ComplementarityResidual out;
    out.grid = field.grid_ptr();
    out.modes = field.modes();
    const std::size_t steps = static_cast<std::size_t>(g.time_steps());
    const std::size_t per_slice = field.slice_size();
    out.values.assign(steps * per_slice, 0.0);
    if (steps == 0) {
        return out;
    }
    detail::SliceEngine engine(problem, field.grid_ptr(),
                               engine_settings(variant, theta, 1.0, 1, 1.0, InitialGuess::previous_slice));
    const std::size_t nodes = g.node_count();
    for (std::size_t s = steps; s-- > 0;) {
        auto dst = std::span<double>(out.values).subspan(s * per_slice, per_slice);
        engine.residual(s, field.slice(s), field.slice(s + 1), dst);
        for (std::size_t q = 0; q < per_slice; ++q) {
            const double r = std::fabs(dst[q]);
            out.max_all = std::max(out.max_all, r);
            const std::size_t node = q % nodes;
            if (!g.on_boundary(node) && r > out.max_interior) {
                out.max_interior = r;
                out.worst_slice = s;
                out.worst_pair = out.modes.pair(q / nodes);
                out.worst_node = node;
            }
        }
    }
    return out;
}

double compare_sub_super(const ValueField& sub, const ValueField& super) {
    return std::max(0.0, max_excess(sub, super));
}

Feasibility feasibility(const ValueField& field, const Problem& problem, double active_threshold) {
    const Grid& g = field.grid();
    const ModeSpace& ms = field.modes();
    const std::size_t lambda = static_cast<std::size_t>(ms.size());
    Feasibility out;
    std::vector<double> values(lambda);
    for (std::size_t s = 0; s < g.slices(); ++s) {
        for (std::size_t n = 0; n < g.node_count(); ++n) {
            for (std::size_t p = 0; p < lambda; ++p) values[p] = field.at(s, p, n);
            const SwitchingCosts costs = problem.costs_at(g.time(s), g.node_coordinates(n));
            for (std::size_t p = 0; p < lambda; ++p) {
                const double v = values[p];
                const double lo = lower_obstacle(values, costs, ms.pair(p)).value;
                const double hi = upper_obstacle(values, costs, ms.pair(p)).value;
                out.lower_violation = std::max(out.lower_violation, lo - v);
                if (v - lo > active_threshold) {
                    out.upper_violation = std::max(out.upper_violation, v - hi);
                }
            }
        }
    }
    return out;
}

} // namespace switchvi
