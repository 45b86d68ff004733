#include "engine.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <sstream>

namespace switchvi {

std::string to_string(InitialGuess g) {
    switch (g) {
    case InitialGuess::previous_slice: return "previous";
    case InitialGuess::zeros: return "zeros";
    case InitialGuess::terminal: return "terminal";
    }
    return "?";
}

InitialGuess initial_guess_from_string(const std::string& s) {
    if (s == "previous") return InitialGuess::previous_slice;
    if (s == "zeros") return InitialGuess::zeros;
    if (s == "terminal") return InitialGuess::terminal;
    throw std::invalid_argument("unknown initial guess '" + s + "' (expected previous, zeros or terminal)");
}

long SolveReport::total_iterations() const {
    long total = 0;
    for (int it : iterations) total += it;
    return total;
}

double SolveReport::max_residual() const {
    double worst = 0.0;
    for (double r : residual) worst = std::max(worst, r);
    return worst;
}

void fill_terminal(const Problem& problem, const Grid& grid, std::span<double> out) {
    Problem::Evaluator ev(problem);
    const std::size_t nodes = grid.node_count();
    const auto lambda = static_cast<std::size_t>(problem.modes().size());
    for (std::size_t n = 0; n < nodes; ++n) {
        ev.set_point(grid.horizon(), grid.node_coordinates(n));
        for (std::size_t p = 0; p < lambda; ++p) {
            const double h = ev.terminal(p);
            if (!std::isfinite(h)) {
                throw SolverError("terminal value h" + to_string(problem.modes().pair(p)) + " is not finite at node " +
                                  std::to_string(n));
            }
            out[p * nodes + n] = h;
        }
    }
}

namespace detail {

double penalized_root(double a, double r, double a_lo, double lower, double a_hi, double upper) {
    if (a_lo == 0.0 && a_hi == 0.0) {
        return r / a;
    }
    // The left side is strictly increasing and linear between its kinks.
    std::array<double, 2> kinks{};
    std::size_t nk = 0;
    if (a_lo > 0.0) kinks[nk++] = lower;
    if (a_hi > 0.0) kinks[nk++] = upper;
    if (nk == 2 && kinks[1] < kinks[0]) std::swap(kinks[0], kinks[1]);
    auto g = [&](double v) {
        return a * v - r - a_lo * std::max(lower - v, 0.0) + a_hi * std::max(v - upper, 0.0);
    };
    std::size_t seg = nk;
    for (std::size_t q = 0; q < nk; ++q) {
        if (g(kinks[q]) >= 0.0) {
            seg = q;
            break;
        }
    }
    double probe;
    if (seg == 0) {
        probe = kinks[0] - 1.0;
    } else if (seg == nk) {
        probe = kinks[nk - 1] + 1.0;
    } else {
        probe = 0.5 * (kinks[seg - 1] + kinks[seg]);
    }
    double slope = a;
    double rhs = r;
    if (a_lo > 0.0 && probe < lower) {
        slope += a_lo;
        rhs += a_lo * lower;
    }
    if (a_hi > 0.0 && probe > upper) {
        slope += a_hi;
        rhs += a_hi * upper;
    }
    return rhs / slope;
}

SliceEngine::SliceEngine(const Problem& problem, std::shared_ptr<const Grid> grid, EngineSettings settings)
    : problem_(problem),
      grid_(std::move(grid)),
      cfg_(settings),
      eval_(problem),
      lambda_(static_cast<std::size_t>(problem.modes().size())),
      nodes_(grid_->node_count()) {
    if (grid_->time_steps() < 1) {
        throw SolverError("a backward step needs at least one time step");
    }
    if (!(cfg_.tol > 0.0) || cfg_.max_iters < 1) {
        throw SolverError("tolerance must be positive and the iteration cap at least 1");
    }
    if (!(cfg_.theta >= 0.0 && cfg_.theta <= 1.0)) {
        throw SolverError("theta must lie in [0, 1]");
    }
    if (!(cfg_.damping > 0.0 && cfg_.damping <= 1.0)) {
        throw SolverError("damping must lie in (0, 1]");
    }
    if (!(cfg_.n >= 0.0) || !(cfg_.m >= 0.0) || !std::isfinite(cfg_.n) || !std::isfinite(cfg_.m)) {
        throw SolverError("penalties must be finite and non-negative");
    }
    if (!(cfg_.lambda >= 0.0) || !std::isfinite(cfg_.lambda)) {
        throw SolverError("exponential shift must be finite and non-negative");
    }
    const auto c1 = static_cast<std::size_t>(problem.modes().count1);
    const auto c2 = static_cast<std::size_t>(problem.modes().count2);
    base_.resize(lambda_ * nodes_);
    cost_lower_.resize(nodes_ * c1 * c1);
    cost_upper_.resize(nodes_ * c2 * c2);
    work_.resize(lambda_ * nodes_);
    ybar_.resize(lambda_);
    grad_.resize(static_cast<std::size_t>(grid_->dim()));
    zbuf_.resize(static_cast<std::size_t>(problem.dim_d()));
    f_cached_ = !problem.generators_use_y() && !problem.generators_use_z();
    if (f_cached_) {
        f_cache_.resize(lambda_ * nodes_);
    }
}

const SliceOperator& SliceEngine::op_at(std::size_t slice) {
    if (problem_.constant_coefficients() && op_) {
        return *op_;
    }
    if (op_ && op_slice_ == slice) {
        return *op_;
    }
    if (op_prev_ && op_prev_slice_ == slice) {
        return *op_prev_;
    }
    op_prev_ = std::move(op_);
    op_prev_slice_ = op_slice_;
    op_.emplace(*grid_, problem_, grid_->time(slice));
    op_slice_ = slice;

    const double dt = grid_->dt();
    mono_.explicit_bound = std::max(mono_.explicit_bound, op_->explicit_bound(dt));
    mono_.negative_weights = std::max(mono_.negative_weights, op_->negative_weights());
    mono_.most_negative_weight = std::min(mono_.most_negative_weight, op_->most_negative_weight());
    mono_.monotone = mono_.negative_weights == 0 && (cfg_.theta == 1.0 || (1.0 - cfg_.theta) * mono_.explicit_bound <= 1.0);
    return *op_;
}

void SliceEngine::prepare(std::size_t slice, std::span<const double> next) {
    const Grid& g = *grid_;
    const double dt = g.dt();
    slice_ = slice;
    t_ = g.time(slice);
    scale_ = cfg_.lambda > 0.0 ? std::exp(cfg_.lambda * t_) : 1.0;

    if (cfg_.theta < 1.0) {
        const SliceOperator& later = op_at(slice + 1);
        for (std::size_t p = 0; p < lambda_; ++p) {
            auto src = next.subspan(p * nodes_, nodes_);
            auto dst = std::span<double>(base_).subspan(p * nodes_, nodes_);
            later.apply(src, dst);
        }
        const double w = dt * (1.0 - cfg_.theta);
        for (std::size_t q = 0; q < base_.size(); ++q) {
            base_[q] = scale_ * (next[q] + w * base_[q]);
        }
    } else {
        for (std::size_t q = 0; q < base_.size(); ++q) base_[q] = scale_ * next[q];
    }
    op_now_ = &op_at(slice);

    SwitchingCosts costs;
    const auto c1 = static_cast<std::size_t>(problem_.modes().count1);
    const auto c2 = static_cast<std::size_t>(problem_.modes().count2);
    for (std::size_t n = 0; n < nodes_; ++n) {
        eval_.set_point(t_, g.node_coordinates(n));
        eval_.costs(costs);
        for (std::size_t q = 0; q < c1 * c1; ++q) cost_lower_[n * c1 * c1 + q] = scale_ * costs.lower[q];
        for (std::size_t q = 0; q < c2 * c2; ++q) cost_upper_[n * c2 * c2 + q] = scale_ * costs.upper[q];
        if (f_cached_) {
            for (std::size_t p = 0; p < lambda_; ++p) f_cache_[p * nodes_ + n] = scale_ * eval_.generator(p);
        }
    }
}

double SliceEngine::generator(std::size_t pair, std::size_t node, std::span<const double> v) {
    if (f_cached_) {
        return f_cache_[pair * nodes_ + node];
    }
    eval_.set_point(t_, grid_->node_coordinates(node));
    if (problem_.generators_use_y()) {
        for (std::size_t q = 0; q < lambda_; ++q) ybar_[q] = v[q * nodes_ + node] / scale_;
        eval_.set_y(ybar_);
    }
    if (problem_.generators_use_z()) {
        upwind_gradient(*grid_, *op_now_, v.subspan(pair * nodes_, nodes_), node, grad_);
        for (std::size_t r = 0; r < zbuf_.size(); ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < grad_.size(); ++c) {
                acc += op_now_->vol(node, static_cast<int>(c), static_cast<int>(r)) * grad_[c];
            }
            zbuf_[r] = acc / scale_;
        }
        eval_.set_z(zbuf_);
    }
    return scale_ * eval_.generator(pair);
}

SliceEngine::Local SliceEngine::assemble(std::size_t pair, std::size_t node, std::span<const double> v) {
    const double dt = grid_->dt();
    const double th = cfg_.theta;
    Local loc{};
    loc.a = 1.0 - dt * th * op_now_->center(node);
    if (!(loc.a > 0.0)) {
        std::ostringstream msg;
        msg << "implicit diagonal is not positive at node " << node << " (t=" << t_
            << "); the boundary closure or drift makes the step too large, reduce dt or use clamp";
        throw SolverError(msg.str());
    }
    const double nb = th > 0.0 ? op_now_->neighbour_sum(v.subspan(pair * nodes_, nodes_), node) : 0.0;
    loc.r = base_[pair * nodes_ + node] + dt * th * nb + dt * generator(pair, node, v);

    const ModeSpace& ms = problem_.modes();
    const ModePair p = ms.pair(pair);
    loc.lower = kNoLowerObstacle;
    loc.upper = kNoUpperObstacle;
    const auto c1 = static_cast<std::size_t>(ms.count1);
    const auto c2 = static_cast<std::size_t>(ms.count2);
    for (int k = 1; k <= ms.count1; ++k) {
        if (k == p.i) continue;
        const double cand = v[ms.flat({k, p.j}) * nodes_ + node] -
                            cost_lower_[node * c1 * c1 + static_cast<std::size_t>((p.i - 1) * ms.count1 + (k - 1))];
        loc.lower = std::max(loc.lower, cand);
    }
    for (int l = 1; l <= ms.count2; ++l) {
        if (l == p.j) continue;
        const double cand = v[ms.flat({p.i, l}) * nodes_ + node] +
                            cost_upper_[node * c2 * c2 + static_cast<std::size_t>((p.j - 1) * ms.count2 + (l - 1))];
        loc.upper = std::min(loc.upper, cand);
    }
    return loc;
}

double SliceEngine::nodal_value(const Local& loc) const {
    const double dt = grid_->dt();
    const double a_lo = std::isfinite(loc.lower) ? dt * cfg_.n : 0.0;
    const double a_hi = std::isfinite(loc.upper) ? dt * cfg_.m : 0.0;

    const double c = penalized_root(loc.a, loc.r, a_lo, loc.lower, a_hi, loc.upper);

    switch (cfg_.rule) {
    case NodalRule::penalized: return c;
    case NodalRule::reflect_lower: return std::max(loc.lower, c);
    case NodalRule::reflect_upper: return std::min(loc.upper, c);
    case NodalRule::min_first: return std::max(loc.lower, std::min(loc.upper, c));
    case NodalRule::max_first: return std::min(loc.upper, std::max(loc.lower, c));
    }
    return c;
}

double SliceEngine::nodal_residual(const Local& loc, double v) const {
    const double dt = grid_->dt();
    const double a_lo = std::isfinite(loc.lower) ? dt * cfg_.n : 0.0;
    const double a_hi = std::isfinite(loc.upper) ? dt * cfg_.m : 0.0;
    const double pde =
        (loc.a * v - loc.r - a_lo * std::max(loc.lower - v, 0.0) + a_hi * std::max(v - loc.upper, 0.0)) / dt;
    switch (cfg_.rule) {
    case NodalRule::penalized: return pde;
    case NodalRule::reflect_lower: return std::min(v - loc.lower, pde);
    case NodalRule::reflect_upper: return std::max(v - loc.upper, pde);
    case NodalRule::min_first: return std::min(v - loc.lower, std::max(v - loc.upper, pde));
    case NodalRule::max_first: return std::max(v - loc.upper, std::min(v - loc.lower, pde));
    }
    return pde;
}

void SliceEngine::non_finite(std::size_t pair, std::size_t node, double value) const {
    std::ostringstream msg;
    msg << "non-finite value " << value << " at slice " << slice_ << " (t=" << t_ << "), pair "
        << to_string(problem_.modes().pair(pair)) << ", node " << node << " x=(";
    const auto x = grid_->node_coordinates(node);
    for (std::size_t c = 0; c < x.size(); ++c) msg << (c ? "," : "") << x[c];
    msg << ")";
    throw SolverError(msg.str());
}

SliceStats SliceEngine::step(std::size_t slice, std::span<const double> next, std::span<double> out,
                             std::span<const double> terminal) {
    prepare(slice, next);

    switch (cfg_.init) {
    case InitialGuess::previous_slice:
        for (std::size_t q = 0; q < work_.size(); ++q) work_[q] = scale_ * next[q];
        break;
    case InitialGuess::zeros: std::fill(work_.begin(), work_.end(), 0.0); break;
    case InitialGuess::terminal:
        for (std::size_t q = 0; q < work_.size(); ++q) work_[q] = scale_ * terminal[q];
        break;
    }

    const double omega = cfg_.damping;
    SliceStats stats;
    for (int it = 1; it <= cfg_.max_iters; ++it) {
        const bool forward = (it % 2) == 1;
        for (std::size_t pk = 0; pk < lambda_; ++pk) {
            const std::size_t pair = forward ? pk : lambda_ - 1 - pk;
            for (std::size_t nk = 0; nk < nodes_; ++nk) {
                const std::size_t node = forward ? nk : nodes_ - 1 - nk;
                const Local loc = assemble(pair, node, work_);
                const double target = nodal_value(loc);
                double& slot = work_[pair * nodes_ + node];
                const double updated = omega == 1.0 ? target : (1.0 - omega) * slot + omega * target;
                if (!std::isfinite(updated)) non_finite(pair, node, updated);
                slot = updated;
            }
        }

        double defect = 0.0;
        for (std::size_t pair = 0; pair < lambda_; ++pair) {
            for (std::size_t node = 0; node < nodes_; ++node) {
                const Local loc = assemble(pair, node, work_);
                const double r = std::fabs(nodal_residual(loc, work_[pair * nodes_ + node]));
                if (r > defect || std::isnan(r)) {
                    defect = r;
                    stats.worst_pair = problem_.modes().pair(pair);
                    stats.worst_node = node;
                }
            }
        }
        stats.iterations = it;
        stats.defect = defect;
        if (defect <= cfg_.tol) {
            stats.converged = true;
            break;
        }
    }

    if (scale_ == 1.0) {
        std::copy(work_.begin(), work_.end(), out.begin());
    } else {
        for (std::size_t q = 0; q < work_.size(); ++q) out[q] = work_[q] / scale_;
    }
    return stats;
}

void SliceEngine::residual(std::size_t slice, std::span<const double> current, std::span<const double> next,
                           std::span<double> out) {
    prepare(slice, next);
    for (std::size_t q = 0; q < work_.size(); ++q) work_[q] = scale_ * current[q];
    for (std::size_t pair = 0; pair < lambda_; ++pair) {
        for (std::size_t node = 0; node < nodes_; ++node) {
            const Local loc = assemble(pair, node, work_);
            out[pair * nodes_ + node] = nodal_residual(loc, work_[pair * nodes_ + node]) / scale_;
        }
    }
}

Solution backward_solve(const Problem& problem, std::shared_ptr<const Grid> grid, const EngineSettings& settings) {
    const auto started = std::chrono::steady_clock::now();
    ValueField field(grid, problem.modes());
    const std::size_t steps = static_cast<std::size_t>(grid->time_steps());
    fill_terminal(problem, *grid, field.slice(steps));

    SolveReport report;
    if (steps > 0) {
        report.iterations.assign(steps, 0);
        report.residual.assign(steps, 0.0);
        SliceEngine engine(problem, grid, settings);
        for (std::size_t s = steps; s-- > 0;) {
            const SliceStats st = engine.step(s, field.slice(s + 1), field.slice(s), field.slice(steps));
            report.iterations[s] = st.iterations;
            report.residual[s] = st.defect;
            if (!st.converged) {
                std::ostringstream msg;
                msg << "slice " << s << " (t=" << grid->time(s) << ") did not converge in " << st.iterations
                    << " iterations: defect " << st.defect << " > tol " << settings.tol << ", worst at pair "
                    << to_string(st.worst_pair) << " node " << st.worst_node;
                throw ConvergenceError(msg.str(), s, st.defect, st.iterations);
            }
        }
        report.monotonicity = engine.monotonicity();
        if (report.monotonicity.negative_weights > 0) {
            std::ostringstream msg;
            msg << report.monotonicity.negative_weights << " negative off-diagonal stencil weights (most negative "
                << report.monotonicity.most_negative_weight << "); the scheme is not monotone on this grid";
            report.warnings.push_back(msg.str());
        }
        if (!report.monotonicity.monotone && report.monotonicity.negative_weights == 0) {
            report.warnings.push_back("explicit part violates the monotonicity bound; use theta = 1 or a smaller dt");
        }
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {std::move(field), std::move(report)};
}

} // namespace detail
} // namespace switchvi
