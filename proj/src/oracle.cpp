#include "switchvi/oracle.hpp"

#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace switchvi {

namespace {

std::string format_x(std::span<const double> x) {
    std::ostringstream os;
    os << "(";
    for (std::size_t c = 0; c < x.size(); ++c) os << (c ? "," : "") << x[c];
    os << ")";
    return os.str();
}

// Digits of a node index, last dimension fastest.
void digits(std::size_t node, std::span<const int> widths, std::span<int> out) {
    for (std::size_t c = widths.size(); c-- > 0;) {
        const auto w = static_cast<std::size_t>(widths[c]);
        out[c] = static_cast<int>(node % w);
        node /= w;
    }
}

} // namespace

double TreeModel::time(int level) const {
    if (steps_ == 0 || level == steps_) return horizon_;
    return horizon_ * level / steps_;
}

int TreeModel::width(int level, int c) const {
    return spacing_[static_cast<std::size_t>(c)] > 0.0 ? 2 * level + 1 : 1;
}

std::size_t TreeModel::level_size(int level) const {
    std::size_t n = 1;
    for (int c = 0; c < dim(); ++c) n *= static_cast<std::size_t>(width(level, c));
    return n;
}

std::size_t TreeModel::total_nodes() const {
    return level_offset_.back();
}

std::vector<double> TreeModel::coordinates(int level, std::size_t node) const {
    std::vector<int> w(x0_.size());
    std::vector<int> d(x0_.size());
    for (int c = 0; c < dim(); ++c) w[static_cast<std::size_t>(c)] = width(level, c);
    digits(node, w, d);
    std::vector<double> x(x0_);
    for (std::size_t c = 0; c < x.size(); ++c) {
        if (spacing_[c] > 0.0) x[c] += (d[c] - level) * spacing_[c];
    }
    return x;
}

double TreeModel::probability(int level, std::size_t node, int c, int branch) const {
    const std::size_t k = x0_.size();
    return probs_[((offset(level) + node) * k + static_cast<std::size_t>(c)) * 3 + static_cast<std::size_t>(branch)];
}

namespace {

// Visits every child of a node with its probability and per-dimension move.
template <class Visit>
void for_each_child(const TreeModel& tree, int level, std::size_t node, Visit&& visit) {
    const int k = tree.dim();
    std::vector<int> w(static_cast<std::size_t>(k));
    std::vector<int> wn(static_cast<std::size_t>(k));
    std::vector<int> d(static_cast<std::size_t>(k));
    std::vector<int> active;
    for (int c = 0; c < k; ++c) {
        const bool moving = tree.spacing(c) > 0.0;
        w[static_cast<std::size_t>(c)] = moving ? 2 * level + 1 : 1;
        wn[static_cast<std::size_t>(c)] = moving ? 2 * level + 3 : 1;
        if (moving) active.push_back(c);
    }
    digits(node, w, d);
    std::vector<int> move(static_cast<std::size_t>(k), 0);
    std::size_t combos = 1;
    for (std::size_t q = 0; q < active.size(); ++q) combos *= 3;
    for (std::size_t combo = 0; combo < combos; ++combo) {
        std::size_t rest = combo;
        double p = 1.0;
        for (int c : active) {
            const int branch = static_cast<int>(rest % 3);
            rest /= 3;
            move[static_cast<std::size_t>(c)] = branch - 1;
            p *= tree.probability(level, node, c, branch);
        }
        if (p == 0.0) continue;
        std::size_t child = 0;
        for (int c = 0; c < k; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            const int digit = tree.spacing(c) > 0.0 ? d[cc] + move[cc] + 1 : 0;
            child = child * static_cast<std::size_t>(wn[cc]) + static_cast<std::size_t>(digit);
        }
        visit(child, p, std::span<const int>(move));
    }
}

} // namespace

double TreeModel::expect(int level, std::size_t node, std::span<const double> next) const {
    double acc = 0.0;
    for_each_child(*this, level, node, [&](std::size_t child, double p, std::span<const int>) { acc += p * next[child]; });
    return acc;
}

double TreeModel::covariation(int level, std::size_t node, std::span<const double> next, int c) const {
    const double h = spacing(c);
    const double mean = (probability(level, node, c, 2) - probability(level, node, c, 0)) * h;
    double acc = 0.0;
    for_each_child(*this, level, node, [&](std::size_t child, double p, std::span<const int> move) {
        acc += p * next[child] * (move[static_cast<std::size_t>(c)] * h - mean);
    });
    return acc;
}

TreeModel build_tree(const Problem& problem, std::span<const double> x0, int steps, const TreeOptions& options) {
    const int k = problem.dim_k();
    const int d = problem.dim_d();
    if (steps < 0) {
        throw OracleError("tree needs a non-negative number of steps");
    }
    if (static_cast<int>(x0.size()) != k) {
        throw OracleError("anchor point has " + std::to_string(x0.size()) + " coordinates, expected " +
                          std::to_string(k));
    }
    TreeModel tree;
    tree.steps_ = steps;
    tree.horizon_ = problem.horizon();
    tree.dt_ = steps > 0 ? problem.horizon() / steps : 0.0;
    tree.x0_.assign(x0.begin(), x0.end());
    tree.spacing_.assign(static_cast<std::size_t>(k), 0.0);

    Problem::Evaluator ev(problem);
    auto local = [&](double t, std::span<const double> x, std::vector<double>& b, std::vector<double>& a) {
        ev.set_point(t, x);
        for (int c = 0; c < k; ++c) {
            b[static_cast<std::size_t>(c)] = ev.drift(c);
            for (int e = 0; e < k; ++e) {
                double acc = 0.0;
                for (int r = 0; r < d; ++r) acc += ev.vol(c, r) * ev.vol(e, r);
                a[static_cast<std::size_t>(c * k + e)] = acc;
            }
        }
    };
    std::vector<double> b(static_cast<std::size_t>(k));
    std::vector<double> a(static_cast<std::size_t>(k * k));
    if (steps > 0) {
        local(0.0, x0, b, a);
        for (int c = 0; c < k; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            tree.spacing_[cc] =
                std::max(std::sqrt(3.0 * a[cc * static_cast<std::size_t>(k) + cc] * tree.dt_), std::fabs(b[cc]) * tree.dt_);
        }
    }

    tree.level_offset_.assign(static_cast<std::size_t>(steps) + 2, 0);
    for (int s = 0; s <= steps; ++s) {
        const double size = static_cast<double>(tree.level_size(s));
        const double total = static_cast<double>(tree.level_offset_[static_cast<std::size_t>(s)]) + size;
        if (total > static_cast<double>(options.max_nodes)) {
            throw OracleError("tree would exceed the node cap of " + std::to_string(options.max_nodes) +
                              " nodes; use fewer steps");
        }
        tree.level_offset_[static_cast<std::size_t>(s) + 1] = static_cast<std::size_t>(total);
    }
    tree.probs_.assign(tree.total_nodes() * static_cast<std::size_t>(k) * 3, 0.0);

    const double dt = tree.dt_;
    for (int s = 0; s < steps; ++s) {
        const double t = tree.time(s);
        for (std::size_t node = 0; node < tree.level_size(s); ++node) {
            const std::vector<double> x = tree.coordinates(s, node);
            local(t, x, b, a);
            double diag = 0.0;
            for (int c = 0; c < k; ++c) diag = std::max(diag, a[static_cast<std::size_t>(c * k + c)]);
            for (int c = 0; c < k; ++c) {
                for (int e = 0; e < k; ++e) {
                    if (c != e && std::fabs(a[static_cast<std::size_t>(c * k + e)]) > 1e-12 * (1.0 + diag)) {
                        throw OracleError("sigma sigma^T is not diagonal at t=" + std::to_string(t) + " x=" +
                                          format_x(x) + "; the tensor lattice cannot match cross moments");
                    }
                }
            }
            double* p = &tree.probs_[(tree.offset(s) + node) * static_cast<std::size_t>(k) * 3];
            for (int c = 0; c < k; ++c) {
                const auto cc = static_cast<std::size_t>(c);
                const double bc = b[cc];
                const double acc = a[cc * static_cast<std::size_t>(k) + cc];
                double* pc = p + cc * 3;
                const double h = tree.spacing_[cc];
                if (h == 0.0) {
                    if (bc != 0.0 || acc != 0.0) {
                        throw OracleError("dimension " + std::to_string(c + 1) +
                                          " does not move at the anchor but has non-zero drift or volatility at t=" +
                                          std::to_string(t) + " x=" + format_x(x));
                    }
                    pc[0] = 0.0;
                    pc[1] = 1.0;
                    pc[2] = 0.0;
                    continue;
                }
                const double var = acc * dt + bc * bc * dt * dt;
                const double half = var / (2.0 * h * h);
                const double tilt = bc * dt / (2.0 * h);
                pc[0] = half - tilt;
                pc[2] = half + tilt;
                pc[1] = 1.0 - var / (h * h);
                for (int q = 0; q < 3; ++q) {
                    if (!(pc[q] >= -1e-14 && pc[q] <= 1.0 + 1e-14)) {
                        std::ostringstream msg;
                        msg << "branch probability " << pc[q] << " outside [0,1] in dimension " << c + 1
                            << " at t=" << t << " x=" << format_x(x) << " (dt=" << dt
                            << "); the drift is too large for this step, use more steps than " << steps;
                        throw OracleError(msg.str());
                    }
                }
                const double mean = (pc[2] - pc[0]) * h;
                const double second = (pc[2] + pc[0]) * h * h;
                const double scale = 1.0 + std::fabs(var);
                if (std::fabs(pc[0] + pc[1] + pc[2] - 1.0) > 1e-12 || std::fabs(mean - bc * dt) > 1e-12 * scale ||
                    std::fabs(second - var) > 1e-12 * scale) {
                    throw OracleError("local moment check failed at t=" + std::to_string(t) + " x=" + format_x(x));
                }
            }
        }
    }
    return tree;
}

OracleResult switching_game_value(const TreeModel& tree, const Problem& problem, const OracleOptions& options) {
    const ModeSpace& ms = problem.modes();
    const auto lambda = static_cast<std::size_t>(ms.size());
    const int k = problem.dim_k();
    const int d = problem.dim_d();
    if (tree.dim() != k) {
        throw OracleError("tree and problem have different state dimensions");
    }
    const bool regression = problem.generators_use_z() &&
                            (options.z == ZEstimate::regression ||
                             (options.z == ZEstimate::automatic && problem.constant_coefficients()));
    const bool projection = options.update == NodalUpdate::projection;
    const int cap = options.max_sweeps > 0 ? options.max_sweeps
                                           : (projection ? static_cast<int>(lambda * lambda) : 1'000'000);
    const double dt = tree.dt();

    Problem::Evaluator ev(problem);
    OracleResult result;

    // Terminal level.
    const int steps = tree.steps();
    std::vector<double> next(lambda * tree.level_size(steps));
    {
        const std::size_t size = tree.level_size(steps);
        for (std::size_t node = 0; node < size; ++node) {
            ev.set_point(tree.horizon(), tree.coordinates(steps, node));
            for (std::size_t p = 0; p < lambda; ++p) next[p * size + node] = ev.terminal(p);
        }
    }

    std::vector<double> cont(lambda);
    std::vector<double> c(lambda);
    std::vector<double> v(lambda);
    std::vector<double> z(static_cast<std::size_t>(d));
    std::vector<double> grad(static_cast<std::size_t>(k));
    SwitchingCosts costs;

    auto target = [&](std::size_t p) {
        const ModePair mp = ms.pair(p);
        const double lo = lower_obstacle(v, costs, mp).value;
        const double hi = upper_obstacle(v, costs, mp).value;
        if (projection) {
            return std::max(lo, std::min(hi, c[p]));
        }
        const double a_lo = std::isfinite(lo) ? dt * options.n : 0.0;
        const double a_hi = std::isfinite(hi) ? dt * options.m : 0.0;
        return detail::penalized_root(1.0, c[p], a_lo, lo, a_hi, hi);
    };

    for (int s = steps - 1; s >= 0; --s) {
        const std::size_t size = tree.level_size(s);
        const std::size_t size_next = tree.level_size(s + 1);
        std::vector<double> cur(lambda * size);
        const double t = tree.time(s);
        for (std::size_t node = 0; node < size; ++node) {
            const std::vector<double> x = tree.coordinates(s, node);
            for (std::size_t p = 0; p < lambda; ++p) {
                cont[p] = tree.expect(s, node, std::span<const double>(next).subspan(p * size_next, size_next));
            }
            ev.set_point(t, x);
            ev.set_y(cont);
            ev.costs(costs);
            for (std::size_t p = 0; p < lambda; ++p) {
                if (regression) {
                    auto np = std::span<const double>(next).subspan(p * size_next, size_next);
                    for (int cdim = 0; cdim < k; ++cdim) {
                        const double h = tree.spacing(cdim);
                        const double mean =
                            (tree.probability(s, node, cdim, 2) - tree.probability(s, node, cdim, 0)) * h;
                        const double var =
                            (tree.probability(s, node, cdim, 2) + tree.probability(s, node, cdim, 0)) * h * h -
                            mean * mean;
                        grad[static_cast<std::size_t>(cdim)] =
                            var > 0.0 ? tree.covariation(s, node, np, cdim) / var : 0.0;
                    }
                    for (int r = 0; r < d; ++r) {
                        double acc = 0.0;
                        for (int cdim = 0; cdim < k; ++cdim) acc += ev.vol(cdim, r) * grad[static_cast<std::size_t>(cdim)];
                        z[static_cast<std::size_t>(r)] = acc;
                    }
                } else {
                    std::fill(z.begin(), z.end(), 0.0);
                }
                ev.set_z(z);
                c[p] = cont[p] + dt * ev.generator(p);
            }

            v = c;
            double defect = 0.0;
            int sweep = 0;
            while (true) {
                ++sweep;
                const bool forward = (sweep % 2) == 1;
                for (std::size_t q = 0; q < lambda; ++q) {
                    const std::size_t p = forward ? q : lambda - 1 - q;
                    v[p] = target(p);
                }
                defect = 0.0;
                for (std::size_t p = 0; p < lambda; ++p) defect = std::max(defect, std::fabs(v[p] - target(p)));
                if (defect <= options.tol) break;
                if (sweep >= cap) {
                    std::ostringstream msg;
                    msg << "nodal fixed point did not settle in " << cap << " sweeps at t=" << t << " x=" << format_x(x)
                        << " (defect " << defect << "); the switching costs are close to a free loop";
                    throw OracleError(msg.str());
                }
            }
            result.max_sweeps_used = std::max(result.max_sweeps_used, sweep);
            result.max_defect = std::max(result.max_defect, defect);
            for (std::size_t p = 0; p < lambda; ++p) {
                if (!std::isfinite(v[p])) {
                    throw OracleError("non-finite oracle value at t=" + std::to_string(t) + " x=" + format_x(x));
                }
                cur[p * size + node] = v[p];
            }
        }
        next.swap(cur);
    }
    result.root.assign(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(lambda));
    return result;
}

double dynkin_value(const TreeModel& tree, const Expression& lower, const Expression& upper, const Expression& running,
                    const Expression& terminal) {
    const int k = tree.dim();
    VarLayout layout;
    layout.add("t");
    for (int c = 1; c <= k; ++c) layout.add("x" + std::to_string(c));
    for (const std::string& name : terminal.free_vars()) {
        if (name == "t") throw OracleError("terminal payoff must depend on x only");
    }
    const CompiledExpr lo(lower, layout);
    const CompiledExpr hi(upper, layout);
    const CompiledExpr g(running, layout);
    const CompiledExpr xi(terminal, layout);
    std::vector<double> slots(layout.size());
    auto bind = [&](double t, const std::vector<double>& x) {
        slots[0] = t;
        std::copy(x.begin(), x.end(), slots.begin() + 1);
    };

    const int steps = tree.steps();
    std::vector<double> next(tree.level_size(steps));
    for (std::size_t node = 0; node < next.size(); ++node) {
        const std::vector<double> x = tree.coordinates(steps, node);
        bind(tree.horizon(), x);
        const double l = lo(slots);
        const double value = xi(slots);
        if (l > value + 1e-12) {
            throw OracleError("lower payoff exceeds the terminal payoff at x=" + format_x(x));
        }
        next[node] = value;
    }
    const double dt = tree.dt();
    for (int s = steps - 1; s >= 0; --s) {
        std::vector<double> cur(tree.level_size(s));
        for (std::size_t node = 0; node < cur.size(); ++node) {
            const std::vector<double> x = tree.coordinates(s, node);
            bind(tree.time(s), x);
            const double l = lo(slots);
            const double u = hi(slots);
            if (l > u) {
                throw OracleError("lower payoff above upper payoff at t=" + std::to_string(tree.time(s)) +
                                  " x=" + format_x(x));
            }
            cur[node] = std::max(l, std::min(u, tree.expect(s, node, next) + g(slots) * dt));
        }
        next.swap(cur);
    }
    return next[0];
}

} // namespace switchvi
