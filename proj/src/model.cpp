#include "switchvi/model.hpp"

#include <algorithm>
#include <cmath>

namespace switchvi {

namespace {

enum class Allowed { time_state, state_only, full };

std::string y_name(int i, int j) {
    return "y_" + std::to_string(i) + "_" + std::to_string(j);
}

void check_vars(const Expression& e, const std::string& label, Allowed allowed, const ProblemSpec& spec) {
    for (const auto& name : e.free_vars()) {
        bool ok = false;
        if (name == "t") {
            ok = allowed != Allowed::state_only;
        } else if (name[0] == 'x') {
            ok = std::stoi(name.substr(1)) <= spec.dim_k;
        } else if (name[0] == 'z') {
            ok = allowed == Allowed::full && std::stoi(name.substr(1)) <= spec.dim_d;
        } else if (name[0] == 'y') {
            if (allowed == Allowed::full) {
                auto rest = name.substr(2);
                auto sep = rest.find('_');
                const int i = std::stoi(rest.substr(0, sep));
                const int j = std::stoi(rest.substr(sep + 1));
                ok = spec.modes.contains({i, j});
            }
        }
        if (!ok) {
            throw ModelError(label + " references '" + name + "', which is not available to it");
        }
    }
}

std::vector<CompiledExpr> compile_all(const std::vector<Expression>& exprs, const VarLayout& layout) {
    std::vector<CompiledExpr> out;
    out.reserve(exprs.size());
    for (const auto& e : exprs) {
        out.emplace_back(e, layout);
    }
    return out;
}

bool is_zero_literal(const Expression& e) {
    return e.root().kind == ExprNode::Kind::number && e.root().number == 0.0;
}

} // namespace

std::string to_string(ModePair p) {
    return "(" + std::to_string(p.i) + "," + std::to_string(p.j) + ")";
}

ObstacleValue lower_obstacle(std::span<const double> values, const SwitchingCosts& costs, ModePair p) {
    ObstacleValue best{kNoLowerObstacle, 0};
    const ModeSpace& ms = costs.modes;
    for (int k = 1; k <= ms.count1; ++k) {
        if (k == p.i) {
            continue;
        }
        const double cand = values[ms.flat({k, p.j})] - costs.lower_cost(p.i, k);
        if (best.arg == 0 || cand > best.value) {
            best = {cand, k};
        }
    }
    return best;
}

ObstacleValue upper_obstacle(std::span<const double> values, const SwitchingCosts& costs, ModePair p) {
    ObstacleValue best{kNoUpperObstacle, 0};
    const ModeSpace& ms = costs.modes;
    for (int l = 1; l <= ms.count2; ++l) {
        if (l == p.j) {
            continue;
        }
        const double cand = values[ms.flat({p.i, l})] + costs.upper_cost(p.j, l);
        if (best.arg == 0 || cand < best.value) {
            best = {cand, l};
        }
    }
    return best;
}

std::string to_string(PenaltyKind kind) {
    switch (kind) {
    case PenaltyKind::doubly: return "doubly";
    case PenaltyKind::lower_only: return "lower_only";
    case PenaltyKind::upper_only: return "upper_only";
    }
    return "?";
}

PenaltyKind penalty_kind_from_string(const std::string& s) {
    if (s == "doubly") return PenaltyKind::doubly;
    if (s == "lower_only") return PenaltyKind::lower_only;
    if (s == "upper_only") return PenaltyKind::upper_only;
    throw ModelError("unknown penalty kind '" + s + "'");
}

double penalize(PenaltyKind kind, double n, double m, double f, double y, double lower, double upper) {
    double out = f;
    if (kind != PenaltyKind::lower_only && n != 0.0) {
        out += n * std::max(lower - y, 0.0);
    }
    if (kind != PenaltyKind::upper_only && m != 0.0) {
        out -= m * std::max(y - upper, 0.0);
    }
    return out;
}

Problem::Problem(ProblemSpec spec) : spec_(std::move(spec)) {
    const auto& s = spec_;
    if (s.dim_k < 1 || s.dim_d < 1) {
        throw ModelError("state and noise dimensions must be at least 1");
    }
    if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) {
        throw ModelError("horizon must be a positive finite time");
    }
    if (s.modes.count1 < 1 || s.modes.count2 < 1) {
        throw ModelError("each player needs at least one mode");
    }
    const auto lambda = static_cast<std::size_t>(s.modes.size());
    const auto k = static_cast<std::size_t>(s.dim_k);
    const auto d = static_cast<std::size_t>(s.dim_d);
    const auto c1 = static_cast<std::size_t>(s.modes.count1);
    const auto c2 = static_cast<std::size_t>(s.modes.count2);
    if (s.drift.size() != k) throw ModelError("drift needs exactly k expressions");
    if (s.vol.size() != k * d) throw ModelError("volatility needs exactly k*d expressions");
    if (s.generator.size() != lambda) throw ModelError("one generator per mode pair is required");
    if (s.terminal.size() != lambda) throw ModelError("one terminal condition per mode pair is required");
    if (s.cost_lower.size() != c1 * c1) throw ModelError("lower cost matrix must be count1 x count1");
    if (s.cost_upper.size() != c2 * c2) throw ModelError("upper cost matrix must be count2 x count2");

    for (std::size_t c = 0; c < k; ++c) {
        check_vars(s.drift[c], "drift b" + std::to_string(c + 1), Allowed::time_state, s);
        for (std::size_t r = 0; r < d; ++r) {
            check_vars(s.vol[c * d + r], "sigma_" + std::to_string(c + 1) + "_" + std::to_string(r + 1),
                       Allowed::time_state, s);
        }
    }
    for (std::size_t p = 0; p < lambda; ++p) {
        const ModePair mp = s.modes.pair(p);
        check_vars(s.generator[p], "generator f_" + std::to_string(mp.i) + "_" + std::to_string(mp.j), Allowed::full, s);
        check_vars(s.terminal[p], "terminal h_" + std::to_string(mp.i) + "_" + std::to_string(mp.j), Allowed::state_only,
                   s);
    }
    for (std::size_t a = 0; a < c1; ++a) {
        for (std::size_t b = 0; b < c1; ++b) {
            const auto& e = s.cost_lower[a * c1 + b];
            const std::string label = "cost g_lower_" + std::to_string(a + 1) + "_" + std::to_string(b + 1);
            if (a == b && !is_zero_literal(e)) {
                throw ModelError(label + ": diagonal switching costs are zero by convention");
            }
            check_vars(e, label, Allowed::time_state, s);
        }
    }
    for (std::size_t a = 0; a < c2; ++a) {
        for (std::size_t b = 0; b < c2; ++b) {
            const auto& e = s.cost_upper[a * c2 + b];
            const std::string label = "cost g_upper_" + std::to_string(a + 1) + "_" + std::to_string(b + 1);
            if (a == b && !is_zero_literal(e)) {
                throw ModelError(label + ": diagonal switching costs are zero by convention");
            }
            check_vars(e, label, Allowed::time_state, s);
        }
    }

    layout_.add("t");
    for (std::size_t c = 1; c <= k; ++c) {
        layout_.add("x" + std::to_string(c));
    }
    for (std::size_t p = 0; p < lambda; ++p) {
        const ModePair mp = s.modes.pair(p);
        layout_.add(y_name(mp.i, mp.j));
    }
    for (std::size_t r = 1; r <= d; ++r) {
        layout_.add("z" + std::to_string(r));
    }

    drift_ = compile_all(s.drift, layout_);
    vol_ = compile_all(s.vol, layout_);
    generator_ = compile_all(s.generator, layout_);
    cost_lower_ = compile_all(s.cost_lower, layout_);
    cost_upper_ = compile_all(s.cost_upper, layout_);
    terminal_ = compile_all(s.terminal, layout_);

    for (const auto& g : s.generator) {
        for (const auto& name : g.free_vars()) {
            uses_z_ = uses_z_ || name[0] == 'z';
            uses_y_ = uses_y_ || name[0] == 'y';
        }
    }
    for (const auto& e : drift_) {
        constant_coefficients_ = constant_coefficients_ && e.is_constant();
    }
    for (const auto& e : vol_) {
        constant_coefficients_ = constant_coefficients_ && e.is_constant();
    }
}

ObstacleValue Problem::obstacle_lower(std::span<const double> values, ModePair p, double t,
                                      std::span<const double> x) const {
    return lower_obstacle(values, costs_at(t, x), p);
}

ObstacleValue Problem::obstacle_upper(std::span<const double> values, ModePair p, double t,
                                      std::span<const double> x) const {
    return upper_obstacle(values, costs_at(t, x), p);
}

double Problem::penalized_generator(PenaltyKind kind, double n, double m, ModePair p, double t,
                                    std::span<const double> x, std::span<const double> ybar,
                                    std::span<const double> z) const {
    if (n < 0.0 || m < 0.0) {
        throw ModelError("penalty parameters must be non-negative");
    }
    Evaluator ev(*this);
    ev.set_point(t, x);
    ev.set_y(ybar);
    ev.set_z(z);
    const std::size_t flat = spec_.modes.flat(p);
    const double f = ev.generator(flat);
    if (n == 0.0 && m == 0.0) {
        return f;
    }
    SwitchingCosts costs;
    ev.costs(costs);
    const double lo = lower_obstacle(ybar, costs, p).value;
    const double hi = upper_obstacle(ybar, costs, p).value;
    return penalize(kind, n, m, f, ybar[flat], lo, hi);
}

SwitchingCosts Problem::costs_at(double t, std::span<const double> x) const {
    Evaluator ev(*this);
    ev.set_point(t, x);
    SwitchingCosts out;
    ev.costs(out);
    return out;
}

Problem Problem::with_generator_shift(double shift) const {
    ProblemSpec s = spec_;
    for (auto& g : s.generator) {
        g = Expression::binary(BinaryOp::add, g, Expression::number(shift));
    }
    return Problem(std::move(s));
}

Problem::Evaluator::Evaluator(const Problem& problem)
    : problem_(&problem),
      slots_(problem.layout_.size(), 0.0),
      x_offset_(1),
      y_offset_(1 + static_cast<std::size_t>(problem.dim_k())),
      z_offset_(1 + static_cast<std::size_t>(problem.dim_k()) + static_cast<std::size_t>(problem.modes().size())) {}

void Problem::Evaluator::set_point(double t, std::span<const double> x) {
    slots_[0] = t;
    std::copy(x.begin(), x.end(), slots_.begin() + static_cast<std::ptrdiff_t>(x_offset_));
}

void Problem::Evaluator::set_y(std::span<const double> y) {
    std::copy(y.begin(), y.end(), slots_.begin() + static_cast<std::ptrdiff_t>(y_offset_));
}

void Problem::Evaluator::set_z(std::span<const double> z) {
    std::copy(z.begin(), z.end(), slots_.begin() + static_cast<std::ptrdiff_t>(z_offset_));
}

double Problem::Evaluator::drift(int c) const {
    return problem_->drift_[static_cast<std::size_t>(c)](slots_);
}

double Problem::Evaluator::vol(int c, int r) const {
    return problem_->vol_[static_cast<std::size_t>(c * problem_->dim_d() + r)](slots_);
}

double Problem::Evaluator::generator(std::size_t flat_pair) const {
    return problem_->generator_[flat_pair](slots_);
}

double Problem::Evaluator::terminal(std::size_t flat_pair) const {
    return problem_->terminal_[flat_pair](slots_);
}

void Problem::Evaluator::costs(SwitchingCosts& out) const {
    out.modes = problem_->modes();
    out.lower.resize(problem_->cost_lower_.size());
    out.upper.resize(problem_->cost_upper_.size());
    for (std::size_t a = 0; a < out.lower.size(); ++a) {
        out.lower[a] = problem_->cost_lower_[a](slots_);
    }
    for (std::size_t a = 0; a < out.upper.size(); ++a) {
        out.upper[a] = problem_->cost_upper_[a](slots_);
    }
}

} // namespace switchvi
