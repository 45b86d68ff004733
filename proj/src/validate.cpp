#include "switchvi/validate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace switchvi {

namespace {

void loop_dfs(const ModeSpace& ms, std::size_t start, std::vector<std::size_t>& path, std::vector<char>& on_path,
              std::vector<std::vector<ModePair>>& out, std::size_t cap, bool& truncated) {
    if (truncated) {
        return;
    }
    const ModePair cur = ms.pair(path.back());
    std::vector<std::size_t> next;
    for (int k = 1; k <= ms.count1; ++k) {
        if (k != cur.i) next.push_back(ms.flat({k, cur.j}));
    }
    for (int l = 1; l <= ms.count2; ++l) {
        if (l != cur.j) next.push_back(ms.flat({cur.i, l}));
    }
    for (std::size_t nb : next) {
        if (nb == start) {
            // A two-node path closes the back-and-forth loop; revisiting the same edge backwards is fine.
            if (path.size() >= 2) {
                if (out.size() >= cap) {
                    truncated = true;
                    return;
                }
                std::vector<ModePair> loop;
                loop.reserve(path.size() + 1);
                for (std::size_t f : path) loop.push_back(ms.pair(f));
                loop.push_back(ms.pair(start));
                out.push_back(std::move(loop));
            }
            continue;
        }
        if (nb < start || on_path[nb] != 0) {
            continue;
        }
        on_path[nb] = 1;
        path.push_back(nb);
        loop_dfs(ms, start, path, on_path, out, cap, truncated);
        path.pop_back();
        on_path[nb] = 0;
        if (truncated) {
            return;
        }
    }
}

void cycle_dfs(int count, int start, std::vector<int>& path, std::vector<char>& on_path,
               std::vector<std::vector<int>>& out) {
    const int cur = path.back();
    for (int nb = 1; nb <= count; ++nb) {
        if (nb == cur) continue;
        if (nb == start) {
            if (path.size() >= 2) {
                auto cyc = path;
                cyc.push_back(start);
                out.push_back(std::move(cyc));
            }
            continue;
        }
        if (nb < start || on_path[static_cast<std::size_t>(nb)] != 0) continue;
        on_path[static_cast<std::size_t>(nb)] = 1;
        path.push_back(nb);
        cycle_dfs(count, start, path, on_path, out);
        path.pop_back();
        on_path[static_cast<std::size_t>(nb)] = 0;
    }
}

double loop_sum(const std::vector<ModePair>& loop, const SwitchingCosts& costs) {
    double sum = 0.0;
    for (std::size_t q = 0; q + 1 < loop.size(); ++q) {
        const ModePair a = loop[q];
        const ModePair b = loop[q + 1];
        if (a.i != b.i) sum -= costs.lower_cost(a.i, b.i);
        if (a.j != b.j) sum += costs.upper_cost(a.j, b.j);
    }
    return sum;
}

bool is_mixed(const std::vector<ModePair>& loop) {
    bool p1 = false;
    bool p2 = false;
    for (std::size_t q = 0; q + 1 < loop.size(); ++q) {
        p1 = p1 || loop[q].i != loop[q + 1].i;
        p2 = p2 || loop[q].j != loop[q + 1].j;
    }
    return p1 && p2;
}

std::string format_point(const SamplePoint& s) {
    std::ostringstream os;
    os << "t=" << s.t << " x=(";
    for (std::size_t c = 0; c < s.x.size(); ++c) {
        os << (c ? "," : "") << s.x[c];
    }
    os << ")";
    return os.str();
}

} // namespace

TerminalCheck validate_terminal(const Problem& problem, const std::vector<std::vector<double>>& xs) {
    TerminalCheck out;
    if (xs.empty()) {
        throw ModelError("terminal validation needs at least one sample point");
    }
    const ModeSpace& ms = problem.modes();
    const auto lambda = static_cast<std::size_t>(ms.size());
    Problem::Evaluator ev(problem);
    std::vector<double> h(lambda);
    SwitchingCosts costs;
    for (const auto& x : xs) {
        ev.set_point(problem.horizon(), x);
        for (std::size_t p = 0; p < lambda; ++p) h[p] = ev.terminal(p);
        ev.costs(costs);
        for (std::size_t p = 0; p < lambda; ++p) {
            const ModePair mp = ms.pair(p);
            const double lo = lower_obstacle(h, costs, mp).value - h[p];
            const double hi = h[p] - upper_obstacle(h, costs, mp).value;
            const double v = std::max(lo, hi);
            if (v > out.worst) {
                out.worst = v;
                out.pair = mp;
                out.x = x;
                out.side = lo >= hi ? "lower" : "upper";
            }
        }
    }
    out.ok = out.worst <= kValidationTolerance;
    return out;
}

std::vector<std::vector<ModePair>> enumerate_loops(const ModeSpace& modes, std::size_t cap, bool* truncated) {
    std::vector<std::vector<ModePair>> out;
    bool trunc = false;
    const auto lambda = static_cast<std::size_t>(modes.size());
    std::vector<char> on_path(lambda, 0);
    for (std::size_t s = 0; s < lambda && !trunc; ++s) {
        std::vector<std::size_t> path{s};
        on_path[s] = 1;
        loop_dfs(modes, s, path, on_path, out, cap, trunc);
        on_path[s] = 0;
    }
    if (truncated != nullptr) *truncated = trunc;
    return out;
}

std::vector<std::vector<int>> enumerate_cycles(int count) {
    std::vector<std::vector<int>> out;
    std::vector<char> on_path(static_cast<std::size_t>(count) + 1, 0);
    for (int s = 1; s <= count; ++s) {
        std::vector<int> path{s};
        on_path[static_cast<std::size_t>(s)] = 1;
        cycle_dfs(count, s, path, on_path, out);
        on_path[static_cast<std::size_t>(s)] = 0;
    }
    return out;
}

LoopReport validate_no_free_loop(const Problem& problem, const std::vector<SamplePoint>& samples,
                                 std::size_t loop_cap) {
    LoopReport report;
    const ModeSpace& ms = problem.modes();

    std::vector<SwitchingCosts> costs(samples.size());
    {
        Problem::Evaluator ev(problem);
        for (std::size_t s = 0; s < samples.size(); ++s) {
            ev.set_point(samples[s].t, samples[s].x);
            ev.costs(costs[s]);
        }
    }

    bool truncated = false;
    const auto loops = enumerate_loops(ms, loop_cap, &truncated);
    auto& nfl = report.no_free_loop;
    nfl.loops = loops.size();
    nfl.truncated = truncated;
    std::optional<LoopWitness> pure_witness;
    for (const auto& loop : loops) {
        for (std::size_t s = 0; s < samples.size(); ++s) {
            const double first = loop_sum(loop, costs[s]);
            const double second = -first;
            if (std::fabs(first) > kValidationTolerance && std::fabs(second) > kValidationTolerance) {
                continue;
            }
            ++nfl.violations;
            LoopWitness w{loop, samples[s], first};
            if (is_mixed(loop)) {
                if (!nfl.witness) nfl.witness = std::move(w);
            } else if (!pure_witness) {
                pure_witness = std::move(w);
            }
            break;
        }
    }
    if (!nfl.witness && pure_witness) {
        nfl.witness = std::move(pure_witness);
    }
    nfl.ok = nfl.violations == 0;

    auto check_cycles = [&](int count, bool lower, CycleCheck& out) {
        for (const auto& cyc : enumerate_cycles(count)) {
            for (std::size_t s = 0; s < samples.size(); ++s) {
                double sum = 0.0;
                for (std::size_t q = 0; q + 1 < cyc.size(); ++q) {
                    sum += lower ? costs[s].lower_cost(cyc[q], cyc[q + 1]) : costs[s].upper_cost(cyc[q], cyc[q + 1]);
                }
                if (sum <= kValidationTolerance) {
                    out.ok = false;
                    out.witness = CycleWitness{cyc, samples[s], sum};
                    return;
                }
            }
        }
    };
    check_cycles(ms.count1, true, report.cycle_lower);
    check_cycles(ms.count2, false, report.cycle_upper);
    return report;
}

NonnegCheck validate_cost_nonneg(const Problem& problem, const std::vector<SamplePoint>& samples) {
    NonnegCheck out;
    const ModeSpace& ms = problem.modes();
    Problem::Evaluator ev(problem);
    SwitchingCosts costs;
    for (const auto& s : samples) {
        ev.set_point(s.t, s.x);
        ev.costs(costs);
        for (int a = 1; a <= ms.count1; ++a) {
            for (int b = 1; b <= ms.count1; ++b) {
                if (a != b && costs.lower_cost(a, b) < 0.0) {
                    out.ok = false;
                    out.witness = NonnegWitness{"g_lower", a, b, s, costs.lower_cost(a, b)};
                    return out;
                }
            }
        }
        for (int a = 1; a <= ms.count2; ++a) {
            for (int b = 1; b <= ms.count2; ++b) {
                if (a != b && costs.upper_cost(a, b) < 0.0) {
                    out.ok = false;
                    out.witness = NonnegWitness{"g_upper", a, b, s, costs.upper_cost(a, b)};
                    return out;
                }
            }
        }
    }
    return out;
}

std::vector<std::string> coefficient_warnings(const Problem& problem, const std::vector<SamplePoint>& samples) {
    std::vector<std::string> warnings;
    const ModeSpace& ms = problem.modes();
    const auto lambda = static_cast<std::size_t>(ms.size());
    const auto d = static_cast<std::size_t>(problem.dim_d());
    constexpr double kStep = 1e-3;
    constexpr double kLipschitzWarn = 1e6;
    constexpr std::size_t kMaxProbes = 64;

    const std::size_t stride = std::max<std::size_t>(1, samples.size() / kMaxProbes);
    Problem::Evaluator ev(problem);
    std::vector<double> y(lambda, 0.0);
    std::vector<double> z(d, 0.0);
    std::vector<char> warned_lip(lambda, 0);
    std::vector<char> warned_mono(lambda * lambda, 0);

    try {
        for (std::size_t s = 0; s < samples.size(); s += stride) {
            ev.set_point(samples[s].t, samples[s].x);
            for (std::size_t p = 0; p < lambda; ++p) y[p] = ev.terminal(p);
            ev.set_y(y);
            ev.set_z(z);
            for (std::size_t p = 0; p < lambda; ++p) {
                const double base = ev.generator(p);
                for (std::size_t q = 0; q < lambda; ++q) {
                    auto yq = y;
                    yq[q] += kStep;
                    ev.set_y(yq);
                    const double slope = (ev.generator(p) - base) / kStep;
                    ev.set_y(y);
                    if (std::fabs(slope) > kLipschitzWarn && warned_lip[p] == 0) {
                        warned_lip[p] = 1;
                        warnings.push_back("generator f" + to_string(ms.pair(p)) +
                                           " has a large finite-difference slope in y near " +
                                           format_point(samples[s]));
                    }
                    if (q != p && slope < -1e-9 && warned_mono[p * lambda + q] == 0) {
                        warned_mono[p * lambda + q] = 1;
                        warnings.push_back("generator f" + to_string(ms.pair(p)) + " decreases in y" +
                                           to_string(ms.pair(q)) + " near " + format_point(samples[s]) +
                                           " (cross-monotonicity)");
                    }
                }
                for (std::size_t r = 0; r < d; ++r) {
                    auto zr = z;
                    zr[r] += kStep;
                    ev.set_z(zr);
                    const double slope = (ev.generator(p) - base) / kStep;
                    ev.set_z(z);
                    if (std::fabs(slope) > kLipschitzWarn && warned_lip[p] == 0) {
                        warned_lip[p] = 1;
                        warnings.push_back("generator f" + to_string(ms.pair(p)) +
                                           " has a large finite-difference slope in z near " +
                                           format_point(samples[s]));
                    }
                }
            }
        }
    } catch (const EvalError& e) {
        warnings.push_back(std::string("coefficient probe failed: ") + e.what());
    }
    return warnings;
}

ValidationReport validate(const Problem& problem, const std::vector<SamplePoint>& samples) {
    ValidationReport r;
    std::vector<std::vector<double>> xs;
    xs.reserve(samples.size());
    for (const auto& s : samples) xs.push_back(s.x);
    r.terminal = validate_terminal(problem, xs);
    r.loops = validate_no_free_loop(problem, samples);
    r.cost_nonneg = validate_cost_nonneg(problem, samples);
    r.warnings = coefficient_warnings(problem, samples);
    return r;
}

std::string describe(const LoopWitness& w) {
    std::ostringstream os;
    for (std::size_t q = 0; q < w.loop.size(); ++q) {
        os << (q ? "->" : "") << to_string(w.loop[q]);
    }
    os << " at " << format_point(w.at) << ", cost sum " << w.sum;
    return os.str();
}

std::string describe(const CycleWitness& w, const char* player) {
    std::ostringstream os;
    os << player << " cycle ";
    for (std::size_t q = 0; q < w.cycle.size(); ++q) {
        os << (q ? "->" : "") << w.cycle[q];
    }
    os << " at " << format_point(w.at) << ", cost sum " << w.sum;
    return os.str();
}

} // namespace switchvi
