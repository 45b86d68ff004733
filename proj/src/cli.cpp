#include "switchvi/cli.hpp"

#include "switchvi/bilateral.hpp"
#include "switchvi/field_io.hpp"
#include "switchvi/oracle.hpp"
#include "switchvi/problem_file.hpp"
#include "switchvi/schemes.hpp"
#include "switchvi/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace switchvi {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Flags {
    std::string file;
    std::string manifest;
    std::optional<std::string> scheme;
    std::optional<double> n;
    std::optional<double> m;
    std::optional<double> tol;
    std::optional<std::string> schedule;
    std::optional<std::string> grid;
    std::optional<int> n_steps;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    bool force = false;
    std::string out = "switchvi-out";
    std::string level = "fast";
    double tighten = 1.0;
    std::vector<std::string> argv;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

json point_json(const SamplePoint& p) { return {{"t", p.t}, {"x", p.x}}; }

json pair_json(ModePair p) { return json::array({p.i, p.j}); }

json validation_json(const ValidationReport& v) {
    json out;
    out["ok"] = v.ok();
    json term = {{"ok", v.terminal.ok}, {"worst_excess", v.terminal.worst}};
    if (!v.terminal.ok) {
        term["pair"] = pair_json(v.terminal.pair);
        term["x"] = v.terminal.x;
        term["side"] = v.terminal.side;
    }
    out["terminal_compatibility"] = term;
    json loop = {{"ok", v.loops.no_free_loop.ok},
                 {"loops", v.loops.no_free_loop.loops},
                 {"violations", v.loops.no_free_loop.violations},
                 {"truncated", v.loops.no_free_loop.truncated}};
    if (const auto& w = v.loops.no_free_loop.witness) {
        json walk = json::array();
        for (ModePair p : w->loop) walk.push_back(pair_json(p));
        loop["witness"] = {{"loop", walk}, {"at", point_json(w->at)}, {"sum", w->sum}};
    }
    out["no_free_loop"] = loop;
    auto cycle = [](const CycleCheck& c) {
        json j = {{"ok", c.ok}};
        if (c.witness) j["witness"] = {{"cycle", c.witness->cycle}, {"at", point_json(c.witness->at)}, {"sum", c.witness->sum}};
        return j;
    };
    out["cycle_lower"] = cycle(v.loops.cycle_lower);
    out["cycle_upper"] = cycle(v.loops.cycle_upper);
    json nonneg = {{"ok", v.cost_nonneg.ok}};
    if (const auto& w = v.cost_nonneg.witness) {
        nonneg["witness"] = {{"matrix", w->matrix}, {"from", w->from}, {"to", w->to}, {"at", point_json(w->at)},
                             {"value", w->value}};
    }
    out["cost_nonnegative"] = nonneg;
    out["warnings"] = v.warnings;
    return out;
}

void print_validation(const ValidationReport& v, std::ostream& out) {
    auto line = [&](const char* what, bool ok, const std::string& detail) {
        out << "  " << (ok ? "ok  " : "FAIL") << "  " << what;
        if (!ok) out << ": " << detail;
        out << '\n';
    };
    std::ostringstream term;
    if (!v.terminal.ok) {
        term << "pair " << to_string(v.terminal.pair) << " at x = (";
        for (std::size_t c = 0; c < v.terminal.x.size(); ++c) term << (c ? ", " : "") << v.terminal.x[c];
        term << "), h is " << (v.terminal.side == "lower" ? "below the lower" : "above the upper") << " obstacle by "
             << v.terminal.worst;
    }
    line("terminal compatibility", v.terminal.ok, term.str());
    line("no free loop", v.loops.no_free_loop.ok,
         v.loops.no_free_loop.witness ? "zero-cost loop " + describe(*v.loops.no_free_loop.witness) : "");
    line("player 1 cycles", v.loops.cycle_lower.ok,
         v.loops.cycle_lower.witness ? describe(*v.loops.cycle_lower.witness, "player 1") : "");
    line("player 2 cycles", v.loops.cycle_upper.ok,
         v.loops.cycle_upper.witness ? describe(*v.loops.cycle_upper.witness, "player 2") : "");
    std::string neg;
    if (const auto& w = v.cost_nonneg.witness) {
        std::ostringstream os;
        os << w->matrix << "_" << w->from << "_" << w->to << " = " << w->value << " at t = " << w->at.t;
        neg = os.str();
    }
    line("nonnegative costs", v.cost_nonneg.ok, neg);
    for (const auto& w : v.warnings) out << "  warning: " << w << '\n';
}

json report_json(const SolveReport& r) {
    json mono = {{"explicit_bound", r.monotonicity.explicit_bound},
                 {"negative_weights", r.monotonicity.negative_weights},
                 {"most_negative_weight", r.monotonicity.most_negative_weight},
                 {"monotone", r.monotonicity.monotone}};
    return {{"total_iterations", r.total_iterations()},
            {"max_slice_defect", r.max_residual()},
            {"wall_seconds", r.wall_seconds},
            {"monotonicity", mono},
            {"warnings", r.warnings}};
}

ProblemFile load_input(const Flags& flags, json* manifest_seed) {
    if (flags.manifest.empty()) return load_problem_file(flags.file);
    const std::string text = read_text_file(flags.manifest);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ProblemFileError(flags.manifest + ": " + e.what());
    }
    if (!doc.contains("config")) throw ProblemFileError(flags.manifest + ": manifest has no config section");
    if (manifest_seed != nullptr && doc.contains("seed")) *manifest_seed = doc["seed"];
    return parse_problem_json(doc["config"].dump(), flags.manifest + "#/config");
}

void apply_flags(const Flags& flags, ProblemFile& file) {
    SolverSection& s = file.solver;
    if (flags.scheme) s.scheme = *flags.scheme;
    if (flags.n) s.n = *flags.n;
    if (flags.m) s.m = *flags.m;
    if (flags.tol) s.tol = *flags.tol;
    if (flags.schedule) s.schedule = parse_schedule(*flags.schedule);
    if (flags.grid) file.grid = parse_grid_flag(*flags.grid, file.grid);
    if (flags.n_steps) s.oracle_steps = *flags.n_steps;
    if (flags.threads) s.threads = *flags.threads;
    if (flags.force) s.force = true;
}

std::vector<double> anchor(const ProblemFile& file) {
    if (file.solver.x0) return *file.solver.x0;
    std::vector<double> x0;
    for (std::size_t c = 0; c < file.grid.lo.size(); ++c) x0.push_back(0.5 * (file.grid.lo[c] + file.grid.hi[c]));
    return x0;
}

PenalizedConfig penalized_config(const SolverSection& s, PenaltyKind kind) {
    PenalizedConfig cfg;
    cfg.kind = kind;
    cfg.n = s.n;
    cfg.m = s.m;
    cfg.theta = s.theta;
    if (s.tol) cfg.fixed_point_tol = *s.tol;
    if (s.max_iters) cfg.max_inner_iters = *s.max_iters;
    cfg.damping = s.damping;
    cfg.exp_shift_lambda = s.exp_shift_lambda;
    cfg.initial_guess = initial_guess_from_string(s.initial_guess);
    return cfg;
}

BilateralConfig bilateral_config(const SolverSection& s, Variant variant) {
    BilateralConfig cfg;
    cfg.variant = variant;
    if (s.tol) cfg.tol = *s.tol;
    if (s.max_iters) cfg.max_iters = *s.max_iters;
    cfg.theta = s.theta;
    cfg.damping = s.damping;
    cfg.initial_guess = initial_guess_from_string(s.initial_guess);
    cfg.force = s.force;
    return cfg;
}

json roots_at(const ValueField& field, const std::vector<double>& x0) {
    json roots = json::array();
    for (std::size_t p = 0; p < static_cast<std::size_t>(field.modes().size()); ++p) {
        try {
            roots.push_back(interpolate(field, field.modes().pair(p), 0.0, x0));
        } catch (const std::exception&) {
            roots.push_back(nullptr);
        }
    }
    return roots;
}

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::string field(const ValueField& f, const std::string& name) {
        const std::string path = (dir_ / name).string();
        write_field_csv(f, path);
        record(path);
        return path;
    }

    std::string text(const std::string& name, const std::string& content, bool hashed = true) {
        const std::string path = (dir_ / name).string();
        write_text_file(path, content);
        if (hashed) record(path);
        return path;
    }

    const json& files() const { return files_; }

private:
    void record(const std::string& path) { files_.push_back({{"path", path}, {"fnv1a", hash_file(path)}}); }

    fs::path dir_;
    json files_ = json::array();
};

struct RunContext {
    const Flags& flags;
    std::ostream& out;
    std::ostream& err;
    std::string command;
    json seed;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
};

void write_manifest(RunContext& ctx, Outputs& outputs, const ProblemFile& file, const json& validation,
                    const std::string& status, const std::string& report_path, double validate_s, double solve_s) {
    json m;
    m["tool"] = "switchvi";
    m["version"] = kVersion;
    m["command"] = ctx.command;
    m["argv"] = ctx.flags.argv;
    m["status"] = status;
    m["seed"] = ctx.seed;
    m["config"] = json::parse(to_json_text(file));
    m["validation"] = validation;
    m["report"] = report_path;
    m["outputs"] = outputs.files();
    m["timings"] = {{"validate_seconds", validate_s}, {"solve_seconds", solve_s}, {"total_seconds", seconds_since(ctx.started)}};
    const std::string path = outputs.text("manifest.json", m.dump(2) + "\n", false);
    ctx.out << "manifest: " << path << '\n';
}

void print_table(std::ostream& out, const ScheduleResult& res, char free_index, const std::vector<double>& x0) {
    out << "monotonicity (" << free_index << " increasing, expected "
        << (free_index == 'm' ? "decrease" : "increase") << "):\n";
    out << std::setw(10) << "from" << std::setw(10) << "to" << std::setw(16) << "violation" << std::setw(16)
        << "max change";
    const ModeSpace& modes = res.members.front().field.modes();
    for (int p = 0; p < modes.size(); ++p) out << std::setw(14) << ("v" + to_string(modes.pair(static_cast<std::size_t>(p))));
    out << '\n';
    for (const auto& c : res.checks) {
        const auto& a = res.schedule[c.from];
        const auto& b = res.schedule[c.to];
        const double qa = c.index == 'n' ? a.first : a.second;
        const double qb = c.index == 'n' ? b.first : b.second;
        out << std::setw(10) << short_number(qa) << std::setw(10) << short_number(qb) << std::setw(16)
            << std::setprecision(3) << std::scientific << c.violation << std::setw(16)
            << max_abs_diff(res.members[c.from].field, res.members[c.to].field) << std::defaultfloat;
        const json roots = roots_at(res.members[c.to].field, x0);
        for (const auto& r : roots) out << std::setw(14) << std::setprecision(8) << (r.is_null() ? NAN : r.get<double>());
        out << std::setprecision(6) << '\n';
    }
    out << "worst violation: " << res.worst_violation() << '\n';
}

int cmd_validate(RunContext& ctx) {
    ProblemFile file = load_input(ctx.flags, nullptr);
    apply_flags(ctx.flags, file);
    const Problem problem(file.spec);
    const Grid grid = build_grid(file.grid, problem);
    const ValidationReport v = validate(problem, validation_samples(file, grid));
    ctx.out << "validate " << (file.name.empty() ? ctx.flags.file : file.name) << '\n';
    print_validation(v, ctx.out);
    ctx.out << (v.ok() ? "assumptions hold on " : "assumptions FAIL on ") << grid_samples(grid, 4000).size() + file.extra_points.size()
            << " sample points\n";
    return v.ok() ? kExitOk : kExitFailed;
}

int cmd_solve(RunContext& ctx) {
    ProblemFile file = load_input(ctx.flags, &ctx.seed);
    apply_flags(ctx.flags, file);
    if (ctx.flags.seed) ctx.seed = *ctx.flags.seed;
    const SolverSection& s = file.solver;
    static const std::vector<std::string> schemes = {"doubly",        "decreasing",    "increasing",
                                                     "bilateral-min", "bilateral-max", "oracle"};
    if (std::find(schemes.begin(), schemes.end(), s.scheme) == schemes.end()) {
        ctx.err << "error: unknown scheme '" << s.scheme << "'\n";
        return kExitInput;
    }

    const Problem problem(file.spec);
    auto grid = std::make_shared<const Grid>(build_grid(file.grid, problem));
    const auto t0 = std::chrono::steady_clock::now();
    const ValidationReport v = validate(problem, validation_samples(file, *grid));
    const double validate_s = seconds_since(t0);
    const json vjson = validation_json(v);
    if (!v.ok()) {
        ctx.out << "validation:\n";
        print_validation(v, ctx.out);
        if (!s.force) {
            ctx.err << "error: assumptions fail; rerun with --force to solve anyway\n";
            return kExitFailed;
        }
        ctx.err << "warning: assumptions fail, solving because of --force\n";
    }

    Outputs outputs(ctx.flags.out);
    json report;
    report["scheme"] = s.scheme;
    const std::vector<double> x0 = anchor(file);
    report["x0"] = x0;
    std::string status = "ok";
    int code = kExitOk;
    const auto t1 = std::chrono::steady_clock::now();

    try {
        if (s.scheme == "oracle") {
            const int steps = s.oracle_steps.value_or(file.grid.time_steps);
            const TreeModel tree = build_tree(problem, x0, steps);
            const OracleResult res = switching_game_value(tree, problem);
            report["steps"] = steps;
            report["tree_nodes"] = tree.total_nodes();
            report["max_sweeps"] = res.max_sweeps_used;
            report["max_nodal_defect"] = res.max_defect;
            std::ostringstream csv;
            csv << "i,j,value\n";
            json roots = json::array();
            ctx.out << "tree oracle, " << steps << " steps, root values at t = 0:\n";
            for (std::size_t p = 0; p < res.root.size(); ++p) {
                const ModePair mp = problem.modes().pair(p);
                csv << mp.i << ',' << mp.j << ',' << format_double(res.root[p]) << '\n';
                roots.push_back({{"i", mp.i}, {"j", mp.j}, {"value", res.root[p]}});
                ctx.out << "  v" << to_string(mp) << " = " << format_double(res.root[p]) << '\n';
            }
            report["root"] = roots;
            outputs.text("roots.csv", csv.str());
        } else if (s.scheme == "bilateral-min" || s.scheme == "bilateral-max") {
            const Variant variant = s.scheme == "bilateral-min" ? Variant::min_first : Variant::max_first;
            const Solution sol = solve_bilateral(problem, grid, bilateral_config(s, variant));
            const std::string path = outputs.field(sol.field, "value.csv");
            const ComplementarityResidual res = residual(sol.field, problem, variant, s.theta);
            const Feasibility feas = feasibility(sol.field, problem, 1e-6);
            json member = report_json(sol.report);
            member["csv"] = path;
            member["root"] = roots_at(sol.field, x0);
            member["complementarity"] = {{"max_interior", res.max_interior},
                                         {"max_all", res.max_all},
                                         {"worst_slice", res.worst_slice},
                                         {"worst_pair", pair_json(res.worst_pair)},
                                         {"worst_node", res.worst_node}};
            member["feasibility"] = {{"lower_violation", feas.lower_violation},
                                     {"upper_violation", feas.upper_violation}};
            report["members"] = json::array({member});
            ctx.out << s.scheme << ": " << sol.report.total_iterations() << " sweeps, residual " << res.max_interior
                    << ", wrote " << path << '\n';
            for (const auto& w : sol.report.warnings) ctx.err << "warning: " << w << '\n';
        } else {
            const PenaltyKind kind = s.scheme == "doubly"       ? PenaltyKind::doubly
                                     : s.scheme == "decreasing" ? PenaltyKind::lower_only
                                                                : PenaltyKind::upper_only;
            const PenalizedConfig base = penalized_config(s, kind);
            for (const auto& w : base.check()) ctx.err << "warning: " << w << '\n';
            std::vector<std::pair<double, double>> schedule;
            if (s.schedule.empty()) {
                schedule.emplace_back(s.n, s.m);
            } else if (kind == PenaltyKind::lower_only) {
                for (double q : s.schedule) schedule.emplace_back(s.n, q);
            } else if (kind == PenaltyKind::upper_only) {
                for (double q : s.schedule) schedule.emplace_back(q, s.m);
            } else {
                for (double a : s.schedule) {
                    for (double b : s.schedule) schedule.emplace_back(a, b);
                }
            }
            const ScheduleResult res = run_schedule(problem, grid, base, schedule, s.threads);
            json members = json::array();
            for (std::size_t q = 0; q < res.members.size(); ++q) {
                const auto [n, m] = res.schedule[q];
                const std::string name = schedule.size() == 1
                                             ? "value.csv"
                                             : "value_n" + short_number(n) + "_m" + short_number(m) + ".csv";
                json member = report_json(res.members[q].report);
                member["n"] = n;
                member["m"] = m;
                member["csv"] = outputs.field(res.members[q].field, name);
                member["root"] = roots_at(res.members[q].field, x0);
                members.push_back(member);
                for (const auto& w : res.members[q].report.warnings) ctx.err << "warning (n=" << n << ", m=" << m << "): " << w << '\n';
            }
            report["members"] = members;
            json checks = json::array();
            for (const auto& c : res.checks) {
                checks.push_back({{"from", c.from}, {"to", c.to}, {"index", std::string(1, c.index)}, {"violation", c.violation}});
            }
            report["monotonicity_checks"] = checks;
            report["worst_violation"] = res.worst_violation();
            ctx.out << s.scheme << ": " << res.members.size() << " field(s) written to " << ctx.flags.out << '\n';
            if (!res.checks.empty()) {
                print_table(ctx.out, res, kind == PenaltyKind::lower_only ? 'm' : kind == PenaltyKind::upper_only ? 'n' : '*',
                            x0);
            }
        }
    } catch (const ConvergenceError& e) {
        status = "not_converged";
        code = kExitNotConverged;
        report["error"] = {{"message", e.what()}, {"slice", e.slice()}, {"defect", e.defect()}, {"iterations", e.iterations()}};
        ctx.err << "error: " << e.what() << '\n';
    } catch (const OracleError& e) {
        status = "failed";
        code = kExitNotConverged;
        report["error"] = {{"message", e.what()}};
        ctx.err << "error: " << e.what() << '\n';
    } catch (const AssumptionError& e) {
        status = "failed";
        code = kExitFailed;
        report["error"] = {{"message", e.what()}};
        ctx.err << "error: " << e.what() << '\n';
    }
    const double solve_s = seconds_since(t1);
    report["status"] = status;
    const std::string report_path = outputs.text("report.json", report.dump(2) + "\n", false);
    ctx.out << "report: " << report_path << '\n';
    write_manifest(ctx, outputs, file, vjson, status, report_path, validate_s, solve_s);
    return code;
}

int cmd_verify(RunContext& ctx) {
    ProblemFile file = load_input(ctx.flags, nullptr);
    apply_flags(ctx.flags, file);
    if (ctx.flags.level != "fast" && ctx.flags.level != "full") {
        ctx.err << "error: --level must be fast or full\n";
        return kExitInput;
    }
    VerifyOptions opts;
    opts.full = ctx.flags.level == "full";
    opts.tighten = ctx.flags.tighten;
    opts.threads = file.solver.threads;
    const VerifyReport rep = run_verify(file, opts);

    json props = json::array();
    int passed = 0;
    int failed = 0;
    int skipped = 0;
    ctx.out << "verify " << (file.name.empty() ? ctx.flags.file : file.name) << " (" << ctx.flags.level;
    if (ctx.flags.tighten != 1.0) ctx.out << ", tolerances / " << ctx.flags.tighten;
    ctx.out << ")\n";
    if (!rep.validation.ok()) {
        ctx.out << "validator failure, no solve attempted:\n";
        print_validation(rep.validation, ctx.out);
    }
    for (const auto& p : rep.properties) {
        const char* tag = p.skipped ? "SKIP" : p.passed ? "PASS" : "FAIL";
        (p.skipped ? skipped : p.passed ? passed : failed) += 1;
        ctx.out << "  " << tag << "  " << std::left << std::setw(38) << p.name << std::right;
        if (!p.skipped) ctx.out << std::setprecision(3) << std::scientific << p.measured << " <= " << p.tolerance << std::defaultfloat << std::setprecision(6);
        if (!p.detail.empty()) ctx.out << "  " << p.detail;
        ctx.out << '\n';
        props.push_back({{"name", p.name},
                         {"status", tag},
                         {"measured", p.measured},
                         {"tolerance", p.tolerance},
                         {"detail", p.detail}});
    }
    ctx.out << passed << " passed, " << failed << " failed, " << skipped << " skipped in " << std::fixed
            << std::setprecision(1) << rep.wall_seconds << std::defaultfloat << std::setprecision(6) << " s\n";

    json doc = {{"tool", "switchvi"},
                {"version", kVersion},
                {"level", ctx.flags.level},
                {"tighten", ctx.flags.tighten},
                {"passed", rep.passed()},
                {"validation", validation_json(rep.validation)},
                {"properties", props},
                {"wall_seconds", rep.wall_seconds},
                {"config", json::parse(to_json_text(file))}};
    fs::create_directories(ctx.flags.out);
    const std::string path = (fs::path(ctx.flags.out) / "verify_report.json").string();
    write_text_file(path, doc.dump(2) + "\n");
    ctx.out << "report: " << path << '\n';
    if (const PropertyResult* f = rep.first_failure()) {
        ctx.err << "first failure: " << f->name << ": measured " << f->measured << " > " << f->tolerance;
        if (!f->detail.empty()) ctx.err << " (" << f->detail << ")";
        ctx.err << '\n';
    }
    return rep.passed() ? kExitOk : kExitFailed;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Flags flags;
    for (int a = 1; a < argc; ++a) flags.argv.emplace_back(argv[a]);

    CLI::App app{"Switching-game obstacle systems: validate, solve and verify", "switchvi"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    auto common = [&](CLI::App* sub, bool file_required) {
        auto* opt = sub->add_option("problem", flags.file, "Problem JSON file");
        if (file_required) opt->required()->check(CLI::ExistingFile);
        sub->add_option("--grid", flags.grid, "Grid override \"lo,hi,nodes[,...];time_steps\"");
        sub->add_option("--threads", flags.threads, "Worker threads for schedules")->check(CLI::PositiveNumber);
        sub->add_option("--out", flags.out, "Output directory")->capture_default_str();
    };

    CLI::App* validate_cmd = app.add_subcommand("validate", "Check the structural assumptions on grid samples");
    common(validate_cmd, true);

    CLI::App* solve_cmd = app.add_subcommand("solve", "Run a solver and write value fields, report and manifest");
    common(solve_cmd, false);
    solve_cmd->add_option("--scheme", flags.scheme, "doubly|decreasing|increasing|bilateral-min|bilateral-max|oracle")
        ->check(CLI::IsMember({"doubly", "decreasing", "increasing", "bilateral-min", "bilateral-max", "oracle"}));
    solve_cmd->add_option("--n", flags.n, "Lower penalty")->check(CLI::NonNegativeNumber);
    solve_cmd->add_option("--m", flags.m, "Upper penalty")->check(CLI::NonNegativeNumber);
    solve_cmd->add_option("--schedule", flags.schedule, "Penalty schedule, e.g. 1,2,4,8");
    solve_cmd->add_option("--n-steps", flags.n_steps, "Tree oracle steps")->check(CLI::NonNegativeNumber);
    solve_cmd->add_option("--tol", flags.tol, "Solver tolerance")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--seed", flags.seed, "Recorded in the manifest");
    solve_cmd->add_flag("--force", flags.force, "Solve even if the assumptions fail");
    solve_cmd->add_option("--from-manifest", flags.manifest, "Rerun the configuration recorded in a manifest")
        ->check(CLI::ExistingFile);

    CLI::App* verify_cmd = app.add_subcommand("verify", "Run the property suite");
    common(verify_cmd, true);
    verify_cmd->add_option("--level", flags.level, "fast|full")->check(CLI::IsMember({"fast", "full"}))->capture_default_str();
    verify_cmd->add_option("--tighten", flags.tighten, "Divide every property tolerance by this factor")
        ->check(CLI::PositiveNumber);
    verify_cmd->add_option("--seed", flags.seed, "Reserved for randomized properties");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitInput;
    }
    if (solve_cmd->parsed() && flags.file.empty() == flags.manifest.empty()) {
        err << "error: solve takes either a problem file or --from-manifest\n";
        return kExitInput;
    }

    RunContext ctx{flags, out, err, validate_cmd->parsed() ? "validate" : solve_cmd->parsed() ? "solve" : "verify", nullptr};
    try {
        if (validate_cmd->parsed()) return cmd_validate(ctx);
        if (solve_cmd->parsed()) return cmd_solve(ctx);
        return cmd_verify(ctx);
    } catch (const ProblemFileError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const GridError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ModelError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNotConverged;
    } catch (const AssumptionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailed;
    } catch (const SolverError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNotConverged;
    } catch (const OracleError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNotConverged;
    }
}

} // namespace switchvi
