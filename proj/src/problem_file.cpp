#include "switchvi/problem_file.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace switchvi {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& where, const std::string& what) {
    throw ProblemFileError(origin + ": " + (where.empty() ? "" : where + ": ") + what);
}

// Byte offset to 1-based line and column.
std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t q = 0; q < offset && q < text.size(); ++q) {
        if (text[q] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

class Reader {
public:
    explicit Reader(std::string origin) : origin_(std::move(origin)) {}

    const json& object(const json& parent, const std::string& key, const std::string& path,
                       std::initializer_list<const char*> allowed) const {
        if (!parent.contains(key)) fail(origin_, path, "missing section '" + key + "'");
        const json& obj = parent.at(key);
        if (!obj.is_object()) fail(origin_, path + "/" + key, "expected an object");
        check_keys(obj, path + "/" + key, allowed);
        return obj;
    }

    void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) const {
        for (const auto& [k, v] : obj.items()) {
            bool known = false;
            for (const char* a : allowed) known = known || k == a;
            if (!known) fail(origin_, path, "unknown key '" + k + "'");
        }
    }

    double number(const json& v, const std::string& path) const {
        if (!v.is_number()) fail(origin_, path, "expected a number");
        return v.get<double>();
    }

    int integer(const json& v, const std::string& path) const {
        if (!v.is_number_integer()) fail(origin_, path, "expected an integer");
        return v.get<int>();
    }

    bool boolean(const json& v, const std::string& path) const {
        if (!v.is_boolean()) fail(origin_, path, "expected true or false");
        return v.get<bool>();
    }

    std::string string(const json& v, const std::string& path) const {
        if (!v.is_string()) fail(origin_, path, "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const json& v, const std::string& path) const {
        if (!v.is_array()) fail(origin_, path, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t q = 0; q < v.size(); ++q) out.push_back(number(v[q], path + "/" + std::to_string(q)));
        return out;
    }

    Expression expression(const json& v, const std::string& path) const {
        if (v.is_number()) {
            return Expression::number(v.get<double>());
        }
        if (!v.is_string()) fail(origin_, path, "expected an expression string or a number");
        const std::string src = v.get<std::string>();
        try {
            return Expression::parse(src);
        } catch (const ParseError& e) {
            fail(origin_, path, std::string("expression \"") + src + "\": " + e.what());
        }
    }

    const std::string& origin() const { return origin_; }

private:
    std::string origin_;
};

// Matches "<prefix>_<a>_<b>" with positive indices.
bool indexed_key(const std::string& key, const std::string& prefix, int& a, int& b) {
    static const std::regex pattern(R"(^(.*)_([1-9][0-9]*)_([1-9][0-9]*)$)");
    std::smatch m;
    if (!std::regex_match(key, m, pattern) || m[1].str() != prefix) return false;
    a = std::stoi(m[2].str());
    b = std::stoi(m[3].str());
    return true;
}

} // namespace

ProblemFile parse_problem_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        std::string msg = e.what();
        throw ProblemFileError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON (" +
                               msg + ")");
    }
    Reader rd(origin);
    if (!doc.is_object()) fail(origin, "", "top level must be an object");
    rd.check_keys(doc, "", {"name", "modes", "dynamics", "generators", "costs", "terminal", "horizon", "grid", "solver",
                            "validation"});

    ProblemFile out;
    if (doc.contains("name")) out.name = rd.string(doc["name"], "/name");

    const json& modes = rd.object(doc, "modes", "", {"count1", "count2"});
    ProblemSpec& spec = out.spec;
    if (!modes.contains("count1") || !modes.contains("count2")) fail(origin, "/modes", "needs count1 and count2");
    spec.modes.count1 = rd.integer(modes["count1"], "/modes/count1");
    spec.modes.count2 = rd.integer(modes["count2"], "/modes/count2");
    if (spec.modes.count1 < 1 || spec.modes.count2 < 1) fail(origin, "/modes", "mode counts must be at least 1");

    const json& dyn = rd.object(doc, "dynamics", "", {"b", "sigma"});
    if (!dyn.contains("b") || !dyn["b"].is_array() || dyn["b"].empty()) {
        fail(origin, "/dynamics/b", "expected a non-empty array of drift expressions");
    }
    spec.dim_k = static_cast<int>(dyn["b"].size());
    for (std::size_t c = 0; c < dyn["b"].size(); ++c) {
        spec.drift.push_back(rd.expression(dyn["b"][c], "/dynamics/b/" + std::to_string(c)));
    }
    if (!dyn.contains("sigma") || !dyn["sigma"].is_array() ||
        dyn["sigma"].size() != static_cast<std::size_t>(spec.dim_k)) {
        fail(origin, "/dynamics/sigma", "expected k = " + std::to_string(spec.dim_k) + " rows");
    }
    for (std::size_t c = 0; c < dyn["sigma"].size(); ++c) {
        const json& row = dyn["sigma"][c];
        const std::string path = "/dynamics/sigma/" + std::to_string(c);
        if (!row.is_array() || row.empty()) fail(origin, path, "expected a non-empty row of expressions");
        if (c == 0) spec.dim_d = static_cast<int>(row.size());
        if (row.size() != static_cast<std::size_t>(spec.dim_d)) fail(origin, path, "rows must have equal length");
        for (std::size_t r = 0; r < row.size(); ++r) {
            spec.vol.push_back(rd.expression(row[r], path + "/" + std::to_string(r)));
        }
    }

    const int c1 = spec.modes.count1;
    const int c2 = spec.modes.count2;
    const auto lambda = static_cast<std::size_t>(spec.modes.size());

    auto pair_table = [&](const char* section, const std::string& prefix, std::vector<Expression>& dst) {
        const std::string path = std::string("/") + section;
        if (!doc.contains(section) || !doc[section].is_object()) fail(origin, path, "missing object");
        std::vector<bool> seen(lambda, false);
        dst.assign(lambda, Expression::number(0.0));
        for (const auto& [key, val] : doc[section].items()) {
            int i = 0;
            int j = 0;
            if (!indexed_key(key, prefix, i, j) || i > c1 || j > c2) {
                fail(origin, path, "unexpected key '" + key + "' (expected " + prefix + "_<i>_<j> with i<=" +
                                       std::to_string(c1) + ", j<=" + std::to_string(c2) + ")");
            }
            const std::size_t flat = spec.modes.flat({i, j});
            dst[flat] = rd.expression(val, path + "/" + key);
            seen[flat] = true;
        }
        for (std::size_t p = 0; p < lambda; ++p) {
            if (!seen[p]) {
                const ModePair mp = spec.modes.pair(p);
                fail(origin, path, "missing " + prefix + "_" + std::to_string(mp.i) + "_" + std::to_string(mp.j));
            }
        }
    };
    pair_table("generators", "f", spec.generator);
    pair_table("terminal", "h", spec.terminal);

    if (!doc.contains("costs") || !doc["costs"].is_object()) {
        if (c1 > 1 || c2 > 1) fail(origin, "/costs", "missing object");
    }
    spec.cost_lower.assign(static_cast<std::size_t>(c1 * c1), Expression::number(0.0));
    spec.cost_upper.assign(static_cast<std::size_t>(c2 * c2), Expression::number(0.0));
    std::set<std::string> seen_costs;
    if (doc.contains("costs")) {
        for (const auto& [key, val] : doc["costs"].items()) {
            int a = 0;
            int b = 0;
            const std::string path = "/costs/" + key;
            if (indexed_key(key, "g_lower", a, b) && a <= c1 && b <= c1) {
                if (a == b) fail(origin, path, "diagonal costs are zero by convention and must not be given");
                spec.cost_lower[static_cast<std::size_t>((a - 1) * c1 + (b - 1))] = rd.expression(val, path);
            } else if (indexed_key(key, "g_upper", a, b) && a <= c2 && b <= c2) {
                if (a == b) fail(origin, path, "diagonal costs are zero by convention and must not be given");
                spec.cost_upper[static_cast<std::size_t>((a - 1) * c2 + (b - 1))] = rd.expression(val, path);
            } else {
                fail(origin, "/costs", "unexpected key '" + key + "'");
            }
            seen_costs.insert(key);
        }
    }
    for (int a = 1; a <= c1; ++a) {
        for (int b = 1; b <= c1; ++b) {
            const std::string key = "g_lower_" + std::to_string(a) + "_" + std::to_string(b);
            if (a != b && !seen_costs.count(key)) fail(origin, "/costs", "missing " + key);
        }
    }
    for (int a = 1; a <= c2; ++a) {
        for (int b = 1; b <= c2; ++b) {
            const std::string key = "g_upper_" + std::to_string(a) + "_" + std::to_string(b);
            if (a != b && !seen_costs.count(key)) fail(origin, "/costs", "missing " + key);
        }
    }

    if (!doc.contains("horizon")) fail(origin, "", "missing 'horizon'");
    spec.horizon = rd.number(doc["horizon"], "/horizon");
    if (!(spec.horizon > 0.0)) fail(origin, "/horizon", "must be positive");

    const json& grid = rd.object(doc, "grid", "", {"lo", "hi", "nodes", "time_steps", "boundary"});
    for (const char* key : {"lo", "hi", "nodes", "time_steps"}) {
        if (!grid.contains(key)) fail(origin, "/grid", std::string("missing '") + key + "'");
    }
    out.grid.lo = rd.numbers(grid["lo"], "/grid/lo");
    out.grid.hi = rd.numbers(grid["hi"], "/grid/hi");
    if (!grid["nodes"].is_array()) fail(origin, "/grid/nodes", "expected an array of integers");
    for (std::size_t q = 0; q < grid["nodes"].size(); ++q) {
        out.grid.nodes.push_back(rd.integer(grid["nodes"][q], "/grid/nodes/" + std::to_string(q)));
    }
    out.grid.time_steps = rd.integer(grid["time_steps"], "/grid/time_steps");
    if (grid.contains("boundary")) {
        try {
            out.grid.boundary = boundary_from_string(rd.string(grid["boundary"], "/grid/boundary"));
        } catch (const GridError& e) {
            fail(origin, "/grid/boundary", e.what());
        }
    }
    const auto k = static_cast<std::size_t>(spec.dim_k);
    if (out.grid.lo.size() != k || out.grid.hi.size() != k || out.grid.nodes.size() != k) {
        fail(origin, "/grid", "lo, hi and nodes need one entry per state dimension (k = " + std::to_string(k) + ")");
    }

    if (doc.contains("solver")) {
        const json& s = rd.object(doc, "solver", "",
                                  {"scheme", "n", "m", "theta", "tol", "max_iters", "damping", "exp_shift_lambda",
                                   "initial_guess", "schedule", "oracle_steps", "x0", "threads", "force"});
        SolverSection& sv = out.solver;
        if (s.contains("scheme")) sv.scheme = rd.string(s["scheme"], "/solver/scheme");
        if (s.contains("n")) sv.n = rd.number(s["n"], "/solver/n");
        if (s.contains("m")) sv.m = rd.number(s["m"], "/solver/m");
        if (s.contains("theta")) sv.theta = rd.number(s["theta"], "/solver/theta");
        if (s.contains("tol")) sv.tol = rd.number(s["tol"], "/solver/tol");
        if (s.contains("max_iters")) sv.max_iters = rd.integer(s["max_iters"], "/solver/max_iters");
        if (s.contains("damping")) sv.damping = rd.number(s["damping"], "/solver/damping");
        if (s.contains("exp_shift_lambda")) sv.exp_shift_lambda = rd.number(s["exp_shift_lambda"], "/solver/exp_shift_lambda");
        if (s.contains("initial_guess")) sv.initial_guess = rd.string(s["initial_guess"], "/solver/initial_guess");
        if (s.contains("schedule")) sv.schedule = rd.numbers(s["schedule"], "/solver/schedule");
        if (s.contains("oracle_steps")) sv.oracle_steps = rd.integer(s["oracle_steps"], "/solver/oracle_steps");
        if (s.contains("x0")) {
            sv.x0 = rd.numbers(s["x0"], "/solver/x0");
            if (sv.x0->size() != k) fail(origin, "/solver/x0", "needs k coordinates");
        }
        if (s.contains("threads")) sv.threads = rd.integer(s["threads"], "/solver/threads");
        if (s.contains("force")) sv.force = rd.boolean(s["force"], "/solver/force");
    }

    if (doc.contains("validation")) {
        const json& v = rd.object(doc, "validation", "", {"points"});
        if (v.contains("points")) {
            if (!v["points"].is_array()) fail(origin, "/validation/points", "expected an array");
            for (std::size_t q = 0; q < v["points"].size(); ++q) {
                const std::string path = "/validation/points/" + std::to_string(q);
                const json& pt = v["points"][q];
                if (!pt.is_object()) fail(origin, path, "expected {\"t\": .., \"x\": [..]}");
                rd.check_keys(pt, path, {"t", "x"});
                if (!pt.contains("t") || !pt.contains("x")) fail(origin, path, "needs t and x");
                SamplePoint sp{rd.number(pt["t"], path + "/t"), rd.numbers(pt["x"], path + "/x")};
                if (sp.x.size() != k) fail(origin, path + "/x", "needs k coordinates");
                out.extra_points.push_back(std::move(sp));
            }
        }
    }
    return out;
}

ProblemFile load_problem_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ProblemFileError(path + ": cannot open file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem_json(ss.str(), path);
}

std::string to_json_text(const ProblemFile& file) {
    const ProblemSpec& spec = file.spec;
    json doc;
    if (!file.name.empty()) doc["name"] = file.name;
    doc["modes"] = {{"count1", spec.modes.count1}, {"count2", spec.modes.count2}};
    json b = json::array();
    for (const auto& e : spec.drift) b.push_back(e.to_string());
    json sigma = json::array();
    for (int c = 0; c < spec.dim_k; ++c) {
        json row = json::array();
        for (int r = 0; r < spec.dim_d; ++r) row.push_back(spec.vol[static_cast<std::size_t>(c * spec.dim_d + r)].to_string());
        sigma.push_back(row);
    }
    doc["dynamics"] = {{"b", b}, {"sigma", sigma}};
    json gens = json::object();
    json terms = json::object();
    for (std::size_t p = 0; p < static_cast<std::size_t>(spec.modes.size()); ++p) {
        const ModePair mp = spec.modes.pair(p);
        const std::string suffix = "_" + std::to_string(mp.i) + "_" + std::to_string(mp.j);
        gens["f" + suffix] = spec.generator[p].to_string();
        terms["h" + suffix] = spec.terminal[p].to_string();
    }
    doc["generators"] = gens;
    doc["terminal"] = terms;
    json costs = json::object();
    for (int a = 1; a <= spec.modes.count1; ++a) {
        for (int c = 1; c <= spec.modes.count1; ++c) {
            if (a == c) continue;
            costs["g_lower_" + std::to_string(a) + "_" + std::to_string(c)] =
                spec.cost_lower[static_cast<std::size_t>((a - 1) * spec.modes.count1 + (c - 1))].to_string();
        }
    }
    for (int a = 1; a <= spec.modes.count2; ++a) {
        for (int c = 1; c <= spec.modes.count2; ++c) {
            if (a == c) continue;
            costs["g_upper_" + std::to_string(a) + "_" + std::to_string(c)] =
                spec.cost_upper[static_cast<std::size_t>((a - 1) * spec.modes.count2 + (c - 1))].to_string();
        }
    }
    doc["costs"] = costs;
    doc["horizon"] = spec.horizon;
    doc["grid"] = {{"lo", file.grid.lo},
                   {"hi", file.grid.hi},
                   {"nodes", file.grid.nodes},
                   {"time_steps", file.grid.time_steps},
                   {"boundary", to_string(file.grid.boundary)}};
    const SolverSection& sv = file.solver;
    json s = {{"scheme", sv.scheme},
              {"n", sv.n},
              {"m", sv.m},
              {"theta", sv.theta},
              {"damping", sv.damping},
              {"exp_shift_lambda", sv.exp_shift_lambda},
              {"initial_guess", sv.initial_guess},
              {"threads", sv.threads},
              {"force", sv.force}};
    if (sv.tol) s["tol"] = *sv.tol;
    if (sv.max_iters) s["max_iters"] = *sv.max_iters;
    if (!sv.schedule.empty()) s["schedule"] = sv.schedule;
    if (sv.oracle_steps) s["oracle_steps"] = *sv.oracle_steps;
    if (sv.x0) s["x0"] = *sv.x0;
    doc["solver"] = s;
    if (!file.extra_points.empty()) {
        json pts = json::array();
        for (const auto& p : file.extra_points) pts.push_back({{"t", p.t}, {"x", p.x}});
        doc["validation"] = {{"points", pts}};
    }
    return doc.dump(2);
}

namespace {

double parse_number(std::string_view s, const std::string& what) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw std::invalid_argument("bad number '" + std::string(s) + "' in " + what);
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace

GridSpec parse_grid_flag(const std::string& text, const GridSpec& base) {
    const auto halves = split(text, ';');
    if (halves.size() != 2) {
        throw std::invalid_argument("grid flag must look like lo,hi,nodes[,lo,hi,nodes...];time_steps");
    }
    const auto fields = split(halves[0], ',');
    if (fields.empty() || fields.size() % 3 != 0) {
        throw std::invalid_argument("grid flag needs lo,hi,nodes triples before ';'");
    }
    GridSpec g = base;
    g.lo.clear();
    g.hi.clear();
    g.nodes.clear();
    for (std::size_t q = 0; q < fields.size(); q += 3) {
        g.lo.push_back(parse_number(fields[q], "grid flag"));
        g.hi.push_back(parse_number(fields[q + 1], "grid flag"));
        const double nodes = parse_number(fields[q + 2], "grid flag");
        if (nodes != std::floor(nodes)) throw std::invalid_argument("node counts must be integers");
        g.nodes.push_back(static_cast<int>(nodes));
    }
    const double steps = parse_number(halves[1], "grid flag");
    if (steps != std::floor(steps) || steps < 0) throw std::invalid_argument("time_steps must be a non-negative integer");
    g.time_steps = static_cast<int>(steps);
    return g;
}

std::vector<double> parse_schedule(const std::string& text) {
    std::vector<double> out;
    for (auto part : split(text, ',')) {
        const double v = parse_number(part, "schedule");
        if (!(v >= 0.0)) throw std::invalid_argument("schedule entries must be non-negative");
        out.push_back(v);
    }
    return out;
}

} // namespace switchvi
