#include "switchvi/cli.hpp"
#include "switchvi/field_io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace switchvi;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "switchvi");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string problem(const char* name) { return std::string(SWITCHVI_PROBLEMS_DIR) + "/" + name; }

fs::path scratch(const char* name) {
    const fs::path p = fs::temp_directory_path() / ("switchvi-cli-test-" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

} // namespace

TEST_CASE("validate") {
    CHECK(cli({"validate", problem("d1.json")}).code == kExitOk);

    const Run loop = cli({"validate", problem("free_loop.json")});
    CHECK(loop.code == kExitFailed);
    CHECK(contains(loop.out, "(1,1)->(2,1)->(2,2)->(1,2)->(1,1)"));

    const Run h3 = cli({"validate", problem("terminal_violation.json")});
    CHECK(h3.code == kExitFailed);
    CHECK(contains(h3.out, "pair (1,2) at x = (3)"));

    CHECK(cli({"validate", problem("missing.json")}).code == kExitInput);
    CHECK(cli({"frobnicate"}).code == kExitInput);

    const fs::path dir = scratch("broken");
    fs::create_directories(dir);
    std::ofstream(dir / "broken.json") << "{ \"modes\": ";
    const Run broken = cli({"validate", (dir / "broken.json").string()});
    CHECK(broken.code == kExitInput);
    CHECK(contains(broken.err, "line"));
}

TEST_CASE("solve bilateral writes field, report and manifest") {
    const fs::path out = scratch("bilateral");
    const Run r = cli({"solve", problem("d1.json"), "--scheme", "bilateral-min", "--out", out.string()});
    REQUIRE(r.code == kExitOk);
    std::ifstream csv(out / "value.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "t,x1,i,j,value");
    CHECK(count_lines(out / "value.csv") == 1 + 61 * 121 * 4);

    const auto manifest = nlohmann::json::parse(std::ifstream(out / "manifest.json"));
    CHECK(manifest["status"] == "ok");
    CHECK(manifest["version"] == kVersion);
    CHECK(manifest["config"]["solver"]["scheme"] == "bilateral-min");
    CHECK(manifest["validation"]["ok"] == true);
    REQUIRE(manifest["outputs"].size() == 1);
    CHECK(manifest["outputs"][0]["fnv1a"] == hash_file((out / "value.csv").string()));

    const fs::path again = scratch("bilateral-rerun");
    REQUIRE(cli({"solve", "--from-manifest", (out / "manifest.json").string(), "--out", again.string()}).code ==
            kExitOk);
    const auto m2 = nlohmann::json::parse(std::ifstream(again / "manifest.json"));
    CHECK(m2["outputs"][0]["fnv1a"] == manifest["outputs"][0]["fnv1a"]);
    CHECK(m2["config"] == manifest["config"]);
}

TEST_CASE("solve decreasing schedule prints the monotonicity table") {
    const fs::path out = scratch("decreasing");
    const Run r = cli({"solve", problem("d1.json"), "--scheme", "decreasing", "--schedule", "1,2,4,8", "--out",
                       out.string(), "--threads", "2"});
    REQUIRE(r.code == kExitOk);
    for (const char* f : {"value_n0_m1.csv", "value_n0_m2.csv", "value_n0_m4.csv", "value_n0_m8.csv"}) {
        CHECK(fs::exists(out / f));
    }
    CHECK(contains(r.out, "monotonicity"));
    const auto report = nlohmann::json::parse(std::ifstream(out / "report.json"));
    CHECK(report["members"].size() == 4);
    CHECK(report["monotonicity_checks"].size() == 3);
    CHECK(report["worst_violation"].get<double>() <= 1e-7);
}

TEST_CASE("solve oracle writes root values") {
    const fs::path out = scratch("oracle");
    const Run r = cli({"solve", problem("d1.json"), "--scheme", "oracle", "--n-steps", "8", "--out", out.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(count_lines(out / "roots.csv") == 1 + 4);
    for (const char* p : {"v(1,1)", "v(1,2)", "v(2,1)", "v(2,2)"}) CHECK(contains(r.out, p));
    const auto report = nlohmann::json::parse(std::ifstream(out / "report.json"));
    CHECK(report["root"].size() == 4);
    CHECK(report["steps"] == 8);
}

TEST_CASE("solve refuses failed assumptions and reports non-convergence") {
    const fs::path out = scratch("refused");
    CHECK(cli({"solve", problem("terminal_violation.json"), "--out", out.string()}).code == kExitFailed);

    const fs::path dir = scratch("stubborn");
    fs::create_directories(dir);
    auto doc = nlohmann::json::parse(std::ifstream(problem("d1.json")));
    doc["solver"]["max_iters"] = 2;
    doc["solver"]["tol"] = 1e-14;
    std::ofstream(dir / "stubborn.json") << doc.dump();
    const Run r = cli({"solve", (dir / "stubborn.json").string(), "--out", (dir / "run").string()});
    CHECK(r.code == kExitNotConverged);
    const auto report = nlohmann::json::parse(std::ifstream(dir / "run" / "report.json"));
    CHECK(report["status"] == "not_converged");
    CHECK(contains(r.out, "report.json"));
}

TEST_CASE("verify") {
    const fs::path out = scratch("verify");
    const Run ok = cli({"verify", problem("d1.json"), "--level", "fast", "--out", out.string()});
    CHECK(ok.code == kExitOk);
    CHECK_FALSE(contains(ok.out, "FAIL"));
    const auto report = nlohmann::json::parse(std::ifstream(out / "verify_report.json"));
    CHECK(report["passed"] == true);
    CHECK(report["properties"].size() >= 10);

    // Recorded reference run: same properties, same verdicts; quantities above round-off level agree closely.
    const auto ref = nlohmann::json::parse(std::ifstream(std::string(SWITCHVI_REFERENCE_DIR) + "/d1_verify_fast.json"));
    REQUIRE(ref["properties"].size() == report["properties"].size());
    for (std::size_t q = 0; q < ref["properties"].size(); ++q) {
        const auto& a = ref["properties"][q];
        const auto& b = report["properties"][q];
        CHECK(a["name"] == b["name"]);
        CHECK(a["status"] == b["status"]);
        const double ma = a["measured"].get<double>();
        const double mb = b["measured"].get<double>();
        if (std::fabs(ma) > 1e-6) CHECK(mb == doctest::Approx(ma).epsilon(1e-6));
    }

    const Run neg = cli({"verify", problem("negative_cost.json"), "--out", out.string()});
    CHECK(neg.code == kExitFailed);
    CHECK(contains(neg.out, "validator failure, no solve attempted"));
    CHECK(contains(neg.out, "g_lower_1_2"));

    const Run tight = cli({"verify", problem("d1.json"), "--tighten", "1000", "--out", out.string()});
    CHECK(tight.code == kExitFailed);
    CHECK(contains(tight.out, "FAIL  complementarity_residual"));
    CHECK(contains(tight.err, "first failure"));
}
