#pragma once

#include "switchvi/grid.hpp"
#include "switchvi/model.hpp"
#include "switchvi/problem_file.hpp"

#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace testing {

using json = nlohmann::json;

// Explicit array of arrays; a braced list of string pairs would otherwise become a JSON object.
inline json matrix(const std::vector<std::vector<std::string>>& rows) {
    json out = json::array();
    for (const auto& r : rows) out.push_back(r);
    return out;
}

// Every coefficient zero, lower switching costs 1 and upper costs sqrt(2) (no free loop), a 5-node box on [-1,1] and one time step.
inline json blank_problem(int count1, int count2) {
    json doc;
    doc["modes"] = {{"count1", count1}, {"count2", count2}};
    doc["dynamics"] = {{"b", {"0"}}, {"sigma", {{"0"}}}};
    for (int i = 1; i <= count1; ++i) {
        for (int j = 1; j <= count2; ++j) {
            const std::string s = "_" + std::to_string(i) + "_" + std::to_string(j);
            doc["generators"]["f" + s] = "0";
            doc["terminal"]["h" + s] = "0";
        }
    }
    doc["costs"] = json::object();
    for (int a = 1; a <= count1; ++a) {
        for (int b = 1; b <= count1; ++b) {
            if (a != b) doc["costs"]["g_lower_" + std::to_string(a) + "_" + std::to_string(b)] = "1";
        }
    }
    for (int a = 1; a <= count2; ++a) {
        for (int b = 1; b <= count2; ++b) {
            if (a != b) doc["costs"]["g_upper_" + std::to_string(a) + "_" + std::to_string(b)] = "sqrt(2)";
        }
    }
    doc["horizon"] = 1.0;
    doc["grid"] = {{"lo", {-1.0}}, {"hi", {1.0}}, {"nodes", {5}}, {"time_steps", 1}};
    return doc;
}

// Two state dimensions with a 5x5 box; drift and volatility are left for the caller.
inline void two_dimensional(json& doc) {
    doc["grid"] = {{"lo", {-1.0, -1.0}}, {"hi", {1.0, 1.0}}, {"nodes", {5, 5}}, {"time_steps", 1}};
}

inline switchvi::ProblemFile load(const json& doc) { return switchvi::parse_problem_json(doc.dump(), "test"); }

inline switchvi::ProblemFile load_shipped(const std::string& name) {
    return switchvi::load_problem_file(std::string(SWITCHVI_PROBLEMS_DIR) + "/" + name);
}

struct Setup {
    switchvi::ProblemFile file;
    switchvi::Problem problem;
    std::shared_ptr<const switchvi::Grid> grid;

    explicit Setup(switchvi::ProblemFile f)
        : file(std::move(f)), problem(file.spec),
          grid(std::make_shared<const switchvi::Grid>(switchvi::build_grid(file.grid, problem))) {}
    explicit Setup(const json& doc) : Setup(load(doc)) {}
};

} // namespace testing
