#include "support.hpp"

#include "switchvi/bilateral.hpp"
#include "switchvi/field_io.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

using namespace switchvi;
using testing::blank_problem;

TEST_CASE("decimal formatting round-trips") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int q = 0; q < 2000; ++q) {
        std::uint64_t b = bits(rng);
        double v;
        std::memcpy(&v, &b, sizeof v);
        if (!std::isfinite(v)) continue;
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(0.0) == "0");
    const double tiny = std::numeric_limits<double>::denorm_min();
    CHECK(std::strtod(format_double(tiny).c_str(), nullptr) == tiny);
}

TEST_CASE("field CSV layout and bit-exact round trip") {
    auto doc = blank_problem(2, 1);
    doc["dynamics"] = {{"b", {"0", "0"}}, {"sigma", testing::matrix({{"0.3", "0"}, {"0", "0.3"}})}};
    doc["generators"]["f_2_1"] = "x1*x2";
    doc["terminal"]["h_2_1"] = "sin(x1) + x2/3";
    doc["costs"]["g_lower_1_2"] = "0.1";
    doc["grid"] = {{"lo", {-1, 0}}, {"hi", {1, 1}}, {"nodes", {5, 4}}, {"time_steps", 3}};
    testing::Setup s(doc);
    const Solution sol = solve_bilateral(s.problem, s.grid, {});

    std::stringstream io;
    write_field_csv(sol.field, io);
    const std::string text = io.str();
    std::istringstream lines(text);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "t,x1,x2,i,j,value");
    std::size_t rows = 0;
    std::string first;
    for (std::string line; std::getline(lines, line);) {
        if (rows == 0) first = line;
        ++rows;
    }
    CHECK(rows == 4 * 20 * 2);
    CHECK(first.rfind("0,-1,0,1,1,", 0) == 0);

    std::istringstream in(text);
    const ValueField back = read_field_csv(in, s.grid, s.problem.modes());
    CHECK(std::memcmp(back.data().data(), sol.field.data().data(), sol.field.data().size() * sizeof(double)) == 0);

    std::istringstream bad("t,x1,i,j,value\n");
    CHECK_THROWS_AS(read_field_csv(bad, s.grid, s.problem.modes()), IoError);
    std::string swapped = text;
    swapped.replace(swapped.find("0,-1,0,1,1,"), 11, "0,-1,0,2,1,");
    std::istringstream sw(swapped);
    CHECK_THROWS_AS(read_field_csv(sw, s.grid, s.problem.modes()), IoError);
}

TEST_CASE("hashes") {
    CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
    CHECK(hex64(fnv1a("foobar")) == "85944171f73967e8");
}

TEST_CASE("problem documents") {
    SUBCASE("shipped desk problem") {
        const ProblemFile f = testing::load_shipped("d1.json");
        CHECK(f.name == "D1");
        CHECK(f.spec.modes.size() == 4);
        CHECK(f.grid.nodes == std::vector<int>{121});
        CHECK(f.grid.time_steps == 60);
        CHECK(f.solver.x0 == std::vector<double>{0.0});
        const ProblemFile again = parse_problem_json(to_json_text(f));
        CHECK(to_json_text(again) == to_json_text(f));
        for (std::size_t p = 0; p < 4; ++p) CHECK(again.spec.terminal[p] == f.spec.terminal[p]);
        CHECK(again.spec.cost_upper[1] == f.spec.cost_upper[1]);
    }
    SUBCASE("syntax errors carry line and column") {
        try {
            parse_problem_json("{\n  \"modes\": {\"count1\": 1,,}\n}", "bad.json");
            FAIL("expected an error");
        } catch (const ProblemFileError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("bad.json") != std::string::npos);
            CHECK(msg.find("line 2") != std::string::npos);
        }
    }
    SUBCASE("schema errors carry a pointer") {
        auto doc = blank_problem(2, 2);
        doc["costs"].erase("g_upper_2_1");
        try {
            testing::load(doc);
            FAIL("expected an error");
        } catch (const ProblemFileError& e) {
            CHECK(std::string(e.what()).find("g_upper_2_1") != std::string::npos);
        }
        doc = blank_problem(1, 1);
        doc["generators"]["f_1_1"] = "foo(x1)";
        try {
            testing::load(doc);
            FAIL("expected an error");
        } catch (const ProblemFileError& e) {
            CHECK(std::string(e.what()).find("/generators/f_1_1") != std::string::npos);
        }
        doc = blank_problem(1, 1);
        doc["colour"] = "blue";
        CHECK_THROWS_AS(testing::load(doc), ProblemFileError);
        doc = blank_problem(2, 1);
        doc["costs"]["g_lower_1_1"] = "0";
        CHECK_THROWS_AS(testing::load(doc), ProblemFileError);
    }
    SUBCASE("numbers are accepted as expressions") {
        auto doc = blank_problem(1, 1);
        doc["terminal"]["h_1_1"] = 2.5;
        CHECK(testing::load(doc).spec.terminal[0].eval({}) == 2.5);
    }
}

TEST_CASE("flag parsers") {
    GridSpec base;
    base.boundary = Boundary::clamp;
    const GridSpec g = parse_grid_flag("-3,3,61;30", base);
    CHECK(g.lo == std::vector<double>{-3});
    CHECK(g.hi == std::vector<double>{3});
    CHECK(g.nodes == std::vector<int>{61});
    CHECK(g.time_steps == 30);
    CHECK(g.boundary == Boundary::clamp);
    const GridSpec g2 = parse_grid_flag("0,1,5,-1,1,7;4", base);
    CHECK(g2.nodes == std::vector<int>{5, 7});
    CHECK_THROWS(parse_grid_flag("0,1;4", base));
    CHECK_THROWS(parse_grid_flag("0,1,5", base));
    CHECK(parse_schedule("1,2,4,8") == std::vector<double>{1, 2, 4, 8});
    CHECK_THROWS(parse_schedule("1,,2"));
    CHECK_THROWS(parse_schedule("1,-2"));
}
