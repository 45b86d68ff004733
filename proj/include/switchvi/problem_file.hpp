#pragma once

#include "switchvi/grid.hpp"
#include "switchvi/model.hpp"
#include "switchvi/validate.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace switchvi {

/// Malformed or inconsistent problem document. The message carries a line/column for JSON
/// syntax errors and a JSON pointer for schema errors.
class ProblemFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Optional "solver" section. Absent fields keep the library defaults.
struct SolverSection {
    std::string scheme = "bilateral-min";
    double n = 0.0;
    double m = 0.0;
    double theta = 1.0;
    std::optional<double> tol;
    std::optional<int> max_iters;
    double damping = 1.0;
    double exp_shift_lambda = 0.0;
    std::string initial_guess = "previous";
    std::vector<double> schedule;
    std::optional<int> oracle_steps;
    std::optional<std::vector<double>> x0;
    int threads = 1;
    bool force = false;
};

struct ProblemFile {
    std::string name;
    ProblemSpec spec;
    GridSpec grid;
    SolverSection solver;
    std::vector<SamplePoint> extra_points;
};

ProblemFile parse_problem_json(const std::string& text, const std::string& origin = "<input>");
ProblemFile load_problem_file(const std::string& path);

/// Canonical JSON text of a problem file (expressions in fully parenthesized form), suitable
/// for echoing into a run manifest and reloading.
std::string to_json_text(const ProblemFile& file);

/// "lo,hi,nodes[,lo,hi,nodes...];time_steps". The boundary policy is kept from `base`.
GridSpec parse_grid_flag(const std::string& text, const GridSpec& base);

/// Comma-separated penalties, e.g. "1,2,4,8".
std::vector<double> parse_schedule(const std::string& text);

} // namespace switchvi
