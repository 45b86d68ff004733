#pragma once

#include "switchvi/problem_file.hpp"
#include "switchvi/validate.hpp"

#include <string>
#include <vector>

namespace switchvi {

struct PropertyResult {
    std::string name;
    bool passed = false;
    bool skipped = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct VerifyOptions {
    bool full = false;
    double tighten = 1.0; // every property tolerance is divided by this
    int threads = 1;
    double penalized_tol = 1e-10;
    double bilateral_tol = 1e-8;
};

struct VerifyReport {
    ValidationReport validation;
    std::vector<PropertyResult> properties;
    double wall_seconds = 0.0;

    bool passed() const;
    const PropertyResult* first_failure() const;
};

/// Sample points used by the validators: the solver grid thinned, plus the file's extra points.
std::vector<SamplePoint> validation_samples(const ProblemFile& file, const Grid& grid);

/// The property suite. Stops after the validator when the assumptions fail.
VerifyReport run_verify(const ProblemFile& file, const VerifyOptions& options);

} // namespace switchvi
