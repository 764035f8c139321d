#pragma once

// End-to-end cross-checks of the toolkit: every check runs a full pipeline
// (simulation against closed forms, spectral thresholds, range tests,
// localization, causality, convergence order, mollifier limits) and reports
// one pass/fail line with the measured numbers. All tolerances live here.

#include <string>
#include <vector>

namespace ptscat {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail; // measured quantities vs their thresholds
};

int acceptance_check_count();
CheckResult run_acceptance_check(int index); // 1-based
std::vector<CheckResult> run_acceptance_checks();

} // namespace ptscat
