#pragma once

#include "kglab/tools/experiments.hpp"

#include <string>
#include <vector>

namespace kglab::tools {

inline constexpr int kCriterionCount = 10;

struct CriterionResult {
    int id = 0;
    std::string title;
    Outcome outcome;
    std::string error;  ///< set when a numerical failure aborted the criterion

    bool pass() const { return error.empty() && !outcome.checks.empty() && outcome.pass(); }
};

std::string criterion_title(int id);

/// Runs one acceptance criterion (1..10) on the lab's configuration. A
/// kglab::Error raised inside is recorded in `error`, not rethrown.
CriterionResult run_criterion(Lab& lab, int id);

/// "criterion  5 FAIL  asymptotic rate: rate.q_plus_future = -1.08 not in [-0.8, -0.2]"
std::string summary_line(const CriterionResult& r);

/// Combined outcome of several criteria (file names prefixed by c<id>_).
Outcome acceptance_outcome(std::vector<CriterionResult> results);

} // namespace kglab::tools
