#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace invpred {

struct PropertyResult {
    std::string name;
    bool passed = false;
    double worst = 0.0;  // largest violation seen
    double tolerance = 0.0;
    int cases = 0;
    bool informational = false;  // reported, does not affect the suite verdict
};

struct InvarianceOptions {
    std::uint64_t seed = 1;
    int mvnCases = 50;
    int gpCases = 20;
};

// Group axioms, likelihood invariance, predictive invariance of every MVN
// kind under G_N, and G_GP equivariance of every GP predictor, each on seeded
// random instances. Instances are independent of which properties run first.
std::vector<PropertyResult> run_invariance_suite(const InvarianceOptions& options);

// True when every non-informational property passed.
bool suite_passed(const std::vector<PropertyResult>& results);

}  // namespace invpred
