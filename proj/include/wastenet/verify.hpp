#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wastenet {

struct GradCheckResult {
    std::string layer;
    double max_rel_error;
};

struct GradSuiteOptions {
    std::uint64_t seed = 42;
    double eps = 1e-5;
    double tolerance = 1e-4;
    // Test hook: adds this offset to Dense's analytic weight gradient so the
    // suite's failure path can be exercised.
    double dense_backward_fault = 0.0;
};

// Finite-difference check of every layer kind's backward pass at small
// random shapes, away from ReLU/maxpool nondifferentiabilities.
std::vector<GradCheckResult> run_gradient_suite(const GradSuiteOptions& opts);

struct ConvEquivalenceResult {
    std::string geometry;  // "b=2 c=3 oc=4 n=8 k=3 s=1 p=1"
    double max_abs_diff;   // im2col path vs naive loop reference
};

std::vector<ConvEquivalenceResult> run_conv_equivalence_suite(std::uint64_t seed,
                                                              int n_geometries);

}  // namespace wastenet
