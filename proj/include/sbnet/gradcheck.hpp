#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sbnet {

struct GradCheckResult {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 1e-4;
    bool passed = false;
};

// Analytic gradients of every differentiable path (all four losses, the
// single-branch stack including batch norm, the two-branch fusion) against
// central finite differences on random small instances (B=8, d=16, C=4).
// `inject_fault` perturbs one analytic gradient so the harness itself can
// be shown to catch a wrong gradient.
std::vector<GradCheckResult> run_gradient_checks(std::uint64_t seed,
                                                 bool inject_fault = false);

}  // namespace sbnet
