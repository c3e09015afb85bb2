#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sbnet {

// Bias-corrected Adam over one flat parameter vector (network + classifier
// head). Centers are excluded; they move through center_update.
struct AdamState {
    std::vector<double> m, v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState init(std::size_t n_params, double beta1 = 0.9,
                          double beta2 = 0.999, double eps = 1e-8);
};

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads, double lr);

// lr0 * gamma^epoch, decayed once per epoch.
struct LrSchedule {
    double lr0 = 1e-5;
    double gamma = 0.95;
};

double lr_at(const LrSchedule& sched, std::size_t epoch);

}  // namespace sbnet
