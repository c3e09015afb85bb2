#include "sbnet/optim.hpp"

#include <cmath>
#include <string>

#include "sbnet/error.hpp"

namespace sbnet {

AdamState AdamState::init(std::size_t n_params, double beta1, double beta2,
                          double eps) {
    AdamState s;
    s.m.assign(n_params, 0.0);
    s.v.assign(n_params, 0.0);
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads, double lr) {
    if (params.size() != state.m.size() || grads.size() != state.m.size())
        throw DimensionError("adam_step: params " + std::to_string(params.size()) +
                             ", grads " + std::to_string(grads.size()) +
                             ", state " + std::to_string(state.m.size()));
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

double lr_at(const LrSchedule& sched, std::size_t epoch) {
    return sched.lr0 * std::pow(sched.gamma, double(epoch));
}

}  // namespace sbnet
