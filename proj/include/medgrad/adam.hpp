#pragma once

#include <cmath>
#include <vector>

#include "medgrad/tensor.hpp"

namespace medgrad {

// Adam with bias correction; beta1/beta2/eps fixed at the usual defaults.
struct AdamConfig {
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

struct AdamState {
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> v;
    std::size_t step = 0;

    static AdamState init(const std::vector<Tensorf*>& params) {
        AdamState s;
        s.m.reserve(params.size());
        s.v.reserve(params.size());
        for (const auto* p : params) {
            s.m.emplace_back(p->size(), 0.0f);
            s.v.emplace_back(p->size(), 0.0f);
        }
        return s;
    }
};

// One update over all parameters; reads each parameter's .grad (missing grad
// means zero). Parameter order must match the order used at init.
inline void adam_step(const std::vector<Tensorf*>& params, AdamState& state, float lr,
                      const AdamConfig& cfg = {}) {
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw ContractError("adam_step: state holds " + std::to_string(state.m.size()) +
                            " moments for " + std::to_string(params.size()) + " params");
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const float bc1 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg.beta1), t));
    const float bc2 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg.beta2), t));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensorf& theta = *params[p];
        if (state.m[p].size() != theta.size())
            throw ContractError("adam_step: moment size " + std::to_string(state.m[p].size()) +
                                " does not match param size " + std::to_string(theta.size()));
        if (theta.grad.empty()) continue;
        auto& m = state.m[p];
        auto& v = state.v[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const float g = theta.grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0f - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0f - cfg.beta2) * g * g;
            const float mhat = m[i] / bc1;
            const float vhat = v[i] / bc2;
            theta.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace medgrad
