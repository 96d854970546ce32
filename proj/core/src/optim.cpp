#include "tsadv/optim.hpp"

#include <cmath>

namespace tsadv {

AdamState::AdamState(std::span<const Tensor> params, AdamConfig cfg) : cfg_(cfg) {
    if (!(cfg.learning_rate > 0.0)) throw Error("AdamState: learning rate must be positive");
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m_.size())
        throw Error("adam_step: parameter/gradient/state count mismatch");
    state.step_ += 1;
    const auto& cfg = state.cfg_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        if (params[pi].shape() != grads[pi].shape())
            throw_shape_error("adam_step", params[pi].shape(), grads[pi].shape());
        if (params[pi].numel() != state.m_[pi].size())
            throw Error("adam_step: state buffer shape mismatch for parameter " +
                        std::to_string(pi));
        auto w = params[pi].mutable_data();
        auto g = grads[pi].data();
        auto& m = state.m_[pi];
        auto& v = state.v_[pi];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            w[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

void clip_gradients(std::span<Tensor> grads, double threshold) {
    if (!(threshold > 0.0)) throw Error("clip_gradients: threshold must be positive");
    for (auto& g : grads) {
        for (auto& v : g.mutable_data()) {
            if (v > threshold)
                v = threshold;
            else if (v < -threshold)
                v = -threshold;
        }
    }
}

}  // namespace tsadv
