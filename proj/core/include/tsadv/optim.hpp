#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsadv/tensor.hpp"

namespace tsadv {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second-moment accumulators for one parameter list. Buffer shapes
/// are pinned at construction; the step counter increases by exactly one per
/// adam_step call.
class AdamState {
public:
    AdamState(std::span<const Tensor> params, AdamConfig cfg = {});

    std::uint64_t step_count() const { return step_; }
    const AdamConfig& config() const { return cfg_; }
    std::span<const double> first_moment(std::size_t param_index) const {
        return m_.at(param_index);
    }
    std::span<const double> second_moment(std::size_t param_index) const {
        return v_.at(param_index);
    }

private:
    friend void adam_step(std::span<Tensor>, std::span<const Tensor>, AdamState&);
    AdamConfig cfg_;
    std::uint64_t step_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// Standard Adam update with bias correction, applied in place to `params`.
/// Deterministic given identical inputs. Throws on any shape mismatch
/// between params, grads, and the state's buffers.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state);

/// Componentwise value clipping into [-threshold, threshold], in place.
/// Values inside the band are untouched (bitwise). Idempotent.
void clip_gradients(std::span<Tensor> grads, double threshold);

inline void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                      AdamState& state) {
    adam_step(std::span<Tensor>(params), std::span<const Tensor>(grads), state);
}
inline void clip_gradients(std::vector<Tensor>& grads, double threshold) {
    clip_gradients(std::span<Tensor>(grads), threshold);
}

}  // namespace tsadv
