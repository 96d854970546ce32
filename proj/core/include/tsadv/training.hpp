#pragma once

#include <functional>
#include <optional>

#include "tsadv/model.hpp"
#include "tsadv/optim.hpp"
#include "tsadv/series.hpp"

namespace tsadv {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    std::optional<double> clip_threshold;   // componentwise gradient clip
    std::optional<std::size_t> patience;    // early stop on val RMSE
};

struct TrainResult {
    std::vector<double> train_rmse;  // per epoch: sqrt of batch-weighted MSE
    std::vector<double> val_rmse;    // per epoch (empty when no val set)
    std::size_t epochs_run = 0;
    bool early_stopped = false;
    std::size_t skipped_batches = 0;
    std::size_t total_batches = 0;
};

/// Replays the current batch at the model's current parameters: one forward
/// (train mode, this batch's dropout stream) and one backward. Returns the
/// batch MSE and the gradients aligned with the model's parameter order.
using BatchEval = std::function<std::pair<double, std::vector<Tensor>>()>;

/// Hook that moves parameters to a perturbed point before the gradient that
/// actually drives the optimizer update is computed. Implementations mutate
/// `params` in place; the training loop snapshots and restores the original
/// values around the hook, and applies the update to the originals.
class WeightPerturber {
public:
    virtual ~WeightPerturber() = default;
    /// round1_grads are the gradients at the unperturbed parameters; eval()
    /// may be called to re-linearize at the current (perturbed) point.
    /// eps_rng is this batch's draw stream for stochastic schedules.
    virtual void perturb(std::vector<Tensor>& params, const std::vector<Tensor>& round1_grads,
                        const BatchEval& eval, RngStream eps_rng) = 0;
};

/// Minimizes batch MSE with Adam. Deterministic given cfg.seed: shuffling,
/// dropout masks and any perturber draws come from streams keyed by
/// (seed, site, epoch, batch). A NaN/inf first-round loss aborts with a
/// diagnostic naming epoch and batch. With a perturber, the update uses the
/// second-round gradients; a non-finite second round skips the batch, and
/// more than 10% skipped batches aborts.
TrainResult train_loop(ForecastModel& model, const WindowedDataset& train,
                       const WindowedDataset& val, const TrainConfig& cfg,
                       WeightPerturber* perturber);

inline TrainResult train(ForecastModel& model, const WindowedDataset& train,
                         const WindowedDataset& val, const TrainConfig& cfg) {
    return train_loop(model, train, val, cfg, nullptr);
}

/// Evaluation-mode RMSE over every predicted scalar in the dataset (all L
/// outputs of every window for sequence models).
double evaluate(const ForecastModel& model, const WindowedDataset& dataset);

/// (prediction, truth) pairs in dataset order, flattened over sequence
/// outputs; feeds plots and the brute-force RMSE recomputation.
std::vector<std::pair<double, double>> predictions(const ForecastModel& model,
                                                   const WindowedDataset& dataset);

}  // namespace tsadv
