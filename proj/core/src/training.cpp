#include "tsadv/training.hpp"

#include <cmath>
#include <numeric>

namespace tsadv {

namespace {

std::size_t target_numel(const WindowedDataset& ds) {
    return ds.targets.empty() ? 0 : ds.targets.front().numel();
}

}  // namespace

TrainResult train_loop(ForecastModel& model, const WindowedDataset& train,
                       const WindowedDataset& val, const TrainConfig& cfg,
                       WeightPerturber* perturber) {
    if (train.empty()) throw Error("train: training set is empty");
    if (cfg.epochs < 1) throw Error("train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw Error("train: batch size must be >= 1");

    std::vector<Tensor> params = model.parameters();
    AdamState adam(params, AdamConfig{cfg.learning_rate});

    TrainResult result;
    const std::size_t n = train.size();
    const std::size_t outputs_per_sample = target_numel(train);
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        auto shuffle_rng = stream_for(cfg.seed, "shuffle", epoch);
        shuffle_rng.shuffle(order);

        double epoch_sq_sum = 0.0;
        std::size_t epoch_outputs = 0;

        for (std::size_t batch_start = 0, batch_index = 0; batch_start < n;
             batch_start += cfg.batch_size, ++batch_index) {
            const std::size_t batch_end = std::min(n, batch_start + cfg.batch_size);
            const std::size_t batch_n = batch_end - batch_start;

            BatchEval eval_batch = [&]() -> std::pair<double, std::vector<Tensor>> {
                auto dropout_rng = stream_for(cfg.seed, "dropout", epoch, batch_index);
                ForwardMode mode = ForwardMode::training(dropout_rng);
                Tape tape;
                Tensor loss_sum;
                for (std::size_t i = batch_start; i < batch_end; ++i) {
                    const std::size_t s = order[i];
                    Tensor pred = model.forward(train.inputs[s], mode);
                    Tensor sample_loss = mse(pred, train.targets[s]);
                    loss_sum = loss_sum.defined() ? add(loss_sum, sample_loss) : sample_loss;
                }
                Tensor loss = scale(loss_sum, 1.0 / static_cast<double>(batch_n));
                const double loss_value = loss.value();
                std::vector<Tensor> grads;
                if (std::isfinite(loss_value)) {
                    Gradients g = tape.backward(loss);
                    grads.reserve(params.size());
                    for (const auto& p : params) grads.push_back(g.at(p));
                }
                return {loss_value, std::move(grads)};
            };

            auto [loss1, grads1] = eval_batch();
            if (!std::isfinite(loss1))
                throw Error("train: NaN loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));

            double batch_loss = loss1;
            std::vector<Tensor> update_grads = std::move(grads1);
            result.total_batches += 1;

            if (perturber) {
                std::vector<std::vector<double>> saved;
                saved.reserve(params.size());
                for (const auto& p : params)
                    saved.emplace_back(p.data().begin(), p.data().end());

                perturber->perturb(params, update_grads, eval_batch,
                                   stream_for(cfg.seed, "lpat-eps", epoch, batch_index));
                auto [loss2, grads2] = eval_batch();

                for (std::size_t pi = 0; pi < params.size(); ++pi) {
                    auto w = params[pi].mutable_data();
                    std::copy(saved[pi].begin(), saved[pi].end(), w.begin());
                }

                if (!std::isfinite(loss2)) {
                    result.skipped_batches += 1;
                    continue;
                }
                batch_loss = loss2;
                update_grads = std::move(grads2);
            }

            if (cfg.clip_threshold) clip_gradients(update_grads, *cfg.clip_threshold);
            adam_step(params, update_grads, adam);

            epoch_sq_sum += batch_loss * static_cast<double>(batch_n * outputs_per_sample);
            epoch_outputs += batch_n * outputs_per_sample;
        }

        result.train_rmse.push_back(
            epoch_outputs > 0 ? std::sqrt(epoch_sq_sum / static_cast<double>(epoch_outputs))
                              : std::numeric_limits<double>::quiet_NaN());
        result.epochs_run = epoch + 1;

        if (10 * result.skipped_batches > result.total_batches)
            throw Error("train: more than 10% of batches skipped after weight perturbation (" +
                        std::to_string(result.skipped_batches) + "/" +
                        std::to_string(result.total_batches) + " through epoch " +
                        std::to_string(epoch) + ")");

        if (!val.empty()) {
            const double v = evaluate(model, val);
            result.val_rmse.push_back(v);
            if (cfg.patience) {
                if (v < best_val) {
                    best_val = v;
                    since_best = 0;
                } else if (++since_best >= *cfg.patience) {
                    result.early_stopped = true;
                    break;
                }
            }
        }
    }
    return result;
}

double evaluate(const ForecastModel& model, const WindowedDataset& dataset) {
    if (dataset.empty()) throw Error("evaluate: dataset is empty");
    double sq_sum = 0.0;
    std::size_t count = 0;
    const ForwardMode mode = ForwardMode::eval();
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        Tensor pred = model.forward(dataset.inputs[i], mode);
        auto pv = pred.data();
        auto tv = dataset.targets[i].data();
        if (pv.size() != tv.size())
            throw_shape_error("evaluate", pred.shape(), dataset.targets[i].shape());
        for (std::size_t j = 0; j < pv.size(); ++j) {
            const double d = pv[j] - tv[j];
            sq_sum += d * d;
        }
        count += pv.size();
    }
    return std::sqrt(sq_sum / static_cast<double>(count));
}

std::vector<std::pair<double, double>> predictions(const ForecastModel& model,
                                                   const WindowedDataset& dataset) {
    std::vector<std::pair<double, double>> out;
    const ForwardMode mode = ForwardMode::eval();
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        Tensor pred = model.forward(dataset.inputs[i], mode);
        auto pv = pred.data();
        auto tv = dataset.targets[i].data();
        for (std::size_t j = 0; j < pv.size() && j < tv.size(); ++j)
            out.emplace_back(pv[j], tv[j]);
    }
    return out;
}

}  // namespace tsadv
