#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tsadv/lstm.hpp"

namespace tsadv {

enum class ModelKind { vanilla_lstm, encoder_decoder_lstm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Everything needed to rebuild a model's architecture (checkpoint header).
struct ModelDescriptor {
    ModelKind kind = ModelKind::vanilla_lstm;
    std::size_t input_size = 0;   // F
    std::size_t hidden_size = 100;
    std::size_t dense_size = 100;  // ReLU layer width (vanilla only)
    std::size_t lookback = 1;      // repeat count (encoder-decoder only)
    double dropout_rate = 0.1;
    std::uint64_t init_seed = 0;
};

struct ForwardMode {
    bool train = false;
    RngStream* rng = nullptr;  // dropout mask source; required when train && dropout > 0

    static ForwardMode eval() { return {}; }
    static ForwardMode training(RngStream& rng) { return {true, &rng}; }
};

/// Common surface for both forecaster architectures. A model owns its
/// parameter tensors; parameters() returns handles sharing storage, in a
/// stable declared order used by the optimizer and the checkpoint format.
class ForecastModel {
public:
    virtual ~ForecastModel() = default;

    /// window is {L,F}; returns {1,1} (vanilla) or {1,L} (encoder-decoder).
    virtual Tensor forward(const Tensor& window, const ForwardMode& mode) const = 0;
    virtual std::vector<Tensor> parameters() const = 0;
    virtual std::vector<std::pair<std::string, Tensor>> named_parameters() const = 0;
    virtual const ModelDescriptor& descriptor() const = 0;
    virtual std::unique_ptr<ForecastModel> clone() const = 0;
};

/// Vanilla forecaster: LSTM over the window, ReLU dense layer, dropout
/// (train mode), linear head on the final hidden state -> one scalar.
class VanillaLstmModel final : public ForecastModel {
public:
    VanillaLstmModel(const ModelDescriptor& desc, RngStream init_rng);

    Tensor forward(const Tensor& window, const ForwardMode& mode) const override;
    std::vector<Tensor> parameters() const override;
    std::vector<std::pair<std::string, Tensor>> named_parameters() const override;
    const ModelDescriptor& descriptor() const override { return desc_; }
    std::unique_ptr<ForecastModel> clone() const override;

private:
    ModelDescriptor desc_;
    LstmCellParams cell_;
    Tensor w_dense_, b_dense_;  // {H,D}, {D}
    Tensor w_head_, b_head_;    // {D,1}, {1}
};

/// Sequence forecaster: encoder LSTM compresses the window into its final
/// hidden state (context vector); the context is repeated L times as the
/// decoder input sequence; a time-distributed linear head maps each decoder
/// hidden state to one output. Dropout (train mode) sits on decoder states.
class EncDecLstmModel final : public ForecastModel {
public:
    EncDecLstmModel(const ModelDescriptor& desc, RngStream init_rng);

    Tensor forward(const Tensor& window, const ForwardMode& mode) const override;
    std::vector<Tensor> parameters() const override;
    std::vector<std::pair<std::string, Tensor>> named_parameters() const override;
    const ModelDescriptor& descriptor() const override { return desc_; }
    std::unique_ptr<ForecastModel> clone() const override;

private:
    ModelDescriptor desc_;
    LstmCellParams encoder_;
    LstmCellParams decoder_;  // input size H (context), hidden size H
    Tensor w_head_, b_head_;  // {H,1}, {1}
};

/// Fresh model of the described architecture, weights drawn from init_rng.
std::unique_ptr<ForecastModel> make_model(const ModelDescriptor& desc, RngStream init_rng);
/// Convenience: init stream derived as stream_for(desc.init_seed, "init").
std::unique_ptr<ForecastModel> make_model(const ModelDescriptor& desc);

}  // namespace tsadv
