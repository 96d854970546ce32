#include "tsadv/model.hpp"

#include <cmath>

namespace tsadv {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::vanilla_lstm: return "vanilla-lstm";
        case ModelKind::encoder_decoder_lstm: return "encoder-decoder-lstm";
    }
    throw Error("to_string(ModelKind): invalid enum value");
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "vanilla-lstm" || s == "vanilla") return ModelKind::vanilla_lstm;
    if (s == "encoder-decoder-lstm" || s == "encdec") return ModelKind::encoder_decoder_lstm;
    throw Error("unknown model kind '" + s + "'");
}

namespace {

Tensor uniform_matrix(std::vector<std::size_t> shape, double bound, RngStream rng) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-bound, bound);
    return Tensor::from_data(std::move(shape), std::move(v), true);
}

void check_window(const Tensor& window, std::size_t input_size, const char* who) {
    if (!window.defined() || window.rank() != 2)
        throw Error(std::string(who) + ": window must be a 2-D {L,F} tensor");
    if (window.rows() == 0) throw Error(std::string(who) + ": empty window (L = 0)");
    if (window.cols() != input_size)
        throw_shape_error(who, window.shape(), {window.rows(), input_size});
}

}  // namespace

VanillaLstmModel::VanillaLstmModel(const ModelDescriptor& desc, RngStream init_rng)
    : desc_(desc) {
    if (desc.kind != ModelKind::vanilla_lstm)
        throw Error("VanillaLstmModel: descriptor kind mismatch");
    if (desc.input_size == 0 || desc.hidden_size == 0 || desc.dense_size == 0)
        throw Error("VanillaLstmModel: sizes must be positive");
    if (desc.dropout_rate < 0.0 || desc.dropout_rate >= 1.0)
        throw Error("VanillaLstmModel: dropout rate must be in [0, 1)");
    cell_ = LstmCellParams::init(desc.input_size, desc.hidden_size, init_rng.derive("cell"));
    const double dense_bound = 1.0 / std::sqrt(static_cast<double>(desc.hidden_size));
    const double head_bound = 1.0 / std::sqrt(static_cast<double>(desc.dense_size));
    w_dense_ = uniform_matrix({desc.hidden_size, desc.dense_size}, dense_bound,
                              init_rng.derive("w_dense"));
    b_dense_ = Tensor::zeros({desc.dense_size}, true);
    w_head_ = uniform_matrix({desc.dense_size, 1}, head_bound, init_rng.derive("w_head"));
    b_head_ = Tensor::zeros({1}, true);
}

Tensor VanillaLstmModel::forward(const Tensor& window, const ForwardMode& mode) const {
    check_window(window, desc_.input_size, "vanilla_forward");
    LstmState state = LstmState::zero(desc_.hidden_size);
    const std::size_t steps = window.rows();
    for (std::size_t t = 0; t < steps; ++t)
        state = lstm_cell_step(row(window, t), state, cell_);
    Tensor hidden = relu(add_bias(matmul(state.hidden, w_dense_), b_dense_));
    if (mode.train && desc_.dropout_rate > 0.0) {
        if (!mode.rng) throw Error("vanilla_forward: train mode requires a dropout stream");
        hidden = dropout(hidden, 1.0 - desc_.dropout_rate, *mode.rng);
    }
    return add_bias(matmul(hidden, w_head_), b_head_);
}

std::vector<Tensor> VanillaLstmModel::parameters() const {
    auto params = cell_.parameters();
    params.push_back(w_dense_);
    params.push_back(b_dense_);
    params.push_back(w_head_);
    params.push_back(b_head_);
    return params;
}

std::vector<std::pair<std::string, Tensor>> VanillaLstmModel::named_parameters() const {
    auto named = cell_.named_parameters("cell");
    named.emplace_back("w_dense", w_dense_);
    named.emplace_back("b_dense", b_dense_);
    named.emplace_back("w_head", w_head_);
    named.emplace_back("b_head", b_head_);
    return named;
}

std::unique_ptr<ForecastModel> VanillaLstmModel::clone() const {
    auto copy = std::make_unique<VanillaLstmModel>(*this);
    // The copied members still share buffers with this model; rebind each to
    // a deep copy, in declared parameter order.
    auto src = parameters();
    auto rebind = [&](std::size_t i) { return src[i].clone(); };
    copy->cell_.w_in_forget = rebind(0);
    copy->cell_.w_in_input = rebind(1);
    copy->cell_.w_in_cand = rebind(2);
    copy->cell_.w_in_out = rebind(3);
    copy->cell_.w_rec_forget = rebind(4);
    copy->cell_.w_rec_input = rebind(5);
    copy->cell_.w_rec_cand = rebind(6);
    copy->cell_.w_rec_out = rebind(7);
    copy->cell_.b_forget = rebind(8);
    copy->cell_.b_input = rebind(9);
    copy->cell_.b_cand = rebind(10);
    copy->cell_.b_out = rebind(11);
    copy->w_dense_ = rebind(12);
    copy->b_dense_ = rebind(13);
    copy->w_head_ = rebind(14);
    copy->b_head_ = rebind(15);
    return copy;
}

EncDecLstmModel::EncDecLstmModel(const ModelDescriptor& desc, RngStream init_rng) : desc_(desc) {
    if (desc.kind != ModelKind::encoder_decoder_lstm)
        throw Error("EncDecLstmModel: descriptor kind mismatch");
    if (desc.input_size == 0 || desc.hidden_size == 0 || desc.lookback == 0)
        throw Error("EncDecLstmModel: sizes must be positive");
    if (desc.dropout_rate < 0.0 || desc.dropout_rate >= 1.0)
        throw Error("EncDecLstmModel: dropout rate must be in [0, 1)");
    encoder_ = LstmCellParams::init(desc.input_size, desc.hidden_size, init_rng.derive("encoder"));
    decoder_ = LstmCellParams::init(desc.hidden_size, desc.hidden_size, init_rng.derive("decoder"));
    const double head_bound = 1.0 / std::sqrt(static_cast<double>(desc.hidden_size));
    w_head_ = uniform_matrix({desc.hidden_size, 1}, head_bound, init_rng.derive("w_head"));
    b_head_ = Tensor::zeros({1}, true);
}

Tensor EncDecLstmModel::forward(const Tensor& window, const ForwardMode& mode) const {
    check_window(window, desc_.input_size, "encdec_forward");
    if (window.rows() != desc_.lookback)
        throw Error("encdec_forward: window length " + std::to_string(window.rows()) +
                    " does not equal repeat count " + std::to_string(desc_.lookback));
    const std::size_t steps = desc_.lookback;

    LstmState enc = LstmState::zero(desc_.hidden_size);
    for (std::size_t t = 0; t < steps; ++t) enc = lstm_cell_step(row(window, t), enc, encoder_);
    const Tensor context = enc.hidden;  // {1,H}

    LstmState dec = LstmState::zero(desc_.hidden_size);
    std::vector<Tensor> outputs;
    outputs.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        dec = lstm_cell_step(context, dec, decoder_);
        Tensor h = dec.hidden;
        if (mode.train && desc_.dropout_rate > 0.0) {
            if (!mode.rng) throw Error("encdec_forward: train mode requires a dropout stream");
            h = dropout(h, 1.0 - desc_.dropout_rate, *mode.rng);
        }
        outputs.push_back(add_bias(matmul(h, w_head_), b_head_));  // {1,1}
    }
    return concat(outputs, 1);  // {1,L}
}

std::vector<Tensor> EncDecLstmModel::parameters() const {
    auto params = encoder_.parameters();
    auto dec = decoder_.parameters();
    params.insert(params.end(), dec.begin(), dec.end());
    params.push_back(w_head_);
    params.push_back(b_head_);
    return params;
}

std::vector<std::pair<std::string, Tensor>> EncDecLstmModel::named_parameters() const {
    auto named = encoder_.named_parameters("encoder");
    auto dec = decoder_.named_parameters("decoder");
    named.insert(named.end(), dec.begin(), dec.end());
    named.emplace_back("w_head", w_head_);
    named.emplace_back("b_head", b_head_);
    return named;
}

std::unique_ptr<ForecastModel> EncDecLstmModel::clone() const {
    auto copy = std::make_unique<EncDecLstmModel>(*this);
    auto src = parameters();
    auto rebind = [&](std::size_t i) { return src[i].clone(); };
    copy->encoder_.w_in_forget = rebind(0);
    copy->encoder_.w_in_input = rebind(1);
    copy->encoder_.w_in_cand = rebind(2);
    copy->encoder_.w_in_out = rebind(3);
    copy->encoder_.w_rec_forget = rebind(4);
    copy->encoder_.w_rec_input = rebind(5);
    copy->encoder_.w_rec_cand = rebind(6);
    copy->encoder_.w_rec_out = rebind(7);
    copy->encoder_.b_forget = rebind(8);
    copy->encoder_.b_input = rebind(9);
    copy->encoder_.b_cand = rebind(10);
    copy->encoder_.b_out = rebind(11);
    copy->decoder_.w_in_forget = rebind(12);
    copy->decoder_.w_in_input = rebind(13);
    copy->decoder_.w_in_cand = rebind(14);
    copy->decoder_.w_in_out = rebind(15);
    copy->decoder_.w_rec_forget = rebind(16);
    copy->decoder_.w_rec_input = rebind(17);
    copy->decoder_.w_rec_cand = rebind(18);
    copy->decoder_.w_rec_out = rebind(19);
    copy->decoder_.b_forget = rebind(20);
    copy->decoder_.b_input = rebind(21);
    copy->decoder_.b_cand = rebind(22);
    copy->decoder_.b_out = rebind(23);
    copy->w_head_ = rebind(24);
    copy->b_head_ = rebind(25);
    return copy;
}

std::unique_ptr<ForecastModel> make_model(const ModelDescriptor& desc, RngStream init_rng) {
    switch (desc.kind) {
        case ModelKind::vanilla_lstm:
            return std::make_unique<VanillaLstmModel>(desc, init_rng);
        case ModelKind::encoder_decoder_lstm:
            return std::make_unique<EncDecLstmModel>(desc, init_rng);
    }
    throw Error("make_model: invalid model kind");
}

std::unique_ptr<ForecastModel> make_model(const ModelDescriptor& desc) {
    return make_model(desc, RngStream(desc.init_seed, "init"));
}

}  // namespace tsadv
