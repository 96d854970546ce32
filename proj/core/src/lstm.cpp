#include "tsadv/lstm.hpp"

#include <cmath>

namespace tsadv {

namespace {

Tensor uniform_matrix(std::vector<std::size_t> shape, double bound, RngStream& rng) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-bound, bound);
    return Tensor::from_data(std::move(shape), std::move(v), true);
}

}  // namespace

LstmCellParams LstmCellParams::init(std::size_t input_size, std::size_t hidden_size,
                                    RngStream rng) {
    if (input_size == 0 || hidden_size == 0)
        throw Error("LstmCellParams: sizes must be positive");
    const double in_bound = 1.0 / std::sqrt(static_cast<double>(input_size));
    const double rec_bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    LstmCellParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    auto in_rng = [&](const char* name) { return rng.derive(name); };
    RngStream r0 = in_rng("w_in_forget"), r1 = in_rng("w_in_input"), r2 = in_rng("w_in_cand"),
              r3 = in_rng("w_in_out");
    RngStream r4 = in_rng("w_rec_forget"), r5 = in_rng("w_rec_input"), r6 = in_rng("w_rec_cand"),
              r7 = in_rng("w_rec_out");
    p.w_in_forget = uniform_matrix({input_size, hidden_size}, in_bound, r0);
    p.w_in_input = uniform_matrix({input_size, hidden_size}, in_bound, r1);
    p.w_in_cand = uniform_matrix({input_size, hidden_size}, in_bound, r2);
    p.w_in_out = uniform_matrix({input_size, hidden_size}, in_bound, r3);
    p.w_rec_forget = uniform_matrix({hidden_size, hidden_size}, rec_bound, r4);
    p.w_rec_input = uniform_matrix({hidden_size, hidden_size}, rec_bound, r5);
    p.w_rec_cand = uniform_matrix({hidden_size, hidden_size}, rec_bound, r6);
    p.w_rec_out = uniform_matrix({hidden_size, hidden_size}, rec_bound, r7);
    p.b_forget = Tensor::zeros({hidden_size}, true);
    p.b_input = Tensor::zeros({hidden_size}, true);
    p.b_cand = Tensor::zeros({hidden_size}, true);
    p.b_out = Tensor::zeros({hidden_size}, true);
    return p;
}

std::vector<Tensor> LstmCellParams::parameters() const {
    return {w_in_forget, w_in_input, w_in_cand, w_in_out, w_rec_forget, w_rec_input,
            w_rec_cand,  w_rec_out,  b_forget,  b_input,  b_cand,       b_out};
}

std::vector<std::pair<std::string, Tensor>> LstmCellParams::named_parameters(
    const std::string& prefix) const {
    return {{prefix + ".w_in_forget", w_in_forget},   {prefix + ".w_in_input", w_in_input},
            {prefix + ".w_in_cand", w_in_cand},       {prefix + ".w_in_out", w_in_out},
            {prefix + ".w_rec_forget", w_rec_forget}, {prefix + ".w_rec_input", w_rec_input},
            {prefix + ".w_rec_cand", w_rec_cand},     {prefix + ".w_rec_out", w_rec_out},
            {prefix + ".b_forget", b_forget},         {prefix + ".b_input", b_input},
            {prefix + ".b_cand", b_cand},             {prefix + ".b_out", b_out}};
}

LstmState LstmState::zero(std::size_t hidden_size) {
    return {Tensor::zeros({1, hidden_size}), Tensor::zeros({1, hidden_size})};
}

Tensor lstm_gate_preact(const Tensor& x_t, const Tensor& hidden, const Tensor& w_in,
                        const Tensor& w_rec, const Tensor& bias) {
    return add_bias(add(matmul(x_t, w_in), matmul(hidden, w_rec)), bias);
}

LstmState lstm_cell_step(const Tensor& x_t, const LstmState& prev, const LstmCellParams& p) {
    if (x_t.rank() != 2 || x_t.rows() != 1 || x_t.cols() != p.input_size)
        throw_shape_error("lstm_cell_step", x_t.shape(), {1, p.input_size});
    if (prev.hidden.cols() != p.hidden_size || prev.cell.cols() != p.hidden_size)
        throw_shape_error("lstm_cell_step", prev.hidden.shape(), {1, p.hidden_size});

    Tensor forget = sigmoid(lstm_gate_preact(x_t, prev.hidden, p.w_in_forget, p.w_rec_forget, p.b_forget));
    Tensor input = sigmoid(lstm_gate_preact(x_t, prev.hidden, p.w_in_input, p.w_rec_input, p.b_input));
    Tensor cand = tanh(lstm_gate_preact(x_t, prev.hidden, p.w_in_cand, p.w_rec_cand, p.b_cand));
    Tensor cell = add(mul(forget, prev.cell), mul(input, cand));
    Tensor out = sigmoid(lstm_gate_preact(x_t, prev.hidden, p.w_in_out, p.w_rec_out, p.b_out));
    Tensor hidden = mul(tanh(cell), out);
    return {hidden, cell};
}

}  // namespace tsadv
