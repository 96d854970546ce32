#pragma once

#include <string>
#include <vector>

#include "tsadv/ops.hpp"
#include "tsadv/rng.hpp"
#include "tsadv/tensor.hpp"

namespace tsadv {

/// One LSTM cell: four gates (forget, input, candidate, output), each with
/// an input weight matrix {F,H}, a recurrent weight matrix {H,H} and a bias
/// {H}. Weights are drawn uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)];
/// biases start at zero.
struct LstmCellParams {
    Tensor w_in_forget, w_in_input, w_in_cand, w_in_out;      // {F,H}
    Tensor w_rec_forget, w_rec_input, w_rec_cand, w_rec_out;  // {H,H}
    Tensor b_forget, b_input, b_cand, b_out;                  // {H}
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;

    static LstmCellParams init(std::size_t input_size, std::size_t hidden_size, RngStream rng);

    /// Parameters in declared (checkpoint) order.
    std::vector<Tensor> parameters() const;
    std::vector<std::pair<std::string, Tensor>> named_parameters(const std::string& prefix) const;
};

struct LstmState {
    Tensor hidden;  // {1,H}
    Tensor cell;    // {1,H}
    static LstmState zero(std::size_t hidden_size);
};

/// Single gated step:
///   forget = sigmoid(x W_if + s W_rf + b_f)
///   input  = sigmoid(x W_ii + s W_ri + b_i)
///   cand   = tanh   (x W_ic + s W_rc + b_c)
///   cell'  = forget o cell + input o cand
///   out    = sigmoid(x W_io + s W_ro + b_o)
///   hidden'= tanh(cell') o out
Tensor lstm_gate_preact(const Tensor& x_t, const Tensor& hidden, const Tensor& w_in,
                        const Tensor& w_rec, const Tensor& bias);
LstmState lstm_cell_step(const Tensor& x_t, const LstmState& prev, const LstmCellParams& params);

}  // namespace tsadv
