#include "tsadv/tensor.hpp"

#include <atomic>
#include <cmath>

namespace tsadv {

namespace {
std::atomic<std::uint64_t> g_next_id{1};
thread_local Tape* g_active_tape = nullptr;

std::shared_ptr<detail::TensorNode> make_node(std::vector<std::size_t> shape,
                                              std::vector<double> values, bool requires_grad) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    if (n != values.size())
        throw Error("Tensor: shape " + shape_to_string(shape) + " does not match " +
                    std::to_string(values.size()) + " values");
    auto node = std::make_shared<detail::TensorNode>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
    return node;
}
}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value, bool requires_grad) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return Tensor(make_node(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> values,
                         bool requires_grad) {
    return Tensor(make_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor(make_node({1}, {value}, requires_grad));
}

Tensor Tensor::row_vector(std::vector<double> values, bool requires_grad) {
    std::size_t n = values.size();
    return Tensor(make_node({1, n}, std::move(values), requires_grad));
}

std::size_t Tensor::rows() const {
    const auto& s = require().shape;
    if (s.size() != 2) throw Error("Tensor::rows: tensor is not 2-D, shape " + shape_to_string(s));
    return s[0];
}

std::size_t Tensor::cols() const {
    const auto& s = require().shape;
    if (s.size() != 2) throw Error("Tensor::cols: tensor is not 2-D, shape " + shape_to_string(s));
    return s[1];
}

double Tensor::value() const {
    const auto& n = require();
    if (n.values.size() != 1)
        throw Error("Tensor::value: tensor is not scalar, shape " + shape_to_string(n.shape));
    return n.values[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    const auto& n = require();
    if (n.shape.size() != 2)
        throw Error("Tensor::at(r,c): tensor is not 2-D, shape " + shape_to_string(n.shape));
    if (r >= n.shape[0] || c >= n.shape[1])
        throw Error("Tensor::at(r,c): index out of range");
    return n.values[r * n.shape[1] + c];
}

Tensor& Tensor::set_requires_grad(bool b) {
    require().requires_grad = b;
    return *this;
}

Tensor Tensor::clone() const {
    const auto& n = require();
    return Tensor(make_node(n.shape, n.values, n.requires_grad));
}

Tensor Gradients::at(const Tensor& t) const {
    auto it = buffers_.find(t.id());
    if (it == buffers_.end()) return Tensor::zeros(t.shape());
    return Tensor::from_data(t.shape(), it->second);
}

std::span<double> Gradients::accumulate(const Tensor& t) {
    auto [it, inserted] = buffers_.try_emplace(t.id());
    if (inserted) it->second.assign(t.numel(), 0.0);
    return it->second;
}

std::span<const double> Gradients::read(const Tensor& t) const {
    auto it = buffers_.find(t.id());
    if (it == buffers_.end()) return {};
    return it->second;
}

Tape::Tape() {
    if (g_active_tape)
        throw Error("Tape: a tape is already active on this thread");
    g_active_tape = this;
    active_ = true;
}

Tape::~Tape() {
    if (g_active_tape == this) g_active_tape = nullptr;
}

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::function<void(Gradients&)> pull) {
    entries_.push_back(std::move(pull));
}

void Tape::watch(const Tensor& leaf) {
    for (const auto& w : watched_)
        if (w.same_as(leaf)) return;
    watched_.push_back(leaf);
}

Gradients Tape::backward(const Tensor& loss) {
    if (consumed_) throw Error("Tape::backward: tape already consumed");
    if (entries_.empty()) throw Error("Tape::backward: tape is empty");
    if (!loss.defined() || loss.numel() != 1)
        throw Error("Tape::backward: loss must be a scalar tensor");
    consumed_ = true;
    if (g_active_tape == this) g_active_tape = nullptr;
    active_ = false;

    Gradients grads;
    grads.accumulate(loss)[0] = 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)(grads);
    // Materialize zero buffers for watched-but-unreached leaves so callers
    // see a gradient for every requires_grad tensor.
    for (const auto& w : watched_) grads.accumulate(w);
    return grads;
}

namespace detail {

void record_op(Tensor& out, const std::vector<Tensor>& operands,
               std::function<void(Gradients&)> pull) {
    Tape* tape = Tape::active();
    if (!tape) return;
    bool needs_grad = false;
    for (const auto& op : operands)
        if (op.requires_grad()) needs_grad = true;
    if (!needs_grad) return;
    out.set_requires_grad(true);
    out.node_->is_leaf = false;
    for (const auto& op : operands)
        if (op.requires_grad() && op.is_leaf()) tape->watch(op);
    tape->record(std::move(pull));
}

void check_finite(const Tensor& t, const char* op) {
    for (double v : t.data())
        if (!std::isfinite(v))
            throw Error(std::string(op) + ": non-finite value in result");
}

}  // namespace detail

}  // namespace tsadv
