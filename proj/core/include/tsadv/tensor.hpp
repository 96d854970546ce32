#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "tsadv/error.hpp"

namespace tsadv {

class Tape;
class Tensor;
class Gradients;

namespace detail {
void record_op(Tensor& out, const std::vector<Tensor>& operands,
               std::function<void(Gradients&)> pull);

struct TensorNode {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    bool requires_grad = false;
    bool is_leaf = true;  // cleared when produced by a recorded op
    std::uint64_t id = 0;
};
}  // namespace detail

/// Dense row-major array of 64-bit floats with shared-buffer handle
/// semantics: copying a Tensor copies the handle, clone() copies the data.
/// Gradients are computed by recording primitive ops on the active Tape.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> shape, double value, bool requires_grad = false);
    static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> values,
                            bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    /// 1-row matrix {1, n}.
    static Tensor row_vector(std::vector<double> values, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::size_t>& shape() const { return require().shape; }
    std::size_t rank() const { return require().shape.size(); }
    std::size_t numel() const { return require().values.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const { return require().values; }
    std::span<double> mutable_data() { return require().values; }

    /// Value of a single-element tensor.
    double value() const;
    double at(std::size_t i) const { return require().values.at(i); }
    double at(std::size_t r, std::size_t c) const;

    bool requires_grad() const { return node_ && node_->requires_grad; }
    Tensor& set_requires_grad(bool b);
    bool is_leaf() const { return require().is_leaf; }
    std::uint64_t id() const { return require().id; }

    /// Deep copy with a fresh identity; never recorded on a tape.
    Tensor clone() const;

    /// Identity comparison (same underlying buffer).
    bool same_as(const Tensor& other) const { return node_ == other.node_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}

    detail::TensorNode& require() const {
        if (!node_) throw Error("Tensor: use of an undefined tensor");
        return *node_;
    }

    std::shared_ptr<detail::TensorNode> node_;
    friend class Tape;
    friend class Gradients;
    friend void detail::record_op(Tensor&, const std::vector<Tensor>&,
                                  std::function<void(Gradients&)>);
};

/// Gradient buffers keyed by tensor identity. Produced by Tape::backward and
/// also used as the accumulation store while the backward pass runs.
class Gradients {
public:
    /// Gradient of `t`; zeros of t's shape when no gradient reached it.
    Tensor at(const Tensor& t) const;
    bool contains(const Tensor& t) const { return buffers_.count(t.id()) != 0; }
    std::size_t size() const { return buffers_.size(); }

    /// Get-or-create the accumulation buffer for `t` (zero-initialized).
    std::span<double> accumulate(const Tensor& t);
    /// Read-only view; empty span when `t` has no buffer yet.
    std::span<const double> read(const Tensor& t) const;

private:
    std::unordered_map<std::uint64_t, std::vector<double>> buffers_;
};

/// Records primitive operations while active so one backward pass can
/// propagate gradients from a scalar loss to every participating leaf
/// tensor with requires_grad set. One tape may be active per thread; a tape
/// can be consumed by backward() exactly once. Entries are stored in
/// execution order, which is a topological order of the value graph.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Reverse sweep from `loss` (must be scalar). Consumes the tape.
    Gradients backward(const Tensor& loss);

    std::size_t node_count() const { return entries_.size(); }
    bool consumed() const { return consumed_; }

    static Tape* active();

    /// Called by primitives: registers the backward rule for one op. The
    /// closure reads the output gradient from the store and accumulates into
    /// its operands' buffers.
    void record(std::function<void(Gradients&)> pull);
    /// Registers a requires_grad leaf so backward() reports it even when it
    /// is unreachable from the loss.
    void watch(const Tensor& leaf);

private:
    std::vector<std::function<void(Gradients&)>> entries_;
    std::vector<Tensor> watched_;
    bool consumed_ = false;
    bool active_ = false;
};

namespace detail {
void check_finite(const Tensor& t, const char* op);
}  // namespace detail

}  // namespace tsadv
