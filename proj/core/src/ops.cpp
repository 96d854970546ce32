#include "tsadv/ops.hpp"

#include <cmath>

namespace tsadv {

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw_shape_error(op, a.shape(), b.shape());
}

#ifndef NDEBUG
#define TSADV_FINITE(t, op) detail::check_finite((t), (op))
#else
#define TSADV_FINITE(t, op) ((void)0)
#endif

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
        throw_shape_error("matmul", a.shape(), b.shape());
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    auto av = a.data();
    auto bv = b.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            const double* brow = &bv[p * n];
            double* orow = &out[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
        }
    Tensor c = Tensor::from_data({m, n}, std::move(out));
    TSADV_FINITE(c, "matmul");
    detail::record_op(c, {a, b}, [a, b, c, m, k, n](Gradients& g) {
        auto gc = g.read(c);
        if (gc.empty()) return;
        if (a.requires_grad()) {
            auto ga = g.accumulate(a);
            auto bv2 = b.data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += gc[i * n + j] * bv2[p * n + j];
                    ga[i * k + p] += s;
                }
        }
        if (b.requires_grad()) {
            auto gb = g.accumulate(b);
            auto av2 = a.data();
            for (std::size_t p = 0; p < k; ++p)
                for (std::size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < m; ++i) s += av2[i * k + p] * gc[i * n + j];
                    gb[p * n + j] += s;
                }
        }
    });
    return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    std::vector<double> out(a.numel());
    auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    Tensor c = Tensor::from_data(a.shape(), std::move(out));
    TSADV_FINITE(c, "add");
    detail::record_op(c, {a, b}, [a, b, c](Gradients& g) {
        auto gc = g.read(c);
        if (gc.empty()) return;
        if (a.requires_grad()) {
            auto ga = g.accumulate(a);
            for (std::size_t i = 0; i < gc.size(); ++i) ga[i] += gc[i];
        }
        if (b.requires_grad()) {
            auto gb = g.accumulate(b);
            for (std::size_t i = 0; i < gc.size(); ++i) gb[i] += gc[i];
        }
    });
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    std::vector<double> out(a.numel());
    auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    Tensor c = Tensor::from_data(a.shape(), std::move(out));
    TSADV_FINITE(c, "sub");
    detail::record_op(c, {a, b}, [a, b, c](Gradients& g) {
        auto gc = g.read(c);
        if (gc.empty()) return;
        if (a.requires_grad()) {
            auto ga = g.accumulate(a);
            for (std::size_t i = 0; i < gc.size(); ++i) ga[i] += gc[i];
        }
        if (b.requires_grad()) {
            auto gb = g.accumulate(b);
            for (std::size_t i = 0; i < gc.size(); ++i) gb[i] -= gc[i];
        }
    });
    return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    std::vector<double> out(a.numel());
    auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    Tensor c = Tensor::from_data(a.shape(), std::move(out));
    TSADV_FINITE(c, "mul");
    detail::record_op(c, {a, b}, [a, b, c](Gradients& g) {
        auto gc = g.read(c);
        if (gc.empty()) return;
        if (a.requires_grad()) {
            auto ga = g.accumulate(a);
            auto bv2 = b.data();
            for (std::size_t i = 0; i < gc.size(); ++i) ga[i] += gc[i] * bv2[i];
        }
        if (b.requires_grad()) {
            auto gb = g.accumulate(b);
            auto av2 = a.data();
            for (std::size_t i = 0; i < gc.size(); ++i) gb[i] += gc[i] * av2[i];
        }
    });
    return c;
}

Tensor add_bias(const Tensor& m, const Tensor& bias) {
    if (m.rank() != 2 || bias.rank() != 1 || bias.numel() != m.cols())
        throw_shape_error("add_bias", m.shape(), bias.shape());
    const std::size_t r = m.rows(), c = m.cols();
    std::vector<double> out(r * c);
    auto mv = m.data(), bv = bias.data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = mv[i * c + j] + bv[j];
    Tensor y = Tensor::from_data(m.shape(), std::move(out));
    TSADV_FINITE(y, "add_bias");
    detail::record_op(y, {m, bias}, [m, bias, y, r, c](Gradients& g) {
        auto gy = g.read(y);
        if (gy.empty()) return;
        if (m.requires_grad()) {
            auto gm = g.accumulate(m);
            for (std::size_t i = 0; i < gy.size(); ++i) gm[i] += gy[i];
        }
        if (bias.requires_grad()) {
            auto gb = g.accumulate(bias);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gb[j] += gy[i * c + j];
        }
    });
    return y;
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.numel());
    auto av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
    Tensor c = Tensor::from_data(a.shape(), std::move(out));
    TSADV_FINITE(c, "scale");
    detail::record_op(c, {a}, [a, c, s](Gradients& g) {
        auto gc = g.read(c);
        if (gc.empty()) return;
        auto ga = g.accumulate(a);
        for (std::size_t i = 0; i < gc.size(); ++i) ga[i] += gc[i] * s;
    });
    return c;
}

Tensor sigmoid(const Tensor& x) {
    std::vector<double> out(x.numel());
    auto xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
    Tensor y = Tensor::from_data(x.shape(), std::move(out));
    TSADV_FINITE(y, "sigmoid");
    detail::record_op(y, {x}, [x, y](Gradients& g) {
        auto gy = g.read(y);
        if (gy.empty()) return;
        auto gx = g.accumulate(x);
        auto yv = y.data();
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * yv[i] * (1.0 - yv[i]);
    });
    return y;
}

Tensor tanh(const Tensor& x) {
    std::vector<double> out(x.numel());
    auto xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
    Tensor y = Tensor::from_data(x.shape(), std::move(out));
    TSADV_FINITE(y, "tanh");
    detail::record_op(y, {x}, [x, y](Gradients& g) {
        auto gy = g.read(y);
        if (gy.empty()) return;
        auto gx = g.accumulate(x);
        auto yv = y.data();
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * (1.0 - yv[i] * yv[i]);
    });
    return y;
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.numel());
    auto xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    Tensor y = Tensor::from_data(x.shape(), std::move(out));
    TSADV_FINITE(y, "relu");
    detail::record_op(y, {x}, [x, y](Gradients& g) {
        auto gy = g.read(y);
        if (gy.empty()) return;
        auto gx = g.accumulate(x);
        auto xv2 = x.data();
        for (std::size_t i = 0; i < gy.size(); ++i)
            if (xv2[i] > 0.0) gx[i] += gy[i];
    });
    return y;
}

Tensor dropout(const Tensor& x, double keep_prob, RngStream& rng) {
    if (!(keep_prob > 0.0) || keep_prob > 1.0)
        throw Error("dropout: keep probability must be in (0, 1], got " +
                    std::to_string(keep_prob));
    if (keep_prob == 1.0) return scale(x, 1.0);
    std::vector<double> mask(x.numel());
    for (auto& mv : mask) mv = rng.uniform() < keep_prob ? 1.0 / keep_prob : 0.0;
    std::vector<double> out(x.numel());
    auto xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
    Tensor y = Tensor::from_data(x.shape(), std::move(out));
    TSADV_FINITE(y, "dropout");
    detail::record_op(y, {x}, [x, y, mask = std::move(mask)](Gradients& g) {
        auto gy = g.read(y);
        if (gy.empty()) return;
        auto gx = g.accumulate(x);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
    });
    return y;
}

namespace {

Tensor concat_impl(std::vector<Tensor> parts, std::size_t axis) {
    if (parts.empty()) throw Error("concat: no parts");
    if (axis > 1) throw Error("concat: axis must be 0 or 1");
    const bool one_d = parts[0].rank() == 1;
    if (one_d && axis != 0) throw Error("concat: 1-D tensors concatenate along axis 0");

    std::vector<std::size_t> offsets;  // element offset of each part in output
    std::vector<double> out;
    std::vector<std::size_t> out_shape;

    if (one_d) {
        for (const auto& p : parts) {
            if (p.rank() != 1) throw_shape_error("concat", parts[0].shape(), p.shape());
            offsets.push_back(out.size());
            out.insert(out.end(), p.data().begin(), p.data().end());
        }
        out_shape = {out.size()};
    } else if (axis == 0) {
        const std::size_t c = parts[0].cols();
        for (const auto& p : parts) {
            if (p.rank() != 2 || p.cols() != c)
                throw_shape_error("concat", parts[0].shape(), p.shape());
            offsets.push_back(out.size());
            out.insert(out.end(), p.data().begin(), p.data().end());
        }
        out_shape = {out.size() / c, c};
    } else {
        const std::size_t r = parts[0].rows();
        std::size_t total_cols = 0;
        for (const auto& p : parts) {
            if (p.rank() != 2 || p.rows() != r)
                throw_shape_error("concat", parts[0].shape(), p.shape());
            total_cols += p.cols();
        }
        out.assign(r * total_cols, 0.0);
        std::size_t col0 = 0;
        for (const auto& p : parts) {
            offsets.push_back(col0);
            auto pv = p.data();
            const std::size_t pc = p.cols();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < pc; ++j) out[i * total_cols + col0 + j] = pv[i * pc + j];
            col0 += pc;
        }
        out_shape = {r, total_cols};
    }

    Tensor y = Tensor::from_data(std::move(out_shape), std::move(out));
    const std::size_t total_cols = y.rank() == 2 ? y.cols() : 0;
    detail::record_op(y, parts,
                      [parts, offsets = std::move(offsets), y, axis, one_d, total_cols](Gradients& g) {
                          auto gy = g.read(y);
                          if (gy.empty()) return;
                          for (std::size_t pi = 0; pi < parts.size(); ++pi) {
                              const Tensor& p = parts[pi];
                              if (!p.requires_grad()) continue;
                              auto gp = g.accumulate(p);
                              if (one_d || axis == 0) {
                                  const std::size_t off = offsets[pi];
                                  for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += gy[off + i];
                              } else {
                                  const std::size_t r = p.rows(), pc = p.cols(), col0 = offsets[pi];
                                  for (std::size_t i = 0; i < r; ++i)
                                      for (std::size_t j = 0; j < pc; ++j)
                                          gp[i * pc + j] += gy[i * total_cols + col0 + j];
                              }
                          }
                      });
    return y;
}

}  // namespace

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
    return concat_impl({a, b}, axis);
}

Tensor row(const Tensor& m, std::size_t r) {
    if (m.rank() != 2) throw Error("row: tensor is not 2-D, shape " + shape_to_string(m.shape()));
    if (r >= m.rows()) throw Error("row: index " + std::to_string(r) + " out of range");
    const std::size_t c = m.cols();
    auto mv = m.data();
    std::vector<double> out(mv.begin() + r * c, mv.begin() + (r + 1) * c);
    Tensor y = Tensor::from_data({1, c}, std::move(out));
    detail::record_op(y, {m}, [m, y, r, c](Gradients& g) {
        auto gy = g.read(y);
        if (gy.empty()) return;
        auto gm = g.accumulate(m);
        for (std::size_t j = 0; j < c; ++j) gm[r * c + j] += gy[j];
    });
    return y;
}

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    Tensor y = Tensor::scalar(s);
    TSADV_FINITE(y, "sum");
    detail::record_op(y, {x}, [x, y](Gradients& g) {
        auto gy = g.read(y);
        if (gy.empty()) return;
        auto gx = g.accumulate(x);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[0];
    });
    return y;
}

Tensor mean(const Tensor& x) {
    const double n = static_cast<double>(x.numel());
    double s = 0.0;
    for (double v : x.data()) s += v;
    Tensor y = Tensor::scalar(s / n);
    TSADV_FINITE(y, "mean");
    detail::record_op(y, {x}, [x, y, n](Gradients& g) {
        auto gy = g.read(y);
        if (gy.empty()) return;
        auto gx = g.accumulate(x);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[0] / n;
    });
    return y;
}

Tensor mse(const Tensor& pred, const Tensor& target) {
    require_same_shape("mse", pred, target);
    const double n = static_cast<double>(pred.numel());
    auto pv = pred.data(), tv = target.data();
    double s = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double d = pv[i] - tv[i];
        s += d * d;
    }
    Tensor y = Tensor::scalar(s / n);
    TSADV_FINITE(y, "mse");
    detail::record_op(y, {pred, target}, [pred, target, y, n](Gradients& g) {
        auto gy = g.read(y);
        if (gy.empty()) return;
        auto pv2 = pred.data();
        auto tv2 = target.data();
        if (pred.requires_grad()) {
            auto gp = g.accumulate(pred);
            for (std::size_t i = 0; i < gp.size(); ++i)
                gp[i] += gy[0] * 2.0 * (pv2[i] - tv2[i]) / n;
        }
        if (target.requires_grad()) {
            auto gt = g.accumulate(target);
            for (std::size_t i = 0; i < gt.size(); ++i)
                gt[i] -= gy[0] * 2.0 * (pv2[i] - tv2[i]) / n;
        }
    });
    return y;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
    return concat_impl(std::vector<Tensor>(parts.begin(), parts.end()), axis);
}

}  // namespace tsadv
