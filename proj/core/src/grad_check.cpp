#include "tsadv/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace tsadv {

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h) {
    if (!(h > 0.0)) throw Error("finite_difference_gradient: step must be positive");
    Tensor probe = x.clone();
    probe.set_requires_grad(false);
    auto v = probe.mutable_data();
    std::vector<double> grad(x.numel());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double orig = v[i];
        v[i] = orig + h;
        const double fp = f(probe);
        v[i] = orig - h;
        const double fm = f(probe);
        v[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return Tensor::from_data(x.shape(), std::move(grad));
}

double max_relative_error(const Tensor& a, const Tensor& b, double abs_floor) {
    if (a.shape() != b.shape()) throw_shape_error("max_relative_error", a.shape(), b.shape());
    auto av = a.data(), bv = b.data();
    double worst = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double denom = std::max({std::abs(av[i]), std::abs(bv[i]), abs_floor});
        worst = std::max(worst, std::abs(av[i] - bv[i]) / denom);
    }
    return worst;
}

}  // namespace tsadv
