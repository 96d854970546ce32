#pragma once

#include <functional>

#include "tsadv/tensor.hpp"

namespace tsadv {

/// Central-difference gradient of a deterministic scalar function:
/// (f(x + h*e_i) - f(x - h*e_i)) / 2h for every coordinate. The function is
/// evaluated without any tape; dropout must be disabled inside f. This is
/// the independent oracle the gradient-correctness suites check backward()
/// against.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, abs_floor). With abs_floor 1e-7 a
/// result below 1e-4 is the pass condition used throughout the test suites.
double max_relative_error(const Tensor& a, const Tensor& b, double abs_floor = 1e-7);

}  // namespace tsadv
