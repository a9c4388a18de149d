#pragma once

#include <functional>
#include <span>

#include "hyrank/tensor.hpp"

namespace hyrank {

/// Central-difference verification of analytic gradients.
///
/// The caller evaluates the loss once with backpropagation so that every
/// tensor's grad buffer holds the analytic gradient, then passes a pure
/// forward `loss` (it must read the tensors' live values and not touch the
/// grads — dropout off, inputs fixed). Each element is wiggled by ±h and
/// the relative error |a - n| / max(|a| + |n|, 1e-8) is taken; the maximum
/// over all elements is returned. Throws NumericError on a non-finite loss.
double grad_check(const std::function<double()>& loss, std::span<ParamTensor* const> params,
                  double h = 1e-4);

}  // namespace hyrank
