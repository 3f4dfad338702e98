#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gcat/autodiff.hpp"

namespace gcat::ad {

/// Builds a scalar expression from leaves already created in `g`, one per
/// input matrix and in the same order.
using Expression = std::function<Var(ComputeGraph& g, std::span<const Var> inputs)>;

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t coordinates = 0;
    std::vector<Matrix> analytic;
    std::vector<Matrix> numeric;
};

/// Compares reverse-mode gradients against central differences
/// (f(x + eps) - f(x - eps)) / (2 eps), coordinate by coordinate. The error
/// per coordinate is |a - n| / max(1e-8, |a| + |n|).
///
/// Throws RetryableKinkError when any ReLU/LeakyReLU/L1 pre-activation at
/// the base point lies within `kink_margin` of zero (defaults to epsilon).
GradCheckResult grad_check(const Expression& expr, const std::vector<Matrix>& inputs,
                           double epsilon = 1e-5, double kink_margin = -1.0);

/// Evaluates expr at `inputs` and returns the root value and leaf gradients.
std::pair<double, std::vector<Matrix>> value_and_gradients(const Expression& expr,
                                                           const std::vector<Matrix>& inputs);

}  // namespace gcat::ad
