#include "gcat/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "gcat/errors.hpp"

namespace gcat::ad {

namespace {

double evaluate(const Expression& expr, const std::vector<Matrix>& inputs) {
    ComputeGraph g;
    std::vector<Var> leaves;
    leaves.reserve(inputs.size());
    for (const auto& m : inputs) leaves.push_back(g.leaf(m));
    auto root = expr(g, leaves);
    if (root.rows() != 1 || root.cols() != 1) throw ContractError("grad_check: expression is not scalar");
    return root.value()[0];
}

}  // namespace

std::pair<double, std::vector<Matrix>> value_and_gradients(const Expression& expr,
                                                           const std::vector<Matrix>& inputs) {
    ComputeGraph g;
    std::vector<Var> leaves;
    for (const auto& m : inputs) leaves.push_back(g.leaf(m));
    auto root = expr(g, leaves);
    g.backward(root);
    std::vector<Matrix> grads;
    for (auto v : leaves) grads.push_back(v.grad());
    return {root.value()[0], std::move(grads)};
}

GradCheckResult grad_check(const Expression& expr, const std::vector<Matrix>& inputs,
                           double epsilon, double kink_margin) {
    if (!(epsilon > 0.0)) throw InvalidConfigError("grad_check: epsilon must be positive");
    if (kink_margin < 0.0) kink_margin = epsilon;

    GradCheckResult result;
    {
        ComputeGraph g;
        std::vector<Var> leaves;
        for (const auto& m : inputs) leaves.push_back(g.leaf(m));
        auto root = expr(g, leaves);
        if (g.min_kink_distance() < kink_margin) {
            throw RetryableKinkError("grad_check: pre-activation within " +
                                     std::to_string(kink_margin) + " of a kink");
        }
        g.backward(root);
        for (auto v : leaves) result.analytic.push_back(v.grad());
    }

    std::vector<Matrix> probe = inputs;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Matrix numeric(inputs[k].rows(), inputs[k].cols());
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double x = inputs[k][i];
            probe[k][i] = x + epsilon;
            const double up = evaluate(expr, probe);
            probe[k][i] = x - epsilon;
            const double down = evaluate(expr, probe);
            probe[k][i] = x;
            numeric[i] = (up - down) / (2.0 * epsilon);

            const double a = result.analytic[k][i];
            const double n = numeric[i];
            const double err = std::abs(a - n) / std::max(1e-8, std::abs(a) + std::abs(n));
            result.max_relative_error = std::max(result.max_relative_error, err);
            ++result.coordinates;
        }
        result.numeric.push_back(std::move(numeric));
    }
    return result;
}

}  // namespace gcat::ad
