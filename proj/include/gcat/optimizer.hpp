#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gcat/matrix.hpp"

namespace gcat {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam over a fixed list of parameter matrices. With plain_sgd set the
/// update is x -= lr * g instead (the literal TransE update rule).
class Optimizer {
public:
    Optimizer(AdamConfig cfg, std::span<Matrix* const> params, bool plain_sgd = false);

    /// grads[i] must have the shape of params[i].
    void step(std::span<const Matrix* const> grads);

    std::size_t steps() const noexcept { return t_; }

private:
    AdamConfig cfg_;
    std::vector<Matrix*> params_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    bool plain_sgd_;
    std::size_t t_ = 0;
};

}  // namespace gcat
