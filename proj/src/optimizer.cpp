#include "gcat/optimizer.hpp"

#include <cmath>

#include "gcat/errors.hpp"

namespace gcat {

Optimizer::Optimizer(AdamConfig cfg, std::span<Matrix* const> params, bool plain_sgd)
    : cfg_(cfg), params_(params.begin(), params.end()), plain_sgd_(plain_sgd) {
    if (!(cfg_.lr >= 0.0)) throw InvalidConfigError("optimizer: lr must be >= 0");
    for (auto* p : params_) {
        m_.emplace_back(p->rows(), p->cols());
        v_.emplace_back(p->rows(), p->cols());
    }
}

void Optimizer::step(std::span<const Matrix* const> grads) {
    if (grads.size() != params_.size()) throw ShapeError("optimizer: gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Matrix& p = *params_[k];
        const Matrix& g = *grads[k];
        if (!p.same_shape(g)) throw ShapeError("optimizer: gradient shape mismatch");
        if (plain_sgd_) {
            for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg_.lr * g[i];
            continue;
        }
        Matrix& m = m_[k];
        Matrix& v = v_[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

}  // namespace gcat
