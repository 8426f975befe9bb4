#include "wastenet/loss.hpp"

#include <algorithm>
#include <cmath>

namespace wastenet {

LossValue cross_entropy(const Tensor& logits, const Tensor& target_onehot) {
    if (logits.shape().rank() != 2 || logits.shape() != target_onehot.shape())
        throw ShapeError("cross_entropy: logits " + logits.shape().str() +
                         " vs target " + target_onehot.shape().str());
    const int b = logits.shape()[0], n = logits.shape()[1];

    for (int r = 0; r < b; ++r) {
        int ones = 0;
        for (int j = 0; j < n; ++j) {
            const double t = target_onehot.at(r, j);
            if (t == 1.0)
                ++ones;
            else if (t != 0.0)
                throw ValueError("cross_entropy: target row " + std::to_string(r) +
                                 " is not one-hot");
        }
        if (ones != 1)
            throw ValueError("cross_entropy: target row " + std::to_string(r) + " is not one-hot");
    }

    const Tensor probs = softmax(logits);
    double loss = 0.0;
    for (int r = 0; r < b; ++r) {
        // fused log-sum-exp: loss_row = lse(z) - z_target
        double m = logits.at(r, 0);
        for (int j = 1; j < n; ++j) m = std::max(m, logits.at(r, j));
        double sum = 0.0;
        double z_t = 0.0;
        for (int j = 0; j < n; ++j) {
            sum += std::exp(logits.at(r, j) - m);
            if (target_onehot.at(r, j) == 1.0) z_t = logits.at(r, j);
        }
        loss += m + std::log(sum) - z_t;
    }
    loss /= static_cast<double>(b);

    Tensor grad(logits.shape());
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::int64_t i = 0; i < grad.size(); ++i)
        grad[i] = (probs[i] - target_onehot[i]) * inv_b;
    return {std::max(loss, 0.0), std::move(grad)};
}

LossValue binary_cross_entropy(const Tensor& logits, const Tensor& targets) {
    if (logits.shape() != targets.shape())
        throw ShapeError("binary_cross_entropy: logits " + logits.shape().str() +
                         " vs target " + targets.shape().str());
    const std::int64_t n = logits.size();
    const int b = logits.shape()[0];

    double loss = 0.0;
    Tensor grad(logits.shape());
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::int64_t i = 0; i < n; ++i) {
        const double t = targets[i];
        if (t != 0.0 && t != 1.0)
            throw ValueError("binary_cross_entropy: target must be 0 or 1, got " +
                             std::to_string(t));
        const double z = logits[i];
        // max(z,0) - z*t + log(1 + exp(-|z|)), never exp of a large positive
        loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
        const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                  : std::exp(z) / (1.0 + std::exp(z));
        grad[i] = (s - t) * inv_b;
    }
    loss *= inv_b;
    return {std::max(loss, 0.0), std::move(grad)};
}

void sgd_step(const std::vector<ParamRef>& params, OptimizerState& state) {
    for (const ParamRef& p : params) {
        if (!p.grad->all_finite())
            throw DivergenceError("divergence: non-finite gradient for parameter " + p.name);
        Tensor& v = state.velocity.try_emplace(p.name, p.value->shape()).first->second;
        if (v.shape() != p.value->shape())
            throw ShapeError("sgd_step: velocity shape drift for " + p.name);
        for (std::int64_t i = 0; i < v.size(); ++i) {
            v[i] = state.momentum * v[i] - state.learning_rate * (*p.grad)[i];
            (*p.value)[i] += v[i];
        }
    }
}

double grad_check(const std::function<double(const Tensor&)>& f, const Tensor& x,
                  const Tensor& analytic_grad, double eps) {
    if (x.shape() != analytic_grad.shape())
        throw ShapeError("grad_check: gradient shape does not match input");
    double max_rel = 0.0;
    Tensor xp = x;
    for (std::int64_t i = 0; i < x.size(); ++i) {
        const double orig = xp[i];
        xp[i] = orig + eps;
        const double fp = f(xp);
        xp[i] = orig - eps;
        const double fm = f(xp);
        xp[i] = orig;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double analytic = analytic_grad[i];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    }
    return max_rel;
}

}  // namespace wastenet
