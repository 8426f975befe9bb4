#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wastenet/layers.hpp"
#include "wastenet/tensor.hpp"

namespace wastenet {

struct LossValue {
    double value;       // mean over the batch, >= 0
    Tensor grad;        // d(value)/d(logits), same shape as the logits
};

// Softmax cross entropy over [b,n] logits against one-hot targets, fused
// log-sum-exp form. grad = (softmax(z) - t) / b.
LossValue cross_entropy(const Tensor& logits, const Tensor& target_onehot);

// Sigmoid cross entropy over [b,1] logits against {0,1} targets, stable
// logit form. grad = (sigmoid(z) - t) / b.
LossValue binary_cross_entropy(const Tensor& logits, const Tensor& targets);

struct OptimizerState {
    double learning_rate;
    double momentum;
    std::map<std::string, Tensor> velocity;  // lazily created, mirrors param shapes

    // lr 0 is allowed as a degenerate no-op step
    OptimizerState(double lr, double mom) : learning_rate(lr), momentum(mom) {
        if (lr < 0.0) throw ValueError("learning rate must be non-negative");
        if (mom < 0.0 || mom >= 1.0) throw ValueError("momentum must be in [0,1)");
    }
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// v <- momentum*v - lr*g; p <- p + v. Throws DivergenceError naming the
// parameter on a non-finite gradient.
void sgd_step(const std::vector<ParamRef>& params, OptimizerState& state);

// Central finite differences against an analytic gradient. Relative error
// denominator is max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::function<double(const Tensor&)>& f, const Tensor& x,
                  const Tensor& analytic_grad, double eps = 1e-5);

}  // namespace wastenet
