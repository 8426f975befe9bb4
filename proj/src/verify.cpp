#include "wastenet/verify.hpp"

#include <cmath>
#include <sstream>

#include "wastenet/layers.hpp"
#include "wastenet/loss.hpp"
#include "wastenet/reference.hpp"
#include "wastenet/rng.hpp"

namespace wastenet {

namespace {

Tensor random_tensor(Rng& rng, const Shape& shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = lo + (hi - lo) * rng.next_double();
    return t;
}

// Values on a shuffled grid with spacing 'step': no ties, and every value at
// least step/2 away from zero, so eps-perturbations never cross a kink.
Tensor spaced_tensor(Rng& rng, const Shape& shape, double step = 0.01) {
    Tensor t(shape);
    const std::int64_t n = t.size();
    std::vector<std::int64_t> grid(static_cast<size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) grid[static_cast<size_t>(i)] = i;
    rng.shuffle(grid);
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t g = grid[static_cast<size_t>(i)] - n / 2;
        t[i] = step * static_cast<double>(g >= 0 ? g + 1 : g);  // skip zero
    }
    return t;
}

double weighted_sum(const Tensor& y, const Tensor& w) {
    double s = 0.0;
    for (std::int64_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
    return s;
}

// Checks one tensor (input or parameter) of a layer pipeline: the closure
// must write the candidate values into place and return the scalar loss.
double check_tensor(const std::function<double(const Tensor&)>& f, const Tensor& at,
                    const Tensor& analytic, double eps) {
    return grad_check(f, at, analytic, eps);
}

struct LayerProbe {
    // Forward through the layer, weighted-sum loss, backward, then FD-check
    // the input and every parameter.
    static double run(Layer& layer, const Tensor& x, Mode mode, Rng& rng, double eps,
                      double dense_weight_fault = 0.0) {
        const Tensor y0 = layer.forward(x, mode);
        const Tensor w = random_tensor(rng, y0.shape());
        const Tensor grad_x = layer.backward(w);

        std::vector<ParamRef> params;
        layer.collect_params("p", params);
        // analytic copies before any re-forward overwrites grads
        std::vector<Tensor> analytic;
        analytic.reserve(params.size());
        for (const auto& p : params) analytic.push_back(*p.grad);
        if (dense_weight_fault != 0.0 && !analytic.empty())
            analytic[0][0] += dense_weight_fault;

        double worst = check_tensor(
            [&](const Tensor& xt) { return weighted_sum(layer.forward(xt, mode), w); }, x, grad_x,
            eps);

        for (size_t pi = 0; pi < params.size(); ++pi) {
            Tensor* slot = params[pi].value;
            const Tensor saved = *slot;
            const double err = check_tensor(
                [&](const Tensor& pt) {
                    *slot = pt;
                    return weighted_sum(layer.forward(x, mode), w);
                },
                saved, analytic[pi], eps);
            *slot = saved;
            worst = std::max(worst, err);
        }
        return worst;
    }
};

}  // namespace

std::vector<GradCheckResult> run_gradient_suite(const GradSuiteOptions& opts) {
    Rng rng(opts.seed);
    const double eps = opts.eps;
    std::vector<GradCheckResult> results;

    {
        ReluLayer layer;
        const Tensor x = spaced_tensor(rng, Shape{4, 4});
        results.push_back({"ReLU", LayerProbe::run(layer, x, Mode::Eval, rng, eps)});
    }
    {
        SigmoidLayer layer;
        const Tensor x = random_tensor(rng, Shape{3, 5}, -3.0, 3.0);
        results.push_back({"Sigmoid", LayerProbe::run(layer, x, Mode::Eval, rng, eps)});
    }
    {
        SoftmaxLayer layer;
        const Tensor x = random_tensor(rng, Shape{3, 4}, -2.0, 2.0);
        results.push_back({"Softmax", LayerProbe::run(layer, x, Mode::Eval, rng, eps)});
    }
    {
        DenseLayer layer(10, 3);
        for (std::int64_t i = 0; i < layer.weight.size(); ++i)
            layer.weight[i] = 2.0 * rng.next_double() - 1.0;
        for (std::int64_t i = 0; i < layer.bias.size(); ++i)
            layer.bias[i] = 2.0 * rng.next_double() - 1.0;
        const Tensor x = random_tensor(rng, Shape{4, 10});
        results.push_back({"Dense", LayerProbe::run(layer, x, Mode::Eval, rng, eps,
                                                    opts.dense_backward_fault)});
    }
    {
        Conv2DLayer layer(3, 4, 3, 1, 1);
        for (std::int64_t i = 0; i < layer.weight.size(); ++i)
            layer.weight[i] = rng.next_double() - 0.5;
        for (std::int64_t i = 0; i < layer.bias.size(); ++i)
            layer.bias[i] = rng.next_double() - 0.5;
        const Tensor x = random_tensor(rng, Shape{2, 3, 8, 8});
        results.push_back({"Conv2D", LayerProbe::run(layer, x, Mode::Eval, rng, eps)});
    }
    {
        MaxPool2DLayer layer(2, 2);
        const Tensor x = spaced_tensor(rng, Shape{1, 2, 6, 6});
        results.push_back({"MaxPool2D", LayerProbe::run(layer, x, Mode::Eval, rng, eps)});
    }
    {
        GlobalAvgPoolLayer layer;
        const Tensor x = random_tensor(rng, Shape{2, 3, 4, 4});
        results.push_back({"GlobalAvgPool", LayerProbe::run(layer, x, Mode::Eval, rng, eps)});
    }
    {
        BatchNorm2DLayer layer(3);
        for (std::int64_t i = 0; i < 3; ++i) {
            layer.gamma[i] = 0.5 + rng.next_double();
            layer.beta[i] = rng.next_double() - 0.5;
        }
        const Tensor x = random_tensor(rng, Shape{4, 3, 5, 5});
        results.push_back({"BatchNorm2D", LayerProbe::run(layer, x, Mode::Train, rng, eps)});
    }
    {
        ResidualBlockLayer layer(4, 4, 1);
        std::vector<ParamRef> params;
        layer.collect_params("p", params);
        for (const auto& p : params)
            if (p.name.find("gamma") == std::string::npos)
                for (std::int64_t i = 0; i < p.value->size(); ++i)
                    (*p.value)[i] = 0.4 * (rng.next_double() - 0.5);
        const Tensor x = random_tensor(rng, Shape{2, 4, 8, 8});
        results.push_back({"ResidualBlock", LayerProbe::run(layer, x, Mode::Train, rng, eps)});
    }
    {
        // softmax + cross entropy, fused gradient (y - t)/b
        const Tensor logits = random_tensor(rng, Shape{5, 3}, -2.0, 2.0);
        Tensor target(Shape{5, 3});
        for (int r = 0; r < 5; ++r)
            target.at(r, static_cast<int>(rng.next_below(3))) = 1.0;
        const LossValue loss = cross_entropy(logits, target);
        const double err = grad_check(
            [&](const Tensor& z) { return cross_entropy(z, target).value; }, logits, loss.grad,
            eps);
        results.push_back({"Softmax+CE", err});
    }
    {
        const Tensor logits = random_tensor(rng, Shape{6, 1}, -2.0, 2.0);
        Tensor target(Shape{6, 1});
        for (int r = 0; r < 6; ++r) target[r] = static_cast<double>(rng.next_below(2));
        const LossValue loss = binary_cross_entropy(logits, target);
        const double err = grad_check(
            [&](const Tensor& z) { return binary_cross_entropy(z, target).value; }, logits,
            loss.grad, eps);
        results.push_back({"BCE", err});
    }
    return results;
}

std::vector<ConvEquivalenceResult> run_conv_equivalence_suite(std::uint64_t seed,
                                                              int n_geometries) {
    Rng rng(seed);
    std::vector<ConvEquivalenceResult> results;
    for (int g = 0; g < n_geometries; ++g) {
        const int b = 1 + static_cast<int>(rng.next_below(3));
        const int c = 1 + static_cast<int>(rng.next_below(4));
        const int oc = 1 + static_cast<int>(rng.next_below(5));
        const int k = 1 + static_cast<int>(rng.next_below(4));
        const int s = 1 + static_cast<int>(rng.next_below(3));
        const int p = static_cast<int>(rng.next_below(3));
        int n = k + static_cast<int>(rng.next_below(10));
        if (n + 2 * p < k) n = k;

        const Tensor x = random_tensor(rng, Shape{b, c, n, n});
        const Tensor w = random_tensor(rng, Shape{oc, c, k, k});
        const Tensor bias = random_tensor(rng, Shape{oc});

        Conv2DLayer layer(c, oc, k, s, p);
        layer.weight = w;
        layer.bias = bias;
        const Tensor fast = layer.forward(x, Mode::Eval);
        const Tensor naive = ref::conv2d(x, w, bias, s, p);

        double max_diff = 0.0;
        for (std::int64_t i = 0; i < fast.size(); ++i)
            max_diff = std::max(max_diff, std::abs(fast[i] - naive[i]));

        std::ostringstream os;
        os << "b=" << b << " c=" << c << " oc=" << oc << " n=" << n << " k=" << k << " s=" << s
           << " p=" << p;
        results.push_back({os.str(), max_diff});
    }
    return results;
}

}  // namespace wastenet
