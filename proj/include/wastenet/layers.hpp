#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wastenet/tensor.hpp"

namespace wastenet {

enum class Mode { Train, Eval };

// Trainable parameter plus its gradient slot. Gradient shape always mirrors
// the value shape after a backward pass.
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

// Persisted state: trainable params plus batch-norm running stats.
struct StateRef {
    std::string name;
    Tensor* value;
};

// Stateless activation math, shared by the layer classes and the losses.
Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& grad_y, const Tensor& x);
Tensor sigmoid(const Tensor& x);  // stable branch form, never exp of a large positive
Tensor softmax(const Tensor& z);  // per row, max-subtracted

class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor forward(const Tensor& x, Mode mode) = 0;
    // Consumes the cache written by the latest forward; returns grad wrt input.
    virtual Tensor backward(const Tensor& grad_y) = 0;

    virtual void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
        (void)prefix;
        (void)out;
    }
    virtual void collect_state(const std::string& prefix, std::vector<StateRef>& out) {
        (void)prefix;
        (void)out;
    }

    virtual std::string kind() const = 0;
    virtual std::string describe() const { return kind(); }
    virtual Shape output_shape(const Shape& in) const = 0;
};

class ReluLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_y) override;
    std::string kind() const override { return "ReLU"; }
    Shape output_shape(const Shape& in) const override { return in; }

private:
    Tensor x_;
};

class SigmoidLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_y) override;
    std::string kind() const override { return "Sigmoid"; }
    Shape output_shape(const Shape& in) const override { return in; }

private:
    Tensor y_;
};

class SoftmaxLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_y) override;
    std::string kind() const override { return "Softmax"; }
    Shape output_shape(const Shape& in) const override { return in; }

private:
    Tensor y_;
};

class DenseLayer final : public Layer {
public:
    DenseLayer(int in_features, int out_features);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_y) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;
    std::string kind() const override { return "Dense"; }
    std::string describe() const override;
    Shape output_shape(const Shape& in) const override;

    int in_features() const { return in_; }
    int out_features() const { return out_; }

    Tensor weight;  // [in, out]
    Tensor bias;    // [out]
    Tensor grad_weight, grad_bias;

private:
    int in_, out_;
    Tensor x_;
};

class Conv2DLayer final : public Layer {
public:
    // with_bias false drops the bias term entirely: used for convolutions
    // that feed straight into batch norm, where a bias is redundant (its
    // gradient is identically zero once the batch mean is subtracted).
    Conv2DLayer(int in_channels, int out_channels, int kernel, int stride, int padding,
                bool with_bias = true);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_y) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;
    std::string kind() const override { return "Conv2D"; }
    std::string describe() const override;
    Shape output_shape(const Shape& in) const override;

    int in_channels() const { return in_c_; }
    int out_channels() const { return out_c_; }
    int kernel() const { return k_; }
    bool has_bias() const { return with_bias_; }

    Tensor weight;  // [oc, c, k, k]
    Tensor bias;    // [oc]
    Tensor grad_weight, grad_bias;

private:
    int in_c_, out_c_, k_, stride_, pad_;
    bool with_bias_;
    Tensor cols_;   // im2col of the last input
    Shape x_shape_;
};

class MaxPool2DLayer final : public Layer {
public:
    // Padded positions never win the max (no zero value is injected).
    MaxPool2DLayer(int kernel, int stride, int padding = 0);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_y) override;
    std::string kind() const override { return "MaxPool2D"; }
    std::string describe() const override;
    Shape output_shape(const Shape& in) const override;

private:
    int k_, stride_, pad_;
    Shape x_shape_;
    std::vector<std::int64_t> argmax_;  // flat input index per output element
};

class FlattenLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_y) override;
    std::string kind() const override { return "Flatten"; }
    Shape output_shape(const Shape& in) const override;

private:
    Shape x_shape_;
};

class GlobalAvgPoolLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_y) override;
    std::string kind() const override { return "GlobalAvgPool"; }
    Shape output_shape(const Shape& in) const override;

private:
    Shape x_shape_;
};

class BatchNorm2DLayer final : public Layer {
public:
    explicit BatchNorm2DLayer(int channels, double epsilon = 1e-5, double momentum = 0.1);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_y) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;
    std::string kind() const override { return "BatchNorm2D"; }
    std::string describe() const override;
    Shape output_shape(const Shape& in) const override { return in; }

    Tensor gamma, beta;                     // [c]
    Tensor running_mean, running_var;       // [c]
    Tensor grad_gamma, grad_beta;

private:
    int c_;
    double eps_, momentum_;
    Mode mode_ = Mode::Eval;
    Tensor xhat_;
    std::vector<double> inv_std_;  // per channel, train mode
};

// Two 3x3 convs with batch norm on the main path, identity or 1x1
// projection shortcut, ReLU after the sum.
class ResidualBlockLayer final : public Layer {
public:
    ResidualBlockLayer(int in_channels, int out_channels, int stride);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_y) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;
    std::string kind() const override { return "ResidualBlock"; }
    std::string describe() const override;
    Shape output_shape(const Shape& in) const override;

    bool has_projection() const { return proj_conv_ != nullptr; }
    Conv2DLayer& conv1() { return *conv1_; }
    Conv2DLayer& conv2() { return *conv2_; }

private:
    int in_c_, out_c_, stride_;
    std::unique_ptr<Conv2DLayer> conv1_, conv2_;
    std::unique_ptr<BatchNorm2DLayer> bn1_, bn2_;
    std::unique_ptr<ReluLayer> relu1_;
    std::unique_ptr<Conv2DLayer> proj_conv_;
    std::unique_ptr<BatchNorm2DLayer> proj_bn_;
    Tensor sum_;  // pre-activation of the output ReLU
};

}  // namespace wastenet
