#include "wastenet/layers.hpp"

#include <cmath>
#include <sstream>

namespace wastenet {

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i) y[i] = x[i] >= 0.0 ? x[i] : 0.0;
    return y;
}

// Subgradient at 0 is 1 (the x >= 0 branch).
Tensor relu_backward(const Tensor& grad_y, const Tensor& x) {
    if (grad_y.shape() != x.shape()) throw ShapeError("relu_backward: shape mismatch");
    Tensor g(x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i) g[i] = x[i] >= 0.0 ? grad_y[i] : 0.0;
    return g;
}

Tensor sigmoid(const Tensor& x) {
    Tensor y(x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        if (v >= 0.0) {
            y[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            y[i] = e / (1.0 + e);
        }
    }
    return y;
}

Tensor softmax(const Tensor& z) {
    if (z.shape().rank() != 2) throw ShapeError("softmax expects [b,n], got " + z.shape().str());
    const int b = z.shape()[0], n = z.shape()[1];
    Tensor y(z.shape());
    for (int r = 0; r < b; ++r) {
        double m = z.at(r, 0);
        for (int j = 1; j < n; ++j) m = std::max(m, z.at(r, j));
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double e = std::exp(z.at(r, j) - m);
            y.at(r, j) = e;
            sum += e;
        }
        for (int j = 0; j < n; ++j) y.at(r, j) /= sum;
    }
    return y;
}

// --- ReLU ---

Tensor ReluLayer::forward(const Tensor& x, Mode) {
    x_ = x;
    return relu(x);
}

Tensor ReluLayer::backward(const Tensor& grad_y) { return relu_backward(grad_y, x_); }

// --- Sigmoid ---

Tensor SigmoidLayer::forward(const Tensor& x, Mode) {
    y_ = sigmoid(x);
    return y_;
}

Tensor SigmoidLayer::backward(const Tensor& grad_y) {
    Tensor g(y_.shape());
    for (std::int64_t i = 0; i < y_.size(); ++i) g[i] = grad_y[i] * y_[i] * (1.0 - y_[i]);
    return g;
}

// --- Softmax ---

Tensor SoftmaxLayer::forward(const Tensor& x, Mode) {
    y_ = softmax(x);
    return y_;
}

Tensor SoftmaxLayer::backward(const Tensor& grad_y) {
    const int b = y_.shape()[0], n = y_.shape()[1];
    Tensor g(y_.shape());
    for (int r = 0; r < b; ++r) {
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += grad_y.at(r, j) * y_.at(r, j);
        for (int j = 0; j < n; ++j) g.at(r, j) = y_.at(r, j) * (grad_y.at(r, j) - dot);
    }
    return g;
}

// --- Dense ---

DenseLayer::DenseLayer(int in_features, int out_features)
    : weight(Shape{in_features, out_features}),
      bias(Shape{out_features}),
      grad_weight(Shape{in_features, out_features}),
      grad_bias(Shape{out_features}),
      in_(in_features),
      out_(out_features) {
    if (in_features < 1 || out_features < 1) throw ShapeError("Dense: features must be positive");
}

Tensor DenseLayer::forward(const Tensor& x, Mode) {
    if (x.shape().rank() != 2 || x.shape()[1] != in_)
        throw ShapeError("Dense: input " + x.shape().str() + " does not match in_features " +
                         std::to_string(in_));
    x_ = x;
    Tensor y = matmul(x, weight);
    const int b = y.shape()[0];
    for (int r = 0; r < b; ++r)
        for (int j = 0; j < out_; ++j) y.at(r, j) += bias[j];
    return y;
}

Tensor DenseLayer::backward(const Tensor& grad_y) {
    grad_weight = matmul(transpose(x_), grad_y);
    grad_bias = Tensor(Shape{out_});
    const int b = grad_y.shape()[0];
    for (int r = 0; r < b; ++r)
        for (int j = 0; j < out_; ++j) grad_bias[j] += grad_y.at(r, j);
    return matmul(grad_y, transpose(weight));
}

void DenseLayer::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".weight", &weight, &grad_weight});
    out.push_back({prefix + ".bias", &bias, &grad_bias});
}

void DenseLayer::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
    out.push_back({prefix + ".weight", &weight});
    out.push_back({prefix + ".bias", &bias});
}

std::string DenseLayer::describe() const {
    return "Dense(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
}

Shape DenseLayer::output_shape(const Shape& in) const {
    if (in.rank() != 2 || in[1] != in_)
        throw ShapeError("Dense: input " + in.str() + " does not match in_features");
    return Shape{in[0], out_};
}

// --- Conv2D ---

Conv2DLayer::Conv2DLayer(int in_channels, int out_channels, int kernel, int stride, int padding,
                         bool with_bias)
    : weight(Shape{out_channels, in_channels, kernel, kernel}),
      bias(Shape{out_channels}),
      grad_weight(weight.shape()),
      grad_bias(bias.shape()),
      in_c_(in_channels),
      out_c_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding),
      with_bias_(with_bias) {
    if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1 || padding < 0)
        throw ShapeError("Conv2D: invalid hyperparams");
}

Tensor Conv2DLayer::forward(const Tensor& x, Mode) {
    if (x.shape().rank() != 4 || x.shape()[1] != in_c_)
        throw ShapeError("Conv2D: input " + x.shape().str() + " does not match in_channels " +
                         std::to_string(in_c_));
    x_shape_ = x.shape();
    const int b = x.shape()[0];
    const int oh = conv_out_extent(x.shape()[2], k_, stride_, pad_);
    const int ow = conv_out_extent(x.shape()[3], k_, stride_, pad_);

    cols_ = im2col(x, k_, stride_, pad_);
    const Tensor wmat = weight.reshaped(Shape{out_c_, in_c_ * k_ * k_});
    Tensor y2 = matmul(cols_, transpose(wmat));  // [b*oh*ow, oc]

    Tensor y(Shape{b, out_c_, oh, ow});
    for (int bi = 0; bi < b; ++bi)
        for (int oi = 0; oi < oh; ++oi)
            for (int oj = 0; oj < ow; ++oj) {
                const int row = (bi * oh + oi) * ow + oj;
                for (int oci = 0; oci < out_c_; ++oci)
                    y.at(bi, oci, oi, oj) = y2.at(row, oci) + bias[oci];
            }
    return y;
}

Tensor Conv2DLayer::backward(const Tensor& grad_y) {
    const int b = grad_y.shape()[0], oh = grad_y.shape()[2], ow = grad_y.shape()[3];
    Tensor g2(Shape{b * oh * ow, out_c_});
    grad_bias = Tensor(Shape{out_c_});
    for (int bi = 0; bi < b; ++bi)
        for (int oi = 0; oi < oh; ++oi)
            for (int oj = 0; oj < ow; ++oj) {
                const int row = (bi * oh + oi) * ow + oj;
                for (int oci = 0; oci < out_c_; ++oci) {
                    const double g = grad_y.at(bi, oci, oi, oj);
                    g2.at(row, oci) = g;
                    grad_bias[oci] += g;
                }
            }

    grad_weight = matmul(transpose(g2), cols_).reshaped(weight.shape());
    const Tensor wmat = weight.reshaped(Shape{out_c_, in_c_ * k_ * k_});
    const Tensor grad_cols = matmul(g2, wmat);
    return col2im(grad_cols, x_shape_, k_, stride_, pad_);
}

void Conv2DLayer::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".weight", &weight, &grad_weight});
    if (with_bias_) out.push_back({prefix + ".bias", &bias, &grad_bias});
}

void Conv2DLayer::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
    out.push_back({prefix + ".weight", &weight});
    if (with_bias_) out.push_back({prefix + ".bias", &bias});
}

std::string Conv2DLayer::describe() const {
    std::ostringstream os;
    os << "Conv2D(" << in_c_ << "->" << out_c_ << ", k=" << k_ << ", s=" << stride_
       << ", p=" << pad_ << (with_bias_ ? "" : ", no bias") << ")";
    return os.str();
}

Shape Conv2DLayer::output_shape(const Shape& in) const {
    return Shape{in[0], out_c_, conv_out_extent(in[2], k_, stride_, pad_),
                 conv_out_extent(in[3], k_, stride_, pad_)};
}

// --- MaxPool2D ---

MaxPool2DLayer::MaxPool2DLayer(int kernel, int stride, int padding)
    : k_(kernel), stride_(stride), pad_(padding) {
    if (kernel < 1 || stride < 1 || padding < 0) throw ShapeError("MaxPool2D: invalid hyperparams");
}

Tensor MaxPool2DLayer::forward(const Tensor& x, Mode) {
    if (x.shape().rank() != 4) throw ShapeError("MaxPool2D expects [b,c,h,w]");
    x_shape_ = x.shape();
    const int b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    const int oh = conv_out_extent(h, k_, stride_, pad_);
    const int ow = conv_out_extent(w, k_, stride_, pad_);
    Tensor y(Shape{b, c, oh, ow});
    argmax_.assign(static_cast<size_t>(y.size()), 0);
#pragma omp parallel for collapse(2)
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
            const std::int64_t plane = (static_cast<std::int64_t>(bi) * c + ci) * h;
            std::int64_t out_idx = (static_cast<std::int64_t>(bi) * c + ci) * oh * ow;
            for (int oi = 0; oi < oh; ++oi)
                for (int oj = 0; oj < ow; ++oj) {
                    bool found = false;
                    double best = 0.0;
                    std::int64_t best_idx = 0;
                    for (int ki = 0; ki < k_; ++ki) {
                        const int ii = oi * stride_ - pad_ + ki;
                        if (ii < 0 || ii >= h) continue;
                        const std::int64_t row = (plane + ii) * w;
                        for (int kj = 0; kj < k_; ++kj) {
                            const int jj = oj * stride_ - pad_ + kj;
                            if (jj < 0 || jj >= w) continue;
                            const double v = x[row + jj];
                            // strict >: ties go to the first row-major index
                            if (!found || v > best) {
                                found = true;
                                best = v;
                                best_idx = row + jj;
                            }
                        }
                    }
                    y[out_idx] = best;
                    argmax_[static_cast<size_t>(out_idx)] = best_idx;
                    ++out_idx;
                }
        }
    return y;
}

Tensor MaxPool2DLayer::backward(const Tensor& grad_y) {
    Tensor g(x_shape_);
    for (std::int64_t i = 0; i < grad_y.size(); ++i)
        g[argmax_[static_cast<size_t>(i)]] += grad_y[i];
    return g;
}

std::string MaxPool2DLayer::describe() const {
    std::string s = "MaxPool2D(k=" + std::to_string(k_) + ", s=" + std::to_string(stride_);
    if (pad_) s += ", p=" + std::to_string(pad_);
    return s + ")";
}

Shape MaxPool2DLayer::output_shape(const Shape& in) const {
    return Shape{in[0], in[1], conv_out_extent(in[2], k_, stride_, pad_),
                 conv_out_extent(in[3], k_, stride_, pad_)};
}

// --- Flatten ---

Tensor FlattenLayer::forward(const Tensor& x, Mode) {
    if (x.shape().rank() != 4) throw ShapeError("Flatten expects [b,c,h,w]");
    x_shape_ = x.shape();
    return x.reshaped(Shape{x.shape()[0], x.shape()[1] * x.shape()[2] * x.shape()[3]});
}

Tensor FlattenLayer::backward(const Tensor& grad_y) { return grad_y.reshaped(x_shape_); }

Shape FlattenLayer::output_shape(const Shape& in) const {
    return Shape{in[0], in[1] * in[2] * in[3]};
}

// --- GlobalAvgPool ---

Tensor GlobalAvgPoolLayer::forward(const Tensor& x, Mode) {
    if (x.shape().rank() != 4) throw ShapeError("GlobalAvgPool expects [b,c,h,w]");
    x_shape_ = x.shape();
    const int b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    Tensor y(Shape{b, c});
    const double inv = 1.0 / (static_cast<double>(h) * w);
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
            double sum = 0.0;
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) sum += x.at(bi, ci, i, j);
            y.at(bi, ci) = sum * inv;
        }
    return y;
}

Tensor GlobalAvgPoolLayer::backward(const Tensor& grad_y) {
    const int b = x_shape_[0], c = x_shape_[1], h = x_shape_[2], w = x_shape_[3];
    Tensor g(x_shape_);
    const double inv = 1.0 / (static_cast<double>(h) * w);
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci) {
            const double v = grad_y.at(bi, ci) * inv;
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) g.at(bi, ci, i, j) = v;
        }
    return g;
}

Shape GlobalAvgPoolLayer::output_shape(const Shape& in) const { return Shape{in[0], in[1]}; }

// --- BatchNorm2D ---

BatchNorm2DLayer::BatchNorm2DLayer(int channels, double epsilon, double momentum)
    : gamma(Shape{channels}, 1.0),
      beta(Shape{channels}),
      running_mean(Shape{channels}),
      running_var(Shape{channels}, 1.0),
      grad_gamma(Shape{channels}),
      grad_beta(Shape{channels}),
      c_(channels),
      eps_(epsilon),
      momentum_(momentum) {}

Tensor BatchNorm2DLayer::forward(const Tensor& x, Mode mode) {
    if (x.shape().rank() != 4 || x.shape()[1] != c_)
        throw ShapeError("BatchNorm2D: input " + x.shape().str() + " does not match channels " +
                         std::to_string(c_));
    mode_ = mode;
    const int b = x.shape()[0], h = x.shape()[2], w = x.shape()[3];
    const std::int64_t m = static_cast<std::int64_t>(b) * h * w;
    Tensor y(x.shape());

    if (mode == Mode::Train) {
        if (m <= 1)
            throw ValueError("BatchNorm2D: degenerate variance, one value per channel in train mode");
        xhat_ = Tensor(x.shape());
        inv_std_.assign(static_cast<size_t>(c_), 0.0);
        for (int ci = 0; ci < c_; ++ci) {
            double mean = 0.0;
            for (int bi = 0; bi < b; ++bi)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < w; ++j) mean += x.at(bi, ci, i, j);
            mean /= static_cast<double>(m);
            double var = 0.0;
            for (int bi = 0; bi < b; ++bi)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < w; ++j) {
                        const double d = x.at(bi, ci, i, j) - mean;
                        var += d * d;
                    }
            var /= static_cast<double>(m);
            const double inv_std = 1.0 / std::sqrt(var + eps_);
            inv_std_[static_cast<size_t>(ci)] = inv_std;
            for (int bi = 0; bi < b; ++bi)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < w; ++j) {
                        const double xh = (x.at(bi, ci, i, j) - mean) * inv_std;
                        xhat_.at(bi, ci, i, j) = xh;
                        y.at(bi, ci, i, j) = gamma[ci] * xh + beta[ci];
                    }
            running_mean[ci] = (1.0 - momentum_) * running_mean[ci] + momentum_ * mean;
            running_var[ci] = (1.0 - momentum_) * running_var[ci] + momentum_ * var;
        }
    } else {
        for (int ci = 0; ci < c_; ++ci) {
            const double inv_std = 1.0 / std::sqrt(running_var[ci] + eps_);
            for (int bi = 0; bi < b; ++bi)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < w; ++j)
                        y.at(bi, ci, i, j) =
                            gamma[ci] * (x.at(bi, ci, i, j) - running_mean[ci]) * inv_std +
                            beta[ci];
        }
        // eval backward only needs inv_std
        inv_std_.assign(static_cast<size_t>(c_), 0.0);
        for (int ci = 0; ci < c_; ++ci) inv_std_[static_cast<size_t>(ci)] =
            1.0 / std::sqrt(running_var[ci] + eps_);
    }
    return y;
}

Tensor BatchNorm2DLayer::backward(const Tensor& grad_y) {
    const int b = grad_y.shape()[0], h = grad_y.shape()[2], w = grad_y.shape()[3];
    const double m = static_cast<double>(static_cast<std::int64_t>(b) * h * w);
    Tensor g(grad_y.shape());
    grad_gamma = Tensor(Shape{c_});
    grad_beta = Tensor(Shape{c_});

    if (mode_ == Mode::Eval) {
        for (int ci = 0; ci < c_; ++ci) {
            const double scale = gamma[ci] * inv_std_[static_cast<size_t>(ci)];
            for (int bi = 0; bi < b; ++bi)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < w; ++j) g.at(bi, ci, i, j) = grad_y.at(bi, ci, i, j) * scale;
        }
        return g;
    }

    for (int ci = 0; ci < c_; ++ci) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int bi = 0; bi < b; ++bi)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    const double dy = grad_y.at(bi, ci, i, j);
                    sum_dy += dy;
                    sum_dy_xhat += dy * xhat_.at(bi, ci, i, j);
                }
        grad_beta[ci] = sum_dy;
        grad_gamma[ci] = sum_dy_xhat;
        const double scale = gamma[ci] * inv_std_[static_cast<size_t>(ci)];
        const double mean_dy = sum_dy / m;
        const double mean_dy_xhat = sum_dy_xhat / m;
        for (int bi = 0; bi < b; ++bi)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j)
                    g.at(bi, ci, i, j) =
                        scale * (grad_y.at(bi, ci, i, j) - mean_dy -
                                 xhat_.at(bi, ci, i, j) * mean_dy_xhat);
    }
    return g;
}

void BatchNorm2DLayer::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", &gamma, &grad_gamma});
    out.push_back({prefix + ".beta", &beta, &grad_beta});
}

void BatchNorm2DLayer::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
    out.push_back({prefix + ".gamma", &gamma});
    out.push_back({prefix + ".beta", &beta});
    out.push_back({prefix + ".running_mean", &running_mean});
    out.push_back({prefix + ".running_var", &running_var});
}

std::string BatchNorm2DLayer::describe() const {
    return "BatchNorm2D(c=" + std::to_string(c_) + ")";
}

// --- ResidualBlock ---

ResidualBlockLayer::ResidualBlockLayer(int in_channels, int out_channels, int stride)
    : in_c_(in_channels), out_c_(out_channels), stride_(stride) {
    conv1_ = std::make_unique<Conv2DLayer>(in_channels, out_channels, 3, stride, 1, false);
    bn1_ = std::make_unique<BatchNorm2DLayer>(out_channels);
    relu1_ = std::make_unique<ReluLayer>();
    conv2_ = std::make_unique<Conv2DLayer>(out_channels, out_channels, 3, 1, 1, false);
    bn2_ = std::make_unique<BatchNorm2DLayer>(out_channels);
    if (stride != 1 || in_channels != out_channels) {
        proj_conv_ = std::make_unique<Conv2DLayer>(in_channels, out_channels, 1, stride, 0, false);
        proj_bn_ = std::make_unique<BatchNorm2DLayer>(out_channels);
    }
}

Tensor ResidualBlockLayer::forward(const Tensor& x, Mode mode) {
    if (x.shape()[1] != in_c_)
        throw ShapeError("ResidualBlock: input channels " + std::to_string(x.shape()[1]) +
                         " do not match block channels " + std::to_string(in_c_));
    Tensor f = conv1_->forward(x, mode);
    f = bn1_->forward(f, mode);
    f = relu1_->forward(f, mode);
    f = conv2_->forward(f, mode);
    f = bn2_->forward(f, mode);

    Tensor shortcut = x;
    if (proj_conv_) {
        shortcut = proj_conv_->forward(x, mode);
        shortcut = proj_bn_->forward(shortcut, mode);
    }
    sum_ = add(f, shortcut);
    return relu(sum_);
}

Tensor ResidualBlockLayer::backward(const Tensor& grad_y) {
    const Tensor d_sum = relu_backward(grad_y, sum_);

    Tensor d_f = bn2_->backward(d_sum);
    d_f = conv2_->backward(d_f);
    d_f = relu1_->backward(d_f);
    d_f = bn1_->backward(d_f);
    Tensor d_x = conv1_->backward(d_f);

    if (proj_conv_) {
        Tensor d_s = proj_bn_->backward(d_sum);
        d_s = proj_conv_->backward(d_s);
        d_x = add(d_x, d_s);
    } else {
        d_x = add(d_x, d_sum);
    }
    return d_x;
}

void ResidualBlockLayer::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    conv1_->collect_params(prefix + ".conv1", out);
    bn1_->collect_params(prefix + ".bn1", out);
    conv2_->collect_params(prefix + ".conv2", out);
    bn2_->collect_params(prefix + ".bn2", out);
    if (proj_conv_) {
        proj_conv_->collect_params(prefix + ".proj", out);
        proj_bn_->collect_params(prefix + ".proj_bn", out);
    }
}

void ResidualBlockLayer::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
    conv1_->collect_state(prefix + ".conv1", out);
    bn1_->collect_state(prefix + ".bn1", out);
    conv2_->collect_state(prefix + ".conv2", out);
    bn2_->collect_state(prefix + ".bn2", out);
    if (proj_conv_) {
        proj_conv_->collect_state(prefix + ".proj", out);
        proj_bn_->collect_state(prefix + ".proj_bn", out);
    }
}

std::string ResidualBlockLayer::describe() const {
    std::ostringstream os;
    os << "ResidualBlock(" << in_c_ << "->" << out_c_ << ", s=" << stride_
       << (proj_conv_ ? ", proj" : "") << ")";
    return os.str();
}

Shape ResidualBlockLayer::output_shape(const Shape& in) const {
    return conv1_->output_shape(in);
}

}  // namespace wastenet
