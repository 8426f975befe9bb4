#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wastenet {

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValueError : std::runtime_error {
    explicit ValueError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense tensor shape, 1 to 4 dims. Activations are [batch, channels, height,
// width], matrices are [rows, cols].
struct Shape {
    std::vector<int> dims;

    Shape() = default;
    Shape(std::initializer_list<int> d);
    explicit Shape(std::vector<int> d);

    int rank() const { return static_cast<int>(dims.size()); }
    int operator[](int i) const { return dims[static_cast<size_t>(i)]; }
    std::int64_t count() const;
    bool operator==(const Shape& other) const { return dims == other.dims; }
    bool operator!=(const Shape& other) const { return dims != other.dims; }
    std::string str() const;
};

// Row-major f64 tensor, last dim fastest. Values are plain data; all kernels
// producing tensors are pure functions of their inputs.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // 2D access, [rows, cols]
    double& at(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
    double at(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }

    // 4D access, [b, c, h, w]
    double& at(int b, int c, int i, int j) {
        return data_[((static_cast<size_t>(b) * shape_[1] + c) * shape_[2] + i) * shape_[3] + j];
    }
    double at(int b, int c, int i, int j) const {
        return data_[((static_cast<size_t>(b) * shape_[1] + c) * shape_[2] + i) * shape_[3] + j];
    }

    // Same element count, new dims; data untouched.
    Tensor reshaped(Shape new_shape) const;

    bool all_finite() const;

private:
    Shape shape_;
    std::vector<double> data_;
};

// --- kernels (OpenMP-parallel over independent output elements; the per-
// --- element summation order is fixed, so results are bit-reproducible) ---

// [m,k] x [k,n] -> [m,n], left-to-right accumulation over k.
Tensor matmul(const Tensor& a, const Tensor& b);

// [rows, cols] -> [cols, rows]
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

// floor((n + 2p - k) / s) + 1
int conv_out_extent(int n, int k, int s, int p);

// [b,c,h,w] -> [b*oh*ow, c*k*k]; each row one receptive-field patch,
// channel-major, zero padding.
Tensor im2col(const Tensor& x, int k, int s, int p);

// Adjoint of im2col: scatter-add the patch rows back into [b,c,h,w].
Tensor col2im(const Tensor& cols, const Shape& x_shape, int k, int s, int p);

}  // namespace wastenet
