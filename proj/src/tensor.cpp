#include "wastenet/tensor.hpp"

#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wastenet {

Shape::Shape(std::initializer_list<int> d) : dims(d) {
    if (dims.empty() || dims.size() > 4) throw ShapeError("shape rank must be 1..4");
    for (int e : dims)
        if (e < 1) throw ShapeError("shape extent must be >= 1, got " + std::to_string(e));
}

Shape::Shape(std::vector<int> d) : dims(std::move(d)) {
    if (dims.empty() || dims.size() > 4) throw ShapeError("shape rank must be 1..4");
    for (int e : dims)
        if (e < 1) throw ShapeError("shape extent must be >= 1, got " + std::to_string(e));
}

std::int64_t Shape::count() const {
    std::int64_t n = 1;
    for (int e : dims) n *= e;
    return n;
}

std::string Shape::str() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < dims.size(); ++i) {
        if (i) os << ',';
        os << dims[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_.count()), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_.count())
        throw ShapeError("expected " + std::to_string(shape_.count()) + " values, got " +
                         std::to_string(data_.size()));
}

Tensor Tensor::reshaped(Shape new_shape) const {
    if (new_shape.count() != shape_.count())
        throw ShapeError("reshape " + shape_.str() + " -> " + new_shape.str() +
                         " changes element count");
    Tensor out;
    out.shape_ = std::move(new_shape);
    out.data_ = data_;
    return out;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().rank() != 2 || b.shape().rank() != 2)
        throw ShapeError("matmul expects rank-2 tensors, got " + a.shape().str() + " and " +
                         b.shape().str());
    const int m = a.shape()[0], k = a.shape()[1];
    const int k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw ShapeError("matmul inner dims differ: " + a.shape().str() + " x " + b.shape().str());

    Tensor y(Shape{m, n});
    const double* ap = a.data();
    const double* bp = b.data();
    double* yp = y.data();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* yr = yp + static_cast<size_t>(i) * n;
        const double* ar = ap + static_cast<size_t>(i) * k;
        // k ascends for every output element: fixed summation order
        for (int kk = 0; kk < k; ++kk) {
            const double av = ar[kk];
            const double* br = bp + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) yr[j] += av * br[j];
        }
    }
    return y;
}

Tensor transpose(const Tensor& a) {
    if (a.shape().rank() != 2) throw ShapeError("transpose expects rank-2, got " + a.shape().str());
    const int m = a.shape()[0], n = a.shape()[1];
    Tensor y(Shape{n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) y.at(j, i) = a.at(i, j);
    return y;
}

namespace {

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f, const char* name) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(name) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
    Tensor y(a.shape());
    const std::int64_t n = a.size();
    double* yp = y.data();
    const double* ap = a.data();
    const double* bp = b.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) yp[i] = f(ap[i], bp[i]);
    return y;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, [](double x, double y) { return x + y; }, "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return zip(a, b, [](double x, double y) { return x - y; }, "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return zip(a, b, [](double x, double y) { return x * y; }, "mul");
}

Tensor scale(const Tensor& a, double s) {
    Tensor y(a.shape());
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) y[i] = a[i] * s;
    return y;
}

int conv_out_extent(int n, int k, int s, int p) {
    if (n < 1 || k < 1 || s < 1 || p < 0)
        throw ShapeError("conv_out_extent: invalid geometry n=" + std::to_string(n) +
                         " k=" + std::to_string(k) + " s=" + std::to_string(s) +
                         " p=" + std::to_string(p));
    if (n + 2 * p < k) throw ShapeError("kernel larger than padded input");
    return (n + 2 * p - k) / s + 1;
}

Tensor im2col(const Tensor& x, int k, int s, int p) {
    if (x.shape().rank() != 4) throw ShapeError("im2col expects [b,c,h,w], got " + x.shape().str());
    const int b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    const int oh = conv_out_extent(h, k, s, p);
    const int ow = conv_out_extent(w, k, s, p);

    Tensor cols(Shape{b * oh * ow, c * k * k});
    double* cp = cols.data();
    const int patch = c * k * k;
#pragma omp parallel for collapse(2) schedule(static)
    for (int bi = 0; bi < b; ++bi) {
        for (int oi = 0; oi < oh; ++oi) {
            for (int oj = 0; oj < ow; ++oj) {
                double* row = cp + (static_cast<size_t>(bi) * oh * ow +
                                    static_cast<size_t>(oi) * ow + oj) *
                                       patch;
                for (int ci = 0; ci < c; ++ci) {
                    for (int ki = 0; ki < k; ++ki) {
                        const int ii = oi * s - p + ki;
                        for (int kj = 0; kj < k; ++kj) {
                            const int jj = oj * s - p + kj;
                            *row++ = (ii >= 0 && ii < h && jj >= 0 && jj < w)
                                         ? x.at(bi, ci, ii, jj)
                                         : 0.0;
                        }
                    }
                }
            }
        }
    }
    return cols;
}

Tensor col2im(const Tensor& cols, const Shape& x_shape, int k, int s, int p) {
    if (x_shape.rank() != 4) throw ShapeError("col2im expects [b,c,h,w] target");
    const int b = x_shape[0], c = x_shape[1], h = x_shape[2], w = x_shape[3];
    const int oh = conv_out_extent(h, k, s, p);
    const int ow = conv_out_extent(w, k, s, p);
    const int patch = c * k * k;
    if (cols.shape() != Shape{b * oh * ow, patch})
        throw ShapeError("col2im: cols shape " + cols.shape().str() + " does not match target " +
                         x_shape.str());

    Tensor x(x_shape);
    // Patches overlap across (oi,oj), so scatter-add serially per image;
    // images are independent.
#pragma omp parallel for schedule(static)
    for (int bi = 0; bi < b; ++bi) {
        for (int oi = 0; oi < oh; ++oi) {
            for (int oj = 0; oj < ow; ++oj) {
                const double* row = cols.data() + (static_cast<size_t>(bi) * oh * ow +
                                                   static_cast<size_t>(oi) * ow + oj) *
                                                      patch;
                for (int ci = 0; ci < c; ++ci) {
                    for (int ki = 0; ki < k; ++ki) {
                        const int ii = oi * s - p + ki;
                        for (int kj = 0; kj < k; ++kj) {
                            const int jj = oj * s - p + kj;
                            if (ii >= 0 && ii < h && jj >= 0 && jj < w)
                                x.at(bi, ci, ii, jj) += *row;
                            ++row;
                        }
                    }
                }
            }
        }
    }
    return x;
}

}  // namespace wastenet
