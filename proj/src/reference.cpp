#include "wastenet/reference.hpp"

namespace wastenet::ref {

Tensor matmul(const Tensor& a, const Tensor& b) {
    const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (k != b.shape()[0]) throw ShapeError("ref::matmul inner dims differ");
    Tensor y(Shape{m, n});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double sum = 0.0;
            for (int kk = 0; kk < k; ++kk) sum += a.at(i, kk) * b.at(kk, j);
            y.at(i, j) = sum;
        }
    return y;
}

Tensor im2col(const Tensor& x, int k, int s, int p) {
    const int b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    const int oh = conv_out_extent(h, k, s, p);
    const int ow = conv_out_extent(w, k, s, p);
    Tensor cols(Shape{b * oh * ow, c * k * k});
    for (int bi = 0; bi < b; ++bi)
        for (int oi = 0; oi < oh; ++oi)
            for (int oj = 0; oj < ow; ++oj) {
                const int row = (bi * oh + oi) * ow + oj;
                for (int ci = 0; ci < c; ++ci)
                    for (int ki = 0; ki < k; ++ki)
                        for (int kj = 0; kj < k; ++kj) {
                            const int ii = oi * s - p + ki;
                            const int jj = oj * s - p + kj;
                            const int col = (ci * k + ki) * k + kj;
                            cols.at(row, col) = (ii >= 0 && ii < h && jj >= 0 && jj < w)
                                                    ? x.at(bi, ci, ii, jj)
                                                    : 0.0;
                        }
            }
    return cols;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int padding) {
    const int b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], wi = x.shape()[3];
    const int oc = w.shape()[0], k = w.shape()[2];
    if (w.shape()[1] != c) throw ShapeError("ref::conv2d channel mismatch");
    const int oh = conv_out_extent(h, k, stride, padding);
    const int ow = conv_out_extent(wi, k, stride, padding);
    Tensor y(Shape{b, oc, oh, ow});
    for (int bi = 0; bi < b; ++bi)
        for (int oci = 0; oci < oc; ++oci)
            for (int oi = 0; oi < oh; ++oi)
                for (int oj = 0; oj < ow; ++oj) {
                    double sum = bias[oci];
                    for (int ci = 0; ci < c; ++ci)
                        for (int ki = 0; ki < k; ++ki)
                            for (int kj = 0; kj < k; ++kj) {
                                const int ii = oi * stride - padding + ki;
                                const int jj = oj * stride - padding + kj;
                                if (ii >= 0 && ii < h && jj >= 0 && jj < wi)
                                    sum += x.at(bi, ci, ii, jj) * w.at(oci, ci, ki, kj);
                            }
                    y.at(bi, oci, oi, oj) = sum;
                }
    return y;
}

Tensor maxpool2d(const Tensor& x, int k, int stride) {
    const int b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    const int oh = conv_out_extent(h, k, stride, 0);
    const int ow = conv_out_extent(w, k, stride, 0);
    Tensor y(Shape{b, c, oh, ow});
    for (int bi = 0; bi < b; ++bi)
        for (int ci = 0; ci < c; ++ci)
            for (int oi = 0; oi < oh; ++oi)
                for (int oj = 0; oj < ow; ++oj) {
                    double best = x.at(bi, ci, oi * stride, oj * stride);
                    for (int ki = 0; ki < k; ++ki)
                        for (int kj = 0; kj < k; ++kj) {
                            const double v = x.at(bi, ci, oi * stride + ki, oj * stride + kj);
                            if (v > best) best = v;
                        }
                    y.at(bi, ci, oi, oj) = best;
                }
    return y;
}

}  // namespace wastenet::ref
