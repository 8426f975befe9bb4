#pragma once

#include "wastenet/tensor.hpp"

// Serial reference kernels. Naive loop nests, no OpenMP, no lowering tricks.
// These are the oracles the fast kernels are tested against and the baseline
// for the kernel benchmark; keep them boring.
namespace wastenet::ref {

Tensor matmul(const Tensor& a, const Tensor& b);

// Brute-force patch extraction, one nested loop per index.
Tensor im2col(const Tensor& x, int k, int s, int p);

// Direct cross-correlation: six nested loops, zero padding.
// x [b,c,h,w], w [oc,c,k,k], bias [oc] -> [b,oc,oh,ow]
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int padding);

// Per-window maximum, first-index tie break.
Tensor maxpool2d(const Tensor& x, int k, int stride);

}  // namespace wastenet::ref
