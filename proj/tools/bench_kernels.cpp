// Serial reference vs OpenMP kernels: timing, speedup, and an equality spot
// check for each case. Run with OMP_NUM_THREADS to control the thread count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "wastenet/layers.hpp"
#include "wastenet/reference.hpp"
#include "wastenet/rng.hpp"
#include "wastenet/tensor.hpp"

using namespace wastenet;

namespace {

Tensor random_tensor(Rng& rng, const Shape& shape) {
    Tensor t(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = 2.0 * rng.next_double() - 1.0;
    return t;
}

double time_ms(const std::function<void()>& fn, int iters) {
    fn();  // warmup
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < iters; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void report(const char* name, double serial_ms, double parallel_ms, double diff) {
    std::printf("%-24s serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx   max|diff| %.2e\n",
                name, serial_ms, parallel_ms, serial_ms / parallel_ms, diff);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both columns are serial\n");
#endif
    Rng rng(7);

    {
        const int n = 384;
        const Tensor a = random_tensor(rng, Shape{n, n});
        const Tensor b = random_tensor(rng, Shape{n, n});
        Tensor ys, yp;
        const double ts = time_ms([&] { ys = ref::matmul(a, b); }, 3);
        const double tp = time_ms([&] { yp = matmul(a, b); }, 3);
        report("matmul 384x384", ts, tp, max_abs_diff(ys, yp));
    }
    {
        const Tensor x = random_tensor(rng, Shape{4, 16, 64, 64});
        Tensor ys, yp;
        const double ts = time_ms([&] { ys = ref::im2col(x, 3, 1, 1); }, 3);
        const double tp = time_ms([&] { yp = im2col(x, 3, 1, 1); }, 3);
        report("im2col 4x16x64x64 k3", ts, tp, max_abs_diff(ys, yp));
    }
    {
        const int c = 16, oc = 32, k = 3;
        const Tensor x = random_tensor(rng, Shape{4, c, 64, 64});
        const Tensor w = random_tensor(rng, Shape{oc, c, k, k});
        const Tensor bias = random_tensor(rng, Shape{oc});
        Conv2DLayer layer(c, oc, k, 1, 1);
        layer.weight = w;
        layer.bias = bias;
        Tensor ys, yp;
        const double ts = time_ms([&] { ys = ref::conv2d(x, w, bias, 1, 1); }, 2);
        const double tp = time_ms([&] { yp = layer.forward(x, Mode::Eval); }, 2);
        report("conv2d 16->32 64x64", ts, tp, max_abs_diff(ys, yp));
    }
    {
        // the layer also records argmax indices for backward, the reference
        // kernel does not, so this case can come out below 1x on one thread
        const Tensor x = random_tensor(rng, Shape{8, 32, 64, 64});
        MaxPool2DLayer layer(2, 2);
        Tensor ys, yp;
        const double ts = time_ms([&] { ys = ref::maxpool2d(x, 2, 2); }, 5);
        const double tp = time_ms([&] { yp = layer.forward(x, Mode::Eval); }, 5);
        report("maxpool 8x32x64x64", ts, tp, max_abs_diff(ys, yp));
    }
    return 0;
}
