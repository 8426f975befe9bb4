#include "support.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <unistd.h>

#include "wastenet/rng.hpp"

namespace fs = std::filesystem;
using namespace wastenet;

namespace testsupport {

TempDir::TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const fs::path base = fs::temp_directory_path() / "wastenet_tests";
    fs::create_directories(base);
    path_ = (base / (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++)))
                .string();
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

RgbImage pattern_image(int extent, int cls, std::uint64_t seed, bool sign_flip) {
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(cls) + 0x1000));
    RgbImage img;
    img.width = img.height = extent;
    img.pixels.resize(static_cast<size_t>(extent) * extent * 3);

    const double sign = sign_flip && rng.next_double() < 0.5 ? -1.0 : 1.0;
    const double amp = 0.35;
    const double cx = extent * (0.3 + 0.4 * rng.next_double());
    const double cy = extent * (0.3 + 0.4 * rng.next_double());
    const double radius = extent * (0.15 + 0.1 * rng.next_double());
    const double period = extent / (4.0 + 2.0 * rng.next_double());
    const double phase = period * rng.next_double();

    for (int y = 0; y < extent; ++y)
        for (int x = 0; x < extent; ++x) {
            double pattern;
            if (cls == 0) {
                const double dx = x - cx, dy = y - cy;
                pattern = std::sqrt(dx * dx + dy * dy) <= radius ? 1.0 : 0.0;
            } else {
                pattern = std::fmod(x + phase, period) < period / 2.0 ? 1.0 : 0.0;
            }
            const double noise = 0.08 * (rng.next_double() - 0.5);
            const double v = 0.5 + sign * amp * (pattern - 0.5) + noise;
            const auto byte = static_cast<std::uint8_t>(
                std::lround(255.0 * std::min(1.0, std::max(0.0, v))));
            for (int ch = 0; ch < 3; ++ch)
                img.pixels[(static_cast<size_t>(y) * extent + x) * 3 + ch] = byte;
        }
    return img;
}

namespace {

void write_class_images(const fs::path& dir, int cls, int count, int extent, std::uint64_t seed,
                        bool sign_flip) {
    fs::create_directories(dir);
    char name[32];
    for (int i = 0; i < count; ++i) {
        std::snprintf(name, sizeof(name), "img_%05d.ppm", i);
        write_ppm((dir / name).string(),
                  pattern_image(extent, cls, Rng::mix(seed, static_cast<std::uint64_t>(i)),
                                sign_flip));
    }
}

}  // namespace

void make_overfit_fixture(const std::string& root, int extent) {
    write_class_images(fs::path(root) / "TRAIN" / "O", 0, 4, extent, 11, false);
    write_class_images(fs::path(root) / "TRAIN" / "R", 1, 4, extent, 22, false);
}

void make_synthetic_dataset(const std::string& root, int n_train_per_class,
                            int n_test_per_class, int extent, std::uint64_t seed) {
    write_class_images(fs::path(root) / "TRAIN" / "O", 0, n_train_per_class, extent,
                       Rng::mix(seed, 1), true);
    write_class_images(fs::path(root) / "TRAIN" / "R", 1, n_train_per_class, extent,
                       Rng::mix(seed, 2), true);
    write_class_images(fs::path(root) / "TEST" / "O", 0, n_test_per_class, extent,
                       Rng::mix(seed, 3), true);
    write_class_images(fs::path(root) / "TEST" / "R", 1, n_test_per_class, extent,
                       Rng::mix(seed, 4), true);
}

void make_counted_tree(const std::string& root, int train_o, int train_r, int test_o,
                       int test_r) {
    write_class_images(fs::path(root) / "TRAIN" / "O", 0, train_o, 4, 1, false);
    write_class_images(fs::path(root) / "TRAIN" / "R", 1, train_r, 4, 2, false);
    write_class_images(fs::path(root) / "TEST" / "O", 0, test_o, 4, 3, false);
    write_class_images(fs::path(root) / "TEST" / "R", 1, test_r, 4, 4, false);
}

namespace {

long long S(int w, double ws) {
    const long long v = std::llround(w * ws);
    return v < 1 ? 1 : v;
}

long long conv_p(long long oc, long long in_c, long long k) { return oc * in_c * k * k + oc; }
long long bn_p(long long c) { return 2 * c; }
long long dense_p(long long in, long long out) { return in * out + out; }

}  // namespace

long long proposed_param_count(int input_extent, double width_scale, bool sigmoid_head) {
    const long long w1 = S(32, width_scale), w2 = S(64, width_scale), w3 = S(128, width_scale);
    long long total = 0;
    total += conv_p(w1, 3, 3) + conv_p(w1, w1, 3);
    total += conv_p(w2, w1, 3) + conv_p(w2, w2, 3);
    total += conv_p(w3, w2, 3) + conv_p(w3, w3, 3);
    const long long spatial = input_extent / 8;
    const long long d1 = S(256, width_scale), d2 = S(64, width_scale);
    total += dense_p(w3 * spatial * spatial, d1);
    total += dense_p(d1, d2);
    total += dense_p(d2, sigmoid_head ? 1 : 2);
    return total;
}

long long vgg16_param_count(int input_extent, double width_scale, int num_classes) {
    const int widths[5] = {64, 128, 256, 512, 512};
    const int convs[5] = {2, 2, 3, 3, 3};
    long long total = 0;
    long long in_c = 3;
    for (int b = 0; b < 5; ++b) {
        const long long w = S(widths[b], width_scale);
        for (int i = 0; i < convs[b]; ++i) {
            total += conv_p(w, in_c, 3);
            in_c = w;
        }
    }
    const long long spatial = input_extent / 32;
    const long long d = S(4096, width_scale);
    total += dense_p(in_c * spatial * spatial, d);
    total += dense_p(d, d);
    total += dense_p(d, num_classes);
    return total;
}

long long resnet34_param_count(double width_scale, int num_classes) {
    // every conv feeds a batch norm, so none of them carries a bias
    const auto conv_nb = [](long long oc, long long in_c, long long k) {
        return oc * in_c * k * k;
    };
    long long total = conv_nb(S(64, width_scale), 3, 7) + bn_p(S(64, width_scale));
    const int blocks[4] = {3, 4, 6, 3};
    const int channels[4] = {64, 128, 256, 512};
    long long in_c = S(64, width_scale);
    for (int s = 0; s < 4; ++s) {
        const long long w = S(channels[s], width_scale);
        for (int b = 0; b < blocks[s]; ++b) {
            const int stride = (s > 0 && b == 0) ? 2 : 1;
            total += conv_nb(w, in_c, 3) + bn_p(w);  // conv1 + bn1
            total += conv_nb(w, w, 3) + bn_p(w);     // conv2 + bn2
            if (stride != 1 || in_c != w) total += conv_nb(w, in_c, 1) + bn_p(w);
            in_c = w;
        }
    }
    total += dense_p(in_c, num_classes);
    return total;
}

}  // namespace testsupport
