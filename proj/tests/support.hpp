#pragma once

#include <cstdint>
#include <string>

#include "wastenet/data.hpp"

// Shared fixtures for the unit and acceptance suites: temp dirs, generated
// PPM datasets, and closed-form parameter-count oracles kept independent of
// the model builders.
namespace testsupport {

// Unique directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Class 0: filled disk. Class 1: stripes. Random position/phase/noise, and
// (when sign_flip) a random contrast sign so the class means coincide and no
// linear pixel classifier separates them.
wastenet::RgbImage pattern_image(int extent, int cls, std::uint64_t seed, bool sign_flip);

// TRAIN/{O,R} with 4 distinct images per class; no TEST split.
void make_overfit_fixture(const std::string& root, int extent);

// TRAIN and TEST splits of sign-flipped disk/stripe images.
void make_synthetic_dataset(const std::string& root, int n_train_per_class,
                            int n_test_per_class, int extent, std::uint64_t seed);

// Tiny-image tree with exact per-class counts for both splits.
void make_counted_tree(const std::string& root, int train_o, int train_r, int test_o,
                       int test_r);

// Closed-form trainable-parameter sums per architecture (batch-norm running
// stats excluded), written from the layer inventories, not the builders.
long long proposed_param_count(int input_extent, double width_scale, bool sigmoid_head);
long long vgg16_param_count(int input_extent, double width_scale, int num_classes);
long long resnet34_param_count(double width_scale, int num_classes);

}  // namespace testsupport
