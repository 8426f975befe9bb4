#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wastenet/tensor.hpp"

namespace wastenet {

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Split { Train, Test };

struct DatasetEntry {
    std::string path;
    int label;  // 0 = Organic, 1 = Recyclable
};

struct DatasetIndex {
    Split split;
    std::vector<DatasetEntry> entries;  // lexicographic by path within each class
    std::int64_t count_organic = 0;
    std::int64_t count_recyclable = 0;
    std::vector<std::string> warnings;
};

// Expects <root>/{TRAIN,TEST}/{O,R}/. Missing class directory is an error,
// an empty class only a warning.
DatasetIndex scan_dataset(const std::string& root, Split split);

struct Batch {
    Tensor images;  // [b,3,e,e], values in [0,1]
    Tensor labels;  // [b,1], 0 or 1
};

// 8-bit RGB raster held while decoding / before encoding.
struct RgbImage {
    int width = 0, height = 0;
    std::vector<std::uint8_t> pixels;  // rows of RGB triples
};

RgbImage read_ppm(const std::string& path);               // binary P6, maxval 255
void write_ppm(const std::string& path, const RgbImage&);

// Decoders are looked up by lowercase file extension; PPM is built in,
// anything else can be plugged in without touching this module.
using ImageDecoder = std::function<RgbImage(const std::string& path)>;
void register_image_decoder(const std::string& extension, ImageDecoder decoder);

// Decode, bilinear-resize to e x e (aspect ignored), scale to [0,1].
Tensor load_image(const std::string& path, int target_extent);

// Exposed for direct testing of the resize weights.
RgbImage resize_bilinear(const RgbImage& src, int out_w, int out_h);

// One epoch's batch plan: a seeded permutation of entry indices cut into
// batches, final short batch kept. Same (seed, epoch) gives the identical
// plan on every platform (mt19937_64 + Fisher-Yates, see rng.hpp).
std::vector<std::vector<int>> make_batch_plan(std::int64_t n_entries, int batch_size,
                                              std::uint64_t seed, std::uint64_t epoch);

// Load one planned batch. Runs the decodes and emits tensors in plan order.
Batch load_batch(const DatasetIndex& index, const std::vector<int>& ids, int target_extent);

// Decoded-image cache so small datasets are not re-decoded every epoch.
class BatchLoader {
public:
    BatchLoader(const DatasetIndex& index, int target_extent,
                std::int64_t cache_budget_bytes = 2LL << 30);
    Batch load(const std::vector<int>& ids);

private:
    const DatasetIndex& index_;
    int extent_;
    bool caching_;
    std::vector<Tensor> cache_;
};

}  // namespace wastenet
