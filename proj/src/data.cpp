#include "wastenet/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "wastenet/rng.hpp"

namespace fs = std::filesystem;

namespace wastenet {

namespace {

std::vector<std::string> list_files_sorted(const fs::path& dir) {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) out.push_back(entry.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

DatasetIndex scan_dataset(const std::string& root, Split split) {
    const char* split_dir = split == Split::Train ? "TRAIN" : "TEST";
    const fs::path base = fs::path(root) / split_dir;
    if (!fs::is_directory(base))
        throw DataError("dataset split directory missing: " + base.string());

    DatasetIndex index;
    index.split = split;
    const struct { const char* dir; int label; } classes[2] = {{"O", 0}, {"R", 1}};
    for (const auto& cls : classes) {
        const fs::path cdir = base / cls.dir;
        if (!fs::is_directory(cdir))
            throw DataError("dataset class directory missing: " + cdir.string());
        const auto files = list_files_sorted(cdir);
        if (files.empty())
            index.warnings.push_back("class directory is empty: " + cdir.string());
        for (const auto& f : files) {
            index.entries.push_back({f, cls.label});
            (cls.label == 0 ? index.count_organic : index.count_recyclable)++;
        }
    }
    return index;
}

RgbImage read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open image: " + path);

    auto next_token = [&]() -> std::string {
        std::string tok;
        int c;
        while ((c = is.get()) != EOF) {
            if (c == '#') {  // comment to end of line
                while ((c = is.get()) != EOF && c != '\n') {}
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) return tok;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        return tok;
    };

    if (next_token() != "P6") throw DataError("not a binary PPM (P6): " + path);
    RgbImage img;
    try {
        img.width = std::stoi(next_token());
        img.height = std::stoi(next_token());
        const int maxval = std::stoi(next_token());
        if (maxval != 255) throw DataError("unsupported PPM maxval in " + path);
    } catch (const std::logic_error&) {
        throw DataError("corrupt PPM header: " + path);
    }
    if (img.width < 1 || img.height < 1) throw DataError("corrupt PPM dimensions: " + path);

    img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
    if (!is.read(reinterpret_cast<char*>(img.pixels.data()),
                 static_cast<std::streamsize>(img.pixels.size())))
        throw DataError("truncated PPM pixel data: " + path);
    return img;
}

void write_ppm(const std::string& path, const RgbImage& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write image: " + path);
    os << "P6\n" << img.width << " " << img.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.pixels.data()),
             static_cast<std::streamsize>(img.pixels.size()));
    if (!os) throw DataError("I/O error writing image: " + path);
}

namespace {

std::map<std::string, ImageDecoder>& decoder_registry() {
    static std::map<std::string, ImageDecoder> registry = {
        {"ppm", [](const std::string& p) { return read_ppm(p); }}};
    return registry;
}

std::string lower_extension(const std::string& path) {
    std::string ext = fs::path(path).extension().string();
    if (!ext.empty() && ext.front() == '.') ext.erase(0, 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

}  // namespace

void register_image_decoder(const std::string& extension, ImageDecoder decoder) {
    decoder_registry()[extension] = std::move(decoder);
}

RgbImage resize_bilinear(const RgbImage& src, int out_w, int out_h) {
    RgbImage dst;
    dst.width = out_w;
    dst.height = out_h;
    dst.pixels.resize(static_cast<size_t>(out_w) * out_h * 3);
    // endpoint-aligned sampling: corners map to corners
    const double sx = out_w > 1 ? static_cast<double>(src.width - 1) / (out_w - 1) : 0.0;
    const double sy = out_h > 1 ? static_cast<double>(src.height - 1) / (out_h - 1) : 0.0;
    for (int y = 0; y < out_h; ++y) {
        const double fy = y * sy;
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = x * sx;
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            for (int ch = 0; ch < 3; ++ch) {
                auto px = [&](int yy, int xx) {
                    return static_cast<double>(
                        src.pixels[(static_cast<size_t>(yy) * src.width + xx) * 3 + ch]);
                };
                const double top = px(y0, x0) * (1.0 - wx) + px(y0, x1) * wx;
                const double bot = px(y1, x0) * (1.0 - wx) + px(y1, x1) * wx;
                const double v = top * (1.0 - wy) + bot * wy;
                dst.pixels[(static_cast<size_t>(y) * out_w + x) * 3 + ch] =
                    static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
            }
        }
    }
    return dst;
}

Tensor load_image(const std::string& path, int target_extent) {
    const std::string ext = lower_extension(path);
    const auto& registry = decoder_registry();
    const auto it = registry.find(ext);
    if (it == registry.end())
        throw DataError("no decoder registered for '" + ext + "': " + path);
    RgbImage img;
    try {
        img = it->second(path);
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError("decode failed for " + path + ": " + e.what());
    }
    if (img.width != target_extent || img.height != target_extent)
        img = resize_bilinear(img, target_extent, target_extent);

    Tensor t(Shape{3, target_extent, target_extent});
    const std::int64_t plane = static_cast<std::int64_t>(target_extent) * target_extent;
    for (int y = 0; y < target_extent; ++y)
        for (int x = 0; x < target_extent; ++x)
            for (int ch = 0; ch < 3; ++ch)
                t[ch * plane + static_cast<std::int64_t>(y) * target_extent + x] =
                    img.pixels[(static_cast<size_t>(y) * target_extent + x) * 3 + ch] / 255.0;
    return t;
}

std::vector<std::vector<int>> make_batch_plan(std::int64_t n_entries, int batch_size,
                                              std::uint64_t seed, std::uint64_t epoch) {
    if (n_entries < 1) throw DataError("empty dataset index");
    if (batch_size < 1) throw DataError("batch size must be >= 1");

    std::vector<int> perm(static_cast<size_t>(n_entries));
    for (std::int64_t i = 0; i < n_entries; ++i) perm[static_cast<size_t>(i)] = static_cast<int>(i);
    Rng rng(Rng::mix(seed, epoch));
    rng.shuffle(perm);

    std::vector<std::vector<int>> plan;
    for (std::int64_t start = 0; start < n_entries; start += batch_size) {
        const std::int64_t end = std::min<std::int64_t>(start + batch_size, n_entries);
        plan.emplace_back(perm.begin() + start, perm.begin() + end);
    }
    return plan;
}

Batch load_batch(const DatasetIndex& index, const std::vector<int>& ids, int target_extent) {
    if (ids.empty()) throw DataError("empty batch");
    const int b = static_cast<int>(ids.size());
    Batch batch{Tensor(Shape{b, 3, target_extent, target_extent}), Tensor(Shape{b, 1})};
    const std::int64_t per_image = 3LL * target_extent * target_extent;
    for (int i = 0; i < b; ++i) {
        const DatasetEntry& e = index.entries[static_cast<size_t>(ids[static_cast<size_t>(i)])];
        const Tensor img = load_image(e.path, target_extent);
        for (std::int64_t j = 0; j < per_image; ++j) batch.images[i * per_image + j] = img[j];
        batch.labels[i] = e.label;
    }
    return batch;
}

BatchLoader::BatchLoader(const DatasetIndex& index, int target_extent,
                         std::int64_t cache_budget_bytes)
    : index_(index), extent_(target_extent) {
    const std::int64_t bytes =
        static_cast<std::int64_t>(index.entries.size()) * 3 * target_extent * target_extent * 8;
    caching_ = bytes <= cache_budget_bytes;
    if (caching_) cache_.resize(index.entries.size());
}

Batch BatchLoader::load(const std::vector<int>& ids) {
    if (!caching_) return load_batch(index_, ids, extent_);
    const int b = static_cast<int>(ids.size());
    Batch batch{Tensor(Shape{b, 3, extent_, extent_}), Tensor(Shape{b, 1})};
    const std::int64_t per_image = 3LL * extent_ * extent_;
    for (int i = 0; i < b; ++i) {
        const size_t id = static_cast<size_t>(ids[static_cast<size_t>(i)]);
        Tensor& slot = cache_[id];
        if (slot.size() == 0) slot = load_image(index_.entries[id].path, extent_);
        for (std::int64_t j = 0; j < per_image; ++j) batch.images[i * per_image + j] = slot[j];
        batch.labels[i] = index_.entries[id].label;
    }
    return batch;
}

}  // namespace wastenet
