#include "wastenet/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "wastenet/rng.hpp"

namespace wastenet {

std::string arch_name(Arch a) {
    switch (a) {
        case Arch::Proposed: return "proposed";
        case Arch::VGG16: return "vgg16";
        case Arch::ResNet34: return "resnet34";
    }
    return "?";
}

Arch arch_from_name(const std::string& name) {
    if (name == "proposed") return Arch::Proposed;
    if (name == "vgg16") return Arch::VGG16;
    if (name == "resnet34") return Arch::ResNet34;
    throw ConfigError("unknown architecture '" + name + "' (valid: proposed, vgg16, resnet34)");
}

Model::Model(ModelConfig config, std::vector<std::unique_ptr<Layer>> layers)
    : config_(config), layers_(std::move(layers)) {}

Tensor Model::forward(const Tensor& x, Mode mode) {
    Tensor y = x;
    for (auto& layer : layers_) y = layer->forward(y, mode);
    return y;
}

Tensor Model::forward_logits(const Tensor& x, Mode mode) {
    Tensor y = x;
    for (size_t i = 0; i + 1 < layers_.size(); ++i) y = layers_[i]->forward(y, mode);
    return y;
}

void Model::backward_from_logits(const Tensor& grad_logits) {
    Tensor g = grad_logits;
    for (size_t i = layers_.size() - 1; i-- > 0;) g = layers_[i]->backward(g);
}

std::vector<ParamRef> Model::params() {
    std::vector<ParamRef> out;
    for (size_t i = 0; i < layers_.size(); ++i)
        layers_[i]->collect_params("layer" + std::to_string(i), out);
    return out;
}

std::vector<StateRef> Model::state() {
    std::vector<StateRef> out;
    for (size_t i = 0; i < layers_.size(); ++i)
        layers_[i]->collect_state("layer" + std::to_string(i), out);
    return out;
}

std::vector<Model::LayerRow> Model::summary(int batch) const {
    std::vector<LayerRow> rows;
    Shape s{batch, config_.input_channels, config_.input_extent, config_.input_extent};
    for (size_t i = 0; i < layers_.size(); ++i) {
        Layer* layer = layers_[i].get();
        s = layer->output_shape(s);
        std::vector<ParamRef> p;
        layer->collect_params("x", p);
        std::int64_t n = 0;
        for (const auto& pr : p) n += pr.value->size();
        rows.push_back({layer->kind(), layer->describe(), s, n});
    }
    return rows;
}

namespace {

int scaled(int w, double ws) {
    const int v = static_cast<int>(std::llround(w * ws));
    return v < 1 ? 1 : v;
}

void check_divisible(const ModelConfig& c, int factor) {
    if (c.input_extent < factor || c.input_extent % factor != 0)
        throw ConfigError("input extent " + std::to_string(c.input_extent) +
                          " not divisible by the architecture's downsampling factor " +
                          std::to_string(factor));
    if (c.width_scale <= 0.0) throw ConfigError("width_scale must be positive");
}

void push_head(std::vector<std::unique_ptr<Layer>>& layers, int in_features,
               const ModelConfig& c) {
    if (c.head == Head::Sigmoid1) {
        layers.push_back(std::make_unique<DenseLayer>(in_features, 1));
        layers.push_back(std::make_unique<SigmoidLayer>());
    } else {
        layers.push_back(std::make_unique<DenseLayer>(in_features, c.num_classes));
        layers.push_back(std::make_unique<SoftmaxLayer>());
    }
}

Model build_proposed(const ModelConfig& c) {
    check_divisible(c, 8);
    std::vector<std::unique_ptr<Layer>> layers;
    const int widths[3] = {scaled(32, c.width_scale), scaled(64, c.width_scale),
                           scaled(128, c.width_scale)};
    int in_c = c.input_channels;
    for (int g = 0; g < 3; ++g) {
        const int w = widths[g];
        layers.push_back(std::make_unique<Conv2DLayer>(in_c, w, 3, 1, 1));
        layers.push_back(std::make_unique<ReluLayer>());
        layers.push_back(std::make_unique<Conv2DLayer>(w, w, 3, 1, 1));
        layers.push_back(std::make_unique<ReluLayer>());
        layers.push_back(std::make_unique<MaxPool2DLayer>(2, 2));
        in_c = w;
    }
    layers.push_back(std::make_unique<FlattenLayer>());
    const int spatial = c.input_extent / 8;
    int feat = in_c * spatial * spatial;
    const int dense_widths[2] = {scaled(256, c.width_scale), scaled(64, c.width_scale)};
    for (int dw : dense_widths) {
        layers.push_back(std::make_unique<DenseLayer>(feat, dw));
        layers.push_back(std::make_unique<ReluLayer>());
        feat = dw;
    }
    push_head(layers, feat, c);
    return Model(c, std::move(layers));
}

Model build_vgg16(const ModelConfig& c) {
    check_divisible(c, 32);
    std::vector<std::unique_ptr<Layer>> layers;
    const int block_widths[5] = {64, 128, 256, 512, 512};
    const int block_convs[5] = {2, 2, 3, 3, 3};
    int in_c = c.input_channels;
    for (int b = 0; b < 5; ++b) {
        const int w = scaled(block_widths[b], c.width_scale);
        for (int i = 0; i < block_convs[b]; ++i) {
            layers.push_back(std::make_unique<Conv2DLayer>(in_c, w, 3, 1, 1));
            layers.push_back(std::make_unique<ReluLayer>());
            in_c = w;
        }
        layers.push_back(std::make_unique<MaxPool2DLayer>(2, 2));
    }
    layers.push_back(std::make_unique<FlattenLayer>());
    const int spatial = c.input_extent / 32;
    int feat = in_c * spatial * spatial;
    for (int i = 0; i < 2; ++i) {
        const int dw = scaled(4096, c.width_scale);
        layers.push_back(std::make_unique<DenseLayer>(feat, dw));
        layers.push_back(std::make_unique<ReluLayer>());
        feat = dw;
    }
    push_head(layers, feat, c);
    return Model(c, std::move(layers));
}

Model build_resnet34(const ModelConfig& c) {
    check_divisible(c, 32);
    std::vector<std::unique_ptr<Layer>> layers;
    const int stem = scaled(64, c.width_scale);
    layers.push_back(std::make_unique<Conv2DLayer>(c.input_channels, stem, 7, 2, 3, false));
    layers.push_back(std::make_unique<BatchNorm2DLayer>(stem));
    layers.push_back(std::make_unique<ReluLayer>());
    layers.push_back(std::make_unique<MaxPool2DLayer>(3, 2, 1));

    const int stage_blocks[4] = {3, 4, 6, 3};
    const int stage_channels[4] = {64, 128, 256, 512};
    int in_c = stem;
    for (int s = 0; s < 4; ++s) {
        const int w = scaled(stage_channels[s], c.width_scale);
        for (int b = 0; b < stage_blocks[s]; ++b) {
            const int stride = (s > 0 && b == 0) ? 2 : 1;
            layers.push_back(std::make_unique<ResidualBlockLayer>(in_c, w, stride));
            in_c = w;
        }
    }
    layers.push_back(std::make_unique<GlobalAvgPoolLayer>());
    push_head(layers, in_c, c);
    return Model(c, std::move(layers));
}

}  // namespace

Model build_model(const ModelConfig& config) {
    switch (config.arch) {
        case Arch::Proposed: return build_proposed(config);
        case Arch::VGG16: return build_vgg16(config);
        case Arch::ResNet34: return build_resnet34(config);
    }
    throw ConfigError("unknown architecture");
}

std::int64_t count_params(Model& model) {
    std::int64_t n = 0;
    for (const ParamRef& p : model.params()) n += p.value->size();
    return n;
}

void init_params(Model& model, std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 0x57474e45));  // "WGNE"
    for (const ParamRef& p : model.params()) {
        const std::string& name = p.name;
        Tensor& t = *p.value;
        if (name.ends_with(".weight")) {
            const Shape& s = t.shape();
            const std::int64_t fan_in =
                s.rank() == 4 ? static_cast<std::int64_t>(s[1]) * s[2] * s[3] : s[0];
            const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (std::int64_t i = 0; i < t.size(); ++i) t[i] = std_dev * rng.next_gaussian();
        } else if (name.ends_with(".gamma")) {
            for (std::int64_t i = 0; i < t.size(); ++i) t[i] = 1.0;
        } else {  // bias, beta
            for (std::int64_t i = 0; i < t.size(); ++i) t[i] = 0.0;
        }
    }
}

namespace {

constexpr char kMagic[4] = {'W', 'G', 'C', 'K'};
constexpr std::uint16_t kVersion = 1;

void write_u16(std::ostream& os, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                                static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint16_t read_u16(std::istream& is) {
    unsigned char b[2];
    if (!is.read(reinterpret_cast<char*>(b), 2)) throw CheckpointError("truncated checkpoint");
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw CheckpointError("truncated checkpoint");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw CheckpointError("truncated checkpoint");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

std::string config_text(const ModelConfig& c) {
    char ws[64];
    std::snprintf(ws, sizeof(ws), "%.17g", c.width_scale);
    std::ostringstream os;
    os << "arch=" << arch_name(c.arch) << "\n"
       << "input_extent=" << c.input_extent << "\n"
       << "input_channels=" << c.input_channels << "\n"
       << "num_classes=" << c.num_classes << "\n"
       << "head=" << (c.head == Head::Sigmoid1 ? "sigmoid1" : "softmax2") << "\n"
       << "width_scale=" << ws << "\n";
    return os.str();
}

ModelConfig config_from_text(const std::string& text) {
    ModelConfig c;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "arch") c.arch = arch_from_name(val);
        else if (key == "input_extent") c.input_extent = std::stoi(val);
        else if (key == "input_channels") c.input_channels = std::stoi(val);
        else if (key == "num_classes") c.num_classes = std::stoi(val);
        else if (key == "head") {
            if (val == "sigmoid1") c.head = Head::Sigmoid1;
            else if (val == "softmax2") c.head = Head::Softmax2;
            else throw CheckpointError("incompatible checkpoint: unknown head '" + val + "'");
        } else if (key == "width_scale") c.width_scale = std::strtod(val.c_str(), nullptr);
    }
    return c;
}

}  // namespace

void save_checkpoint(Model& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    write_u16(os, kVersion);
    const std::string cfg = config_text(model.config());
    write_u32(os, static_cast<std::uint32_t>(cfg.size()));
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

    const auto state = model.state();
    write_u32(os, static_cast<std::uint32_t>(state.size()));
    for (const StateRef& s : state) {
        write_u32(os, static_cast<std::uint32_t>(s.name.size()));
        os.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
        const Shape& shape = s.value->shape();
        write_u32(os, static_cast<std::uint32_t>(shape.rank()));
        for (int d : shape.dims) write_u32(os, static_cast<std::uint32_t>(d));
        for (std::int64_t i = 0; i < s.value->size(); ++i) write_f64(os, (*s.value)[i]);
    }
    if (!os) throw CheckpointError("I/O error writing checkpoint: " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open checkpoint: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError("incompatible checkpoint: bad magic in " + path);
    const std::uint16_t version = read_u16(is);
    if (version != kVersion)
        throw CheckpointError("incompatible checkpoint: version " + std::to_string(version));
    const std::uint32_t cfg_len = read_u32(is);
    std::string cfg(cfg_len, '\0');
    if (!is.read(cfg.data(), cfg_len)) throw CheckpointError("truncated checkpoint");

    Model model = build_model(config_from_text(cfg));
    std::map<std::string, Tensor*> by_name;
    for (const StateRef& s : model.state()) by_name[s.name] = s.value;

    const std::uint32_t n_tensors = read_u32(is);
    for (std::uint32_t t = 0; t < n_tensors; ++t) {
        const std::uint32_t name_len = read_u32(is);
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw CheckpointError("truncated checkpoint");
        const std::uint32_t rank = read_u32(is);
        std::vector<int> dims;
        for (std::uint32_t d = 0; d < rank; ++d) dims.push_back(static_cast<int>(read_u32(is)));
        const Shape shape(dims);
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw CheckpointError("incompatible checkpoint: unexpected tensor " + name);
        if (it->second->shape() != shape)
            throw CheckpointError("incompatible checkpoint: shape mismatch for " + name);
        for (std::int64_t i = 0; i < it->second->size(); ++i) (*it->second)[i] = read_f64(is);
    }
    return model;
}

}  // namespace wastenet
