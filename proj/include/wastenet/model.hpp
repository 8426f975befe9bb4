#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wastenet/layers.hpp"
#include "wastenet/tensor.hpp"

namespace wastenet {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Arch { Proposed, VGG16, ResNet34 };
enum class Head { Sigmoid1, Softmax2 };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& name);  // throws ConfigError listing valid names

struct ModelConfig {
    Arch arch = Arch::Proposed;
    int input_extent = 224;
    int input_channels = 3;
    int num_classes = 2;
    Head head = Head::Sigmoid1;
    double width_scale = 1.0;
};

// Sequential layer graph (residual blocks nest their sublayers). The last
// layer is the output activation; training consumes logits from the layer
// before it.
class Model {
public:
    Model(ModelConfig config, std::vector<std::unique_ptr<Layer>> layers);

    const ModelConfig& config() const { return config_; }
    Head head() const { return config_.head; }
    const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

    // Full forward including the output activation: [b,3,e,e] -> [b,1] or [b,2].
    Tensor forward(const Tensor& x, Mode mode = Mode::Eval);
    // Forward stopping before the output activation (the loss owns that part).
    Tensor forward_logits(const Tensor& x, Mode mode);
    // Backward from d(loss)/d(logits) through everything but the head.
    void backward_from_logits(const Tensor& grad_logits);

    std::vector<ParamRef> params();
    std::vector<StateRef> state();

    struct LayerRow {
        std::string kind;
        std::string describe;
        Shape out_shape;
        std::int64_t param_count;
    };
    std::vector<LayerRow> summary(int batch = 1) const;

private:
    ModelConfig config_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Builders: proposed 6-conv net, VGG16, ResNet-34, per config.
Model build_model(const ModelConfig& config);

std::int64_t count_params(Model& model);

// He-normal conv/dense weights, zero biases; deterministic in the seed.
void init_params(Model& model, std::uint64_t seed);

// "WGCK" checkpoint: magic, version, key=value config block, then named
// parameter tensors as f64 little-endian.
void save_checkpoint(Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace wastenet
