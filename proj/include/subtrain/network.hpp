#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "subtrain/data.hpp"
#include "subtrain/tensor.hpp"

namespace subtrain {

// Declarative description of the VGG-style classifier: a stack of
// [conv3x3 + ReLU + maxpool2x2] blocks, flatten, an optional ReLU hidden
// layer, and a softmax output layer. Kernel and pool sizes are fixed.
struct NetworkSpec {
    std::size_t input_height = 28;
    std::size_t input_width = 28;
    std::size_t input_channels = 1;
    std::vector<std::size_t> conv_filters = {32, 64, 64}; // may be empty (dense-only net)
    std::size_t hidden_units = 64;                        // 0 skips the hidden layer
    std::size_t class_count = 10;
    std::uint64_t master_seed = 0;

    static constexpr std::size_t kKernel = 3;
    static constexpr std::size_t kPool = 2;

    void validate() const;

    // Architecture fingerprint (seed excluded); pins the file format header.
    std::uint64_t hash() const;
};

// Closed-form trainable-parameter count; equals Network(spec).parameter_count().
std::size_t parameter_count(const NetworkSpec& spec);

struct Batch {
    Tensor images; // (n, H, W, C), values in [0, 1]
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
};

// Instantiated network: one flat parameter vector plus per-layer views.
// Flattening order is layer order, kernel/weight before bias; conv kernels
// are (kh, kw, in_c, filters) row-major, dense weights (in, out) row-major.
class Network {
public:
    struct LayerInfo {
        std::string name;         // conv1, conv2, ..., dense1, output
        std::size_t offset;       // first parameter index
        std::size_t weight_count; // kernel/weight parameters
        std::size_t bias_count;
    };

    struct LossGrad {
        double loss;
        std::vector<double> gradient;
    };

    struct Evaluation {
        double loss;
        double accuracy;
    };

    explicit Network(NetworkSpec spec);

    const NetworkSpec& spec() const { return spec_; }
    std::size_t parameter_count() const { return params_.size(); }
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }
    const std::vector<LayerInfo>& layers() const { return layers_; }

    // Class probabilities, one row per sample; rows sum to 1.
    Tensor forward(const Batch& batch) const;

    // Mean categorical cross-entropy over the batch.
    double mean_loss(const Batch& batch) const;

    // Mean loss and its exact reverse-mode gradient w.r.t. all parameters.
    LossGrad loss_and_gradient(const Batch& batch) const;

    // Deterministic full pass in fixed chunk order.
    Evaluation evaluate(const Dataset& ds) const;
    Evaluation evaluate(const Dataset& ds, const std::vector<std::size_t>& indices) const;

    // Flat binary file: magic, spec hash, P, then the parameter vector
    // as little-endian 64-bit floats.
    void save(const std::filesystem::path& path) const;
    static Network load(const std::filesystem::path& path, NetworkSpec spec);

private:
    struct ConvPlan {
        std::size_t in_h, in_w, in_c;
        std::size_t filters;
        std::size_t pooled_h, pooled_w;
        std::size_t kernel_offset, bias_offset;
    };
    struct DensePlan {
        std::size_t in_dim, out_dim;
        std::size_t weight_offset, bias_offset;
        bool relu;
    };
    struct Workspace;

    void check_batch(const Batch& batch) const;
    void run_stages(const Batch& batch, Workspace& ws) const;

    NetworkSpec spec_;
    std::vector<double> params_;
    std::vector<LayerInfo> layers_;
    std::vector<ConvPlan> conv_plan_;
    std::vector<DensePlan> dense_plan_;
    std::size_t flatten_dim_ = 0;
};

} // namespace subtrain
