#pragma once

#include <map>
#include <string>
#include <vector>

#include "gpga/autodiff.hpp"
#include "gpga/rng.hpp"
#include "gpga/tensor.hpp"

namespace gpga {

enum class ArchKind { Mlp, SmallCnn };

enum class Provenance { Natural, FgsmAt, MaskAt, PgdAt, Trades };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);
std::string to_string(ArchKind k);
ArchKind arch_kind_from_string(const std::string& s);

// Compact classifier description. Mlp uses `mlp_widths` (input width first,
// logit width last). SmallCnn is conv-relu-conv-relu-fc-relu-fc on square
// single/multi-channel images, 3x3 kernels, stride 2, no padding.
struct ModelArch {
    ArchKind kind = ArchKind::Mlp;
    std::vector<std::size_t> mlp_widths;

    std::size_t in_channels = 1;
    std::size_t in_h = 28, in_w = 28;
    std::size_t conv1_channels = 8;
    std::size_t conv2_channels = 16;
    std::size_t kernel = 3;
    std::size_t stride = 2;
    std::size_t fc_width = 64;
    std::size_t cnn_classes = 10;

    static ModelArch mlp(std::vector<std::size_t> widths);
    static ModelArch small_cnn(std::size_t in_channels, std::size_t in_h, std::size_t in_w, std::size_t classes);

    std::size_t num_classes() const;
    std::size_t input_size() const;
    std::vector<std::size_t> input_shape_per_sample() const;
    void validate() const;

    std::string serialize() const;                      // single-line text form
    static ModelArch deserialize(const std::string&);   // inverse of serialize
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

struct ModelParams {
    ModelArch arch;
    std::vector<NamedTensor> weights;
    Provenance provenance = Provenance::Natural;
    std::map<std::string, double> hyperparams;

    const Tensor& weight(const std::string& name) const;
    Tensor& weight(const std::string& name);
};

// Fan-in-scaled uniform init: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// biases zero. Deterministic given the rng state.
ModelParams init_model(const ModelArch& arch, RngState& rng);

// Forward graph exposing logits and penultimate features. Parameter and
// input leaves carry requires_grad per the flags.
struct ForwardGraph {
    NodePtr input;
    std::vector<NodePtr> params;  // same order as ModelParams::weights
    NodePtr features;
    NodePtr logits;
};

ForwardGraph build_forward(const ModelParams& model, const Tensor& batch, bool param_grads, bool input_grads);

// Same network on an existing input node (shape [B, per-sample...]); lets
// two models share one input leaf so gradients flow through both.
ForwardGraph build_forward_on(const ModelParams& model, NodePtr input, bool param_grads = false);

// Pure forward passes; batch is [B, ...per-sample shape...].
Tensor forward_logits(const ModelParams& model, const Tensor& batch);
Tensor forward_features(const ModelParams& model, const Tensor& batch);

// A read-only model view whose forward pass optionally perturbs the input
// with fresh uniform noise (amplitude noise_amp) and re-clamps to [-1, 1]
// before the network proper. noise_amp == 0 is a plain view of the model.
struct ModelView {
    const ModelParams* model = nullptr;
    double noise_amp = 0.0;
    RngState* rng = nullptr;

    ModelView() = default;
    ModelView(const ModelParams& m) : model(&m) {}  // NOLINT: implicit by design

    Tensor logits(const Tensor& batch) const;
    ForwardGraph forward(const Tensor& batch, bool param_grads, bool input_grads) const;
    ForwardGraph forward_on(NodePtr input, bool param_grads = false) const;
    std::size_t num_classes() const { return model->arch.num_classes(); }
};

// Single binary file: magic, version, text metadata block, named f64 arrays
// (little-endian). Round trip is bit-exact including provenance metadata.
void save_checkpoint(const ModelParams& model, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace gpga
