#include "gpga/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gpga {

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::Natural: return "natural";
        case Provenance::FgsmAt: return "fgsm-at";
        case Provenance::MaskAt: return "mask-at";
        case Provenance::PgdAt: return "pgd-at";
        case Provenance::Trades: return "trades";
    }
    return "natural";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "natural") return Provenance::Natural;
    if (s == "fgsm-at") return Provenance::FgsmAt;
    if (s == "mask-at") return Provenance::MaskAt;
    if (s == "pgd-at") return Provenance::PgdAt;
    if (s == "trades") return Provenance::Trades;
    throw ContractViolation("unknown provenance: " + s);
}

std::string to_string(ArchKind k) { return k == ArchKind::Mlp ? "mlp" : "small-cnn"; }

ArchKind arch_kind_from_string(const std::string& s) {
    if (s == "mlp") return ArchKind::Mlp;
    if (s == "small-cnn") return ArchKind::SmallCnn;
    throw ContractViolation("unknown arch kind: " + s);
}

ModelArch ModelArch::mlp(std::vector<std::size_t> widths) {
    ModelArch a;
    a.kind = ArchKind::Mlp;
    a.mlp_widths = std::move(widths);
    a.validate();
    return a;
}

ModelArch ModelArch::small_cnn(std::size_t in_channels, std::size_t in_h, std::size_t in_w, std::size_t classes) {
    ModelArch a;
    a.kind = ArchKind::SmallCnn;
    a.in_channels = in_channels;
    a.in_h = in_h;
    a.in_w = in_w;
    a.cnn_classes = classes;
    a.validate();
    return a;
}

std::size_t ModelArch::num_classes() const {
    return kind == ArchKind::Mlp ? mlp_widths.back() : cnn_classes;
}

std::size_t ModelArch::input_size() const {
    return kind == ArchKind::Mlp ? mlp_widths.front() : in_channels * in_h * in_w;
}

std::vector<std::size_t> ModelArch::input_shape_per_sample() const {
    if (kind == ArchKind::Mlp) return {mlp_widths.front()};
    return {in_channels, in_h, in_w};
}

void ModelArch::validate() const {
    if (kind == ArchKind::Mlp) {
        require(mlp_widths.size() >= 2, "mlp arch needs at least input and output widths");
        for (auto w : mlp_widths) require(w >= 1, "mlp widths must be positive");
    } else {
        require(in_h >= kernel && in_w >= kernel, "cnn input smaller than kernel");
        const std::size_t h1 = (in_h - kernel) / stride + 1, w1 = (in_w - kernel) / stride + 1;
        require(h1 >= kernel && w1 >= kernel, "cnn input too small for two conv layers");
    }
    require(num_classes() >= 2, "arch must have at least 2 classes");
}

std::string ModelArch::serialize() const {
    std::ostringstream os;
    if (kind == ArchKind::Mlp) {
        os << "mlp";
        for (auto w : mlp_widths) os << ":" << w;
    } else {
        os << "small-cnn:" << in_channels << ":" << in_h << ":" << in_w << ":" << conv1_channels << ":"
           << conv2_channels << ":" << kernel << ":" << stride << ":" << fc_width << ":" << cnn_classes;
    }
    return os.str();
}

ModelArch ModelArch::deserialize(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    require(!parts.empty(), "empty arch string");
    ModelArch a;
    if (parts[0] == "mlp") {
        a.kind = ArchKind::Mlp;
        for (std::size_t i = 1; i < parts.size(); ++i) a.mlp_widths.push_back(std::stoull(parts[i]));
    } else if (parts[0] == "small-cnn") {
        require(parts.size() == 10, "malformed small-cnn arch string");
        a.kind = ArchKind::SmallCnn;
        a.in_channels = std::stoull(parts[1]);
        a.in_h = std::stoull(parts[2]);
        a.in_w = std::stoull(parts[3]);
        a.conv1_channels = std::stoull(parts[4]);
        a.conv2_channels = std::stoull(parts[5]);
        a.kernel = std::stoull(parts[6]);
        a.stride = std::stoull(parts[7]);
        a.fc_width = std::stoull(parts[8]);
        a.cnn_classes = std::stoull(parts[9]);
    } else {
        throw ContractViolation("unknown arch string: " + s);
    }
    a.validate();
    return a;
}

const Tensor& ModelParams::weight(const std::string& name) const {
    for (const auto& nt : weights)
        if (nt.name == name) return nt.tensor;
    throw ContractViolation("no such weight: " + name);
}

Tensor& ModelParams::weight(const std::string& name) {
    for (auto& nt : weights)
        if (nt.name == name) return nt.tensor;
    throw ContractViolation("no such weight: " + name);
}

namespace {

Tensor fan_in_uniform(std::vector<std::size_t> shape, std::size_t fan_in, RngState& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return uniform_noise(std::move(shape), -bound, bound, rng);
}

}  // namespace

ModelParams init_model(const ModelArch& arch, RngState& rng) {
    arch.validate();
    ModelParams p;
    p.arch = arch;
    if (arch.kind == ArchKind::Mlp) {
        for (std::size_t l = 0; l + 1 < arch.mlp_widths.size(); ++l) {
            const std::size_t in = arch.mlp_widths[l], out = arch.mlp_widths[l + 1];
            const std::string tag = "fc" + std::to_string(l);
            p.weights.push_back({tag + ".w", fan_in_uniform({in, out}, in, rng)});
            p.weights.push_back({tag + ".b", Tensor::zeros({out})});
        }
    } else {
        const std::size_t k = arch.kernel;
        const std::size_t h1 = (arch.in_h - k) / arch.stride + 1, w1 = (arch.in_w - k) / arch.stride + 1;
        const std::size_t h2 = (h1 - k) / arch.stride + 1, w2 = (w1 - k) / arch.stride + 1;
        const std::size_t flat = arch.conv2_channels * h2 * w2;
        p.weights.push_back(
            {"conv1.w", fan_in_uniform({arch.conv1_channels, arch.in_channels, k, k}, arch.in_channels * k * k, rng)});
        p.weights.push_back({"conv1.b", Tensor::zeros({arch.conv1_channels})});
        p.weights.push_back({"conv2.w", fan_in_uniform({arch.conv2_channels, arch.conv1_channels, k, k},
                                                       arch.conv1_channels * k * k, rng)});
        p.weights.push_back({"conv2.b", Tensor::zeros({arch.conv2_channels})});
        p.weights.push_back({"fc1.w", fan_in_uniform({flat, arch.fc_width}, flat, rng)});
        p.weights.push_back({"fc1.b", Tensor::zeros({arch.fc_width})});
        p.weights.push_back({"fc2.w", fan_in_uniform({arch.fc_width, arch.cnn_classes}, arch.fc_width, rng)});
        p.weights.push_back({"fc2.b", Tensor::zeros({arch.cnn_classes})});
    }
    return p;
}

namespace {

// Accepts [B, per-sample...] or a bare per-sample tensor (implicit B=1).
Tensor as_batch(const ModelArch& arch, const Tensor& t) {
    const auto per = arch.input_shape_per_sample();
    const std::size_t psize = Tensor::numel(per);
    require(t.size() % psize == 0, "batch size not a multiple of the per-sample input size");
    const std::size_t b = t.size() / psize;
    if (arch.kind == ArchKind::Mlp) return Tensor({b, psize}, t.data);
    return Tensor({b, arch.in_channels, arch.in_h, arch.in_w}, t.data);
}

}  // namespace

ForwardGraph build_forward(const ModelParams& model, const Tensor& batch, bool param_grads, bool input_grads) {
    return build_forward_on(model, Node::leaf(as_batch(model.arch, batch), input_grads), param_grads);
}

ForwardGraph build_forward_on(const ModelParams& model, NodePtr input, bool param_grads) {
    ForwardGraph g;
    g.input = std::move(input);
    require(g.input->value.shape.size() >= 2 &&
                g.input->value.size() / g.input->value.shape[0] == model.arch.input_size(),
            "build_forward_on: input shape inconsistent with arch");
    for (const auto& nt : model.weights) g.params.push_back(Node::leaf(nt.tensor, param_grads));
    const std::size_t b = g.input->value.shape[0];
    if (model.arch.kind == ArchKind::Mlp) {
        // Flatten in-graph so an image-shaped input node (e.g. one shared
        // with a convolutional model) still feeds the linear stack.
        NodePtr h = g.input->value.shape.size() == 2 ? g.input : reshape(g.input, {b, model.arch.input_size()});
        const std::size_t layers = g.params.size() / 2;
        for (std::size_t l = 0; l < layers; ++l) {
            h = add_rowvec(matmul(h, g.params[2 * l]), g.params[2 * l + 1]);
            if (l + 1 < layers) {
                h = relu(h);
                g.features = h;
            }
        }
        if (!g.features) g.features = g.input;  // single linear layer
        g.logits = h;
    } else {
        const auto& a = model.arch;
        NodePtr h = relu(conv2d(g.input, g.params[0], g.params[1], a.stride));
        h = relu(conv2d(h, g.params[2], g.params[3], a.stride));
        const std::size_t flat = h->value.size() / b;
        h = reshape(h, {b, flat});
        h = relu(add_rowvec(matmul(h, g.params[4]), g.params[5]));
        g.features = h;
        g.logits = add_rowvec(matmul(h, g.params[6]), g.params[7]);
    }
    return g;
}

Tensor forward_logits(const ModelParams& model, const Tensor& batch) {
    return build_forward(model, batch, false, false).logits->value;
}

Tensor forward_features(const ModelParams& model, const Tensor& batch) {
    return build_forward(model, batch, false, false).features->value;
}

ForwardGraph ModelView::forward(const Tensor& batch, bool param_grads, bool input_grads) const {
    require(model != nullptr, "ModelView: no model");
    NodePtr input = Node::leaf(as_batch(model->arch, batch), input_grads);
    ForwardGraph g = forward_on(input, param_grads);
    g.input = std::move(input);
    return g;
}

ForwardGraph ModelView::forward_on(NodePtr input, bool param_grads) const {
    require(model != nullptr, "ModelView: no model");
    NodePtr eff = input;
    if (noise_amp > 0.0) {
        require(rng != nullptr, "ModelView: noisy view needs an rng");
        // Fresh noise per query, applied inside the graph so white-box
        // gradients see the perturbed-and-clamped input.
        Tensor noise = uniform_noise(input->value.shape, -noise_amp, noise_amp, *rng);
        eff = clampn(add(std::move(eff), Node::leaf(std::move(noise))), -1.0, 1.0);
    }
    ForwardGraph g = build_forward_on(*model, std::move(eff), param_grads);
    g.input = std::move(input);
    return g;
}

Tensor ModelView::logits(const Tensor& batch) const { return forward(batch, false, false).logits->value; }

// ------------------------------------------------------------- checkpoint

namespace {

constexpr char kMagic[] = "GPGACKPT";
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw FileFormatError(FileFormatError::Kind::Truncated, "checkpoint truncated");
    return v;
}

std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    if (!is) throw FileFormatError(FileFormatError::Kind::Truncated, "checkpoint truncated");
    return v;
}

}  // namespace

void save_checkpoint(const ModelParams& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FileFormatError(FileFormatError::Kind::Io, "cannot open checkpoint for writing: " + path);
    os.write(kMagic, 8);
    write_u32(os, kVersion);

    std::ostringstream meta;
    meta << "arch=" << model.arch.serialize() << "\n";
    meta << "provenance=" << to_string(model.provenance) << "\n";
    for (const auto& [k, v] : model.hyperparams) {
        std::ostringstream num;
        num.precision(17);
        num << v;
        meta << "hyper." << k << "=" << num.str() << "\n";
    }
    const std::string m = meta.str();
    write_u32(os, static_cast<std::uint32_t>(m.size()));
    os.write(m.data(), static_cast<std::streamsize>(m.size()));

    write_u32(os, static_cast<std::uint32_t>(model.weights.size()));
    for (const auto& nt : model.weights) {
        write_u32(os, static_cast<std::uint32_t>(nt.name.size()));
        os.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
        write_u32(os, static_cast<std::uint32_t>(nt.tensor.shape.size()));
        for (auto d : nt.tensor.shape) write_u64(os, d);
        os.write(reinterpret_cast<const char*>(nt.tensor.data.data()),
                 static_cast<std::streamsize>(nt.tensor.data.size() * sizeof(double)));
    }
    if (!os) throw FileFormatError(FileFormatError::Kind::Io, "write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FileFormatError(FileFormatError::Kind::Io, "cannot open checkpoint: " + path);
    char magic[8] = {};
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw FileFormatError(FileFormatError::Kind::BadMagic, "not a checkpoint file: " + path);
    const std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw FileFormatError(FileFormatError::Kind::VersionMismatch,
                              "checkpoint version " + std::to_string(version) + ", expected " +
                                  std::to_string(kVersion));

    const std::uint32_t meta_len = read_u32(is);
    std::string meta(meta_len, '\0');
    is.read(meta.data(), meta_len);
    if (!is) throw FileFormatError(FileFormatError::Kind::Truncated, "checkpoint truncated in metadata");

    ModelParams p;
    std::istringstream ms(meta);
    std::string line;
    bool have_arch = false;
    while (std::getline(ms, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "arch") {
            p.arch = ModelArch::deserialize(val);
            have_arch = true;
        } else if (key == "provenance") {
            p.provenance = provenance_from_string(val);
        } else if (key.rfind("hyper.", 0) == 0) {
            p.hyperparams[key.substr(6)] = std::stod(val);
        }
    }
    if (!have_arch) throw FileFormatError(FileFormatError::Kind::BadMagic, "checkpoint metadata lacks arch");

    const std::uint32_t n = read_u32(is);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t name_len = read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const std::uint32_t ndim = read_u32(is);
        std::vector<std::size_t> shape;
        for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(read_u64(is));
        Tensor t = Tensor::zeros(shape);
        is.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!is) throw FileFormatError(FileFormatError::Kind::Truncated, "checkpoint truncated in tensor " + name);
        p.weights.push_back({std::move(name), std::move(t)});
    }

    // Shape consistency against the declared arch.
    RngState probe(0);
    ModelParams ref = init_model(p.arch, probe);
    if (ref.weights.size() != p.weights.size())
        throw FileFormatError(FileFormatError::Kind::ShapeMismatch, "checkpoint weight count mismatch");
    for (std::size_t i = 0; i < ref.weights.size(); ++i)
        if (ref.weights[i].name != p.weights[i].name || ref.weights[i].tensor.shape != p.weights[i].tensor.shape)
            throw FileFormatError(FileFormatError::Kind::ShapeMismatch,
                                  "checkpoint weight " + p.weights[i].name + " inconsistent with arch");
    return p;
}

}  // namespace gpga
