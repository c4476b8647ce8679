#include "gpga/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "gpga/error.hpp"

namespace gpga {

std::size_t Dataset::num_classes() const {
    std::size_t n = 0;
    for (auto l : labels) n = std::max(n, l + 1);
    return n;
}

void Dataset::validate() const {
    require(!labels.empty(), "dataset: empty");
    require(images.shape.size() == 4 && images.shape[0] == labels.size(), "dataset: image/label count mismatch");
    for (double v : images.data) require(v >= -1.0 && v <= 1.0, "dataset: pixel outside [-1, 1]");
}

Dataset Dataset::slice(std::size_t begin, std::size_t len) const {
    require(begin + len <= count(), "dataset slice out of range");
    const std::size_t ps = sample_size();
    Dataset d;
    d.split = split;
    d.source = source;
    d.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    labels.begin() + static_cast<std::ptrdiff_t>(begin + len));
    auto shape = images.shape;
    shape[0] = len;
    d.images = Tensor(shape, std::vector<double>(images.data.begin() + static_cast<std::ptrdiff_t>(begin * ps),
                                                 images.data.begin() + static_cast<std::ptrdiff_t>((begin + len) * ps)));
    return d;
}

Tensor Dataset::sample_batch(const std::vector<std::size_t>& indices) const {
    const std::size_t ps = sample_size();
    auto shape = images.shape;
    shape[0] = indices.size();
    Tensor batch = Tensor::zeros(shape);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        require(indices[i] < count(), "sample_batch: index out of range");
        std::copy(images.data.begin() + static_cast<std::ptrdiff_t>(indices[i] * ps),
                  images.data.begin() + static_cast<std::ptrdiff_t>((indices[i] + 1) * ps),
                  batch.data.begin() + static_cast<std::ptrdiff_t>(i * ps));
    }
    return batch;
}

namespace {

std::uint32_t read_be_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw FileFormatError(FileFormatError::Kind::Truncated, "idx file truncated reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw FileFormatError(FileFormatError::Kind::Io, "cannot open idx image file: " + images_path);
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw FileFormatError(FileFormatError::Kind::Io, "cannot open idx label file: " + labels_path);

    const std::uint32_t img_magic = read_be_u32(imgs, "image magic");
    if (img_magic != 0x00000803)
        throw FileFormatError(FileFormatError::Kind::BadMagic, "bad idx image magic in " + images_path);
    const std::uint32_t n_images = read_be_u32(imgs, "image count");
    const std::uint32_t rows = read_be_u32(imgs, "rows");
    const std::uint32_t cols = read_be_u32(imgs, "cols");

    const std::uint32_t lab_magic = read_be_u32(labs, "label magic");
    if (lab_magic != 0x00000801)
        throw FileFormatError(FileFormatError::Kind::BadMagic, "bad idx label magic in " + labels_path);
    const std::uint32_t n_labels = read_be_u32(labs, "label count");
    if (n_images != n_labels)
        throw FileFormatError(FileFormatError::Kind::CountMismatch,
                              "idx count mismatch: " + std::to_string(n_images) + " images vs " +
                                  std::to_string(n_labels) + " labels");

    Dataset d;
    d.source = DatasetSource::IdxFiles;
    d.images = Tensor::zeros({n_images, 1, rows, cols});
    std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        imgs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!imgs) throw FileFormatError(FileFormatError::Kind::Truncated, "idx image file truncated at image " +
                                                                               std::to_string(i));
        for (std::size_t j = 0; j < buf.size(); ++j)
            d.images.data[i * buf.size() + j] = static_cast<double>(buf[j]) / 127.5 - 1.0;
    }
    d.labels.resize(n_labels);
    for (std::uint32_t i = 0; i < n_labels; ++i) {
        unsigned char l;
        labs.read(reinterpret_cast<char*>(&l), 1);
        if (!labs) throw FileFormatError(FileFormatError::Kind::Truncated, "idx label file truncated at label " +
                                                                               std::to_string(i));
        d.labels[i] = l;
    }
    return d;
}

Dataset generate_synthetic(std::size_t classes, std::size_t per_class, std::size_t dim, double separation,
                           RngState& rng, double noise_sigma) {
    require(classes >= 2, "generate_synthetic: need at least 2 classes");
    require(per_class >= 1, "generate_synthetic: per_class must be positive");
    require(dim >= 1, "generate_synthetic: dim must be positive");

    // Class means: random directions scaled to the requested separation.
    std::vector<Tensor> means;
    for (std::size_t c = 0; c < classes; ++c) {
        Tensor m = Tensor::zeros({dim});
        for (auto& v : m.data) v = rng.normal();
        const double norm = l2_norm(m);
        for (auto& v : m.data) v *= separation / norm;
        means.push_back(std::move(m));
    }

    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dim))));
    const bool square = side * side == dim;
    Dataset d;
    d.source = DatasetSource::SyntheticBlobs;
    d.images = square ? Tensor::zeros({classes * per_class, 1, side, side})
                      : Tensor::zeros({classes * per_class, 1, 1, dim});
    d.labels.resize(classes * per_class);
    std::size_t idx = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t s = 0; s < per_class; ++s, ++idx) {
            d.labels[idx] = c;
            for (std::size_t j = 0; j < dim; ++j) {
                double v = means[c].data[j] + noise_sigma * rng.normal();
                d.images.data[idx * dim + j] = v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
            }
        }
    }
    return d;
}

std::pair<Dataset, Dataset> generate_synthetic_split(std::size_t classes, std::size_t train_per_class,
                                                     std::size_t eval_per_class, std::size_t dim, double separation,
                                                     RngState& rng, double noise_sigma) {
    Dataset all = generate_synthetic(classes, train_per_class + eval_per_class, dim, separation, rng, noise_sigma);
    const std::size_t block = train_per_class + eval_per_class;
    const std::size_t ps = all.sample_size();
    auto take = [&](std::size_t offset, std::size_t len, const std::string& split) {
        Dataset d;
        d.source = DatasetSource::SyntheticBlobs;
        d.split = split;
        auto shape = all.images.shape;
        shape[0] = classes * len;
        d.images = Tensor::zeros(shape);
        d.labels.resize(classes * len);
        std::size_t out = 0;
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t s = 0; s < len; ++s, ++out) {
                const std::size_t src = c * block + offset + s;
                d.labels[out] = all.labels[src];
                std::copy(all.images.data.begin() + static_cast<std::ptrdiff_t>(src * ps),
                          all.images.data.begin() + static_cast<std::ptrdiff_t>((src + 1) * ps),
                          d.images.data.begin() + static_cast<std::ptrdiff_t>(out * ps));
            }
        }
        return d;
    };
    return {take(0, train_per_class, "train"), take(train_per_class, eval_per_class, "test")};
}

}  // namespace gpga
