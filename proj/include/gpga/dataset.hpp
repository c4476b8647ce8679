#pragma once

#include <string>
#include <vector>

#include "gpga/rng.hpp"
#include "gpga/tensor.hpp"

namespace gpga {

enum class DatasetSource { IdxFiles, SyntheticBlobs };

struct Dataset {
    Tensor images;  // [count, channels, H, W], values in [-1, 1]
    std::vector<std::size_t> labels;
    std::string split = "train";
    DatasetSource source = DatasetSource::SyntheticBlobs;

    std::size_t count() const { return labels.size(); }
    std::size_t sample_size() const { return labels.empty() ? 0 : images.size() / labels.size(); }
    std::size_t num_classes() const;
    void validate() const;

    // Contiguous slice [begin, begin+len) as a new dataset.
    Dataset slice(std::size_t begin, std::size_t len) const;
    Tensor sample_batch(const std::vector<std::size_t>& indices) const;
};

// Canonical IDX pair: big-endian, image magic 0x00000803, label magic
// 0x00000801, unsigned bytes. Pixels map v -> v/127.5 - 1 into [-1, 1].
Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path);

// Gaussian blobs: per-class mean of norm `separation` in pixel space,
// samples clamped to [-1, 1]. Shapes to [count, 1, side, side] when dim is
// a perfect square, else [count, 1, 1, dim].
Dataset generate_synthetic(std::size_t classes, std::size_t per_class, std::size_t dim, double separation,
                           RngState& rng, double noise_sigma = 0.3);

// Train/eval pair drawn around the same class means.
std::pair<Dataset, Dataset> generate_synthetic_split(std::size_t classes, std::size_t train_per_class,
                                                     std::size_t eval_per_class, std::size_t dim, double separation,
                                                     RngState& rng, double noise_sigma = 0.3);

}  // namespace gpga
