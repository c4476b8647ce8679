#pragma once

#include <functional>

#include "gpga/dataset.hpp"
#include "gpga/model.hpp"

namespace gpga {

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double lr = 0.05;
    std::size_t decay_epoch = 20;    // lr *= decay_factor at this epoch (1-based)
    double decay_factor = 0.1;
    double eps_train = 0.3;          // training perturbation budget
    double eta = 0.0;                // random-step scale (Mask-AT)
    double delta = 0.0;              // label smoothing
    std::size_t attack_iters = 10;   // iterative-AT inner iterations
    double beta = 0.0;               // Trades tradeoff
    std::uint64_t seed = 0;
};

// Per-epoch metrics row consumed by the harness.
struct EpochStats {
    std::size_t epoch;
    double mean_loss;
    double train_accuracy;
};

using EpochCallback = std::function<void(const EpochStats&)>;

ModelParams train_natural(const ModelArch& arch, const Dataset& data, const TrainConfig& config,
                          const EpochCallback& on_epoch = {});

// Algorithm: per sample, a uniform random step of amplitude eta*eps, pixel
// clamp, an FGSM step with smoothed labels, clip back into the eps-ball and
// pixel range; parameters then minimize ce(f(x~), y-hat).
ModelParams train_mask_at(const ModelArch& arch, const Dataset& data, const TrainConfig& config,
                          const EpochCallback& on_epoch = {});

// Madry-style iterative adversarial training (random init, K inner steps).
ModelParams train_pgd_at(const ModelArch& arch, const Dataset& data, const TrainConfig& config,
                         const EpochCallback& on_epoch = {});

// ce(f(x), y) + beta * KL(softmax(f(x~)) || softmax(f(x))); beta = 0 takes
// the natural-training path exactly (same loss values per batch).
ModelParams train_trades(const ModelArch& arch, const Dataset& data, const TrainConfig& config,
                         const EpochCallback& on_epoch = {});

}  // namespace gpga
