#pragma once

#include <vector>

#include "gpga/losses.hpp"
#include "gpga/model.hpp"

namespace gpga {

enum class AttackLoss { Ce, Cw, MatchDeceive };

std::string to_string(AttackLoss l);
AttackLoss attack_loss_from_string(const std::string& s);

struct AttackConfig {
    double epsilon = 0.3;       // l-inf budget in [-1,1] pixel units
    double step = 0.075;        // kappa
    std::size_t iterations = 20;
    bool random_init = false;
    double init_scale = 1.0;    // random init drawn from [-scale*eps, +scale*eps]
    AttackLoss loss = AttackLoss::Ce;
    double delta_smoothing = 0.0;  // label smoothing for the CE loss
    SimilarityMetric metric = SimilarityMetric::Cosine;
    RngState rng{0};
};

struct AdversarialBatch {
    Tensor clean;                 // [B, per-sample...]
    Tensor adversarial;
    std::vector<std::size_t> labels;
    // grad_l1[t][i] = |g_t|_1 of sample i at iteration t.
    std::vector<std::vector<double>> grad_l1;
    std::vector<bool> success;    // misclassified after the attack
    double epsilon = 0.0;

    std::size_t batch_size() const { return labels.size(); }
};

// Single-step sign attack with (optionally smoothed) cross-entropy.
AdversarialBatch fgsm(const ModelView& model, const Tensor& x, const std::vector<std::size_t>& labels, double epsilon,
                      double delta_smoothing);

// Iterative sign ascent with per-iteration projection to the eps-ball and
// the [-1,1] pixel range. Loss kind ce or cw per config.
AdversarialBatch pgd(const ModelView& model, const Tensor& x, const std::vector<std::size_t>& labels,
                     AttackConfig config);

// Guided attack: starts at x (no random restart), maximizes the
// match-and-deceive loss through both the target and surrogate paths.
AdversarialBatch gpga(const ModelView& model_f, const ModelView& surrogate_h, const Tensor& x,
                      const std::vector<std::size_t>& labels, AttackConfig config);

// Model view that adds fresh uniform noise of amplitude eta*epsilon to the
// input on every forward query, then clamps to the pixel range.
ModelView randomized_inference_wrapper(const ModelParams& model, double eta, double epsilon, RngState& rng);

// Fraction of samples classified correctly (fresh noise per query under a
// noisy view). Exact count bookkeeping; division happens once at the end.
double accuracy(const ModelView& model, const Tensor& x, const std::vector<std::size_t>& labels);

}  // namespace gpga
