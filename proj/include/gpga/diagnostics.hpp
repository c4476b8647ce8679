#pragma once

#include <map>
#include <string>
#include <vector>

#include "gpga/attack.hpp"
#include "gpga/dataset.hpp"

namespace gpga {

struct MaskingReport {
    std::string model_id;
    std::string provenance;
    double clean_accuracy = 0.0;
    std::map<std::string, double> adversarial_accuracy;  // attack name -> fraction
    std::map<std::string, double> mean_gradient_l1;      // attack name -> mean |g_t|_1
    std::map<std::string, double> mean_feature_l1;       // attack name -> mean feature distortion
    double masking_gap = 0.0;                            // acc(pgd) - acc(gpga)
    std::string verdict;                                 // no-masking | suspected-masking
    double gap_threshold = 0.1;
};

// Mean over samples of |g_t|_1 per iteration t, from recorded traces.
std::vector<double> gradient_l1_stats(const AdversarialBatch& run);

// Mean over samples of |features(x~) - features(x)|_1.
double feature_distortion(const ModelParams& model, const Tensor& clean, const Tensor& adversarial);

struct DiagnosisConfig {
    AttackConfig pgd;       // CE loss
    AttackConfig cw;        // CW loss
    AttackConfig gpga;      // match-and-deceive loss
    double gap_threshold = 0.10;
};

// Runs clean eval, PGD, CW-PGD, and G-PGA; verdict is suspected-masking iff
// acc(PGD) - acc(G-PGA) exceeds the threshold.
MaskingReport masking_diagnosis(const ModelParams& model, const ModelParams& surrogate, const Dataset& eval_set,
                                DiagnosisConfig config, const std::string& model_id = "model");

}  // namespace gpga
