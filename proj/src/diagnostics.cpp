#include "gpga/diagnostics.hpp"

#include <numeric>

namespace gpga {

std::vector<double> gradient_l1_stats(const AdversarialBatch& run) {
    require(!run.grad_l1.empty() && !run.grad_l1[0].empty(), "gradient_l1_stats: empty gradient trace");
    std::vector<double> means;
    means.reserve(run.grad_l1.size());
    for (const auto& iter : run.grad_l1) {
        double s = std::accumulate(iter.begin(), iter.end(), 0.0);
        means.push_back(s / static_cast<double>(iter.size()));
    }
    return means;
}

double feature_distortion(const ModelParams& model, const Tensor& clean, const Tensor& adversarial) {
    require(clean.same_shape(adversarial), "feature_distortion: shape mismatch");
    const Tensor fc = forward_features(model, clean);
    const Tensor fa = forward_features(model, adversarial);
    const std::size_t b = clean.shape[0];
    const std::size_t fs = fc.size() / b;
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < fs; ++j) s += std::fabs(fa.data[i * fs + j] - fc.data[i * fs + j]);
        total += s;
    }
    return total / static_cast<double>(b);
}

namespace {

double overall_mean(const std::vector<double>& per_iter) {
    return std::accumulate(per_iter.begin(), per_iter.end(), 0.0) / static_cast<double>(per_iter.size());
}

std::size_t count_correct(const ModelParams& model, const Tensor& x, const std::vector<std::size_t>& labels) {
    const Tensor logits = forward_logits(model, x);
    const std::size_t n = model.arch.num_classes();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (argmax(logits.data.data() + i * n, n) == labels[i]) ++correct;
    return correct;
}

}  // namespace

MaskingReport masking_diagnosis(const ModelParams& model, const ModelParams& surrogate, const Dataset& eval_set,
                                DiagnosisConfig config, const std::string& model_id) {
    eval_set.validate();
    require(config.gap_threshold > 0.0, "masking_diagnosis: threshold must be positive");
    const std::size_t total = eval_set.count();

    MaskingReport r;
    r.model_id = model_id;
    r.provenance = to_string(model.provenance);
    r.gap_threshold = config.gap_threshold;
    r.clean_accuracy =
        static_cast<double>(count_correct(model, eval_set.images, eval_set.labels)) / static_cast<double>(total);

    config.pgd.loss = AttackLoss::Ce;
    config.cw.loss = AttackLoss::Cw;
    config.gpga.loss = AttackLoss::MatchDeceive;

    const AdversarialBatch run_pgd = pgd(model, eval_set.images, eval_set.labels, config.pgd);
    const AdversarialBatch run_cw = pgd(model, eval_set.images, eval_set.labels, config.cw);
    const AdversarialBatch run_gpga = gpga(model, surrogate, eval_set.images, eval_set.labels, config.gpga);

    // Counts first, one division at the end.
    auto record = [&](const std::string& name, const AdversarialBatch& run) {
        const std::size_t correct = count_correct(model, run.adversarial, run.labels);
        r.adversarial_accuracy[name] = static_cast<double>(correct) / static_cast<double>(total);
        r.mean_gradient_l1[name] = overall_mean(gradient_l1_stats(run));
        r.mean_feature_l1[name] = feature_distortion(model, run.clean, run.adversarial);
    };
    record("pgd", run_pgd);
    record("cw", run_cw);
    record("gpga", run_gpga);

    r.masking_gap = r.adversarial_accuracy["pgd"] - r.adversarial_accuracy["gpga"];
    r.verdict = r.masking_gap > config.gap_threshold ? "suspected-masking" : "no-masking";
    return r;
}

}  // namespace gpga
