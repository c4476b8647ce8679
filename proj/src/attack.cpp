#include "gpga/attack.hpp"

#include <cmath>
#include <iostream>

namespace gpga {

std::string to_string(AttackLoss l) {
    switch (l) {
        case AttackLoss::Ce: return "ce";
        case AttackLoss::Cw: return "cw";
        case AttackLoss::MatchDeceive: return "match-deceive";
    }
    return "ce";
}

AttackLoss attack_loss_from_string(const std::string& s) {
    if (s == "ce") return AttackLoss::Ce;
    if (s == "cw") return AttackLoss::Cw;
    if (s == "match-deceive") return AttackLoss::MatchDeceive;
    throw ContractViolation("unknown attack loss: " + s);
}

namespace {

std::size_t per_sample_size(const Tensor& x, std::size_t batch) {
    require(batch > 0 && x.size() % batch == 0, "attack: bad batch shape");
    return x.size() / batch;
}

Tensor slice_sample(const Tensor& x, std::size_t i, std::size_t psize, const std::vector<std::size_t>& pshape) {
    Tensor t = Tensor::zeros(pshape);
    std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(i * psize),
              x.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * psize), t.data.begin());
    return t;
}

void store_sample(Tensor& x, std::size_t i, const Tensor& sample) {
    std::copy(sample.data.begin(), sample.data.end(), x.data.begin() + static_cast<std::ptrdiff_t>(i * sample.size()));
}

void project_ball(Tensor& adv, const Tensor& clean, double eps) {
    for (std::size_t j = 0; j < adv.size(); ++j) {
        const double lo = clean.data[j] - eps, hi = clean.data[j] + eps;
        double v = adv.data[j];
        v = v < lo ? lo : (v > hi ? hi : v);
        adv.data[j] = v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
    }
}

bool predicts(const ModelView& model, const Tensor& sample, std::size_t label) {
    const Tensor logits = model.logits(sample);
    return argmax(logits.data.data(), logits.size()) == label;
}

AdversarialBatch make_batch(const Tensor& x, const std::vector<std::size_t>& labels, double eps) {
    AdversarialBatch out;
    out.clean = x;
    out.adversarial = x;
    out.labels = labels;
    out.epsilon = eps;
    return out;
}

}  // namespace

AdversarialBatch fgsm(const ModelView& model, const Tensor& x, const std::vector<std::size_t>& labels, double epsilon,
                      double delta_smoothing) {
    require(epsilon > 0.0, "fgsm: epsilon must be positive");
    const std::size_t n = model.num_classes();
    const std::size_t psize = per_sample_size(x, labels.size());
    const auto pshape = model.model->arch.input_shape_per_sample();
    AdversarialBatch out = make_batch(x, labels, epsilon);
    out.grad_l1.resize(1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        Tensor xi = slice_sample(x, i, psize, pshape);
        ForwardGraph g = model.forward(xi, false, true);
        const LabelDistribution target = smooth_labels(one_hot(labels[i], n), delta_smoothing);
        backward(cross_entropy(g.logits, target.probs));
        const Tensor& grad = g.input->grad;
        out.grad_l1[0].push_back(l1_norm(grad));
        Tensor adv = xi;
        for (std::size_t j = 0; j < adv.size(); ++j) adv.data[j] += epsilon * sign0(grad.data[j]);
        clamp_inplace(adv, -1.0, 1.0);
        store_sample(out.adversarial, i, adv);
        out.success.push_back(!predicts(model, adv, labels[i]));
    }
    return out;
}

AdversarialBatch pgd(const ModelView& model, const Tensor& x, const std::vector<std::size_t>& labels,
                     AttackConfig config) {
    require(config.epsilon > 0.0 && config.step > 0.0, "pgd: epsilon and step must be positive");
    if (config.step > 2.0 * config.epsilon)
        std::cerr << "warning: pgd step " << config.step << " exceeds 2*epsilon\n";
    const std::size_t n = model.num_classes();
    const std::size_t psize = per_sample_size(x, labels.size());
    const auto pshape = model.model->arch.input_shape_per_sample();
    AdversarialBatch out = make_batch(x, labels, config.epsilon);
    out.grad_l1.resize(config.iterations);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Tensor xi = slice_sample(x, i, psize, pshape);
        Tensor adv = xi;
        if (config.random_init) {
            const double a = config.init_scale * config.epsilon;
            for (auto& v : adv.data) v += config.rng.uniform(-a, a);
            project_ball(adv, xi, config.epsilon);
        }
        for (std::size_t t = 0; t < config.iterations; ++t) {
            ForwardGraph g = model.forward(adv, false, true);
            NodePtr loss;
            if (config.loss == AttackLoss::Ce) {
                const LabelDistribution target = smooth_labels(one_hot(labels[i], n), config.delta_smoothing);
                loss = cross_entropy(g.logits, target.probs);
            } else {
                loss = cw_margin(g.logits, labels[i]);
            }
            backward(loss);
            const Tensor& grad = g.input->grad;
            out.grad_l1[t].push_back(l1_norm(grad));
            for (std::size_t j = 0; j < adv.size(); ++j) adv.data[j] += config.step * sign0(grad.data[j]);
            project_ball(adv, xi, config.epsilon);
        }
        store_sample(out.adversarial, i, adv);
        out.success.push_back(!predicts(model, adv, labels[i]));
    }
    return out;
}

AdversarialBatch gpga(const ModelView& model_f, const ModelView& surrogate_h, const Tensor& x,
                      const std::vector<std::size_t>& labels, AttackConfig config) {
    require(config.epsilon > 0.0 && config.step > 0.0, "gpga: epsilon and step must be positive");
    require(model_f.num_classes() == surrogate_h.num_classes(), "gpga: class count mismatch between f and h");
    const std::size_t n = model_f.num_classes();
    const std::size_t psize = per_sample_size(x, labels.size());
    const auto pshape = model_f.model->arch.input_shape_per_sample();
    AdversarialBatch out = make_batch(x, labels, config.epsilon);
    out.grad_l1.resize(config.iterations);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Tensor xi = slice_sample(x, i, psize, pshape);
        Tensor adv = xi;  // no random restart
        const Tensor y = one_hot(labels[i], n);
        // f(x) is constant w.r.t. x~; recomputed per iteration only when the
        // view is stochastic (fresh noise per forward query).
        const bool static_view = model_f.noise_amp <= 0.0;
        Tensor v_cached;
        if (static_view) v_cached = model_f.logits(xi);
        for (std::size_t t = 0; t < config.iterations; ++t) {
            // Both networks see the same adversarial input leaf so the
            // gradient carries the surrogate path as well.
            ForwardGraph gf = model_f.forward(adv, false, true);
            ForwardGraph gh = surrogate_h.forward_on(gf.input);
            const Tensor v_clean = static_view ? v_cached : model_f.logits(xi);
            LogitTriple triple;
            triple.u = reshape(gf.logits, {n});
            triple.v = Node::leaf(Tensor({n}, v_clean.data));
            triple.z = reshape(gh.logits, {n});
            backward(match_and_deceive(triple, y, config.metric));
            const Tensor& grad = gf.input->grad;
            out.grad_l1[t].push_back(l1_norm(grad));
            // Ascent: L_md is maximized.
            for (std::size_t j = 0; j < adv.size(); ++j) adv.data[j] += config.step * sign0(grad.data[j]);
            project_ball(adv, xi, config.epsilon);
        }
        store_sample(out.adversarial, i, adv);
        out.success.push_back(!predicts(model_f, adv, labels[i]));
    }
    return out;
}

ModelView randomized_inference_wrapper(const ModelParams& model, double eta, double epsilon, RngState& rng) {
    require(eta >= 0.0, "randomized_inference_wrapper: eta must be non-negative");
    ModelView view(model);
    view.noise_amp = eta * epsilon;
    view.rng = &rng;
    return view;
}

double accuracy(const ModelView& model, const Tensor& x, const std::vector<std::size_t>& labels) {
    require(!labels.empty(), "accuracy: empty batch");
    const Tensor logits = model.logits(x);
    const std::size_t n = model.num_classes();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (argmax(logits.data.data() + i * n, n) == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace gpga
