#include "gpga/training.hpp"

#include <cmath>

#include "gpga/losses.hpp"

namespace gpga {

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, RngState& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.next_below(i)]);
    return idx;
}

// Stacked (optionally smoothed) targets, [B, N].
Tensor batch_targets(const std::vector<std::size_t>& labels, double delta, std::size_t n) {
    Tensor t = Tensor::zeros({labels.size(), n});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const LabelDistribution d = smooth_labels(one_hot(labels[i], n), delta);
        std::copy(d.probs.data.begin(), d.probs.data.end(), t.data.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    return t;
}

void apply_sgd(ModelParams& model, std::initializer_list<const ForwardGraph*> graphs, double lr) {
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        Tensor& w = model.weights[i].tensor;
        for (const ForwardGraph* g : graphs) {
            const NodePtr& p = g->params[i];
            if (!p->grad_ready) continue;
            for (std::size_t j = 0; j < w.size(); ++j) w.data[j] -= lr * p->grad.data[j];
        }
    }
}

double batch_accuracy(const Tensor& logits, const std::vector<std::size_t>& labels) {
    const std::size_t n = logits.size() / labels.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (argmax(logits.data.data() + i * n, n) == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

// Batched FGSM step for training: sum-of-CE loss makes each input-grad row
// the gradient of that sample's own loss, identical to per-sample runs.
Tensor fgsm_step(const ModelParams& model, const Tensor& x, const Tensor& targets, double epsilon) {
    ForwardGraph g = build_forward(model, x, false, true);
    backward(cross_entropy(g.logits, targets));
    Tensor adv = x;
    for (std::size_t j = 0; j < adv.size(); ++j) adv.data[j] += epsilon * sign0(g.input->grad.data[j]);
    clamp_inplace(adv, -1.0, 1.0);
    return adv;
}

void project_rows(Tensor& adv, const Tensor& clean, double eps) {
    for (std::size_t j = 0; j < adv.size(); ++j) {
        const double lo = clean.data[j] - eps, hi = clean.data[j] + eps;
        double v = adv.data[j];
        v = v < lo ? lo : (v > hi ? hi : v);
        adv.data[j] = v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
    }
}

void assert_within_budget(const Tensor& adv, const Tensor& clean, double eps) {
    require(linf_dist(adv, clean) <= eps + 1e-9, "training adversary exceeded the training epsilon");
}

struct TrainState {
    ModelParams model;
    RngState shuffle_rng;
    RngState attack_rng;
};

TrainState init_state(const ModelArch& arch, const TrainConfig& config, Provenance prov) {
    RngState root(config.seed);
    RngState init_rng = root.split();
    TrainState s{init_model(arch, init_rng), root.split(), root.split()};
    s.model.provenance = prov;
    s.model.hyperparams = {{"epochs", static_cast<double>(config.epochs)},
                           {"batch", static_cast<double>(config.batch_size)},
                           {"lr", config.lr},
                           {"eps", config.eps_train},
                           {"eta", config.eta},
                           {"delta", config.delta},
                           {"attack_iters", static_cast<double>(config.attack_iters)},
                           {"beta", config.beta},
                           {"seed", static_cast<double>(config.seed)}};
    return s;
}

double epoch_lr(const TrainConfig& c, std::size_t epoch) {
    return epoch >= c.decay_epoch ? c.lr * c.decay_factor : c.lr;
}

// Shared epoch/batch loop; make_adv builds training inputs for one batch
// (identity for natural training), update runs forward/backward/SGD and
// returns (loss, accuracy-weighted count).
template <typename MakeAdv, typename Update>
ModelParams run_training(const ModelArch& arch, const Dataset& data, const TrainConfig& config, Provenance prov,
                         const EpochCallback& on_epoch, MakeAdv make_adv, Update update) {
    data.validate();
    require(data.num_classes() <= arch.num_classes(), "dataset labels exceed arch class count");
    TrainState s = init_state(arch, config, prov);
    const std::size_t n = data.count();
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = epoch_lr(config, epoch);
        const auto order = shuffled_indices(n, s.shuffle_rng);
        double loss_sum = 0.0, acc_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t len = std::min(config.batch_size, n - start);
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(start + len));
            std::vector<std::size_t> labels(len);
            for (std::size_t i = 0; i < len; ++i) labels[i] = data.labels[idx[i]];
            Tensor x = data.sample_batch(idx);
            Tensor adv = make_adv(s, x, labels);
            auto [loss, acc] = update(s, x, adv, labels, lr);
            loss_sum += loss;
            acc_sum += acc;
            ++batches;
        }
        if (on_epoch) on_epoch({epoch, loss_sum / static_cast<double>(batches),
                                acc_sum / static_cast<double>(batches)});
    }
    return s.model;
}

// Plain CE update on the given inputs (clean or adversarial).
std::pair<double, double> ce_update(TrainState& s, const Tensor& inputs, const std::vector<std::size_t>& labels,
                                    double delta, double lr) {
    const std::size_t ncls = s.model.arch.num_classes();
    ForwardGraph g = build_forward(s.model, inputs, true, false);
    NodePtr loss = scale(cross_entropy(g.logits, batch_targets(labels, delta, ncls)),
                         1.0 / static_cast<double>(labels.size()));
    backward(loss);
    apply_sgd(s.model, {&g}, lr);
    return {loss->value.data[0], batch_accuracy(g.logits->value, labels)};
}

Tensor pgd_train_adversaries(TrainState& s, const Tensor& x, const std::vector<std::size_t>& labels,
                             const TrainConfig& config) {
    const std::size_t ncls = s.model.arch.num_classes();
    const double eps = config.eps_train;
    const double step = 2.5 * eps / static_cast<double>(config.attack_iters);
    Tensor adv = x;
    for (auto& v : adv.data) v += s.attack_rng.uniform(-eps, eps);
    project_rows(adv, x, eps);
    const Tensor targets = batch_targets(labels, config.delta, ncls);
    for (std::size_t k = 0; k < config.attack_iters; ++k) {
        ForwardGraph g = build_forward(s.model, adv, false, true);
        backward(cross_entropy(g.logits, targets));
        for (std::size_t j = 0; j < adv.size(); ++j) adv.data[j] += step * sign0(g.input->grad.data[j]);
        project_rows(adv, x, eps);
    }
    assert_within_budget(adv, x, eps);
    return adv;
}

}  // namespace

ModelParams train_natural(const ModelArch& arch, const Dataset& data, const TrainConfig& config,
                          const EpochCallback& on_epoch) {
    return run_training(
        arch, data, config, Provenance::Natural, on_epoch,
        [](TrainState&, const Tensor& x, const std::vector<std::size_t>&) { return x; },
        [&](TrainState& s, const Tensor&, const Tensor& adv, const std::vector<std::size_t>& labels, double lr) {
            return ce_update(s, adv, labels, 0.0, lr);
        });
}

ModelParams train_mask_at(const ModelArch& arch, const Dataset& data, const TrainConfig& config,
                          const EpochCallback& on_epoch) {
    require(config.eps_train > 0.0, "mask-at: eps_train must be positive");
    require(config.eta >= 0.0, "mask-at: eta must be non-negative");
    require(config.delta >= 0.0 && config.delta <= 1.0, "mask-at: delta must lie in [0, 1]");
    const Provenance prov = (config.eta == 0.0 && config.delta == 0.0) ? Provenance::FgsmAt : Provenance::MaskAt;
    return run_training(
        arch, data, config, prov, on_epoch,
        [&](TrainState& s, const Tensor& x, const std::vector<std::size_t>& labels) {
            const std::size_t ncls = s.model.arch.num_classes();
            const double eps = config.eps_train;
            // Random step of amplitude eta*eps, clamped to the pixel range.
            Tensor stepped = x;
            if (config.eta > 0.0) {
                const double a = config.eta * eps;
                for (auto& v : stepped.data) v += s.attack_rng.uniform(-a, a);
                clamp_inplace(stepped, -1.0, 1.0);
            }
            Tensor adv = fgsm_step(s.model, stepped, batch_targets(labels, config.delta, ncls), eps);
            project_rows(adv, x, eps);
            assert_within_budget(adv, x, eps);
            return adv;
        },
        [&](TrainState& s, const Tensor&, const Tensor& adv, const std::vector<std::size_t>& labels, double lr) {
            return ce_update(s, adv, labels, config.delta, lr);
        });
}

ModelParams train_pgd_at(const ModelArch& arch, const Dataset& data, const TrainConfig& config,
                         const EpochCallback& on_epoch) {
    require(config.eps_train > 0.0, "pgd-at: eps_train must be positive");
    require(config.attack_iters >= 1, "pgd-at: attack_iters must be at least 1");
    return run_training(
        arch, data, config, Provenance::PgdAt, on_epoch,
        [&](TrainState& s, const Tensor& x, const std::vector<std::size_t>& labels) {
            return pgd_train_adversaries(s, x, labels, config);
        },
        [&](TrainState& s, const Tensor&, const Tensor& adv, const std::vector<std::size_t>& labels, double lr) {
            return ce_update(s, adv, labels, config.delta, lr);
        });
}

ModelParams train_trades(const ModelArch& arch, const Dataset& data, const TrainConfig& config,
                         const EpochCallback& on_epoch) {
    require(config.beta >= 0.0, "trades: beta must be non-negative");
    if (config.beta == 0.0) {
        // Converges to natural training; take that path exactly.
        ModelParams m = train_natural(arch, data, config, on_epoch);
        m.provenance = Provenance::Trades;
        m.hyperparams["beta"] = 0.0;
        return m;
    }
    require(config.eps_train > 0.0, "trades: eps_train must be positive");
    const std::size_t inner_iters = 10;
    return run_training(
        arch, data, config, Provenance::Trades, on_epoch,
        [&](TrainState& s, const Tensor& x, const std::vector<std::size_t>&) {
            // Inner maximization of KL(softmax(f(x~)) || softmax(f(x))).
            const double eps = config.eps_train;
            const double step = eps / 4.0;
            const Tensor clean_logits = forward_logits(s.model, x);
            Tensor adv = x;
            for (auto& v : adv.data) v += 0.001 * s.attack_rng.normal();
            project_rows(adv, x, eps);
            for (std::size_t k = 0; k < inner_iters; ++k) {
                ForwardGraph g = build_forward(s.model, adv, false, true);
                auto ref = Node::leaf(clean_logits);
                backward(kl_divergence_logits(g.logits, ref));
                for (std::size_t j = 0; j < adv.size(); ++j) adv.data[j] += step * sign0(g.input->grad.data[j]);
                project_rows(adv, x, eps);
            }
            assert_within_budget(adv, x, eps);
            return adv;
        },
        [&](TrainState& s, const Tensor& x, const Tensor& adv, const std::vector<std::size_t>& labels, double lr) {
            const std::size_t ncls = s.model.arch.num_classes();
            const double inv_b = 1.0 / static_cast<double>(labels.size());
            ForwardGraph gc = build_forward(s.model, x, true, false);
            ForwardGraph ga = build_forward(s.model, adv, true, false);
            NodePtr ce = cross_entropy(gc.logits, batch_targets(labels, 0.0, ncls));
            NodePtr kl = kl_divergence_logits(ga.logits, gc.logits);
            NodePtr loss = scale(add(ce, scale(kl, config.beta)), inv_b);
            backward(loss);
            apply_sgd(s.model, {&gc, &ga}, lr);
            return std::pair<double, double>{loss->value.data[0], batch_accuracy(gc.logits->value, labels)};
        });
}

}  // namespace gpga
