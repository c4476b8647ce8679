#include "gpga/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gpga/attack.hpp"
#include "gpga/diagnostics.hpp"

namespace gpga {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string ExperimentConfig::get_str(const std::string& key, const std::string& fallback) const {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ContractViolation("config key " + key + " is not a number: " + it->second);
    }
}

std::size_t ExperimentConfig::get_size(const std::string& key, std::size_t fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw ContractViolation("config key " + key + " is not an integer: " + it->second);
    }
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    return get_size(key, fallback);
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ContractViolation("config key " + key + " is not a boolean: " + it->second);
}

std::vector<double> ExperimentConfig::get_list(const std::string& key, const std::vector<double>& fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(trim(tok)));
    return out;
}

std::vector<std::string> ExperimentConfig::get_str_list(const std::string& key,
                                                        const std::vector<std::string>& fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::vector<std::string> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
    return out;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ContractViolation("cannot open config file: " + path);
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ContractViolation("config " + path + ":" + std::to_string(lineno) + ": expected key=value");
        cfg.kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    cfg.kind = cfg.get_str("experiment");
    return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& kvs) {
    const auto eq = kvs.find('=');
    require(eq != std::string::npos, "override must look like key=value: " + kvs);
    cfg.kv[trim(kvs.substr(0, eq))] = trim(kvs.substr(eq + 1));
    cfg.kind = cfg.get_str("experiment", cfg.kind);
}

// ------------------------------------------------------------- resolution

namespace {

struct SyntheticSpec {
    std::size_t classes, train_per_class, eval_per_class, dim;
    double separation, noise;
};

SyntheticSpec synthetic_spec(const ExperimentConfig& cfg) {
    SyntheticSpec s;
    s.classes = cfg.get_size("dataset.classes", 10);
    s.train_per_class = cfg.get_size("dataset.per_class", 1000);
    s.eval_per_class = cfg.get_size("dataset.eval_per_class", 100);
    s.dim = cfg.get_size("dataset.dim", 784);
    s.separation = cfg.get_double("dataset.separation", 8.0);
    s.noise = cfg.get_double("dataset.noise", 0.35);
    return s;
}

std::pair<Dataset, Dataset> synthetic_pair(const ExperimentConfig& cfg) {
    const SyntheticSpec s = synthetic_spec(cfg);
    RngState rng(cfg.get_u64("seed", 0) ^ 0xda7a5e7ULL);
    return generate_synthetic_split(s.classes, s.train_per_class, s.eval_per_class, s.dim, s.separation, rng,
                                    s.noise);
}

}  // namespace

Dataset resolve_train_dataset(const ExperimentConfig& cfg) {
    if (cfg.get_str("dataset.source", "synthetic") == "idx") {
        Dataset d = load_idx_dataset(cfg.get_str("dataset.images"), cfg.get_str("dataset.labels"));
        d.split = "train";
        return d;
    }
    return synthetic_pair(cfg).first;
}

Dataset resolve_eval_dataset(const ExperimentConfig& cfg) {
    Dataset d;
    if (cfg.get_str("dataset.source", "synthetic") == "idx") {
        d = load_idx_dataset(cfg.get_str("eval.images"), cfg.get_str("eval.labels"));
        d.split = "test";
    } else {
        d = synthetic_pair(cfg).second;
    }
    const std::size_t want = cfg.get_size("eval.count", d.count());
    if (want < d.count()) d = d.slice(0, want);
    return d;
}

ModelArch resolve_arch(const ExperimentConfig& cfg, const Dataset& data) {
    const std::string spec = cfg.get_str("arch", "auto");
    if (spec != "auto") return ModelArch::deserialize(spec);
    const std::size_t classes = std::max<std::size_t>(data.num_classes(), 2);
    const auto& sh = data.images.shape;
    // Two stride-2 3x3 convolutions need at least a 7x7 image; smaller
    // samples (including flat vectors) get an MLP.
    if (sh[2] >= 7 && sh[3] >= 7) return ModelArch::small_cnn(sh[1], sh[2], sh[3], classes);
    return ModelArch::mlp({data.sample_size(), 128, classes});
}

TrainConfig resolve_train_config(const ExperimentConfig& cfg) {
    TrainConfig tc;
    tc.epochs = cfg.get_size("train.epochs", 30);
    tc.batch_size = cfg.get_size("train.batch", 64);
    tc.lr = cfg.get_double("train.lr", 0.05);
    tc.decay_epoch = cfg.get_size("train.decay_epoch", 20);
    tc.decay_factor = cfg.get_double("train.decay_factor", 0.1);
    tc.eps_train = cfg.get_double("train.eps", 0.3);
    tc.eta = cfg.get_double("train.eta", 0.0);
    tc.delta = cfg.get_double("train.delta", 0.0);
    tc.attack_iters = cfg.get_size("train.iters", 10);
    tc.beta = cfg.get_double("train.beta", 0.0);
    tc.seed = cfg.get_u64("seed", 0);
    return tc;
}

namespace {

namespace fs = std::filesystem;

std::string out_dir(const ExperimentConfig& cfg) {
    const std::string dir = cfg.get_str("out_dir", "out");
    fs::create_directories(dir);
    return dir;
}

AttackConfig resolve_attack_config(const ExperimentConfig& cfg) {
    AttackConfig ac;
    ac.epsilon = cfg.get_double("attack.eps", 0.3);
    ac.step = cfg.get_double("attack.step", ac.epsilon / 4.0);
    ac.iterations = cfg.get_size("attack.iters", 20);
    ac.random_init = cfg.get_bool("attack.random_init", false);
    ac.init_scale = cfg.get_double("attack.init_scale", 1.0);
    ac.loss = attack_loss_from_string(cfg.get_str("attack.loss", "ce"));
    ac.delta_smoothing = cfg.get_double("attack.delta", 0.0);
    ac.metric = metric_from_string(cfg.get_str("attack.metric", "cosine"));
    ac.rng = RngState(cfg.get_u64("seed", 0) ^ 0xa77acULL);
    return ac;
}

ModelParams train_by_method(const std::string& method, const ModelArch& arch, const Dataset& data,
                            const TrainConfig& tc, const EpochCallback& cb = {}) {
    if (method == "natural") return train_natural(arch, data, tc, cb);
    if (method == "mask-at" || method == "fgsm-at") return train_mask_at(arch, data, tc, cb);
    if (method == "pgd-at") return train_pgd_at(arch, data, tc, cb);
    if (method == "trades") return train_trades(arch, data, tc, cb);
    throw ContractViolation("unknown training method: " + method);
}

std::string format_g(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

ExperimentReport base_report(const ExperimentConfig& cfg) {
    ExperimentReport r;
    r.experiment_kind = cfg.kind;
    r.resolved_config = cfg.kv;
    r.resolved_config["experiment"] = cfg.kind;
    return r;
}

AttackRow attack_row_from(const std::string& model_id, const ModelParams& model, const std::string& attack_name,
                          const std::string& loss_kind, const AttackConfig& ac, double clean_acc,
                          const AdversarialBatch& run, std::uint64_t seed) {
    AttackRow row;
    row.model_id = model_id;
    row.provenance = to_string(model.provenance);
    row.attack = attack_name;
    row.loss_kind = loss_kind;
    row.epsilon = ac.epsilon;
    row.step = ac.step;
    row.iters = ac.iterations;
    row.clean_acc = clean_acc;
    row.adv_acc = accuracy(model, run.adversarial, run.labels);
    if (!run.grad_l1.empty() && !run.grad_l1[0].empty()) {
        const auto stats = gradient_l1_stats(run);
        double s = 0.0;
        for (double v : stats) s += v;
        row.mean_grad_l1 = s / static_cast<double>(stats.size());
    }
    row.mean_feat_l1 = feature_distortion(model, run.clean, run.adversarial);
    row.seed = seed;
    return row;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// ------------------------------------------------------------ recipes

ExperimentReport run_train(const ExperimentConfig& cfg) {
    ExperimentReport report = base_report(cfg);
    const std::string dir = out_dir(cfg);
    const Dataset data = resolve_train_dataset(cfg);
    const ModelArch arch = resolve_arch(cfg, data);
    const TrainConfig tc = resolve_train_config(cfg);
    const std::string method = cfg.get_str("train.method", "natural");

    std::ostringstream metrics;
    metrics << "epoch,mean_loss,train_acc\n";
    ModelParams model = train_by_method(method, arch, data, tc, [&](const EpochStats& s) {
        metrics << s.epoch << ',';
        metrics.setf(std::ios::fixed);
        metrics.precision(6);
        metrics << s.mean_loss << ',';
        metrics.precision(4);
        metrics << s.train_accuracy << '\n';
        metrics.unsetf(std::ios::fixed);
    });
    const std::string model_id = cfg.get_str("model.id", "model");
    save_checkpoint(model, dir + "/" + model_id + ".ckpt");
    write_text_file(metrics.str(), dir + "/train_metrics.csv");
    report.scalars["train_samples"] = static_cast<double>(data.count());
    write_text_file(to_json(report), dir + "/report.json");
    return report;
}

ExperimentReport run_attack_experiment(const ExperimentConfig& cfg) {
    ExperimentReport report = base_report(cfg);
    const std::string dir = out_dir(cfg);
    const ModelParams model = load_checkpoint(cfg.get_str("model.path"));
    const Dataset eval_set = resolve_eval_dataset(cfg);
    eval_set.validate();
    AttackConfig ac = resolve_attack_config(cfg);
    const std::string kind = cfg.get_str("attack.kind", "pgd");
    const std::uint64_t seed = cfg.get_u64("seed", 0);
    const double clean = accuracy(model, eval_set.images, eval_set.labels);

    AdversarialBatch run;
    std::string loss_kind = to_string(ac.loss);
    if (kind == "fgsm") {
        run = fgsm(model, eval_set.images, eval_set.labels, ac.epsilon, ac.delta_smoothing);
        loss_kind = "ce";
    } else if (kind == "pgd") {
        run = pgd(model, eval_set.images, eval_set.labels, ac);
    } else if (kind == "cw") {
        ac.loss = AttackLoss::Cw;
        loss_kind = "cw";
        run = pgd(model, eval_set.images, eval_set.labels, ac);
    } else if (kind == "gpga") {
        const ModelParams surrogate = load_checkpoint(cfg.get_str("surrogate.path"));
        ac.loss = AttackLoss::MatchDeceive;
        loss_kind = "match-deceive";
        run = gpga(model, surrogate, eval_set.images, eval_set.labels, ac);
    } else {
        throw ContractViolation("unknown attack kind: " + kind);
    }
    report.attack_rows.push_back(
        attack_row_from(stem_of(cfg.get_str("model.path")), model, kind, loss_kind, ac, clean, run, seed));
    write_attack_csv(report.attack_rows, dir + "/attack.csv");
    write_text_file(to_json(report), dir + "/report.json");
    return report;
}

ExperimentReport run_diagnose(const ExperimentConfig& cfg) {
    ExperimentReport report = base_report(cfg);
    const std::string dir = out_dir(cfg);
    const ModelParams model = load_checkpoint(cfg.get_str("model.path"));
    const ModelParams surrogate = load_checkpoint(cfg.get_str("surrogate.path"));
    const Dataset eval_set = resolve_eval_dataset(cfg);

    DiagnosisConfig dc;
    dc.pgd = resolve_attack_config(cfg);
    dc.cw = dc.pgd;
    dc.gpga = dc.pgd;
    dc.gap_threshold = cfg.get_double("diagnose.threshold", 0.10);
    const MaskingReport mr =
        masking_diagnosis(model, surrogate, eval_set, dc, stem_of(cfg.get_str("model.path")));
    report.masking_reports.push_back(mr);

    // Attack table rows mirror the diagnosis numbers.
    const std::uint64_t seed = cfg.get_u64("seed", 0);
    for (const std::string& name : {"pgd", "cw", "gpga"}) {
        AttackRow row;
        row.model_id = mr.model_id;
        row.provenance = mr.provenance;
        row.attack = name;
        row.loss_kind = name == "pgd" ? "ce" : (name == "cw" ? "cw" : "match-deceive");
        row.epsilon = dc.pgd.epsilon;
        row.step = dc.pgd.step;
        row.iters = dc.pgd.iterations;
        row.clean_acc = mr.clean_accuracy;
        row.adv_acc = mr.adversarial_accuracy.at(name);
        row.mean_grad_l1 = mr.mean_gradient_l1.at(name);
        row.mean_feat_l1 = mr.mean_feature_l1.at(name);
        row.seed = seed;
        report.attack_rows.push_back(row);
    }
    write_attack_csv(report.attack_rows, dir + "/attack.csv");
    write_text_file(to_json(mr), dir + "/masking.json");
    write_text_file(to_json(report), dir + "/report.json");
    return report;
}

ExperimentReport run_sweep(const ExperimentConfig& cfg) {
    ExperimentReport report = base_report(cfg);
    const std::string dir = out_dir(cfg);
    const Dataset train_set = resolve_train_dataset(cfg);
    const Dataset eval_set = resolve_eval_dataset(cfg);
    const ModelArch arch = resolve_arch(cfg, train_set);
    const TrainConfig base_tc = resolve_train_config(cfg);
    const auto trainers = cfg.get_str_list("sweep.trainers", {"mask-at"});
    const auto etas = cfg.get_list("sweep.etas", {6.0});
    const auto deltas = cfg.get_list("sweep.deltas", {0.0, 0.25, 0.5, 0.75});

    // Masking-free surrogate shared by every G-PGA evaluation.
    TrainConfig surro_tc = base_tc;
    surro_tc.epochs = cfg.get_size("surrogate.epochs", base_tc.epochs);
    ModelParams surrogate = train_natural(arch, train_set, surro_tc);
    save_checkpoint(surrogate, dir + "/surrogate_natural.ckpt");

    AttackConfig ac = resolve_attack_config(cfg);
    std::ostringstream csv;
    csv << "trainer,eta,delta,clean_acc,pgd_acc,gpga_acc,seed\n";
    csv.setf(std::ios::fixed);

    bool monotone_ok = true;
    std::string monotone_msg;
    for (const auto& trainer : trainers) {
        const bool uses_eta = trainer != "pgd-at";
        const std::vector<double> cell_etas = uses_eta ? etas : std::vector<double>{0.0};
        for (double eta : cell_etas) {
            for (double delta : deltas) {
                TrainConfig tc = base_tc;
                // Optional per-trainer schedule: iterative and single-step
                // trainers converge at very different rates.
                tc.epochs = cfg.get_size("sweep." + trainer + ".epochs", base_tc.epochs);
                tc.decay_epoch = cfg.get_size("sweep." + trainer + ".decay_epoch", base_tc.decay_epoch);
                tc.eta = eta;
                tc.delta = delta;
                ModelParams model = train_by_method(trainer, arch, train_set, tc);
                const std::string tag = trainer + "_eta" + format_g(eta) + "_delta" + format_g(delta);
                save_checkpoint(model, dir + "/model_" + tag + ".ckpt");

                const double clean = accuracy(model, eval_set.images, eval_set.labels);
                AttackConfig pgd_ac = ac;
                pgd_ac.loss = AttackLoss::Ce;
                const AdversarialBatch run_pgd = pgd(model, eval_set.images, eval_set.labels, pgd_ac);
                AttackConfig gp_ac = ac;
                gp_ac.loss = AttackLoss::MatchDeceive;
                const AdversarialBatch run_gp = gpga(model, surrogate, eval_set.images, eval_set.labels, gp_ac);
                const double pgd_acc = accuracy(model, run_pgd.adversarial, run_pgd.labels);
                const double gpga_acc = accuracy(model, run_gp.adversarial, run_gp.labels);

                csv.precision(4);
                csv << trainer << ',' << format_g(eta) << ',' << format_g(delta) << ',' << clean << ',' << pgd_acc
                    << ',' << gpga_acc << ',' << base_tc.seed << '\n';
                report.scalars["clean_" + tag] = clean;
                report.scalars["pgd_" + tag] = pgd_acc;
                report.scalars["gpga_" + tag] = gpga_acc;

                // Attack-strength monotonicity on masked-model cells
                // (smoothing at or above 0.5); 2-point slack for
                // near-random models.
                if (trainer == "mask-at" && delta >= 0.5 && (gpga_acc > pgd_acc + 0.02 || pgd_acc > clean + 0.02)) {
                    monotone_ok = false;
                    monotone_msg = "monotonicity violated at cell " + tag;
                }
            }
        }
    }
    report.complete = monotone_ok;
    write_text_file(csv.str(), dir + "/sweep.csv");
    write_text_file(to_json(report), dir + "/report.json");
    if (!monotone_ok) throw Error(monotone_msg);
    return report;
}

ExperimentReport run_ablate_surrogate(const ExperimentConfig& cfg) {
    ExperimentReport report = base_report(cfg);
    const std::string dir = out_dir(cfg);
    const ModelParams model = load_checkpoint(cfg.get_str("model.path"));
    const Dataset train_set = resolve_train_dataset(cfg);
    const Dataset eval_set = resolve_eval_dataset(cfg);
    const TrainConfig tc = resolve_train_config(cfg);
    const std::uint64_t seed = cfg.get_u64("seed", 0);

    auto surrogate_named = [&](const std::string& name) -> ModelParams {
        const std::string key = "surrogate." + name + ".path";
        if (cfg.has(key)) return load_checkpoint(cfg.get_str(key));
        if (name == "natural") return train_natural(model.arch, train_set, tc);
        if (name == "trades") {
            TrainConfig t2 = tc;
            t2.beta = cfg.get_double("surrogate.trades.beta", 1.0);
            return train_trades(model.arch, train_set, t2);
        }
        if (name == "mlp") {
            const ModelArch mlp_arch =
                ModelArch::mlp({train_set.sample_size(), 128, model.arch.num_classes()});
            return train_natural(mlp_arch, train_set, tc);
        }
        throw ContractViolation("unknown surrogate tag: " + name);
    };

    AttackConfig ac = resolve_attack_config(cfg);
    const double clean = accuracy(model, eval_set.images, eval_set.labels);

    AttackConfig pgd_ac = ac;
    pgd_ac.loss = AttackLoss::Ce;
    const AdversarialBatch run_pgd = pgd(model, eval_set.images, eval_set.labels, pgd_ac);
    report.attack_rows.push_back(attack_row_from("target", model, "pgd", "ce", pgd_ac, clean, run_pgd, seed));

    for (const std::string& name : {"natural", "trades", "mlp"}) {
        const ModelParams surrogate = surrogate_named(name);
        save_checkpoint(surrogate, dir + "/surrogate_" + name + ".ckpt");
        AttackConfig gp_ac = ac;
        gp_ac.loss = AttackLoss::MatchDeceive;
        const AdversarialBatch run = gpga(model, surrogate, eval_set.images, eval_set.labels, gp_ac);
        report.attack_rows.push_back(
            attack_row_from("target", model, "gpga-" + name, "match-deceive", gp_ac, clean, run, seed));
    }
    write_attack_csv(report.attack_rows, dir + "/ablate_surrogate.csv");
    write_text_file(to_json(report), dir + "/report.json");
    return report;
}

ExperimentReport run_ablate_metric(const ExperimentConfig& cfg) {
    ExperimentReport report = base_report(cfg);
    const std::string dir = out_dir(cfg);
    const ModelParams model = load_checkpoint(cfg.get_str("model.path"));
    const ModelParams surrogate = load_checkpoint(cfg.get_str("surrogate.path"));
    const Dataset eval_set = resolve_eval_dataset(cfg);
    const std::uint64_t seed = cfg.get_u64("seed", 0);
    AttackConfig ac = resolve_attack_config(cfg);
    ac.loss = AttackLoss::MatchDeceive;
    const double clean = accuracy(model, eval_set.images, eval_set.labels);

    for (const auto metric : {SimilarityMetric::Cosine, SimilarityMetric::NegL1, SimilarityMetric::NegL2}) {
        AttackConfig m_ac = ac;
        m_ac.metric = metric;
        const AdversarialBatch run = gpga(model, surrogate, eval_set.images, eval_set.labels, m_ac);
        report.attack_rows.push_back(attack_row_from("target", model, "gpga-" + to_string(metric), "match-deceive",
                                                     m_ac, clean, run, seed));
    }
    write_attack_csv(report.attack_rows, dir + "/ablate_metric.csv");
    write_text_file(to_json(report), dir + "/report.json");
    return report;
}

ExperimentReport run_noisy_inference(const ExperimentConfig& cfg) {
    ExperimentReport report = base_report(cfg);
    const std::string dir = out_dir(cfg);
    const ModelParams model = load_checkpoint(cfg.get_str("model.path"));
    const Dataset eval_set = resolve_eval_dataset(cfg);
    const std::uint64_t seed = cfg.get_u64("seed", 0);
    AttackConfig ac = resolve_attack_config(cfg);
    const double eta = cfg.get_double("noisy.eta", 1.0);

    RngState noise_rng(seed ^ 0x9019eULL);
    const ModelView wrapped = randomized_inference_wrapper(model, eta, ac.epsilon, noise_rng);

    report.scalars["clean_acc_plain"] = accuracy(model, eval_set.images, eval_set.labels);
    report.scalars["clean_acc_wrapped"] = accuracy(wrapped, eval_set.images, eval_set.labels);
    report.scalars["eta"] = eta;

    AttackConfig pgd_ac = ac;
    pgd_ac.loss = AttackLoss::Ce;
    const AdversarialBatch run_pgd = pgd(wrapped, eval_set.images, eval_set.labels, pgd_ac);
    AttackRow row;
    row.model_id = stem_of(cfg.get_str("model.path"));
    row.provenance = to_string(model.provenance);
    row.attack = "pgd-wrapped";
    row.loss_kind = "ce";
    row.epsilon = pgd_ac.epsilon;
    row.step = pgd_ac.step;
    row.iters = pgd_ac.iterations;
    row.clean_acc = report.scalars["clean_acc_wrapped"];
    row.adv_acc = accuracy(wrapped, run_pgd.adversarial, run_pgd.labels);
    row.mean_feat_l1 = feature_distortion(model, run_pgd.clean, run_pgd.adversarial);
    if (!run_pgd.grad_l1.empty() && !run_pgd.grad_l1[0].empty()) {
        const auto stats = gradient_l1_stats(run_pgd);
        double s = 0.0;
        for (double v : stats) s += v;
        row.mean_grad_l1 = s / static_cast<double>(stats.size());
    }
    row.seed = seed;
    report.attack_rows.push_back(row);

    if (cfg.has("surrogate.path")) {
        const ModelParams surrogate = load_checkpoint(cfg.get_str("surrogate.path"));
        AttackConfig gp_ac = ac;
        gp_ac.loss = AttackLoss::MatchDeceive;
        const AdversarialBatch run = gpga(wrapped, surrogate, eval_set.images, eval_set.labels, gp_ac);
        AttackRow grow = row;
        grow.attack = "gpga-wrapped";
        grow.loss_kind = "match-deceive";
        grow.adv_acc = accuracy(wrapped, run.adversarial, run.labels);
        grow.mean_feat_l1 = feature_distortion(model, run.clean, run.adversarial);
        const auto stats = gradient_l1_stats(run);
        double s = 0.0;
        for (double v : stats) s += v;
        grow.mean_grad_l1 = s / static_cast<double>(stats.size());
        report.attack_rows.push_back(grow);
    }
    write_attack_csv(report.attack_rows, dir + "/noisy_inference.csv");
    write_text_file(to_json(report), dir + "/report.json");
    return report;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind == "train") return run_train(cfg);
    if (cfg.kind == "attack") return run_attack_experiment(cfg);
    if (cfg.kind == "diagnose") return run_diagnose(cfg);
    if (cfg.kind == "sweep-eta-delta") return run_sweep(cfg);
    if (cfg.kind == "ablate-surrogate") return run_ablate_surrogate(cfg);
    if (cfg.kind == "ablate-metric") return run_ablate_metric(cfg);
    if (cfg.kind == "noisy-inference") return run_noisy_inference(cfg);
    throw ContractViolation("unknown experiment kind: " + cfg.kind);
}

}  // namespace gpga
