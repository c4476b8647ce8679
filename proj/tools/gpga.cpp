// Command-line front end: each verb resolves to an experiment recipe run
// from a key=value config file plus --set overrides.
//
// Exit codes: 0 success, 1 usage/configuration error, 2 runtime failure.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "gpga/harness.hpp"

namespace {

gpga::ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                                   const std::string& forced_kind) {
    gpga::ExperimentConfig cfg;
    if (!path.empty()) cfg = gpga::parse_config_file(path);
    for (const auto& kv : overrides) gpga::apply_override(cfg, kv);
    if (!forced_kind.empty()) cfg.kind = forced_kind;
    if (cfg.kind.empty()) throw gpga::ContractViolation("no experiment kind: pass a config or a verb");
    return cfg;
}

void write_be32(std::ofstream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_idx_pair(const gpga::Dataset& d, const std::string& images_path, const std::string& labels_path) {
    const auto& sh = d.images.shape;
    std::ofstream img(images_path, std::ios::binary);
    gpga::require(static_cast<bool>(img), "cannot write " + images_path);
    write_be32(img, 0x00000803u);
    write_be32(img, static_cast<std::uint32_t>(sh[0]));
    write_be32(img, static_cast<std::uint32_t>(sh[2]));
    write_be32(img, static_cast<std::uint32_t>(sh[3]));
    for (double v : d.images.data) {
        const long p = std::lround((v + 1.0) * 127.5);
        img.put(static_cast<char>(std::min(255L, std::max(0L, p))));
    }
    std::ofstream lab(labels_path, std::ios::binary);
    gpga::require(static_cast<bool>(lab), "cannot write " + labels_path);
    write_be32(lab, 0x00000801u);
    write_be32(lab, static_cast<std::uint32_t>(d.labels.size()));
    for (std::size_t y : d.labels) lab.put(static_cast<char>(y));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradient-masking toolkit: single-step adversarial training and guided attacks"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string ablate_what = "surrogate";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "key=value config file");
        sub->add_option("-s,--set", overrides, "override, e.g. --set seed=7")->take_all();
    };

    CLI::App* v_train = app.add_subcommand("train", "train a model and save a checkpoint");
    CLI::App* v_attack = app.add_subcommand("attack", "evaluate one attack against a checkpoint");
    CLI::App* v_diag = app.add_subcommand("diagnose", "gradient-masking diagnosis (PGD vs CW vs guided)");
    CLI::App* v_sweep = app.add_subcommand("sweep", "train over an eta/delta grid and evaluate");
    CLI::App* v_ablate = app.add_subcommand("ablate", "surrogate or metric ablation of the guided attack");
    CLI::App* v_noisy = app.add_subcommand("noisy", "attack through a randomized-inference wrapper");
    CLI::App* v_run = app.add_subcommand("run", "run whatever `experiment` the config names");
    CLI::App* v_gen = app.add_subcommand("gen-data", "write a synthetic dataset as an IDX pair");
    for (CLI::App* sub : {v_train, v_attack, v_diag, v_sweep, v_ablate, v_noisy, v_run, v_gen}) add_common(sub);
    v_ablate->add_option("what", ablate_what, "surrogate | metric")
        ->check(CLI::IsMember({"surrogate", "metric"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        std::string kind;
        if (v_train->parsed()) kind = "train";
        else if (v_attack->parsed()) kind = "attack";
        else if (v_diag->parsed()) kind = "diagnose";
        else if (v_sweep->parsed()) kind = "sweep-eta-delta";
        else if (v_ablate->parsed()) kind = "ablate-" + ablate_what;
        else if (v_noisy->parsed()) kind = "noisy-inference";

        gpga::ExperimentConfig cfg = load_config(config_path, overrides, kind);

        if (v_gen->parsed()) {
            const auto split = cfg.get_str("gen.split", "train");
            gpga::Dataset d = split == "train" ? gpga::resolve_train_dataset(cfg) : gpga::resolve_eval_dataset(cfg);
            write_idx_pair(d, cfg.get_str("gen.images", split + "-images.idx"),
                           cfg.get_str("gen.labels", split + "-labels.idx"));
            std::cout << "wrote " << d.count() << " samples (" << split << ")\n";
            return 0;
        }

        const gpga::ExperimentReport report = gpga::run_experiment(cfg);
        std::cout << report.experiment_kind << ": " << (report.complete ? "ok" : "incomplete") << ", "
                  << report.attack_rows.size() << " attack rows, " << report.masking_reports.size()
                  << " masking reports\n";
        for (const auto& mr : report.masking_reports)
            std::cout << "verdict " << mr.model_id << ": " << mr.verdict << " (gap "
                      << mr.masking_gap << ")\n";
        return report.complete ? 0 : 2;
    } catch (const gpga::ContractViolation& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const gpga::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
