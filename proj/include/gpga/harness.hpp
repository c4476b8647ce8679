#pragma once

#include <map>
#include <string>
#include <vector>

#include "gpga/dataset.hpp"
#include "gpga/report.hpp"
#include "gpga/training.hpp"

namespace gpga {

// Flat, typed key-value experiment configuration. Keys are documented in
// the README; a config file supplies defaults and CLI flags override.
struct ExperimentConfig {
    std::string kind;  // train | attack | diagnose | sweep-eta-delta |
                       // ablate-surrogate | ablate-metric | noisy-inference
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) > 0; }
    std::string get_str(const std::string& key, const std::string& fallback = "") const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::string> get_str_list(const std::string& key, const std::vector<std::string>& fallback) const;
};

// Config file grammar: one `key=value` per line; blank lines and lines
// starting with '#' ignored. The `experiment` key selects the kind.
ExperimentConfig parse_config_file(const std::string& path);
void apply_override(ExperimentConfig& cfg, const std::string& key_equals_value);

// Train/eval datasets resolved from the config (idx files or synthetic
// blobs on independent substreams of the seed).
Dataset resolve_train_dataset(const ExperimentConfig& cfg);
Dataset resolve_eval_dataset(const ExperimentConfig& cfg);

ModelArch resolve_arch(const ExperimentConfig& cfg, const Dataset& data);
TrainConfig resolve_train_config(const ExperimentConfig& cfg);

// Executes the recipe, writing JSON/CSV/checkpoints under `out_dir`.
// Throws on failure; partial outputs are marked incomplete.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

}  // namespace gpga
