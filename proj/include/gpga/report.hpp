#pragma once

#include <map>
#include <string>
#include <vector>

#include "gpga/diagnostics.hpp"

namespace gpga {

inline constexpr const char* kToolkitVersion = "1.0.0";
inline constexpr int kReportSchemaVersion = 1;

// One attack-evaluation row of the CSV attack table. Column order is fixed:
// model_id, provenance, attack, loss_kind, epsilon, step, iters, clean_acc,
// adv_acc, mean_grad_l1, mean_feat_l1, seed.
struct AttackRow {
    std::string model_id;
    std::string provenance;
    std::string attack;
    std::string loss_kind;
    double epsilon = 0.0;
    double step = 0.0;
    std::size_t iters = 0;
    double clean_acc = 0.0;
    double adv_acc = 0.0;
    double mean_grad_l1 = 0.0;
    double mean_feat_l1 = 0.0;
    std::uint64_t seed = 0;
};

std::string attack_csv_header();
std::string attack_csv_row(const AttackRow& r);
void write_attack_csv(const std::vector<AttackRow>& rows, const std::string& path);

// Structured experiment record; serialized to schema-versioned JSON with
// the fully resolved config embedded for provenance.
struct ExperimentReport {
    std::string experiment_kind;
    std::map<std::string, std::string> resolved_config;
    std::vector<AttackRow> attack_rows;
    std::vector<MaskingReport> masking_reports;
    std::map<std::string, double> scalars;
    bool complete = true;
};

std::string to_json(const MaskingReport& r);
std::string to_json(const ExperimentReport& r);
void write_text_file(const std::string& content, const std::string& path);

}  // namespace gpga
