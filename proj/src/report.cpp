#include "gpga/report.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gpga {

namespace {

std::string fixed4(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << v;
    return os.str();
}

std::string fixed6(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

std::string attack_csv_header() {
    return "model_id,provenance,attack,loss_kind,epsilon,step,iters,clean_acc,adv_acc,mean_grad_l1,mean_feat_l1,seed";
}

std::string attack_csv_row(const AttackRow& r) {
    std::ostringstream os;
    os << r.model_id << ',' << r.provenance << ',' << r.attack << ',' << r.loss_kind << ',' << fixed6(r.epsilon)
       << ',' << fixed6(r.step) << ',' << r.iters << ',' << fixed4(r.clean_acc) << ',' << fixed4(r.adv_acc) << ','
       << fixed6(r.mean_grad_l1) << ',' << fixed6(r.mean_feat_l1) << ',' << r.seed;
    return os.str();
}

void write_attack_csv(const std::vector<AttackRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw FileFormatError(FileFormatError::Kind::Io, "cannot write csv: " + path);
    os << attack_csv_header() << '\n';
    for (const auto& r : rows) os << attack_csv_row(r) << '\n';
    if (!os) throw FileFormatError(FileFormatError::Kind::Io, "csv write failed: " + path);
}

namespace {

nlohmann::ordered_json masking_to_json(const MaskingReport& r) {
    nlohmann::ordered_json j;
    j["model_id"] = r.model_id;
    j["provenance"] = r.provenance;
    j["clean_accuracy"] = r.clean_accuracy;
    j["adversarial_accuracy"] = r.adversarial_accuracy;
    j["mean_gradient_l1"] = r.mean_gradient_l1;
    j["mean_feature_l1"] = r.mean_feature_l1;
    j["masking_gap"] = r.masking_gap;
    j["gap_threshold"] = r.gap_threshold;
    j["verdict"] = r.verdict;
    return j;
}

}  // namespace

std::string to_json(const MaskingReport& r) { return masking_to_json(r).dump(2); }

std::string to_json(const ExperimentReport& r) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["toolkit_version"] = kToolkitVersion;
    j["experiment_kind"] = r.experiment_kind;
    j["complete"] = r.complete;
    j["resolved_config"] = r.resolved_config;
    j["scalars"] = r.scalars;
    j["attack_rows"] = nlohmann::ordered_json::array();
    for (const auto& row : r.attack_rows) {
        nlohmann::ordered_json o;
        o["model_id"] = row.model_id;
        o["provenance"] = row.provenance;
        o["attack"] = row.attack;
        o["loss_kind"] = row.loss_kind;
        o["epsilon"] = row.epsilon;
        o["step"] = row.step;
        o["iters"] = row.iters;
        o["clean_acc"] = row.clean_acc;
        o["adv_acc"] = row.adv_acc;
        o["mean_grad_l1"] = row.mean_grad_l1;
        o["mean_feat_l1"] = row.mean_feat_l1;
        o["seed"] = row.seed;
        j["attack_rows"].push_back(o);
    }
    j["masking_reports"] = nlohmann::ordered_json::array();
    for (const auto& m : r.masking_reports) j["masking_reports"].push_back(masking_to_json(m));
    return j.dump(2);
}

void write_text_file(const std::string& content, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw FileFormatError(FileFormatError::Kind::Io, "cannot write file: " + path);
    os << content;
    if (!content.empty() && content.back() != '\n') os << '\n';
    if (!os) throw FileFormatError(FileFormatError::Kind::Io, "write failed: " + path);
}

}  // namespace gpga
