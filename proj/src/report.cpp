#include "embaug/harness.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace embaug {

namespace {

using nlohmann::json;

// Snapshot of the knobs that determine results. Execution details (thread
// count) and per-unit seeds (derived per arm, fold, and replication) are
// excluded, so the bytes depend only on what the run computed.
json config_json(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["mil_seeds"] = c.mil_seeds;
    j["n_augs"] = c.n_augs;
    j["pairs_per_instance"] = c.pairs_per_instance;
    j["max_gan_pairs"] = c.max_gan_pairs;
    j["p_apply"] = c.p_apply;
    j["gan"] = {{"lambda_cos", c.gan.lambda_cos},
                {"lr_g", c.gan.lr_g},
                {"lr_d", c.gan.lr_d},
                {"weight_decay", c.gan.weight_decay},
                {"batch_size", c.gan.batch_size},
                {"epochs", c.gan.epochs},
                {"conditional_disc", c.gan.conditional_disc},
                {"holdout_fraction", c.gan.holdout_fraction}};
    j["mil"] = {{"d_att", c.mil.d_att},
                {"epochs", c.mil.epochs},
                {"lr", c.mil.lr},
                {"weight_decay", c.mil.weight_decay}};
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ContractError("report: cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ContractError("report: failed writing " + path.string());
}

std::string format_cell(double mean, double sd) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f +/- %.4f", mean, sd);
    return buf;
}

}  // namespace

std::string report_json(const ExperimentReport& rep) {
    json j;
    j["schema_version"] = rep.schema_version;
    j["dataset"] = {{"seed", rep.dataset_seed},
                    {"d", rep.d},
                    {"k", rep.K},
                    {"n_bags", rep.n_bags},
                    {"sigma", rep.sigma}};
    j["config"] = config_json(rep.config);

    json folds = json::array();
    for (const FoldSplit& split : rep.plan.folds) {
        folds.push_back({{"train", split.train}, {"val", split.val}, {"test", split.test}});
    }
    j["folds"] = std::move(folds);
    j["fold_warnings"] = rep.plan.warnings;
    j["reference_macs"] = rep.reference_macs;

    json arms = json::array();
    for (const ArmReport& arm : rep.arms) {
        json cells = json::array();
        for (const ArmCell& cell : arm.cells) {
            cells.push_back({{"mil_seed", cell.mil_seed},
                             {"fold", cell.fold},
                             {"accuracy", cell.eval.accuracy},
                             {"kappa2", cell.eval.kappa2},
                             {"nll", cell.eval.nll},
                             {"n", cell.eval.n}});
        }
        json a = {{"arm", arm_name(arm.arm)},
                  {"cells", std::move(cells)},
                  {"mean", {{"accuracy", arm.mean_accuracy},
                            {"kappa2", arm.mean_kappa2},
                            {"nll", arm.mean_nll}}},
                  {"sd", {{"accuracy", arm.sd_accuracy},
                          {"kappa2", arm.sd_kappa2},
                          {"nll", arm.sd_nll}}},
                  {"aug_macs", arm.aug_macs}};
        if (arm.aug_macs > 0) {
            a["ratio_vs_reference"] =
                static_cast<double>(rep.reference_macs) / static_cast<double>(arm.aug_macs);
        }
        arms.push_back(std::move(a));
    }
    j["arms"] = std::move(arms);
    return j.dump(2) + "\n";
}

std::string report_table(const ExperimentReport& rep) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-11s %-20s %-20s %-20s\n", "arm", "accuracy", "kappa2",
                  "nll");
    out += line;
    for (const ArmReport& arm : rep.arms) {
        std::snprintf(line, sizeof(line), "%-11s %-20s %-20s %-20s\n", arm_name(arm.arm),
                      format_cell(arm.mean_accuracy, arm.sd_accuracy).c_str(),
                      format_cell(arm.mean_kappa2, arm.sd_kappa2).c_str(),
                      format_cell(arm.mean_nll, arm.sd_nll).c_str());
        out += line;
    }

    bool any_aug = false;
    for (const ArmReport& arm : rep.arms) any_aug = any_aug || arm.aug_macs > 0;
    if (any_aug) {
        out += "\n";
        std::snprintf(line, sizeof(line),
                      "per-augmentation cost, multiply-accumulates (extractor pass = %llu)\n",
                      static_cast<unsigned long long>(rep.reference_macs));
        out += line;
        for (const ArmReport& arm : rep.arms) {
            if (arm.aug_macs == 0) continue;
            const double ratio =
                static_cast<double>(rep.reference_macs) / static_cast<double>(arm.aug_macs);
            std::snprintf(line, sizeof(line), "%-11s %-12llu %.1fx vs re-extraction\n",
                          arm_name(arm.arm), static_cast<unsigned long long>(arm.aug_macs), ratio);
            out += line;
        }
    }
    return out;
}

std::string timing_json(const ExperimentReport& rep) {
    json j;
    j["schema_version"] = rep.schema_version;
    j["threads"] = rep.config.threads;
    j["total_seconds"] = rep.total_seconds;
    json arms = json::array();
    for (const ArmReport& arm : rep.arms) {
        json cells = json::array();
        for (const ArmCell& cell : arm.cells) cells.push_back(cell.mil_seconds);
        arms.push_back({{"arm", arm_name(arm.arm)},
                        {"gan_seconds", arm.gan_seconds},
                        {"mil_seconds", std::move(cells)}});
    }
    j["arms"] = std::move(arms);
    return j.dump(2) + "\n";
}

void write_report_files(const ExperimentReport& rep, const std::string& dir) {
    std::filesystem::path base(dir);
    std::filesystem::create_directories(base);
    write_file(base / "report.json", report_json(rep));
    write_file(base / "report.txt", report_table(rep));
    write_file(base / "timing.json", timing_json(rep));
}

}  // namespace embaug
