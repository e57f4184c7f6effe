#include "embaug/binio.hpp"
#include "embaug/mil.hpp"

#include <json.hpp>

#include <fstream>

namespace embaug {

namespace {

constexpr char kMagic[4] = {'E', 'A', 'M', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr int kMetaSchema = 1;

const char* kParamNames[] = {
    "attention V weights",  "attention V biases",
    "attention U weights",  "attention U biases",
    "attention w weights",  "attention w biases",
    "classifier layer 0 weights", "classifier layer 0 biases",
    "classifier layer 1 weights", "classifier layer 1 biases",
};

}  // namespace

void save_mil(const MilModel& model, const std::string& path, const MilTrainConfig* config,
              const MilTrainLog* log) {
    BinWriter out(path);
    out.magic(kMagic);
    out.u32(kVersion);
    out.u32(static_cast<std::uint32_t>(model.d));
    out.u32(static_cast<std::uint32_t>(model.d_att));
    out.u32(static_cast<std::uint32_t>(model.K));
    for (const Tensor& p : model.parameters()) {
        for (double v : p.values()) out.f64(v);
    }
    out.close();

    nlohmann::json meta{{"schema_version", kMetaSchema},
                        {"d", model.d},
                        {"d_att", model.d_att},
                        {"K", model.K},
                        {"parameter_count", parameter_count(model.parameters())}};
    if (config) {
        meta["config"] = {{"d_att", config->d_att},
                          {"epochs", config->epochs},
                          {"lr", config->lr},
                          {"weight_decay", config->weight_decay},
                          {"seed", config->seed}};
    }
    if (log) {
        nlohmann::json training{{"epochs", log->epochs.size()},
                                {"best_epoch", log->best_epoch},
                                {"best_val_nll", log->best_val_nll}};
        if (!log->epochs.empty()) {
            const MilEpochLog& last = log->epochs.back();
            training["final"] = {{"train_loss", last.train_loss},
                                 {"val_nll", last.val_nll},
                                 {"val_accuracy", last.val_accuracy}};
        }
        meta["training"] = training;
    }
    std::ofstream meta_out(path + ".meta.json");
    if (!meta_out) throw ContractError("cannot open " + path + ".meta.json for writing");
    meta_out << meta.dump(2) << '\n';
    meta_out.close();
    if (!meta_out) throw ContractError("failed writing " + path + ".meta.json");
}

MilModel load_mil(const std::string& path) {
    BinReader in(path, "classifier checkpoint");
    in.expect_magic(kMagic);
    const std::uint64_t version_at = in.offset();
    const std::uint32_t version = in.u32("version");
    if (version != kVersion) {
        in.fail("unsupported version " + std::to_string(version) + " (expected " +
                    std::to_string(kVersion) + ")",
                version_at);
    }
    const std::uint64_t d_at = in.offset();
    const std::size_t d = in.u32("embedding dimension");
    if (d == 0) in.fail("embedding dimension must be positive", d_at);
    const std::uint64_t datt_at = in.offset();
    const std::size_t d_att = in.u32("attention width");
    if (d_att == 0) in.fail("attention width must be positive", datt_at);
    const std::uint64_t k_at = in.offset();
    const std::size_t K = in.u32("class count");
    if (K < 2) in.fail("class count must be at least 2", k_at);

    Rng scratch(0);
    MilModel model = make_mil_model(d, K, d_att, scratch);
    std::vector<Tensor> params = model.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (double& v : params[p].values()) v = in.f64(kParamNames[p]);
    }
    in.expect_eof();
    return model;
}

}  // namespace embaug
