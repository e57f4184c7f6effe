#include "embaug/binio.hpp"
#include "embaug/dagan.hpp"

#include <json.hpp>

#include <fstream>

namespace embaug {

namespace {

constexpr char kMagic[4] = {'E', 'A', 'G', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr int kMetaSchema = 1;

}  // namespace

void save_generator(const Generator& gen, const std::string& path, const GanConfig* config,
                    const GanTrainLog* log) {
    std::vector<std::size_t> dims = generator_dims(gen.variant, gen.d);
    BinWriter out(path);
    out.magic(kMagic);
    out.u32(kVersion);
    out.u32(static_cast<std::uint32_t>(gen.variant));
    out.u32(static_cast<std::uint32_t>(gen.d));
    out.u32(static_cast<std::uint32_t>(dims.size()));
    for (std::size_t dim : dims) out.u32(static_cast<std::uint32_t>(dim));
    for (const Tensor& p : gen.parameters()) {
        for (double v : p.values()) out.f64(v);
    }
    out.close();

    nlohmann::json meta{{"schema_version", kMetaSchema},
                        {"variant", variant_name(gen.variant)},
                        {"d", gen.d},
                        {"dims", dims},
                        {"parameter_count", parameter_count(gen.parameters())}};
    if (config) {
        meta["config"] = {{"variant", variant_name(config->variant)},
                          {"lambda_cos", config->lambda_cos},
                          {"lr_g", config->lr_g},
                          {"lr_d", config->lr_d},
                          {"weight_decay", config->weight_decay},
                          {"batch_size", config->batch_size},
                          {"epochs", config->epochs},
                          {"seed", config->seed},
                          {"conditional_disc", config->conditional_disc},
                          {"holdout_fraction", config->holdout_fraction}};
    }
    if (log) {
        nlohmann::json training{{"epochs", log->epochs.size()},
                                {"init_holdout_cos", log->init_holdout_cos}};
        if (!log->epochs.empty()) {
            const GanEpochLog& last = log->epochs.back();
            training["final"] = {{"g_loss", last.g_loss},
                                 {"d_loss", last.d_loss},
                                 {"holdout_cos", last.holdout_cos}};
        }
        meta["training"] = training;
    }
    std::ofstream meta_out(path + ".meta.json");
    if (!meta_out) throw ContractError("cannot open " + path + ".meta.json for writing");
    meta_out << meta.dump(2) << '\n';
    meta_out.close();
    if (!meta_out) throw ContractError("failed writing " + path + ".meta.json");
}

Generator load_generator(const std::string& path) {
    BinReader in(path, "generator checkpoint");
    in.expect_magic(kMagic);
    const std::uint64_t version_at = in.offset();
    const std::uint32_t version = in.u32("version");
    if (version != kVersion) {
        in.fail("unsupported version " + std::to_string(version) + " (expected " +
                    std::to_string(kVersion) + ")",
                version_at);
    }
    const std::uint64_t variant_at = in.offset();
    const std::uint32_t variant_tag = in.u32("variant tag");
    if (variant_tag > 1) in.fail("unknown variant tag " + std::to_string(variant_tag), variant_at);
    const GanVariant variant = static_cast<GanVariant>(variant_tag);
    const std::uint64_t d_at = in.offset();
    const std::size_t d = in.u32("embedding dimension");
    if (d == 0) in.fail("embedding dimension must be positive", d_at);

    const std::vector<std::size_t> expected = generator_dims(variant, d);
    const std::uint64_t ndims_at = in.offset();
    const std::uint32_t n_dims = in.u32("layer dim count");
    if (n_dims != expected.size()) {
        in.fail("layer dim count " + std::to_string(n_dims) + " does not match the \"" +
                    variant_name(variant) + "\" layout (expected " +
                    std::to_string(expected.size()) + ")",
                ndims_at);
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const std::uint64_t at = in.offset();
        const std::uint32_t dim = in.u32("layer dim " + std::to_string(i));
        if (dim != expected[i]) {
            in.fail("layer dim " + std::to_string(i) + " is " + std::to_string(dim) +
                        ", expected " + std::to_string(expected[i]),
                    at);
        }
    }

    Rng scratch(0);
    Generator gen = make_generator(variant, d, scratch);
    std::vector<Tensor> params = gen.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
        const std::string context =
            "layer " + std::to_string(p / 2) + (p % 2 == 0 ? " weights" : " biases");
        for (double& v : params[p].values()) v = in.f64(context);
    }
    in.expect_eof();
    return gen;
}

}  // namespace embaug
