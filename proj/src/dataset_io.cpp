#include "embaug/binio.hpp"
#include "embaug/synthdata.hpp"

#include <json.hpp>

#include <fstream>

namespace embaug {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr int kMetaSchema = 1;

nlohmann::json oracle_to_json(const OracleRanges& r) {
    return {{"alpha_max", r.alpha_max},
            {"delta_gamma", r.delta_gamma},
            {"delta_beta", r.delta_beta},
            {"delta_scale", r.delta_scale}};
}

OracleRanges oracle_from_json(const nlohmann::json& j) {
    OracleRanges r;
    r.alpha_max = j.at("alpha_max").get<double>();
    r.delta_gamma = j.at("delta_gamma").get<double>();
    r.delta_beta = j.at("delta_beta").get<double>();
    r.delta_scale = j.at("delta_scale").get<double>();
    return r;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path) {
    BinWriter out(path);
    out.magic(kMagic);
    out.u32(kVersion);
    out.u32(static_cast<std::uint32_t>(dataset.d));
    out.u32(static_cast<std::uint32_t>(dataset.K));
    out.u32(static_cast<std::uint32_t>(dataset.bags.size()));
    for (const Bag& bag : dataset.bags) {
        out.u32(bag.label);
        out.u32(static_cast<std::uint32_t>(bag.n_instances()));
        for (double v : bag.data) out.f32(static_cast<float>(v));
    }
    out.close();

    nlohmann::json meta{
        {"schema_version", kMetaSchema},
        {"seed", dataset.seed},
        {"config",
         {{"d", dataset.config.d},
          {"K", dataset.config.K},
          {"n_bags", dataset.config.n_bags},
          {"sigma", dataset.config.sigma},
          {"mean_bag_size", dataset.config.mean_bag_size},
          {"min_bag_size", dataset.config.min_bag_size},
          {"max_bag_size", dataset.config.max_bag_size},
          {"oracle", oracle_to_json(dataset.config.oracle)}}},
        {"prototypes", dataset.prototypes},
    };
    std::ofstream meta_out(path + ".meta.json");
    if (!meta_out) throw ContractError("cannot open " + path + ".meta.json for writing");
    meta_out << meta.dump(2) << '\n';
    meta_out.close();
    if (!meta_out) throw ContractError("failed writing " + path + ".meta.json");
}

Dataset load_dataset(const std::string& path) {
    BinReader in(path, "dataset file");
    in.expect_magic(kMagic);
    const std::uint64_t version_at = in.offset();
    const std::uint32_t version = in.u32("version");
    if (version != kVersion) {
        in.fail("unsupported version " + std::to_string(version) + " (expected " +
                    std::to_string(kVersion) + ")",
                version_at);
    }
    Dataset ds;
    const std::uint64_t d_at = in.offset();
    ds.d = in.u32("embedding dimension");
    if (ds.d == 0) in.fail("embedding dimension must be positive", d_at);
    const std::uint64_t k_at = in.offset();
    ds.K = in.u32("class count");
    if (ds.K < 2) in.fail("class count must be at least 2", k_at);
    const std::uint32_t n_bags = in.u32("bag count");
    ds.bags.reserve(n_bags);
    for (std::uint32_t b = 0; b < n_bags; ++b) {
        const std::string tag = "bag " + std::to_string(b);
        Bag bag;
        bag.d = ds.d;
        const std::uint64_t label_at = in.offset();
        bag.label = in.u32(tag + " label");
        if (bag.label >= ds.K) {
            in.fail(tag + ": label " + std::to_string(bag.label) + " out of range for K=" +
                        std::to_string(ds.K),
                    label_at);
        }
        const std::uint64_t n_at = in.offset();
        const std::uint32_t n = in.u32(tag + " instance count");
        if (n == 0) in.fail(tag + ": empty bag", n_at);
        bag.data.resize(static_cast<std::size_t>(n) * ds.d);
        for (std::size_t i = 0; i < bag.data.size(); ++i) {
            bag.data[i] = static_cast<double>(in.f32(tag + " embeddings"));
        }
        ds.bags.push_back(std::move(bag));
    }
    in.expect_eof();

    const std::string meta_path = path + ".meta.json";
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw ContractError("cannot open " + meta_path + " for reading");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_in);
        const int schema = meta.at("schema_version").get<int>();
        if (schema != kMetaSchema) {
            throw ParseError(meta_path + ": unsupported schema_version " + std::to_string(schema),
                             0);
        }
        ds.seed = meta.at("seed").get<std::uint64_t>();
        const auto& cfg = meta.at("config");
        ds.config.d = cfg.at("d").get<std::size_t>();
        ds.config.K = cfg.at("K").get<std::size_t>();
        ds.config.n_bags = cfg.at("n_bags").get<std::size_t>();
        ds.config.sigma = cfg.at("sigma").get<double>();
        ds.config.mean_bag_size = cfg.at("mean_bag_size").get<double>();
        ds.config.min_bag_size = cfg.at("min_bag_size").get<std::size_t>();
        ds.config.max_bag_size = cfg.at("max_bag_size").get<std::size_t>();
        ds.config.oracle = oracle_from_json(cfg.at("oracle"));
        ds.prototypes = meta.at("prototypes").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(meta_path + ": " + e.what(), 0);
    }
    if (ds.config.d != ds.d || ds.config.K != ds.K) {
        throw ParseError(meta_path + ": metadata dimensions disagree with the binary file", 0);
    }
    for (const auto& p : ds.prototypes) {
        if (p.size() != ds.d) {
            throw ParseError(meta_path + ": prototype dimension disagrees with the binary file", 0);
        }
    }
    return ds;
}

}  // namespace embaug
