// Command-line front end: dataset synthesis, augmenter / classifier training,
// evaluation, speed benchmarking, and the full cross-validated report.
//
// Every subcommand takes --config / --seed / --out and drops a
// manifest.<command>.json next to its outputs recording the resolved settings,
// library version, and seed. Errors come out as a single line on stderr,
// "error: <category>: <detail>", with exit code 2 for usage, config, and
// parse problems and 1 for runtime failures.

#include "embaug/config.hpp"
#include "embaug/dagan.hpp"
#include "embaug/flops.hpp"
#include "embaug/harness.hpp"
#include "embaug/mil.hpp"
#include "embaug/synthdata.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace embaug;

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out = ".";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "sectioned key=value settings file");
    cmd->add_option("--seed", args.seed, "root seed; every random stream derives from it");
    cmd->add_option("--out", args.out, "output directory, created if missing");
}

ConfigFile load_config(const CommonArgs& args) {
    ConfigFile file =
        args.config_path.empty() ? ConfigFile::parse("") : ConfigFile::load(args.config_path);
    validate_config(file, embaug_config_schema());
    return file;
}

std::string one_line(std::string text) {
    for (char& c : text) {
        if (c == '\n' || c == '\r') c = ';';
    }
    return text;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ContractError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw ContractError("failed writing " + path.string());
}

json json_of_gen(const GenConfig& gc) {
    return json{{"d", gc.d},
                {"k", gc.K},
                {"n_bags", gc.n_bags},
                {"sigma", gc.sigma},
                {"mean_bag_size", gc.mean_bag_size},
                {"min_bag_size", gc.min_bag_size},
                {"max_bag_size", gc.max_bag_size},
                {"oracle",
                 {{"alpha_max", gc.oracle.alpha_max},
                  {"delta_gamma", gc.oracle.delta_gamma},
                  {"delta_beta", gc.oracle.delta_beta},
                  {"delta_scale", gc.oracle.delta_scale}}}};
}

json json_of_gan(const GanConfig& gc) {
    return json{{"variant", variant_name(gc.variant)},
                {"lambda_cos", gc.lambda_cos},
                {"lr_g", gc.lr_g},
                {"lr_d", gc.lr_d},
                {"weight_decay", gc.weight_decay},
                {"batch_size", gc.batch_size},
                {"epochs", gc.epochs},
                {"seed", gc.seed},
                {"conditional_disc", gc.conditional_disc},
                {"holdout_fraction", gc.holdout_fraction}};
}

json json_of_mil(const MilTrainConfig& mc) {
    return json{{"d_att", mc.d_att},
                {"epochs", mc.epochs},
                {"lr", mc.lr},
                {"weight_decay", mc.weight_decay},
                {"seed", mc.seed}};
}

json json_of_experiment(const ExperimentConfig& ec) {
    return json{{"seed", ec.seed},
                {"mil_seeds", ec.mil_seeds},
                {"n_augs", ec.n_augs},
                {"pairs_per_instance", ec.pairs_per_instance},
                {"max_gan_pairs", ec.max_gan_pairs},
                {"p_apply", ec.p_apply},
                {"threads", ec.threads},
                {"gan", json_of_gan(ec.gan)},
                {"mil", json_of_mil(ec.mil)}};
}

void write_manifest(const fs::path& out_dir, const std::string& command, std::uint64_t seed,
                    const json& config, const json& inputs, const json& outputs) {
    json manifest{{"schema_version", 1}, {"version", kEmbaugVersion}, {"command", command},
                  {"seed", seed},        {"config", config},          {"inputs", inputs},
                  {"outputs", outputs}};
    write_text(out_dir / ("manifest." + command + ".json"), manifest.dump(2) + "\n");
}

FoldPlan plan_for(const Dataset& ds, std::uint64_t seed) {
    std::vector<std::uint32_t> labels;
    labels.reserve(ds.bags.size());
    for (const Bag& bag : ds.bags) labels.push_back(bag.label);
    Rng root(seed);
    Rng fold_rng = root.derive("exp/folds");
    return make_folds(fold_rng, ds.bags.size(), labels);
}

void run_gen_data(const CommonArgs& args) {
    ConfigFile file = load_config(args);
    GenConfig gc = dataset_config_from(file);
    Dataset ds = generate_dataset(gc, args.seed);

    fs::path out(args.out);
    fs::create_directories(out);
    const fs::path data_path = out / "dataset.bin";
    save_dataset(ds, data_path.string());
    write_manifest(out, "gen-data", args.seed, json{{"dataset", json_of_gen(gc)}}, json::object(),
                   json{{"dataset", data_path.filename().string()}});
    std::cout << "wrote " << data_path.string() << " (" << ds.bags.size() << " bags, d=" << ds.d
              << ", k=" << ds.K << ")\n";
}

void run_train_gan(const CommonArgs& args, const std::string& data_path, std::size_t fold) {
    ConfigFile file = load_config(args);
    ExperimentConfig ec = experiment_config_from(file);
    Dataset ds = load_dataset(data_path);
    FoldPlan plan = plan_for(ds, args.seed);

    // Same derivations the report command uses, so a standalone training run
    // at the same seed reproduces the corresponding report fold exactly.
    Rng root(args.seed);
    Rng pair_rng = root.derive("exp/pairs", fold);
    PairSet pairs = make_pairs(pair_rng, ds, ec.pairs_per_instance, plan.folds[fold].train);
    verify_no_leakage(pairs, plan.folds[fold].train);
    Rng cap_rng = root.derive("exp/pair-cap", fold);
    pairs = subsample_pairs(cap_rng, pairs, ec.max_gan_pairs);

    GanConfig gc = ec.gan;
    gc.seed = root.derive(std::string("exp/gan/") + variant_name(gc.variant), fold).next_u64();
    TrainedGan trained = train_gan(pairs, gc);

    fs::path out(args.out);
    fs::create_directories(out);
    const fs::path ckpt = out / "gan.bin";
    save_generator(trained.generator, ckpt.string(), &gc, &trained.log);
    write_manifest(out, "train-gan", args.seed,
                   json{{"gan", json_of_gan(gc)},
                        {"fold", fold},
                        {"pairs", pairs.size()},
                        {"pairs_per_instance", ec.pairs_per_instance},
                        {"max_gan_pairs", ec.max_gan_pairs}},
                   json{{"data", data_path}}, json{{"generator", ckpt.filename().string()}});
    const double holdout =
        trained.log.epochs.empty() ? 0.0 : trained.log.epochs.back().holdout_cos;
    std::cout << "trained " << variant_name(gc.variant) << " augmenter on " << pairs.size()
              << " pairs (fold " << fold << "); holdout cosine " << holdout << "\n";
}

void run_train_mil(const CommonArgs& args, const std::string& data_path, std::size_t fold,
                   const std::string& mode, const std::string& gan_path) {
    ConfigFile file = load_config(args);
    ExperimentConfig ec = experiment_config_from(file);
    Dataset ds = load_dataset(data_path);
    FoldPlan plan = plan_for(ds, args.seed);

    // Keep augmentation sources alive for the duration of training: the
    // policy only borrows them.
    std::optional<PrecomputedAugs> patch_augs;
    std::optional<Generator> generator;
    AugPolicy policy = AugPolicy::none();
    if (mode == "patch") {
        Rng patch_rng = Rng(args.seed).derive("exp/patch");
        patch_augs.emplace(precompute_patch_augs(patch_rng, ds, ec.n_augs));
        policy = AugPolicy::patches(*patch_augs);
    } else if (mode == "gan") {
        if (gan_path.empty()) {
            throw ContractError("train-mil: --gan <checkpoint> is required with --mode gan");
        }
        generator.emplace(load_generator(gan_path));
        policy = AugPolicy::gan(*generator, ec.p_apply);
    }

    MilTrainConfig mc = ec.mil;
    mc.seed = Rng(args.seed).derive("exp/mil", fold).next_u64();
    TrainedMil trained =
        train_mil(ds, plan.folds[fold].train, plan.folds[fold].val, policy, mc);

    fs::path out(args.out);
    fs::create_directories(out);
    const fs::path ckpt = out / "mil.bin";
    save_mil(trained.model, ckpt.string(), &mc, &trained.log);
    json inputs{{"data", data_path}};
    if (!gan_path.empty()) inputs["generator"] = gan_path;
    write_manifest(out, "train-mil", args.seed,
                   json{{"mil", json_of_mil(mc)},
                        {"fold", fold},
                        {"mode", mode},
                        {"n_augs", ec.n_augs},
                        {"p_apply", ec.p_apply}},
                   inputs, json{{"classifier", ckpt.filename().string()}});
    std::cout << "trained classifier (fold " << fold << ", mode " << mode << "); best val NLL "
              << trained.log.best_val_nll << " at epoch " << trained.log.best_epoch << "\n";
}

void run_evaluate(const CommonArgs& args, const std::string& data_path,
                  const std::string& model_path, std::size_t fold) {
    (void)load_config(args);  // only to reject malformed settings early
    Dataset ds = load_dataset(data_path);
    MilModel model = load_mil(model_path);
    FoldPlan plan = plan_for(ds, args.seed);
    EvalResult eval = evaluate_mil(model, ds, plan.folds[fold].test);

    json confusion = json::array();
    for (std::size_t truth = 0; truth < eval.K; ++truth) {
        json row = json::array();
        for (std::size_t pred = 0; pred < eval.K; ++pred) row.push_back(eval.confusion_at(truth, pred));
        confusion.push_back(row);
    }
    json result{{"schema_version", 1}, {"fold", fold},          {"n", eval.n},
                {"accuracy", eval.accuracy}, {"kappa2", eval.kappa2}, {"nll", eval.nll},
                {"confusion", confusion}};

    fs::path out(args.out);
    fs::create_directories(out);
    write_text(out / "eval.json", result.dump(2) + "\n");
    write_manifest(out, "evaluate", args.seed, json{{"fold", fold}},
                   json{{"data", data_path}, {"model", model_path}},
                   json{{"eval", "eval.json"}});
    std::cout << "fold " << fold << ": accuracy " << eval.accuracy << ", kappa2 " << eval.kappa2
              << ", nll " << eval.nll << " (n=" << eval.n << ")\n";
}

void run_bench(const CommonArgs& args, const std::string& variant_flag, std::size_t d_flag,
               const std::string& gan_path) {
    ConfigFile file = load_config(args);
    BenchConfig bc;
    bc.batch = file.get_u64("bench", "batch", bc.batch);
    bc.min_batches = file.get_u64("bench", "min_batches", bc.min_batches);
    bc.min_seconds = file.get_double("bench", "min_seconds", bc.min_seconds);
    bc.seed = args.seed;

    Generator gen = [&] {
        if (!gan_path.empty()) return load_generator(gan_path);
        const std::string name =
            variant_flag.empty() ? file.get_string("gan", "variant", "exp") : variant_flag;
        const GanVariant variant = variant_from_name(name);
        const std::size_t d = d_flag != 0 ? d_flag : file.get_u64("dataset", "d", 64);
        Rng init_rng = Rng(args.seed).derive("bench/init");
        return make_generator(variant, d, init_rng);
    }();
    SpeedupReport report = bench_speedup(gen, reference_extractor_cost(), bc);

    json result{{"schema_version", 1},
                {"variant", variant_name(report.variant)},
                {"d", report.d},
                {"generator_macs", report.generator_macs},
                {"generator_flops", report.generator_flops},
                {"reference_macs", report.reference_macs},
                {"reference_flops", report.reference_flops},
                {"analytic_ratio", report.analytic_ratio},
                {"seconds_per_aug", report.seconds_per_aug},
                {"seconds_per_reference", report.seconds_per_reference},
                {"measured_ratio", report.measured_ratio}};

    fs::path out(args.out);
    fs::create_directories(out);
    write_text(out / "bench.json", result.dump(2) + "\n");
    json inputs = json::object();
    if (!gan_path.empty()) inputs["generator"] = gan_path;
    write_manifest(out, "bench", args.seed,
                   json{{"variant", variant_name(report.variant)},
                        {"d", report.d},
                        {"batch", bc.batch},
                        {"min_batches", bc.min_batches},
                        {"min_seconds", bc.min_seconds}},
                   inputs, json{{"bench", "bench.json"}});
    std::cout << "variant " << variant_name(report.variant) << ", d=" << report.d << ": analytic "
              << report.analytic_ratio << "x, measured " << report.measured_ratio
              << "x vs reference extractor\n";
}

void run_report(const CommonArgs& args, const std::string& data_path) {
    ConfigFile file = load_config(args);
    ExperimentConfig ec = experiment_config_from(file);
    ec.seed = args.seed;
    std::vector<ExperimentArm> arms = arms_from_config(file);
    Dataset ds = data_path.empty() ? generate_dataset(dataset_config_from(file), args.seed)
                                   : load_dataset(data_path);

    ExperimentReport report = run_experiment(ds, arms, ec);

    fs::path out(args.out);
    fs::create_directories(out);
    write_report_files(report, out.string());
    json arm_names = json::array();
    for (ExperimentArm arm : arms) arm_names.push_back(arm_name(arm));
    json inputs = json::object();
    if (!data_path.empty()) inputs["data"] = data_path;
    write_manifest(out, "report", args.seed,
                   json{{"experiment", json_of_experiment(ec)},
                        {"arms", arm_names},
                        {"dataset", json_of_gen(ds.config)}},
                   inputs,
                   json{{"report", "report.json"}, {"table", "report.txt"},
                        {"timing", "timing.json"}});
    std::cout << report_table(report);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"embedding-space augmentation workbench"};
    app.set_version_flag("--version", kEmbaugVersion);
    app.require_subcommand(1);

    CommonArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-data", "synthesize a bag dataset");
    add_common(gen, gen_args);
    gen->callback([&] { run_gen_data(gen_args); });

    CommonArgs tg_args;
    std::string tg_data;
    std::size_t tg_fold = 0;
    CLI::App* tg = app.add_subcommand("train-gan", "train an augmenter on one fold");
    add_common(tg, tg_args);
    tg->add_option("--data", tg_data, "dataset file")->required();
    tg->add_option("--fold", tg_fold, "fold whose training split supplies the pairs")
        ->check(CLI::Range(std::size_t{0}, kNumFolds - 1));
    tg->callback([&] { run_train_gan(tg_args, tg_data, tg_fold); });

    CommonArgs tm_args;
    std::string tm_data, tm_mode = "none", tm_gan;
    std::size_t tm_fold = 0;
    CLI::App* tm = app.add_subcommand("train-mil", "train the bag classifier on one fold");
    add_common(tm, tm_args);
    tm->add_option("--data", tm_data, "dataset file")->required();
    tm->add_option("--fold", tm_fold, "fold to train")
        ->check(CLI::Range(std::size_t{0}, kNumFolds - 1));
    tm->add_option("--mode", tm_mode, "augmentation mode")
        ->check(CLI::IsMember({"none", "patch", "gan"}));
    tm->add_option("--gan", tm_gan, "generator checkpoint (required with --mode gan)");
    tm->callback([&] { run_train_mil(tm_args, tm_data, tm_fold, tm_mode, tm_gan); });

    CommonArgs ev_args;
    std::string ev_data, ev_model;
    std::size_t ev_fold = 0;
    CLI::App* ev = app.add_subcommand("evaluate", "score a classifier on one test fold");
    add_common(ev, ev_args);
    ev->add_option("--data", ev_data, "dataset file")->required();
    ev->add_option("--model", ev_model, "classifier checkpoint")->required();
    ev->add_option("--fold", ev_fold, "fold whose test split to score")
        ->check(CLI::Range(std::size_t{0}, kNumFolds - 1));
    ev->callback([&] { run_evaluate(ev_args, ev_data, ev_model, ev_fold); });

    CommonArgs be_args;
    std::string be_variant, be_gan;
    std::size_t be_d = 0;
    CLI::App* be = app.add_subcommand("bench", "augmenter cost vs re-extraction");
    add_common(be, be_args);
    be->add_option("--variant", be_variant, "augmenter variant")
        ->check(CLI::IsMember({"ind", "exp"}));
    be->add_option("--d", be_d, "embedding dimension for a fresh generator");
    be->add_option("--gan", be_gan, "benchmark a trained checkpoint instead");
    be->callback([&] { run_bench(be_args, be_variant, be_d, be_gan); });

    CommonArgs rp_args;
    std::string rp_data;
    CLI::App* rp = app.add_subcommand("report", "cross-validated comparison of all arms");
    add_common(rp, rp_args);
    rp->add_option("--data", rp_data, "dataset file (generated from config when omitted)");
    rp->callback([&] { run_report(rp_args, rp_data); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error: usage: " << one_line(e.what()) << "\n";
        return 2;
    } catch (const embaug::ParseError& e) {
        std::cerr << "error: parse: " << one_line(e.what()) << "\n";
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "error: config: " << one_line(e.what()) << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << one_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
