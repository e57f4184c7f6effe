#include "embaug/harness.hpp"

#include "embaug/flops.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <thread>
#include <tuple>
#include <unordered_set>

namespace embaug {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::pair<double, double> mean_sd(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

FoldPlan make_folds(Rng& rng, std::size_t n_bags, std::span<const std::uint32_t> labels) {
    if (n_bags < 10) {
        throw ContractError("make_folds: need at least 10 bags, got " + std::to_string(n_bags));
    }
    if (labels.size() != n_bags) {
        throw ContractError("make_folds: got " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(n_bags) + " bags");
    }

    std::map<std::uint32_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n_bags; ++i) by_class[labels[i]].push_back(i);

    // Deal each class round-robin; the cursor carries across classes so the
    // per-class remainders spread over folds instead of piling on fold 0.
    std::array<std::vector<std::size_t>, kNumFolds> members;
    std::size_t cursor = 0;
    for (auto& [label, idx] : by_class) {
        rng.shuffle(idx);
        for (std::size_t i : idx) members[cursor++ % kNumFolds].push_back(i);
    }

    FoldPlan plan;
    for (std::size_t f = 0; f < kNumFolds; ++f) {
        for (const auto& [label, idx] : by_class) {
            bool present = std::any_of(members[f].begin(), members[f].end(),
                                       [&](std::size_t i) { return labels[i] == label; });
            if (!present) {
                plan.warnings.push_back("class " + std::to_string(label) + " is absent from fold " +
                                        std::to_string(f));
            }
        }
    }

    plan.folds.resize(kNumFolds);
    for (std::size_t f = 0; f < kNumFolds; ++f) {
        FoldSplit& split = plan.folds[f];
        split.test = members[f];
        split.val = members[(f + 1) % kNumFolds];
        for (std::size_t g = 0; g < kNumFolds; ++g) {
            if (g == f || g == (f + 1) % kNumFolds) continue;
            split.train.insert(split.train.end(), members[g].begin(), members[g].end());
        }
        std::sort(split.train.begin(), split.train.end());
        std::sort(split.val.begin(), split.val.end());
        std::sort(split.test.begin(), split.test.end());
    }
    return plan;
}

const char* arm_name(ExperimentArm arm) {
    switch (arm) {
        case ExperimentArm::NoAug: return "no-aug";
        case ExperimentArm::PatchAug: return "patch-aug";
        case ExperimentArm::GanInd: return "gan-ind";
        case ExperimentArm::GanExp: return "gan-exp";
    }
    throw ContractError("arm_name: unknown arm tag");
}

ExperimentArm arm_from_name(std::string_view name) {
    for (ExperimentArm a : {ExperimentArm::NoAug, ExperimentArm::PatchAug, ExperimentArm::GanInd,
                            ExperimentArm::GanExp}) {
        if (name == arm_name(a)) return a;
    }
    throw ContractError("unknown experiment arm \"" + std::string(name) +
                        "\" (expected no-aug, patch-aug, gan-ind, or gan-exp)");
}

GanVariant variant_from_name(std::string_view name) {
    if (name == variant_name(GanVariant::Ind)) return GanVariant::Ind;
    if (name == variant_name(GanVariant::Exp)) return GanVariant::Exp;
    throw ContractError("unknown augmenter variant \"" + std::string(name) +
                        "\" (expected ind or exp)");
}

void verify_no_leakage(const PairSet& pairs, std::span<const std::size_t> allowed_bags) {
    std::unordered_set<std::size_t> allowed(allowed_bags.begin(), allowed_bags.end());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (allowed.count(pairs.source_bag[i]) == 0) {
            throw ContractError("leakage: pair " + std::to_string(i) + " was drawn from bag " +
                                std::to_string(pairs.source_bag[i]) +
                                ", which is outside the training split");
        }
    }
}

PairSet subsample_pairs(Rng& rng, const PairSet& pairs, std::size_t max_pairs) {
    if (max_pairs == 0) throw ContractError("subsample_pairs: max_pairs must be positive");
    if (pairs.size() <= max_pairs) return pairs;
    std::vector<std::size_t> keep(pairs.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    rng.shuffle(keep);
    keep.resize(max_pairs);
    std::sort(keep.begin(), keep.end());

    PairSet out;
    out.d = pairs.d;
    out.h.reserve(max_pairs * pairs.d);
    out.h_aug.reserve(max_pairs * pairs.d);
    out.source_bag.reserve(max_pairs);
    for (std::size_t i : keep) {
        out.h.insert(out.h.end(), pairs.h.begin() + i * pairs.d, pairs.h.begin() + (i + 1) * pairs.d);
        out.h_aug.insert(out.h_aug.end(), pairs.h_aug.begin() + i * pairs.d,
                         pairs.h_aug.begin() + (i + 1) * pairs.d);
        out.source_bag.push_back(pairs.source_bag[i]);
    }
    return out;
}

namespace {

constexpr ExperimentArm kArmOrder[] = {ExperimentArm::NoAug, ExperimentArm::PatchAug,
                                       ExperimentArm::GanInd, ExperimentArm::GanExp};

std::vector<ExperimentArm> canonical_arms(std::span<const ExperimentArm> requested) {
    std::vector<ExperimentArm> arms;
    for (ExperimentArm a : kArmOrder) {
        if (std::find(requested.begin(), requested.end(), a) != requested.end()) {
            arms.push_back(a);
        }
    }
    if (arms.empty()) throw ContractError("run_experiment: no arms requested");
    return arms;
}

template <typename F>
auto annotated(ExperimentArm arm, std::size_t fold, F&& fn) {
    auto tag = [&](const char* what) {
        return "run_experiment: arm " + std::string(arm_name(arm)) + ", fold " +
               std::to_string(fold) + ": " + what;
    };
    try {
        return fn();
    } catch (const NonFiniteError& e) {
        throw NonFiniteError(tag(e.what()));
    } catch (const ContractError& e) {
        throw ContractError(tag(e.what()));
    }
}

std::vector<std::uint32_t> bag_labels(const Dataset& ds) {
    std::vector<std::uint32_t> labels;
    labels.reserve(ds.bags.size());
    for (const Bag& b : ds.bags) labels.push_back(b.label);
    return labels;
}

std::uint64_t mil_cell_seed(std::uint64_t replication_seed, std::size_t fold) {
    return Rng(replication_seed).derive("exp/mil", fold).next_u64();
}

/// Pair building + per-fold augmenter training, shared between
/// run_experiment and grid_search so both derive identical augmenters.
std::optional<TrainedGan> train_fold_gan(const Dataset& ds, const FoldSplit& split,
                                         const ExperimentConfig& cfg, const Rng& root,
                                         GanVariant variant, std::size_t fold,
                                         double* seconds_out) {
    Rng pair_rng = root.derive("exp/pairs", fold);
    PairSet pairs = make_pairs(pair_rng, ds, cfg.pairs_per_instance, split.train);
    verify_no_leakage(pairs, split.train);
    if (cfg.max_gan_pairs > 0 && pairs.size() > cfg.max_gan_pairs) {
        Rng cap_rng = root.derive("exp/pair-cap", fold);
        pairs = subsample_pairs(cap_rng, pairs, cfg.max_gan_pairs);
    }
    GanConfig g = cfg.gan;
    g.variant = variant;
    g.seed = root.derive(std::string("exp/gan/") + variant_name(variant), fold).next_u64();
    const ExperimentArm arm =
        variant == GanVariant::Ind ? ExperimentArm::GanInd : ExperimentArm::GanExp;
    auto t0 = std::chrono::steady_clock::now();
    std::optional<TrainedGan> trained =
        annotated(arm, fold, [&] { return std::optional<TrainedGan>(train_gan(pairs, g)); });
    if (seconds_out != nullptr) *seconds_out = seconds_since(t0);
    return trained;
}

}  // namespace

ExperimentReport run_experiment(const Dataset& dataset, std::span<const ExperimentArm> arms_in,
                                const ExperimentConfig& cfg) {
    if (dataset.bags.empty()) throw ContractError("run_experiment: dataset has no bags");
    if (cfg.mil_seeds.empty()) throw ContractError("run_experiment: no replication seeds");
    if (cfg.threads == 0) throw ContractError("run_experiment: threads must be positive");
    const std::vector<ExperimentArm> arms = canonical_arms(arms_in);

    auto t_total = std::chrono::steady_clock::now();
    Rng root(cfg.seed);
    std::vector<std::uint32_t> labels = bag_labels(dataset);
    Rng fold_rng = root.derive("exp/folds");
    FoldPlan plan = make_folds(fold_rng, dataset.bags.size(), labels);

    auto wants = [&](ExperimentArm a) {
        return std::find(arms.begin(), arms.end(), a) != arms.end();
    };
    PrecomputedAugs patch;
    if (wants(ExperimentArm::PatchAug)) {
        Rng patch_rng = root.derive("exp/patch");
        patch = precompute_patch_augs(patch_rng, dataset, cfg.n_augs);
    }

    const std::size_t reps = cfg.mil_seeds.size();
    struct Cell {
        EvalResult eval;
        double seconds = 0.0;
    };
    std::vector<std::vector<Cell>> cells(arms.size(), std::vector<Cell>(reps * kNumFolds));
    std::vector<std::array<double, kNumFolds>> gan_seconds(arms.size());
    for (auto& per_fold : gan_seconds) per_fold.fill(0.0);

    auto run_fold = [&](std::size_t f) {
        const FoldSplit& split = plan.folds[f];
        std::optional<TrainedGan> gan_ind, gan_exp;
        for (std::size_t ai = 0; ai < arms.size(); ++ai) {
            if (arms[ai] == ExperimentArm::GanInd) {
                gan_ind = train_fold_gan(dataset, split, cfg, root, GanVariant::Ind, f,
                                         &gan_seconds[ai][f]);
            } else if (arms[ai] == ExperimentArm::GanExp) {
                gan_exp = train_fold_gan(dataset, split, cfg, root, GanVariant::Exp, f,
                                         &gan_seconds[ai][f]);
            }
        }
        for (std::size_t ai = 0; ai < arms.size(); ++ai) {
            AugPolicy policy = AugPolicy::none();
            switch (arms[ai]) {
                case ExperimentArm::NoAug: break;
                case ExperimentArm::PatchAug: policy = AugPolicy::patches(patch); break;
                case ExperimentArm::GanInd:
                    policy = AugPolicy::gan(gan_ind->generator, cfg.p_apply);
                    break;
                case ExperimentArm::GanExp:
                    policy = AugPolicy::gan(gan_exp->generator, cfg.p_apply);
                    break;
            }
            for (std::size_t r = 0; r < reps; ++r) {
                MilTrainConfig mc = cfg.mil;
                mc.seed = mil_cell_seed(cfg.mil_seeds[r], f);
                auto t0 = std::chrono::steady_clock::now();
                TrainedMil tm = annotated(arms[ai], f, [&] {
                    return train_mil(dataset, split.train, split.val, policy, mc);
                });
                Cell& cell = cells[ai][r * kNumFolds + f];
                cell.eval = evaluate_mil(tm.model, dataset, split.test);
                cell.seconds = seconds_since(t0);
            }
        }
    };

    if (cfg.threads <= 1) {
        for (std::size_t f = 0; f < kNumFolds; ++f) run_fold(f);
    } else {
        // Fold-level parallelism: fold f goes to worker f mod T. Every fold
        // writes only its own cells, so the join in fold order is the only
        // synchronization needed.
        const std::size_t workers = std::min(cfg.threads, kNumFolds);
        std::array<std::exception_ptr, kNumFolds> errors{};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t f = w; f < kNumFolds; f += workers) {
                    try {
                        run_fold(f);
                    } catch (...) {
                        errors[f] = std::current_exception();
                    }
                }
            });
        }
        for (std::thread& t : pool) t.join();
        for (std::size_t f = 0; f < kNumFolds; ++f) {
            if (errors[f]) std::rethrow_exception(errors[f]);
        }
    }

    FlopModel reference = reference_extractor_cost();
    ExperimentReport rep;
    rep.dataset_seed = dataset.seed;
    rep.d = dataset.d;
    rep.K = dataset.K;
    rep.n_bags = dataset.bags.size();
    rep.sigma = dataset.config.sigma;
    rep.config = cfg;
    rep.plan = std::move(plan);
    rep.reference_macs = reference.total_macs();
    for (std::size_t ai = 0; ai < arms.size(); ++ai) {
        ArmReport arm;
        arm.arm = arms[ai];
        std::vector<double> acc, kap, nll;
        for (std::size_t r = 0; r < reps; ++r) {
            for (std::size_t f = 0; f < kNumFolds; ++f) {
                const Cell& cell = cells[ai][r * kNumFolds + f];
                arm.cells.push_back({cfg.mil_seeds[r], f, cell.eval, cell.seconds});
                acc.push_back(cell.eval.accuracy);
                kap.push_back(cell.eval.kappa2);
                nll.push_back(cell.eval.nll);
            }
        }
        std::tie(arm.mean_accuracy, arm.sd_accuracy) = mean_sd(acc);
        std::tie(arm.mean_kappa2, arm.sd_kappa2) = mean_sd(kap);
        std::tie(arm.mean_nll, arm.sd_nll) = mean_sd(nll);
        switch (arms[ai]) {
            case ExperimentArm::NoAug: arm.aug_macs = 0; break;
            case ExperimentArm::PatchAug: arm.aug_macs = rep.reference_macs; break;
            case ExperimentArm::GanInd:
                arm.aug_macs = generator_forward_cost(GanVariant::Ind, dataset.d).total_macs();
                break;
            case ExperimentArm::GanExp:
                arm.aug_macs = generator_forward_cost(GanVariant::Exp, dataset.d).total_macs();
                break;
        }
        for (double s : gan_seconds[ai]) arm.gan_seconds += s;
        rep.arms.push_back(std::move(arm));
    }
    rep.total_seconds = seconds_since(t_total);
    return rep;
}

GridSearchResult grid_search(const Dataset& dataset, ExperimentArm arm,
                             std::span<const double> lr_grid, std::span<const double> wd_grid,
                             const ExperimentConfig& cfg) {
    if (dataset.bags.empty()) throw ContractError("grid_search: dataset has no bags");
    if (lr_grid.empty() || wd_grid.empty()) throw ContractError("grid_search: empty grid");
    if (cfg.mil_seeds.empty()) throw ContractError("grid_search: no replication seeds");

    std::vector<double> lrs(lr_grid.begin(), lr_grid.end());
    std::vector<double> wds(wd_grid.begin(), wd_grid.end());
    std::sort(lrs.begin(), lrs.end());
    std::sort(wds.begin(), wds.end());

    Rng root(cfg.seed);
    std::vector<std::uint32_t> labels = bag_labels(dataset);
    Rng fold_rng = root.derive("exp/folds");
    FoldPlan plan = make_folds(fold_rng, dataset.bags.size(), labels);

    PrecomputedAugs patch;
    if (arm == ExperimentArm::PatchAug) {
        Rng patch_rng = root.derive("exp/patch");
        patch = precompute_patch_augs(patch_rng, dataset, cfg.n_augs);
    }

    // Accumulate per-cell NLL fold by fold, training each fold's augmenter
    // once and sweeping every (lr, wd) against it.
    std::vector<double> nll_sum(lrs.size() * wds.size(), 0.0);
    for (std::size_t f = 0; f < kNumFolds; ++f) {
        const FoldSplit& split = plan.folds[f];
        std::optional<TrainedGan> gan;
        AugPolicy policy = AugPolicy::none();
        if (arm == ExperimentArm::GanInd) {
            gan = train_fold_gan(dataset, split, cfg, root, GanVariant::Ind, f, nullptr);
            policy = AugPolicy::gan(gan->generator, cfg.p_apply);
        } else if (arm == ExperimentArm::GanExp) {
            gan = train_fold_gan(dataset, split, cfg, root, GanVariant::Exp, f, nullptr);
            policy = AugPolicy::gan(gan->generator, cfg.p_apply);
        } else if (arm == ExperimentArm::PatchAug) {
            policy = AugPolicy::patches(patch);
        }
        const std::uint64_t seed = mil_cell_seed(cfg.mil_seeds.front(), f);
        for (std::size_t li = 0; li < lrs.size(); ++li) {
            for (std::size_t wi = 0; wi < wds.size(); ++wi) {
                MilTrainConfig mc = cfg.mil;
                mc.lr = lrs[li];
                mc.weight_decay = wds[wi];
                mc.seed = seed;
                TrainedMil tm = annotated(arm, f, [&] {
                    return train_mil(dataset, split.train, split.val, policy, mc);
                });
                nll_sum[li * wds.size() + wi] += tm.log.best_val_nll;
            }
        }
    }

    GridSearchResult result;
    bool first = true;
    for (std::size_t li = 0; li < lrs.size(); ++li) {
        for (std::size_t wi = 0; wi < wds.size(); ++wi) {
            GridCell cell{lrs[li], wds[wi],
                          nll_sum[li * wds.size() + wi] / static_cast<double>(kNumFolds)};
            result.cells.push_back(cell);
            // Strict less on the ascending sweep: ties keep the earlier point,
            // i.e. the smaller lr, then the smaller weight decay.
            if (first || cell.mean_val_nll < result.mean_val_nll) {
                result.lr = cell.lr;
                result.weight_decay = cell.weight_decay;
                result.mean_val_nll = cell.mean_val_nll;
                first = false;
            }
        }
    }
    return result;
}

const ConfigSchema& embaug_config_schema() {
    static const ConfigSchema schema = {
        {"dataset",
         {{"d", ConfigKind::U64},
          {"k", ConfigKind::U64},
          {"n_bags", ConfigKind::U64},
          {"sigma", ConfigKind::F64},
          {"mean_bag_size", ConfigKind::F64},
          {"min_bag_size", ConfigKind::U64},
          {"max_bag_size", ConfigKind::U64}}},
        {"oracle",
         {{"alpha_max", ConfigKind::F64},
          {"delta_gamma", ConfigKind::F64},
          {"delta_beta", ConfigKind::F64},
          {"delta_scale", ConfigKind::F64}}},
        {"gan",
         {{"variant", ConfigKind::String},
          {"lambda_cos", ConfigKind::F64},
          {"lr_g", ConfigKind::F64},
          {"lr_d", ConfigKind::F64},
          {"weight_decay", ConfigKind::F64},
          {"batch_size", ConfigKind::U64},
          {"epochs", ConfigKind::U64},
          {"conditional_disc", ConfigKind::Bool},
          {"holdout_fraction", ConfigKind::F64}}},
        {"mil",
         {{"d_att", ConfigKind::U64},
          {"epochs", ConfigKind::U64},
          {"lr", ConfigKind::F64},
          {"weight_decay", ConfigKind::F64}}},
        {"experiment",
         {{"arms", ConfigKind::String},
          {"mil_seeds", ConfigKind::String},
          {"n_augs", ConfigKind::U64},
          {"pairs_per_instance", ConfigKind::U64},
          {"max_gan_pairs", ConfigKind::U64},
          {"p_apply", ConfigKind::F64},
          {"threads", ConfigKind::U64}}},
        {"bench",
         {{"batch", ConfigKind::U64},
          {"min_batches", ConfigKind::U64},
          {"min_seconds", ConfigKind::F64}}},
    };
    return schema;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        std::size_t end = text.find(',', begin);
        if (end == std::string::npos) end = text.size();
        std::size_t b = begin, e = end;
        while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
        parts.push_back(text.substr(b, e - b));
        begin = end + 1;
    }
    return parts;
}

}  // namespace

GenConfig dataset_config_from(const ConfigFile& cfg) {
    validate_config(cfg, embaug_config_schema());
    GenConfig gc;
    gc.d = cfg.get_u64("dataset", "d", gc.d);
    gc.K = cfg.get_u64("dataset", "k", gc.K);
    gc.n_bags = cfg.get_u64("dataset", "n_bags", gc.n_bags);
    gc.sigma = cfg.get_double("dataset", "sigma", gc.sigma);
    gc.mean_bag_size = cfg.get_double("dataset", "mean_bag_size", gc.mean_bag_size);
    gc.min_bag_size = cfg.get_u64("dataset", "min_bag_size", gc.min_bag_size);
    gc.max_bag_size = cfg.get_u64("dataset", "max_bag_size", gc.max_bag_size);
    gc.oracle.alpha_max = cfg.get_double("oracle", "alpha_max", gc.oracle.alpha_max);
    gc.oracle.delta_gamma = cfg.get_double("oracle", "delta_gamma", gc.oracle.delta_gamma);
    gc.oracle.delta_beta = cfg.get_double("oracle", "delta_beta", gc.oracle.delta_beta);
    gc.oracle.delta_scale = cfg.get_double("oracle", "delta_scale", gc.oracle.delta_scale);
    return gc;
}

ExperimentConfig experiment_config_from(const ConfigFile& cfg) {
    validate_config(cfg, embaug_config_schema());
    ExperimentConfig ec;
    if (cfg.has("experiment", "mil_seeds")) {
        ec.mil_seeds.clear();
        for (const std::string& part : split_list(cfg.raw("experiment", "mil_seeds"))) {
            if (part.empty()) {
                throw ContractError("config: [experiment] mil_seeds: empty entry in list");
            }
            try {
                ec.mil_seeds.push_back(std::stoull(part));
            } catch (const std::exception&) {
                throw ContractError("config: [experiment] mil_seeds: expected an unsigned integer, got \"" +
                                    part + "\"");
            }
        }
    }
    ec.n_augs = cfg.get_u64("experiment", "n_augs", ec.n_augs);
    ec.pairs_per_instance = cfg.get_u64("experiment", "pairs_per_instance", ec.pairs_per_instance);
    ec.max_gan_pairs = cfg.get_u64("experiment", "max_gan_pairs", ec.max_gan_pairs);
    ec.p_apply = cfg.get_double("experiment", "p_apply", ec.p_apply);
    ec.threads = cfg.get_u64("experiment", "threads", ec.threads);

    ec.gan.variant = variant_from_name(
        cfg.get_string("gan", "variant", variant_name(ec.gan.variant)));
    ec.gan.lambda_cos = cfg.get_double("gan", "lambda_cos", ec.gan.lambda_cos);
    ec.gan.lr_g = cfg.get_double("gan", "lr_g", ec.gan.lr_g);
    ec.gan.lr_d = cfg.get_double("gan", "lr_d", ec.gan.lr_d);
    ec.gan.weight_decay = cfg.get_double("gan", "weight_decay", ec.gan.weight_decay);
    ec.gan.batch_size = cfg.get_u64("gan", "batch_size", ec.gan.batch_size);
    ec.gan.epochs = cfg.get_u64("gan", "epochs", ec.gan.epochs);
    ec.gan.conditional_disc = cfg.get_bool("gan", "conditional_disc", ec.gan.conditional_disc);
    ec.gan.holdout_fraction = cfg.get_double("gan", "holdout_fraction", ec.gan.holdout_fraction);

    ec.mil.d_att = cfg.get_u64("mil", "d_att", ec.mil.d_att);
    ec.mil.epochs = cfg.get_u64("mil", "epochs", ec.mil.epochs);
    ec.mil.lr = cfg.get_double("mil", "lr", ec.mil.lr);
    ec.mil.weight_decay = cfg.get_double("mil", "weight_decay", ec.mil.weight_decay);
    return ec;
}

std::vector<ExperimentArm> arms_from_config(const ConfigFile& cfg) {
    validate_config(cfg, embaug_config_schema());
    std::vector<ExperimentArm> arms;
    if (!cfg.has("experiment", "arms")) {
        arms.assign(std::begin(kArmOrder), std::end(kArmOrder));
        return arms;
    }
    for (const std::string& part : split_list(cfg.raw("experiment", "arms"))) {
        if (part.empty()) throw ContractError("config: [experiment] arms: empty entry in list");
        arms.push_back(arm_from_name(part));
    }
    return arms;
}

}  // namespace embaug
