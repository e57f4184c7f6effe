#pragma once

#include "embaug/config.hpp"
#include "embaug/dagan.hpp"
#include "embaug/metrics.hpp"
#include "embaug/mil.hpp"
#include "embaug/synthdata.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace embaug {

inline constexpr std::size_t kNumFolds = 5;

/// One cross-validation split; each list is sorted ascending.
struct FoldSplit {
    std::vector<std::size_t> train, val, test;
};

/// Rotation over 5 near-equal folds: split f tests on fold f, validates on
/// fold (f+1) mod 5, and trains on the remaining three.
struct FoldPlan {
    std::vector<FoldSplit> folds;
    std::vector<std::string> warnings;  // e.g. a class absent from some fold
};

/// Stratified assignment: each class's bags are shuffled and dealt round-robin
/// into folds, with the dealing cursor carried across classes so remainders
/// spread evenly. A class too small to reach every fold is a warning, not an
/// error. Requires n_bags >= 10 and one label per bag.
FoldPlan make_folds(Rng& rng, std::size_t n_bags, std::span<const std::uint32_t> labels);

/// Experiment arms, in report row order.
enum class ExperimentArm : std::uint32_t { NoAug = 0, PatchAug = 1, GanInd = 2, GanExp = 3 };

const char* arm_name(ExperimentArm arm);
ExperimentArm arm_from_name(std::string_view name);
GanVariant variant_from_name(std::string_view name);

struct ExperimentConfig {
    /// Root seed: fold assignment, precomputed patch variants, augmenter
    /// training pairs, and augmenter seeds all derive from it.
    std::uint64_t seed = 0;
    /// Independent classifier replications. For replication seed S and fold f,
    /// every arm trains with classifier seed Rng(S).derive("exp/mil", f), so
    /// arms share initialization and shuffle order and differ only through the
    /// augmentation stream.
    std::vector<std::uint64_t> mil_seeds{0, 1, 2};
    std::size_t n_augs = 8;              // precomputed variants per instance (patch arm)
    std::size_t pairs_per_instance = 1;  // augmenter training pairs per train instance
    std::size_t max_gan_pairs = 4096;    // per-fold cap on the pair set (0 = uncapped)
    double p_apply = 1.0;                // online-augmentation probability per instance
    GanConfig gan;                       // variant and seed are set per arm and fold
    MilTrainConfig mil;                  // lr/weight_decay/epochs; seed is set per cell
    /// Folds may run concurrently; every fold draws from its own derived
    /// streams, so the thread count never changes the results.
    std::size_t threads = 1;
};

/// One (replication, fold) measurement on the fold's test split.
struct ArmCell {
    std::uint64_t mil_seed = 0;
    std::size_t fold = 0;
    EvalResult eval;
    double mil_seconds = 0.0;  // wall clock; reported in the timing file only
};

struct ArmReport {
    ExperimentArm arm = ExperimentArm::NoAug;
    std::vector<ArmCell> cells;  // replication-major, fold-minor
    double mean_accuracy = 0.0, sd_accuracy = 0.0;
    double mean_kappa2 = 0.0, sd_kappa2 = 0.0;
    double mean_nll = 0.0, sd_nll = 0.0;
    /// Analytic per-augmentation cost: the generator pass for online arms, a
    /// full extractor pass for precomputed patch variants (which stand in for
    /// pixel-space augmentation plus re-extraction), 0 when not augmenting.
    std::uint64_t aug_macs = 0;
    double gan_seconds = 0.0;  // augmenter training wall clock, summed over folds
};

struct ExperimentReport {
    std::uint32_t schema_version = 1;
    std::uint64_t dataset_seed = 0;
    std::size_t d = 0, K = 0, n_bags = 0;
    double sigma = 0.0;
    ExperimentConfig config;
    FoldPlan plan;
    std::vector<ArmReport> arms;  // canonical row order: no-aug, patch-aug, gan-ind, gan-exp
    std::uint64_t reference_macs = 0;
    double total_seconds = 0.0;  // wall clock; reported in the timing file only
};

/// The cross-validation protocol: for every requested arm, replication seed,
/// and fold, train the bag classifier on the fold's training split (augmenting
/// per the arm), select on the validation split, and score the test split.
/// Online-augmentation arms train one augmenter per fold — from pairs built
/// exclusively out of that fold's training bags, checked by
/// verify_no_leakage — shared across replications. Requested arms are
/// collapsed into canonical row order. Training failures are rethrown
/// annotated with the arm and fold. Results are bit-reproducible for a fixed
/// config, regardless of cfg.threads.
ExperimentReport run_experiment(const Dataset& dataset, std::span<const ExperimentArm> arms,
                                const ExperimentConfig& cfg);

/// Throws unless every pair was drawn from one of the allowed bags.
void verify_no_leakage(const PairSet& pairs, std::span<const std::size_t> allowed_bags);

/// Uniform subsample without replacement down to max_pairs (no-op when the
/// set is already small enough); kept pairs stay in their original order.
PairSet subsample_pairs(Rng& rng, const PairSet& pairs, std::size_t max_pairs);

struct GridCell {
    double lr = 0.0;
    double weight_decay = 0.0;
    double mean_val_nll = 0.0;  // averaged over folds, best epoch per fold
};

struct GridSearchResult {
    double lr = 0.0;
    double weight_decay = 0.0;
    double mean_val_nll = 0.0;
    std::vector<GridCell> cells;  // ascending lr, then ascending weight_decay
};

/// Exhaustive sweep minimizing mean validation NLL across folds; ties go to
/// the smaller lr, then the smaller weight decay. Every cell trains fold f
/// with classifier seed Rng(cfg.mil_seeds.front()).derive("exp/mil", f) —
/// independent of (lr, wd) — so cells differ only through the
/// hyperparameters. Folds and per-fold augmenters are derived exactly as in
/// run_experiment, with augmenters trained once per fold and shared across
/// cells.
GridSearchResult grid_search(const Dataset& dataset, ExperimentArm arm,
                             std::span<const double> lr_grid, std::span<const double> wd_grid,
                             const ExperimentConfig& cfg);

/// Machine-readable report: everything except wall-clock fields, so two runs
/// with the same seed produce identical bytes.
std::string report_json(const ExperimentReport& rep);

/// Fixed-width text table (mean +/- sd per arm) plus the augmentation-cost
/// block.
std::string report_table(const ExperimentReport& rep);

/// Wall-clock fields (augmenter and classifier training times) live here,
/// apart from the deterministic report.
std::string timing_json(const ExperimentReport& rep);

/// Writes report.json, report.txt, and timing.json into dir (created if
/// missing).
void write_report_files(const ExperimentReport& rep, const std::string& dir);

/// All sections and keys the tools accept in --config files.
const ConfigSchema& embaug_config_schema();

GenConfig dataset_config_from(const ConfigFile& cfg);
ExperimentConfig experiment_config_from(const ConfigFile& cfg);
std::vector<ExperimentArm> arms_from_config(const ConfigFile& cfg);

}  // namespace embaug
