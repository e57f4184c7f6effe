#pragma once

#include "embaug/dagan.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace embaug {

/// One multiply-accumulate-bearing layer plus the element count its
/// nonlinearity touches (0 for purely linear layers).
struct LayerCost {
    std::string name;
    std::uint64_t macs = 0;
    std::uint64_t activation_elems = 0;
};

/// Per-layer forward cost of a network. FLOPs count each multiply-accumulate
/// as 2 and each activation element as 1; bias additions are not counted
/// separately (they are second-order against the products).
struct FlopModel {
    std::vector<LayerCost> layers;

    std::uint64_t total_macs() const;
    std::uint64_t total_flops() const;
};

/// Fully connected net with the given layer widths, one activation per hidden
/// element, linear output.
FlopModel dense_forward_cost(std::span<const std::size_t> dims);

/// One generator pass on a single embedding. The per-coordinate variant runs
/// its tiny shared net once per coordinate; the joint variant is one pass of
/// its conditioned stack.
FlopModel generator_forward_cost(GanVariant variant, std::size_t d);

/// Per-layer enumeration of the classic 50-layer bottleneck residual
/// classifier (stem + 3/4/6/3 stages + 1000-way head) on a 256x256x3 input —
/// the cost of re-extracting one patch embedding after a pixel-space
/// augmentation, which generating in embedding space avoids.
FlopModel reference_extractor_cost();

/// reference MACs / generator MACs for a single augmentation.
double analytic_speedup(GanVariant variant, std::size_t d, const FlopModel& reference);

struct BenchConfig {
    std::size_t batch = 64;       // embeddings augmented per timed call
    std::size_t min_batches = 3;  // at least this many timed generator calls
    double min_seconds = 0.25;    // ...and at least this much wall time per side
    std::uint64_t seed = 0;
};

struct SpeedupReport {
    GanVariant variant = GanVariant::Ind;
    std::size_t d = 0;
    std::uint64_t generator_macs = 0;
    std::uint64_t generator_flops = 0;
    std::uint64_t reference_macs = 0;
    std::uint64_t reference_flops = 0;
    double analytic_ratio = 0.0;  // reference_macs / generator_macs

    // Wall-clock side: batched augmentation throughput against a dense
    // synthetic workload calibrated to the reference MAC count.
    double seconds_per_aug = 0.0;
    double seconds_per_reference = 0.0;
    double measured_ratio = 0.0;
};

/// Times batched `sample_augmentations` calls against a dense matrix workload
/// executing the reference extractor's MAC count (matched to within one
/// 512-element output column), and pairs that with the analytic ratio.
SpeedupReport bench_speedup(const Generator& gen, const FlopModel& reference,
                            const BenchConfig& cfg = {});

}  // namespace embaug
