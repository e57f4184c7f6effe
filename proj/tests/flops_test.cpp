#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "embaug/flops.hpp"

#include <cstdint>
#include <string>
#include <vector>

using namespace embaug;

namespace {

std::uint64_t sum_macs_with_prefix(const FlopModel& m, const std::string& prefix) {
    std::uint64_t sum = 0;
    for (const LayerCost& l : m.layers) {
        if (l.name.rfind(prefix, 0) == 0) sum += l.macs;
    }
    return sum;
}

}  // namespace

TEST_CASE("dense forward cost follows the 2*fan_in*fan_out + activations rule") {
    const std::size_t dims[] = {3, 5, 2};
    FlopModel m = dense_forward_cost(dims);
    REQUIRE(m.layers.size() == 2);
    CHECK(m.layers[0].macs == 15);
    CHECK(m.layers[0].activation_elems == 5);  // hidden layer
    CHECK(m.layers[1].macs == 10);
    CHECK(m.layers[1].activation_elems == 0);  // linear output
    CHECK(m.total_macs() == 25);
    CHECK(m.total_flops() == 2 * 25 + 5);

    const std::size_t too_short[] = {7};
    CHECK_THROWS_AS((void)dense_forward_cost(too_short), ContractError);
}

TEST_CASE("per-coordinate generator cost is d copies of the tiny shared net") {
    // One 2 -> 4 -> 1 pass costs 2*4 + 4*1 = 12 MACs and 4 activations.
    for (std::size_t d : {4u, 16u, 1024u}) {
        FlopModel m = generator_forward_cost(GanVariant::Ind, d);
        CHECK(m.total_macs() == 12 * d);
        CHECK(m.total_flops() == 2 * 12 * d + 4 * d);
    }
}

TEST_CASE("joint generator cost at d = 1024, by hand") {
    // Stack widths at d = 1024 (cap max(4d, 256) = 4096 never binds):
    // 2048 -> 1024 -> 512 -> 256 -> 512 -> 1024 -> 1024.
    // MACs: 2048*1024 + 1024*512 + 512*256 + 256*512 + 512*1024 + 1024*1024
    //     = 2097152 + 524288 + 131072 + 131072 + 524288 + 1048576.
    FlopModel m = generator_forward_cost(GanVariant::Exp, 1024);
    CHECK(m.total_macs() == 4'456'448);
    // Hidden activations: 1024 + 512 + 256 + 512 + 1024 = 3328.
    CHECK(m.total_flops() == 2 * 4'456'448 + 3'328);

    // At d = 64 every width clamps to max(4*64, 256) = 256:
    // 128 -> 256 -> 256 -> 256 -> 256 -> 256 -> 64.
    CHECK(generator_forward_cost(GanVariant::Exp, 64).total_macs() ==
          128 * 256 + 4 * 256 * 256 + 256 * 64);
}

TEST_CASE("reference extractor enumeration at 256x256") {
    FlopModel m = reference_extractor_cost();

    // Stem: 7x7 conv, 3 -> 64 channels, on the stride-2 128x128 output grid:
    // 49 * 3 * 64 * 128^2.
    REQUIRE_FALSE(m.layers.empty());
    CHECK(m.layers.front().name == "conv1");
    CHECK(m.layers.front().macs == 154'140'672);

    // 1000-way head on 2048 pooled features.
    CHECK(m.layers.back().name == "fc");
    CHECK(m.layers.back().macs == 2'048'000);

    // 1 stem + (3+4+6+3) blocks x 3 convs + 4 shortcut projections + 1 head.
    CHECK(m.layers.size() == 54);

    // Stage subtotals, each derived by summing k^2 * c_in * c_out * hw^2 over
    // the stage's convolutions by hand:
    //   stage1 @64^2:  301989888 + 2 * 285212672
    //   stage2 @32^2:  486539264 + 3 * 285212672
    //   stage3 @16^2:  486539264 + 5 * 285212672
    //   stage4 @8^2:   486539264 + 2 * 285212672
    CHECK(sum_macs_with_prefix(m, "stage1.") == 872'415'232);
    CHECK(sum_macs_with_prefix(m, "stage2.") == 1'342'177'280);
    CHECK(sum_macs_with_prefix(m, "stage3.") == 1'912'602'624);
    CHECK(sum_macs_with_prefix(m, "stage4.") == 1'056'964'608);

    CHECK(m.total_macs() == 5'340'348'416);
    CHECK(m.total_flops() > 2 * m.total_macs());  // activations add on top
}

TEST_CASE("analytic speedups clear 300x at d = 1024 and shrink as d grows") {
    FlopModel ref = reference_extractor_cost();

    const double exp_ratio = analytic_speedup(GanVariant::Exp, 1024, ref);
    const double ind_ratio = analytic_speedup(GanVariant::Ind, 1024, ref);
    CHECK(exp_ratio == doctest::Approx(5'340'348'416.0 / 4'456'448.0).epsilon(1e-12));
    CHECK(ind_ratio == doctest::Approx(5'340'348'416.0 / 12'288.0).epsilon(1e-12));
    CHECK(exp_ratio >= 300.0);
    CHECK(ind_ratio >= 300.0);

    for (GanVariant v : {GanVariant::Ind, GanVariant::Exp}) {
        double prev = 0.0;
        bool first = true;
        for (std::size_t d : {16u, 64u, 256u, 1024u}) {
            double ratio = analytic_speedup(v, d, ref);
            if (!first) CHECK(ratio < prev);
            prev = ratio;
            first = false;
        }
    }
}

TEST_CASE("wall-clock bench produces consistent, positive figures") {
    Rng rng(7);
    Generator gen = make_generator(GanVariant::Ind, 8, rng);
    FlopModel ref = reference_extractor_cost();
    BenchConfig cfg;
    cfg.batch = 16;
    cfg.min_batches = 2;
    cfg.min_seconds = 0.02;
    SpeedupReport rep = bench_speedup(gen, ref, cfg);

    CHECK(rep.variant == GanVariant::Ind);
    CHECK(rep.d == 8);
    CHECK(rep.generator_macs == 12 * 8);
    CHECK(rep.reference_macs == ref.total_macs());
    CHECK(rep.analytic_ratio ==
          doctest::Approx(static_cast<double>(rep.reference_macs) / rep.generator_macs));
    CHECK(rep.seconds_per_aug > 0.0);
    CHECK(rep.seconds_per_reference > 0.0);
    CHECK(rep.measured_ratio ==
          doctest::Approx(rep.seconds_per_reference / rep.seconds_per_aug));

    BenchConfig bad = cfg;
    bad.batch = 0;
    CHECK_THROWS_AS((void)bench_speedup(gen, ref, bad), ContractError);
    bad = cfg;
    bad.min_batches = 0;
    CHECK_THROWS_AS((void)bench_speedup(gen, ref, bad), ContractError);
}
