#include "embaug/flops.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <numeric>

namespace embaug {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::uint64_t FlopModel::total_macs() const {
    std::uint64_t sum = 0;
    for (const LayerCost& l : layers) sum += l.macs;
    return sum;
}

std::uint64_t FlopModel::total_flops() const {
    std::uint64_t sum = 0;
    for (const LayerCost& l : layers) sum += 2 * l.macs + l.activation_elems;
    return sum;
}

FlopModel dense_forward_cost(std::span<const std::size_t> dims) {
    if (dims.size() < 2) throw ContractError("dense_forward_cost: need at least two layer widths");
    FlopModel m;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const bool hidden = i + 2 < dims.size();
        m.layers.push_back({"dense" + std::to_string(i),
                            static_cast<std::uint64_t>(dims[i]) * dims[i + 1],
                            hidden ? static_cast<std::uint64_t>(dims[i + 1]) : 0});
    }
    return m;
}

FlopModel generator_forward_cost(GanVariant variant, std::size_t d) {
    std::vector<std::size_t> dims = generator_dims(variant, d);
    FlopModel per_pass = dense_forward_cost(dims);
    if (variant == GanVariant::Exp) return per_pass;
    // The per-coordinate net runs once per coordinate of the embedding.
    for (LayerCost& l : per_pass.layers) {
        l.macs *= d;
        l.activation_elems *= d;
    }
    return per_pass;
}

FlopModel reference_extractor_cost() {
    FlopModel m;
    // k x k convolution producing c_out maps on an hw x hw grid, with an
    // optional elementwise ReLU on the output. Batch-norm scales fold into the
    // convolution weights at inference time, so they carry no extra cost.
    auto conv = [&m](std::string name, std::uint64_t k, std::uint64_t c_in, std::uint64_t c_out,
                     std::uint64_t hw, bool relu) {
        m.layers.push_back(
            {std::move(name), k * k * c_in * c_out * hw * hw, relu ? c_out * hw * hw : 0});
    };

    // Stem: 7x7 stride-2 convolution, 3 -> 64 channels, 256 -> 128 grid,
    // followed by a 3x3 stride-2 max pool down to 64 (no multiplies).
    conv("conv1", 7, 3, 64, 128, true);

    // Bottleneck stages: {blocks} x [1x1 reduce, 3x3, 1x1 expand to 4x mid].
    // The first block of a stage downsamples in its 3x3 (stage 1 keeps the
    // grid) and carries a 1x1 projection on the shortcut.
    struct Stage {
        std::uint64_t blocks, mid, hw_out;
    };
    const Stage stages[4] = {{3, 64, 64}, {4, 128, 32}, {6, 256, 16}, {3, 512, 8}};
    std::uint64_t c_in = 64;   // channels entering the stage
    std::uint64_t hw_in = 64;  // grid entering the stage (after the pool)
    for (int s = 0; s < 4; ++s) {
        const Stage& st = stages[s];
        const std::uint64_t c_out = 4 * st.mid;
        for (std::uint64_t b = 0; b < st.blocks; ++b) {
            std::string base = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b + 1);
            // The 1x1 reduce runs on the incoming grid; everything after the
            // (possibly strided) 3x3 runs on the stage's output grid.
            conv(base + ".reduce", 1, b == 0 ? c_in : c_out, st.mid, b == 0 ? hw_in : st.hw_out,
                 true);
            conv(base + ".mid", 3, st.mid, st.mid, st.hw_out, true);
            conv(base + ".expand", 1, st.mid, c_out, st.hw_out, false);
            if (b == 0) conv(base + ".proj", 1, c_in, c_out, st.hw_out, false);
            // ReLU on the block output after the residual add.
            m.layers.back().activation_elems += c_out * st.hw_out * st.hw_out;
        }
        c_in = c_out;
        hw_in = st.hw_out;
    }

    // Global average pool (no multiplies), then the 1000-way classifier.
    m.layers.push_back({"fc", 2048ull * 1000ull, 0});
    return m;
}

double analytic_speedup(GanVariant variant, std::size_t d, const FlopModel& reference) {
    const std::uint64_t gen = generator_forward_cost(variant, d).total_macs();
    if (gen == 0) throw ContractError("analytic_speedup: generator cost is zero");
    return static_cast<double>(reference.total_macs()) / static_cast<double>(gen);
}

namespace {

// Dense matrix products totalling `macs` multiply-accumulates, in 512-wide
// panels so the working set stays small. Returns a value derived from the
// products so the work cannot be optimized away.
double reference_workload(std::uint64_t macs) {
    constexpr Eigen::Index n = 512;
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, 1.0 / 512.0);
    Eigen::MatrixXd b = Eigen::MatrixXd::Constant(n, n, 1.0);
    Eigen::MatrixXd c(n, n);
    double sink = 0.0;
    std::uint64_t done = 0;
    const std::uint64_t per_panel = static_cast<std::uint64_t>(n) * n * n;
    while (done + per_panel <= macs) {
        c.noalias() = a * b;
        sink += c(0, 0);
        done += per_panel;
    }
    const Eigen::Index cols = static_cast<Eigen::Index>((macs - done) / (n * n));
    if (cols > 0) {
        c.leftCols(cols).noalias() = a * b.leftCols(cols);
        sink += c(0, 0);
    }
    return sink;
}

}  // namespace

SpeedupReport bench_speedup(const Generator& gen, const FlopModel& reference,
                            const BenchConfig& cfg) {
    if (cfg.batch == 0) throw ContractError("bench_speedup: batch must be positive");
    if (cfg.min_batches == 0) throw ContractError("bench_speedup: min_batches must be positive");

    SpeedupReport rep;
    rep.variant = gen.variant;
    rep.d = gen.d;
    FlopModel gen_cost = generator_forward_cost(gen.variant, gen.d);
    rep.generator_macs = gen_cost.total_macs();
    rep.generator_flops = gen_cost.total_flops();
    rep.reference_macs = reference.total_macs();
    rep.reference_flops = reference.total_flops();
    rep.analytic_ratio = analytic_speedup(gen.variant, gen.d, reference);

    Rng rng(cfg.seed);
    Rng h_rng = rng.derive("bench/h");
    Rng z_rng = rng.derive("bench/z");
    Tensor h({cfg.batch, gen.d});
    auto hv = h.values();
    for (double& x : hv) x = h_rng.normal();

    // Augmentation side: batched generation, as training consumes it.
    (void)sample_augmentations(gen, h, z_rng);  // warm-up
    std::size_t batches = 0;
    auto start = std::chrono::steady_clock::now();
    double elapsed = 0.0;
    while (batches < cfg.min_batches || elapsed < cfg.min_seconds) {
        (void)sample_augmentations(gen, h, z_rng);
        ++batches;
        elapsed = seconds_since(start);
    }
    rep.seconds_per_aug = elapsed / (static_cast<double>(batches) * static_cast<double>(cfg.batch));

    // Reference side: the same MAC count as one extractor pass, in dense
    // panels. One warm panel, then whole passes until the time floor.
    volatile double sink = reference_workload(static_cast<std::uint64_t>(512) * 512 * 512);
    std::size_t passes = 0;
    start = std::chrono::steady_clock::now();
    elapsed = 0.0;
    while (passes < 1 || elapsed < cfg.min_seconds) {
        sink = sink + reference_workload(rep.reference_macs);
        ++passes;
        elapsed = seconds_since(start);
    }
    (void)sink;
    rep.seconds_per_reference = elapsed / static_cast<double>(passes);

    rep.measured_ratio = rep.seconds_per_reference / rep.seconds_per_aug;
    return rep;
}

}  // namespace embaug
