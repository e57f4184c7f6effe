#include "embaug/dagan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "embaug/adam.hpp"
#include "embaug/common.hpp"

namespace embaug {
namespace {

constexpr std::size_t kExpWidths[] = {1024, 512, 256, 512, 1024};

Tensor normal_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Tensor t({rows, cols});
    for (double& x : t.values()) x = rng.normal();
    return t;
}

Tensor const_rows(std::size_t n, double value) {
    return Tensor({n}, std::vector<double>(n, value));
}

void check_rows(const Tensor& t, std::size_t d, const char* name) {
    if (!t.defined() || t.rank() != 2 || t.dim(1) != d) {
        throw ShapeError(std::string(name) + ": expected [B x " + std::to_string(d) +
                         "], got " + (t.defined() ? shape_str(t.shape()) : "undefined"));
    }
}

/// Runs the per-coordinate network over every (a_j, b_j) pair of a batch by
/// flattening both [B x d] inputs to one [B*d x 2] matrix. Row-major order
/// keeps row b*d + j = (a(b,j), b(b,j)).
Var per_coordinate_pass(Graph& g, const Mlp& net, Var a, Var b, std::size_t batch,
                        std::size_t d) {
    Var ac = g.reshape(a, {batch * d, 1});
    Var bc = g.reshape(b, {batch * d, 1});
    Var out = net.apply(g, g.concat_cols(ac, bc));
    return g.reshape(out, {batch, d});
}

}  // namespace

const char* variant_name(GanVariant v) { return v == GanVariant::Ind ? "ind" : "exp"; }

std::vector<std::size_t> generator_dims(GanVariant variant, std::size_t d) {
    if (d == 0) throw ContractError("generator_dims: d must be positive");
    if (variant == GanVariant::Ind) return {2, 4, 1};
    std::size_t cap = std::max<std::size_t>(4 * d, 256);
    std::vector<std::size_t> dims{2 * d};
    for (std::size_t w : kExpWidths) dims.push_back(std::min(w, cap));
    dims.push_back(d);
    return dims;
}

std::vector<std::size_t> discriminator_dims(GanVariant variant, std::size_t d,
                                            bool conditional) {
    if (d == 0) throw ContractError("discriminator_dims: d must be positive");
    if (variant == GanVariant::Ind) {
        return conditional ? std::vector<std::size_t>{2, 4, 1}
                           : std::vector<std::size_t>{1, 4, 1};
    }
    std::size_t cap = std::max<std::size_t>(4 * d, 256);
    std::vector<std::size_t> dims{conditional ? 2 * d : d};
    for (std::size_t w : kExpWidths) dims.push_back(std::min(w, cap));
    dims.push_back(1);
    return dims;
}

Generator make_generator(GanVariant variant, std::size_t d, Rng& rng) {
    return Generator{variant, d, Mlp(generator_dims(variant, d), rng)};
}

Discriminator make_discriminator(GanVariant variant, std::size_t d, bool conditional,
                                 Rng& rng) {
    return Discriminator{variant, d, conditional,
                         Mlp(discriminator_dims(variant, d, conditional), rng)};
}

Var Generator::forward(Graph& g, Var z, Var h) const {
    Tensor hv = g.value(h);
    check_rows(hv, d, "generator");
    check_rows(g.value(z), d, "generator noise");
    std::size_t batch = hv.dim(0);
    if (variant == GanVariant::Ind) return per_coordinate_pass(g, net, z, h, batch, d);
    return net.apply(g, g.concat_cols(z, h));
}

Tensor Generator::forward_detached(const Tensor& z, const Tensor& h) const {
    Graph g(false);
    return g.value(forward(g, g.constant(z), g.constant(h)));
}

Var Discriminator::forward(Graph& g, Var h, Var candidate) const {
    Tensor cv = g.value(candidate);
    check_rows(cv, d, "discriminator candidate");
    std::size_t batch = cv.dim(0);
    Var logit;  // [batch]
    if (variant == GanVariant::Ind) {
        Var scores;  // [batch x d], one per coordinate, averaged before the sigmoid
        if (conditional) {
            check_rows(g.value(h), d, "discriminator");
            scores = per_coordinate_pass(g, net, h, candidate, batch, d);
        } else {
            Var cc = g.reshape(candidate, {batch * d, 1});
            scores = g.reshape(net.apply(g, cc), {batch, d});
        }
        logit = g.row_mean(scores);
    } else {
        Var in = candidate;
        if (conditional) {
            check_rows(g.value(h), d, "discriminator");
            in = g.concat_cols(h, candidate);
        }
        logit = g.reshape(net.apply(g, in), {batch});
    }
    return g.sigmoid(logit);
}

Var generator_loss(Graph& g, const Generator& gen, const Discriminator& disc,
                   const Tensor& h, const Tensor& h_real_aug, const Tensor& z,
                   double lambda_cos) {
    if (lambda_cos < 0) throw ContractError("generator_loss: lambda_cos must be >= 0");
    check_rows(h, gen.d, "generator_loss h");
    check_rows(h_real_aug, gen.d, "generator_loss h_real_aug");
    std::size_t batch = h.dim(0);
    Var hv = g.constant(h);
    Var fake = gen.forward(g, g.constant(z), hv);
    Var cos = g.cosine_rows(fake, g.constant(h_real_aug));
    Var cos_term = g.affine(cos, -lambda_cos, lambda_cos);  // lambda * (1 - cos)
    Var adv = g.bce(disc.forward(g, hv, fake), g.constant(const_rows(batch, 1.0)));
    return g.mean(g.add(cos_term, adv));
}

Var discriminator_loss(Graph& g, const Discriminator& disc, const Tensor& h,
                       const Tensor& h_real_aug, const Tensor& fake) {
    check_rows(h, disc.d, "discriminator_loss h");
    std::size_t batch = h.dim(0);
    Var hv = g.constant(h);
    Var real_term =
        g.bce(disc.forward(g, hv, g.constant(h_real_aug)), g.constant(const_rows(batch, 1.0)));
    Var fake_term =
        g.bce(disc.forward(g, hv, g.constant(fake)), g.constant(const_rows(batch, 0.0)));
    return g.mean(g.add(real_term, fake_term));
}

std::vector<double> sample_augmentation(const Generator& gen, std::span<const double> h,
                                        Rng& rng) {
    if (h.size() != gen.d) {
        throw ShapeError("sample_augmentation: expected " + std::to_string(gen.d) +
                         " values, got " + std::to_string(h.size()));
    }
    Tensor hv({1, gen.d}, std::vector<double>(h.begin(), h.end()));
    Tensor out = gen.forward_detached(normal_matrix(rng, 1, gen.d), hv);
    auto row = out.values();
    return std::vector<double>(row.begin(), row.end());
}

Tensor sample_augmentations(const Generator& gen, const Tensor& h_rows, Rng& rng) {
    check_rows(h_rows, gen.d, "sample_augmentations");
    return gen.forward_detached(normal_matrix(rng, h_rows.dim(0), gen.d), h_rows);
}

double holdout_alignment(const Generator& gen, const Tensor& h, const Tensor& h_real_aug,
                         Rng& rng) {
    check_rows(h, gen.d, "holdout_alignment h");
    check_rows(h_real_aug, gen.d, "holdout_alignment h_real_aug");
    std::size_t n = h.dim(0), d = gen.d;
    Tensor fake = gen.forward_detached(normal_matrix(rng, n, d), h);
    auto f = fake.values();
    auto a = h_real_aug.values();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0, nf = 0.0, na = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double x = f[i * d + j], y = a[i * d + j];
            dot += x * y;
            nf += x * x;
            na += y * y;
        }
        double denom = std::sqrt(nf) * std::sqrt(na);
        // Diagnostic only, so a collapsed row scores 0 instead of throwing.
        total += denom < Graph::kNormFloor ? 0.0 : dot / denom;
    }
    return total / static_cast<double>(n);
}

namespace {

struct Batch {
    Tensor h;
    Tensor h_aug;
};

Batch gather_rows(const PairSet& pairs, std::span<const std::size_t> order,
                  std::size_t begin, std::size_t count) {
    std::size_t d = pairs.d;
    Batch b{Tensor({count, d}), Tensor({count, d})};
    auto hv = b.h.values();
    auto av = b.h_aug.values();
    for (std::size_t r = 0; r < count; ++r) {
        std::size_t src = order[begin + r];
        std::copy_n(pairs.h.begin() + src * d, d, hv.begin() + r * d);
        std::copy_n(pairs.h_aug.begin() + src * d, d, av.begin() + r * d);
    }
    return b;
}

double checked_loss(Graph& g, Var loss, const char* which, std::size_t epoch,
                    std::size_t batch) {
    double v = g.scalar_value(loss);
    if (!std::isfinite(v)) {
        throw NonFiniteError("train_gan: non-finite " + std::string(which) +
                             " loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch));
    }
    return v;
}

[[noreturn]] void rethrow_with_position(const NonFiniteError& e, std::size_t epoch,
                                        std::size_t batch) {
    throw NonFiniteError("train_gan: epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch) + ": " + e.what());
}

}  // namespace

TrainedGan train_gan(const PairSet& pairs, const GanConfig& cfg) {
    std::size_t n = pairs.size();
    if (n == 0) throw ContractError("train_gan: pair set is empty");
    if (cfg.batch_size == 0) throw ContractError("train_gan: batch_size must be positive");
    if (cfg.lambda_cos < 0) throw ContractError("train_gan: lambda_cos must be >= 0");
    if (cfg.holdout_fraction < 0 || cfg.holdout_fraction >= 1) {
        throw ContractError("train_gan: holdout_fraction must be in [0, 1)");
    }
    std::size_t d = pairs.d;

    Rng root(cfg.seed);
    Rng init_g = root.derive("gan/init/gen");
    Rng init_d = root.derive("gan/init/disc");
    TrainedGan result{make_generator(cfg.variant, d, init_g),
                      make_discriminator(cfg.variant, d, cfg.conditional_disc, init_d),
                      GanTrainLog{}};
    Generator& gen = result.generator;
    Discriminator& disc = result.discriminator;

    // Holdout pairs feed the alignment log only; they never reach a gradient.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng hold_rng = root.derive("gan/holdout");
    hold_rng.shuffle(order);
    std::size_t n_hold = 0;
    if (cfg.holdout_fraction > 0 && n > 1) {
        n_hold = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(cfg.holdout_fraction * double(n))));
        n_hold = std::min(n_hold, n - 1);
    }
    Batch holdout =
        n_hold ? gather_rows(pairs, order, 0, n_hold) : Batch{Tensor(), Tensor()};
    std::vector<std::size_t> train_idx(order.begin() + n_hold, order.end());
    std::size_t n_train = train_idx.size();

    auto log_alignment = [&](std::uint64_t eval_index) {
        if (!n_hold) return 0.0;
        Rng eval_rng = root.derive("gan/eval", eval_index);
        return holdout_alignment(gen, holdout.h, holdout.h_aug, eval_rng);
    };
    result.log.init_holdout_cos = log_alignment(0);

    AdamConfig gc;
    gc.lr = cfg.lr_g;
    gc.weight_decay = cfg.weight_decay;
    AdamConfig dc = gc;
    dc.lr = cfg.lr_d;
    Adam opt_g(gen.parameters(), gc);
    Adam opt_d(disc.parameters(), dc);

    Rng shuffle_rng = root.derive("gan/shuffle");
    Rng z_rng = root.derive("gan/z");

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(train_idx);
        double g_sum = 0.0, d_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0, bi = 0; start < n_train; start += cfg.batch_size, ++bi) {
            std::size_t count = std::min(cfg.batch_size, n_train - start);
            Batch b = gather_rows(pairs, train_idx, start, count);

            // Discriminator step on detached fakes.
            Tensor fake = gen.forward_detached(normal_matrix(z_rng, count, d), b.h);
            Graph gd;
            Var ld = discriminator_loss(gd, disc, b.h, b.h_aug, fake);
            d_sum += checked_loss(gd, ld, "discriminator", epoch, bi);
            opt_d.zero_grad();
            gd.backward(ld);
            try {
                opt_d.step();
            } catch (const NonFiniteError& e) {
                rethrow_with_position(e, epoch, bi);
            }

            // Generator step with fresh noise.
            Graph gg;
            Var lg = generator_loss(gg, gen, disc, b.h, b.h_aug,
                                    normal_matrix(z_rng, count, d), cfg.lambda_cos);
            g_sum += checked_loss(gg, lg, "generator", epoch, bi);
            opt_g.zero_grad();
            gg.backward(lg);
            try {
                opt_g.step();
            } catch (const NonFiniteError& e) {
                rethrow_with_position(e, epoch, bi);
            }
            ++n_batches;
        }
        result.log.epochs.push_back(GanEpochLog{g_sum / double(n_batches),
                                                d_sum / double(n_batches),
                                                log_alignment(epoch + 1)});
    }
    return result;
}

}  // namespace embaug
