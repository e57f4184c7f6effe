#pragma once

#include "embaug/nn.hpp"
#include "embaug/rng.hpp"
#include "embaug/synthdata.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace embaug {

enum class GanVariant : std::uint32_t { Ind = 0, Exp = 1 };

const char* variant_name(GanVariant v);

/// Augmentation generator T: (z, h) -> h_tilde, z ~ N(0, I_d).
///
/// Exp runs one wide MLP on the concatenation z‖h (widths 1024/512/256/512/1024
/// around a 256 bottleneck, each capped at max(4d, 256) so small desk
/// dimensions don't get an absurdly over-parameterized network).
/// Ind runs one tiny shared 2->4->1 MLP per coordinate pair (z_j, h_j); the
/// per-coordinate applications are batched as a single [B·d × 2] matrix pass.
struct Generator {
    GanVariant variant;
    std::size_t d;
    Mlp net;

    /// z and h are [B × d]; result is [B × d].
    Var forward(Graph& g, Var z, Var h) const;

    /// Gradient-free convenience forward on raw tensors.
    Tensor forward_detached(const Tensor& z, const Tensor& h) const;

    std::vector<Tensor> parameters() const { return net.parameters(); }
};

/// Conditional discriminator D(h, candidate) -> probability the candidate is a
/// real augmentation of h; same Exp/Ind split as the generator. The
/// unconditional form D(candidate) is kept behind a switch.
struct Discriminator {
    GanVariant variant;
    std::size_t d;
    bool conditional;
    Mlp net;

    /// h and candidate are [B × d]; result is [B] of probabilities in (0,1).
    Var forward(Graph& g, Var h, Var candidate) const;

    std::vector<Tensor> parameters() const { return net.parameters(); }
};

/// Full dims list {in, hidden..., out} for each network, exposed so FLOP
/// accounting and checkpoint validation share one source of truth.
std::vector<std::size_t> generator_dims(GanVariant variant, std::size_t d);
std::vector<std::size_t> discriminator_dims(GanVariant variant, std::size_t d, bool conditional);

Generator make_generator(GanVariant variant, std::size_t d, Rng& rng);
Discriminator make_discriminator(GanVariant variant, std::size_t d, bool conditional, Rng& rng);

struct GanConfig {
    GanVariant variant = GanVariant::Exp;
    double lambda_cos = 1.0;  // weight of the cosine term in the generator loss
    double lr_g = 1e-4;
    double lr_d = 1e-4;
    double weight_decay = 0.0;
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
    bool conditional_disc = true;
    double holdout_fraction = 0.05;  // pairs reserved for the alignment log
};

/// Generator objective over a batch: mean of
///   lambda_cos * (1 - cos(h_tilde, h_real_aug)) + bce(D(h, h_tilde), 1).
Var generator_loss(Graph& g, const Generator& gen, const Discriminator& disc, const Tensor& h,
                   const Tensor& h_real_aug, const Tensor& z, double lambda_cos);

/// Discriminator objective over a batch: mean of
///   bce(D(h, h_real_aug), 1) + bce(D(h, fake), 0),
/// with `fake` passed in as data so no gradient reaches the generator.
Var discriminator_loss(Graph& g, const Discriminator& disc, const Tensor& h,
                       const Tensor& h_real_aug, const Tensor& fake);

struct GanEpochLog {
    double g_loss = 0.0;
    double d_loss = 0.0;
    double holdout_cos = 0.0;
};

struct GanTrainLog {
    double init_holdout_cos = 0.0;
    std::vector<GanEpochLog> epochs;
};

struct TrainedGan {
    Generator generator;
    Discriminator discriminator;
    GanTrainLog log;
};

/// Alternating 1:1 discriminator/generator updates over shuffled minibatches.
/// Deterministic given cfg.seed; aborts with epoch/batch coordinates if a loss
/// goes non-finite.
TrainedGan train_gan(const PairSet& pairs, const GanConfig& cfg);

/// Fresh z ~ N(0, I_d), then one generator forward.
std::vector<double> sample_augmentation(const Generator& gen, std::span<const double> h, Rng& rng);

/// Batched version: one fresh z row per row of H ([N × d]).
Tensor sample_augmentations(const Generator& gen, const Tensor& h_rows, Rng& rng);

/// Mean holdout cosine alignment between generated and real augmentations.
double holdout_alignment(const Generator& gen, const Tensor& h, const Tensor& h_real_aug,
                         Rng& rng);

/// Generator checkpoint (magic "EAG1", 64-bit weights) plus `.meta.json` with
/// the variant, dims, and — when given — config and training-log summary.
void save_generator(const Generator& gen, const std::string& path,
                    const GanConfig* config = nullptr, const GanTrainLog* log = nullptr);
Generator load_generator(const std::string& path);

}  // namespace embaug
