#pragma once

#include "embaug/dagan.hpp"
#include "embaug/metrics.hpp"
#include "embaug/nn.hpp"
#include "embaug/rng.hpp"
#include "embaug/synthdata.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace embaug {

/// Gated-attention bag classifier: per-instance attention scores
///   score_i = w(tanh(V h_i) ⊙ sigmoid(U h_i)),
/// softmax over the bag, weighted-sum pooling to one bag embedding of the
/// same width d, then a 2-layer softmax classifier d -> 256 -> K.
struct MilModel {
    std::size_t d = 0;
    std::size_t d_att = 0;
    std::size_t K = 0;
    DenseLayer V;  // d -> d_att, tanh gate
    DenseLayer U;  // d -> d_att, sigmoid gate
    DenseLayer w;  // d_att -> 1, attention score
    Mlp classifier;

    std::vector<Tensor> parameters() const;
};

constexpr std::size_t kMilClassifierHidden = 256;
constexpr std::size_t kMilDefaultAttention = 256;

MilModel make_mil_model(std::size_t d, std::size_t K, std::size_t d_att, Rng& rng);

/// Attention distribution over the instances of one bag: [N x d] -> [N],
/// positive everywhere and summing to 1.
Var attention_weights(Graph& g, const MilModel& model, Var instances);

/// Class logits for one bag: attention-pool, then classify. [N x d] -> [K].
Var mil_logits(Graph& g, const MilModel& model, Var instances);

/// Class probabilities for a raw instance matrix, gradient-free.
std::vector<double> mil_probs(const MilModel& model, const Tensor& instances);
std::vector<double> mil_probs(const MilModel& model, const Bag& bag);

/// How training perturbs instances each epoch. Evaluation never augments.
enum class AugMode { None, PatchPrecomputed, GanOnline };

const char* aug_mode_name(AugMode mode);

/// Fixed augmented variants of every instance, indexed [bag][variant], each a
/// flat [n_instances x d] block. Produced once, sampled from each epoch.
struct PrecomputedAugs {
    std::size_t n_augs = 0;
    std::vector<std::vector<std::vector<double>>> bags;
};

/// n_augs independently parameterized manifold augmentations per instance,
/// for every bag of the dataset.
PrecomputedAugs precompute_patch_augs(Rng& rng, const Dataset& dataset, std::size_t n_augs);

struct AugPolicy {
    AugMode mode = AugMode::None;
    const PrecomputedAugs* precomputed = nullptr;  // PatchPrecomputed
    const Generator* generator = nullptr;          // GanOnline
    double p_apply = 1.0;                          // GanOnline: chance an instance is replaced

    static AugPolicy none() { return {}; }
    static AugPolicy patches(const PrecomputedAugs& p) {
        return {AugMode::PatchPrecomputed, &p, nullptr, 1.0};
    }
    static AugPolicy gan(const Generator& g, double p_apply = 1.0) {
        return {AugMode::GanOnline, nullptr, &g, p_apply};
    }
};

/// One bag's training-time instance matrix under the policy: the original
/// embeddings with this epoch's augmentation applied. Mode None copies.
Tensor augmented_instances(const Bag& bag, const AugPolicy& policy, std::size_t bag_index,
                           Rng& rng);

struct MilTrainConfig {
    std::size_t d_att = kMilDefaultAttention;
    std::size_t epochs = 100;
    double lr = 3e-4;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
};

struct MilEpochLog {
    double train_loss = 0.0;
    double val_nll = 0.0;
    double val_accuracy = 0.0;
};

struct MilTrainLog {
    std::vector<MilEpochLog> epochs;
    std::size_t best_epoch = 0;   // 0-based; which epoch's weights were kept
    double best_val_nll = 0.0;
};

struct TrainedMil {
    MilModel model;
    MilTrainLog log;
};

/// One cross-entropy Adam step per training bag per epoch, augmentations
/// redrawn every epoch, and the weights with the best validation NLL kept.
/// Deterministic given cfg.seed; aborts with epoch/bag coordinates if the
/// loss goes non-finite.
TrainedMil train_mil(const Dataset& dataset, std::span<const std::size_t> train_bags,
                     std::span<const std::size_t> val_bags, const AugPolicy& policy,
                     const MilTrainConfig& cfg);

/// Un-augmented predictions over the listed bags, scored with all metrics.
EvalResult evaluate_mil(const MilModel& model, const Dataset& dataset,
                        std::span<const std::size_t> bags);

/// Classifier checkpoint (magic "EAM1", 64-bit weights) plus `.meta.json`.
void save_mil(const MilModel& model, const std::string& path,
              const MilTrainConfig* config = nullptr, const MilTrainLog* log = nullptr);
MilModel load_mil(const std::string& path);

}  // namespace embaug
