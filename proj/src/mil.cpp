#include "embaug/mil.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "embaug/adam.hpp"
#include "embaug/common.hpp"

namespace embaug {

namespace {

Tensor bag_matrix(const Bag& bag) {
    Tensor t({bag.n_instances(), bag.d});
    std::copy(bag.data.begin(), bag.data.end(), t.values().begin());
    return t;
}

void check_bag_indices(const Dataset& ds, std::span<const std::size_t> bags, const char* who) {
    if (bags.empty()) throw ContractError(std::string(who) + ": empty bag list");
    for (std::size_t b : bags) {
        if (b >= ds.bags.size()) {
            throw ContractError(std::string(who) + ": bag index " + std::to_string(b) +
                                " out of range (dataset has " +
                                std::to_string(ds.bags.size()) + ")");
        }
    }
}

// Tensors are shared handles, so writing through a copied handle updates the
// storage the model holds.
void copy_values(const std::vector<Tensor>& from, const std::vector<Tensor>& to) {
    for (std::size_t i = 0; i < from.size(); ++i) {
        Tensor dst = to[i];
        auto src = from[i].values();
        std::copy(src.begin(), src.end(), dst.values().begin());
    }
}

}  // namespace

std::vector<Tensor> MilModel::parameters() const {
    return collect_parameters({{V.W, V.b, U.W, U.b, w.W, w.b}, classifier.parameters()});
}

MilModel make_mil_model(std::size_t d, std::size_t K, std::size_t d_att, Rng& rng) {
    if (d == 0 || d_att == 0) throw ContractError("make_mil_model: zero-width layer");
    if (K < 2) throw ContractError("make_mil_model: need at least 2 classes");
    return MilModel{d,
                    d_att,
                    K,
                    DenseLayer(d, d_att, rng),
                    DenseLayer(d, d_att, rng),
                    DenseLayer(d_att, 1, rng),
                    Mlp({d, kMilClassifierHidden, K}, rng)};
}

Var attention_weights(Graph& g, const MilModel& model, Var instances) {
    Tensor t = g.value(instances);
    if (!t.defined() || t.rank() != 2 || t.dim(1) != model.d) {
        throw ShapeError("attention_weights: expected [N x " + std::to_string(model.d) +
                         "], got " + (t.defined() ? shape_str(t.shape()) : "undefined"));
    }
    if (t.dim(0) == 0) throw ContractError("attention_weights: empty bag");
    // Row-stable products end to end: every step treats instance i by itself,
    // and the softmax sums in value order, so reordering a bag's instances
    // reorders the weights bit-exactly.
    auto dense = [&](const DenseLayer& layer, Var x) {
        return g.add_rowwise(g.matmul_rowwise(x, g.leaf(layer.W)), g.leaf(layer.b));
    };
    Var gate = g.mul(g.tanh(dense(model.V, instances)), g.sigmoid(dense(model.U, instances)));
    Var scores = g.reshape(dense(model.w, gate), {t.dim(0)});
    return g.softmax(scores);
}

Var mil_logits(Graph& g, const MilModel& model, Var instances) {
    Var a = attention_weights(g, model, instances);
    Var pooled = g.weighted_sum_rows(a, instances);  // [1 x d]
    return g.reshape(model.classifier.apply(g, pooled), {model.K});
}

std::vector<double> mil_probs(const MilModel& model, const Tensor& instances) {
    Graph g(false);
    Var p = g.softmax(mil_logits(g, model, g.constant(instances)));
    auto v = g.value(p).values();
    return std::vector<double>(v.begin(), v.end());
}

std::vector<double> mil_probs(const MilModel& model, const Bag& bag) {
    return mil_probs(model, bag_matrix(bag));
}

const char* aug_mode_name(AugMode mode) {
    switch (mode) {
        case AugMode::None: return "none";
        case AugMode::PatchPrecomputed: return "patch";
        case AugMode::GanOnline: return "gan";
    }
    throw ContractError("aug_mode_name: unknown mode");
}

PrecomputedAugs precompute_patch_augs(Rng& rng, const Dataset& dataset, std::size_t n_augs) {
    if (n_augs == 0) throw ContractError("precompute_patch_augs: n_augs must be >= 1");
    OracleAugmenter aug(dataset.d, dataset.config.oracle);
    PrecomputedAugs out;
    out.n_augs = n_augs;
    out.bags.resize(dataset.bags.size());
    for (std::size_t b = 0; b < dataset.bags.size(); ++b) {
        const Bag& bag = dataset.bags[b];
        out.bags[b].assign(n_augs, std::vector<double>(bag.data.size()));
        for (std::size_t a = 0; a < n_augs; ++a) {
            std::vector<double>& block = out.bags[b][a];
            for (std::size_t i = 0; i < bag.n_instances(); ++i) {
                OracleParams params = aug.sample_params(rng);
                std::vector<double> row = aug.apply(bag.instance(i), params);
                std::copy(row.begin(), row.end(), block.begin() + i * bag.d);
            }
        }
    }
    return out;
}

Tensor augmented_instances(const Bag& bag, const AugPolicy& policy, std::size_t bag_index,
                           Rng& rng) {
    const std::size_t n = bag.n_instances(), d = bag.d;
    switch (policy.mode) {
        case AugMode::None:
            return bag_matrix(bag);
        case AugMode::PatchPrecomputed: {
            if (!policy.precomputed || policy.precomputed->n_augs == 0) {
                throw ContractError("augmented_instances: patch mode without precomputed variants");
            }
            const auto& variants = policy.precomputed->bags.at(bag_index);
            Tensor t({n, d});
            auto tv = t.values();
            for (std::size_t i = 0; i < n; ++i) {
                // Uniform pick among the original and each precomputed variant.
                std::size_t pick = rng.index(policy.precomputed->n_augs + 1);
                const double* src = pick == 0 ? bag.data.data() + i * d
                                              : variants[pick - 1].data() + i * d;
                std::copy_n(src, d, tv.begin() + i * d);
            }
            return t;
        }
        case AugMode::GanOnline: {
            if (!policy.generator) {
                throw ContractError("augmented_instances: gan mode without a generator");
            }
            if (policy.generator->d != d) {
                throw ContractError("augmented_instances: generator width " +
                                    std::to_string(policy.generator->d) +
                                    " does not match instance width " + std::to_string(d));
            }
            if (policy.p_apply < 0 || policy.p_apply > 1) {
                throw ContractError("augmented_instances: p_apply must be in [0, 1]");
            }
            Tensor orig = bag_matrix(bag);
            Tensor aug = sample_augmentations(*policy.generator, orig, rng);
            if (policy.p_apply < 1.0) {
                auto av = aug.values();
                auto ov = orig.values();
                for (std::size_t i = 0; i < n; ++i) {
                    if (rng.uniform() >= policy.p_apply) {
                        std::copy_n(ov.begin() + i * d, d, av.begin() + i * d);
                    }
                }
            }
            return aug;
        }
    }
    throw ContractError("augmented_instances: unknown mode");
}

TrainedMil train_mil(const Dataset& dataset, std::span<const std::size_t> train_bags,
                     std::span<const std::size_t> val_bags, const AugPolicy& policy,
                     const MilTrainConfig& cfg) {
    check_bag_indices(dataset, train_bags, "train_mil(train)");
    check_bag_indices(dataset, val_bags, "train_mil(val)");

    Rng root(cfg.seed);
    Rng init_rng = root.derive("mil/init");
    TrainedMil result{make_mil_model(dataset.d, dataset.K, cfg.d_att, init_rng), MilTrainLog{}};
    MilModel& model = result.model;

    AdamConfig ac;
    ac.lr = cfg.lr;
    ac.weight_decay = cfg.weight_decay;
    Adam opt(model.parameters(), ac);

    Rng shuffle_rng = root.derive("mil/shuffle");
    Rng aug_rng = root.derive("mil/aug");

    std::vector<std::size_t> order(train_bags.begin(), train_bags.end());
    std::vector<std::uint32_t> val_truth;
    for (std::size_t b : val_bags) val_truth.push_back(dataset.bags[b].label);

    std::vector<Tensor> best_params;
    double best_nll = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t b : order) {
            const Bag& bag = dataset.bags[b];
            Tensor instances = augmented_instances(bag, policy, b, aug_rng);
            Graph g;
            Var loss = g.cross_entropy_with_logits(mil_logits(g, model, g.constant(instances)),
                                                   bag.label);
            double lv = g.scalar_value(loss);
            if (!std::isfinite(lv)) {
                throw NonFiniteError("train_mil: non-finite loss at epoch " +
                                     std::to_string(epoch) + ", bag " + std::to_string(b));
            }
            loss_sum += lv;
            opt.zero_grad();
            g.backward(loss);
            try {
                opt.step();
            } catch (const NonFiniteError& e) {
                throw NonFiniteError("train_mil: epoch " + std::to_string(epoch) + ", bag " +
                                     std::to_string(b) + ": " + e.what());
            }
        }

        std::vector<std::vector<double>> val_probs;
        val_probs.reserve(val_bags.size());
        for (std::size_t b : val_bags) val_probs.push_back(mil_probs(model, dataset.bags[b]));
        EvalResult val = evaluate_predictions(val_probs, val_truth, dataset.K);

        if (val.nll < best_nll) {
            best_nll = val.nll;
            result.log.best_epoch = epoch;
            if (best_params.empty()) {
                for (const Tensor& p : model.parameters()) best_params.push_back(p.clone());
            } else {
                copy_values(model.parameters(), best_params);
            }
        }
        result.log.epochs.push_back(
            MilEpochLog{loss_sum / double(order.size()), val.nll, val.accuracy});
    }

    if (!best_params.empty()) {
        copy_values(best_params, model.parameters());
        result.log.best_val_nll = best_nll;
    }
    return result;
}

EvalResult evaluate_mil(const MilModel& model, const Dataset& dataset,
                        std::span<const std::size_t> bags) {
    check_bag_indices(dataset, bags, "evaluate_mil");
    std::vector<std::vector<double>> probs;
    std::vector<std::uint32_t> truth;
    probs.reserve(bags.size());
    for (std::size_t b : bags) {
        probs.push_back(mil_probs(model, dataset.bags[b]));
        truth.push_back(dataset.bags[b].label);
    }
    return evaluate_predictions(probs, truth, dataset.K);
}

}  // namespace embaug
