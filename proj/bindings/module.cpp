// Python bindings for the embedding-augmentation workbench: dataset synthesis,
// the oracle augmenter, both generator variants, the attention-MIL classifier,
// the metrics, the experiment harness, and the cost model. Array arguments are
// NumPy float64; matrices are row-major (instances × dimensions).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "embaug/common.hpp"
#include "embaug/dagan.hpp"
#include "embaug/flops.hpp"
#include "embaug/graph.hpp"
#include "embaug/harness.hpp"
#include "embaug/metrics.hpp"
#include "embaug/mil.hpp"
#include "embaug/rng.hpp"
#include "embaug/synthdata.hpp"

#include <cstring>
#include <string>
#include <utility>
#include <vector>

namespace py = pybind11;
using namespace embaug;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> row_vector(const DoubleArray& a) {
    if (a.ndim() != 1) throw ShapeError("expected a 1-D array");
    const double* p = a.data();
    return std::vector<double>(p, p + a.shape(0));
}

// Flattened row-major copy plus (rows, cols).
std::tuple<std::vector<double>, std::size_t, std::size_t> matrix_data(const DoubleArray& a) {
    if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
    auto rows = static_cast<std::size_t>(a.shape(0));
    auto cols = static_cast<std::size_t>(a.shape(1));
    const double* p = a.data();
    return {std::vector<double>(p, p + rows * cols), rows, cols};
}

py::array_t<double> make_vector(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
    return out;
}

py::array_t<double> make_matrix(std::size_t rows, std::size_t cols, const double* data) {
    py::array_t<double> out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
    std::memcpy(out.mutable_data(), data, rows * cols * sizeof(double));
    return out;
}

py::dict eval_dict(const EvalResult& e) {
    py::dict d;
    d["accuracy"] = e.accuracy;
    d["kappa2"] = e.kappa2;
    d["nll"] = e.nll;
    d["n"] = e.n;
    d["k"] = e.K;
    py::list confusion;
    for (std::size_t t = 0; t < e.K; ++t) {
        py::list row;
        for (std::size_t p = 0; p < e.K; ++p) row.append(e.confusion_at(t, p));
        confusion.append(std::move(row));
    }
    d["confusion"] = std::move(confusion);
    return d;
}

std::vector<std::uint32_t> label_vector(const std::vector<std::uint32_t>& v) { return v; }

GanVariant parse_variant(const std::string& name) { return variant_from_name(name); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Embedding-space augmentation workbench";
    m.attr("__version__") = kEmbaugVersion;

    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<Rng>(m, "Rng", "Deterministic random stream; derive() forks named substreams.")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("derive", &Rng::derive, py::arg("purpose"), py::arg("index") = 0)
        .def("next_u64", &Rng::next_u64)
        .def("uniform", py::overload_cast<>(&Rng::uniform))
        .def("normal", py::overload_cast<>(&Rng::normal));

    py::class_<OracleRanges>(m, "OracleRanges")
        .def(py::init<>())
        .def_readwrite("alpha_max", &OracleRanges::alpha_max)
        .def_readwrite("delta_gamma", &OracleRanges::delta_gamma)
        .def_readwrite("delta_beta", &OracleRanges::delta_beta)
        .def_readwrite("delta_scale", &OracleRanges::delta_scale);

    py::class_<OracleParams>(m, "OracleParams")
        .def_static("identity", &OracleParams::identity, py::arg("d"))
        .def_readwrite("alpha", &OracleParams::alpha)
        .def_readwrite("gamma", &OracleParams::gamma)
        .def_readwrite("beta", &OracleParams::beta)
        .def_readwrite("scale", &OracleParams::scale);

    py::class_<OracleAugmenter>(m, "OracleAugmenter",
                                "Ground-truth label-preserving transform family.")
        .def(py::init<std::size_t, OracleRanges>(), py::arg("d"),
             py::arg("ranges") = OracleRanges{})
        .def_property_readonly("d", &OracleAugmenter::d)
        .def("sample_params", &OracleAugmenter::sample_params, py::arg("rng"))
        .def(
            "apply",
            [](const OracleAugmenter& o, const DoubleArray& h, const OracleParams& p) {
                return make_vector(o.apply(row_vector(h), p));
            },
            py::arg("h"), py::arg("params"));

    py::class_<GenConfig>(m, "GenConfig")
        .def(py::init<>())
        .def_readwrite("d", &GenConfig::d)
        .def_readwrite("k", &GenConfig::K)
        .def_readwrite("n_bags", &GenConfig::n_bags)
        .def_readwrite("sigma", &GenConfig::sigma)
        .def_readwrite("mean_bag_size", &GenConfig::mean_bag_size)
        .def_readwrite("min_bag_size", &GenConfig::min_bag_size)
        .def_readwrite("max_bag_size", &GenConfig::max_bag_size)
        .def_readwrite("oracle", &GenConfig::oracle);

    py::class_<Dataset>(m, "Dataset", "Bags of embeddings with ordinal labels.")
        .def_property_readonly("d", [](const Dataset& ds) { return ds.d; })
        .def_property_readonly("k", [](const Dataset& ds) { return ds.K; })
        .def_property_readonly("n_bags", [](const Dataset& ds) { return ds.bags.size(); })
        .def("label", [](const Dataset& ds, std::size_t i) { return ds.bags.at(i).label; },
             py::arg("bag"))
        .def(
            "instances",
            [](const Dataset& ds, std::size_t i) {
                const Bag& b = ds.bags.at(i);
                return make_matrix(b.n_instances(), b.d, b.data.data());
            },
            py::arg("bag"), "Instance matrix of one bag, shape (n, d).")
        .def_property_readonly("labels",
                               [](const Dataset& ds) {
                                   std::vector<std::uint32_t> out;
                                   for (const Bag& b : ds.bags) out.push_back(b.label);
                                   return out;
                               })
        .def_property_readonly("prototypes", [](const Dataset& ds) {
            std::vector<double> flat;
            for (const auto& p : ds.prototypes) flat.insert(flat.end(), p.begin(), p.end());
            return make_matrix(ds.prototypes.size(), ds.d, flat.data());
        });

    m.def("generate_dataset", &generate_dataset, py::arg("config"), py::arg("seed"));
    m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
    m.def("load_dataset", &load_dataset, py::arg("path"));

    py::class_<PairSet>(m, "PairSet", "Augmenter training pairs (h, h_aug) tagged by source bag.")
        .def_property_readonly("d", [](const PairSet& p) { return p.d; })
        .def("__len__", &PairSet::size)
        .def_property_readonly("h", [](const PairSet& p) {
            return make_matrix(p.size(), p.d, p.h.data());
        })
        .def_property_readonly("h_aug", [](const PairSet& p) {
            return make_matrix(p.size(), p.d, p.h_aug.data());
        })
        .def_property_readonly("source_bag", [](const PairSet& p) { return p.source_bag; });

    m.def(
        "make_pairs",
        [](Rng& rng, const Dataset& ds, std::size_t n_augs,
           const std::optional<std::vector<std::size_t>>& bags) {
            return bags ? make_pairs(rng, ds, n_augs, *bags) : make_pairs(rng, ds, n_augs);
        },
        py::arg("rng"), py::arg("dataset"), py::arg("n_augs_per_patch"),
        py::arg("bags") = py::none());
    m.def("subsample_pairs", &subsample_pairs, py::arg("rng"), py::arg("pairs"),
          py::arg("max_pairs"));
    m.def("verify_no_leakage", [](const PairSet& p, const std::vector<std::size_t>& allowed) {
        verify_no_leakage(p, allowed);
    }, py::arg("pairs"), py::arg("allowed_bags"));

    py::class_<GanConfig>(m, "GanConfig")
        .def(py::init<>())
        .def_property(
            "variant",
            [](const GanConfig& c) { return std::string(variant_name(c.variant)); },
            [](GanConfig& c, const std::string& v) { c.variant = parse_variant(v); })
        .def_readwrite("lambda_cos", &GanConfig::lambda_cos)
        .def_readwrite("lr_g", &GanConfig::lr_g)
        .def_readwrite("lr_d", &GanConfig::lr_d)
        .def_readwrite("weight_decay", &GanConfig::weight_decay)
        .def_readwrite("batch_size", &GanConfig::batch_size)
        .def_readwrite("epochs", &GanConfig::epochs)
        .def_readwrite("seed", &GanConfig::seed)
        .def_readwrite("conditional_disc", &GanConfig::conditional_disc)
        .def_readwrite("holdout_fraction", &GanConfig::holdout_fraction);

    py::class_<Generator>(m, "Generator", "Trained embedding augmenter.")
        .def_property_readonly(
            "variant", [](const Generator& g) { return std::string(variant_name(g.variant)); })
        .def_property_readonly("d", [](const Generator& g) { return g.d; })
        .def(
            "augment",
            [](const Generator& g, const DoubleArray& h, Rng& rng) {
                if (h.ndim() == 1) return make_vector(sample_augmentation(g, row_vector(h), rng));
                auto [flat, rows, cols] = matrix_data(h);
                Tensor out = sample_augmentations(g, Tensor({rows, cols}, std::move(flat)), rng);
                return py::array_t<double>(make_matrix(rows, cols, out.values().data()));
            },
            py::arg("h"), py::arg("rng"),
            "Fresh-noise augmentation of one embedding (1-D) or a batch (2-D).");

    py::class_<GanEpochLog>(m, "GanEpochLog")
        .def_readonly("g_loss", &GanEpochLog::g_loss)
        .def_readonly("d_loss", &GanEpochLog::d_loss)
        .def_readonly("holdout_cos", &GanEpochLog::holdout_cos);

    py::class_<GanTrainLog>(m, "GanTrainLog")
        .def_readonly("init_holdout_cos", &GanTrainLog::init_holdout_cos)
        .def_readonly("epochs", &GanTrainLog::epochs);

    py::class_<TrainedGan>(m, "TrainedGan")
        .def_readonly("generator", &TrainedGan::generator)
        .def_readonly("log", &TrainedGan::log);

    m.def("train_gan", &train_gan, py::arg("pairs"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("save_generator",
          [](const Generator& g, const std::string& path) { save_generator(g, path); },
          py::arg("generator"), py::arg("path"));
    m.def("load_generator", &load_generator, py::arg("path"));

    py::class_<MilTrainConfig>(m, "MilTrainConfig")
        .def(py::init<>())
        .def_readwrite("d_att", &MilTrainConfig::d_att)
        .def_readwrite("epochs", &MilTrainConfig::epochs)
        .def_readwrite("lr", &MilTrainConfig::lr)
        .def_readwrite("weight_decay", &MilTrainConfig::weight_decay)
        .def_readwrite("seed", &MilTrainConfig::seed);

    py::class_<MilModel>(m, "MilModel", "Attention-pooled bag classifier.")
        .def_property_readonly("d", [](const MilModel& mm) { return mm.d; })
        .def_property_readonly("d_att", [](const MilModel& mm) { return mm.d_att; })
        .def_property_readonly("k", [](const MilModel& mm) { return mm.K; })
        .def(
            "probs",
            [](const MilModel& mm, const DoubleArray& bag) {
                auto [flat, rows, cols] = matrix_data(bag);
                return make_vector(mil_probs(mm, Tensor({rows, cols}, std::move(flat))));
            },
            py::arg("instances"), "Class probabilities for one bag, shape (k,).")
        .def(
            "attention",
            [](const MilModel& mm, const DoubleArray& bag) {
                auto [flat, rows, cols] = matrix_data(bag);
                Graph g(/*grad_enabled=*/false);
                Var x = g.constant(Tensor({rows, cols}, std::move(flat)));
                Tensor w = g.value(attention_weights(g, mm, x));
                return make_vector(std::vector<double>(w.values().begin(), w.values().end()));
            },
            py::arg("instances"), "Attention distribution over one bag's instances, shape (n,).")
        .def(
            "evaluate",
            [](const MilModel& mm, const Dataset& ds, const std::vector<std::size_t>& bags) {
                return eval_dict(evaluate_mil(mm, ds, bags));
            },
            py::arg("dataset"), py::arg("bags"));

    m.def(
        "train_mil",
        [](const Dataset& ds, const std::vector<std::size_t>& train_bags,
           const std::vector<std::size_t>& val_bags, const MilTrainConfig& cfg,
           const std::string& mode, const Generator* generator, std::size_t n_augs,
           double p_apply, std::uint64_t aug_seed) {
            std::optional<PrecomputedAugs> pre;
            AugPolicy policy = AugPolicy::none();
            if (mode == "patch") {
                Rng rng(aug_seed);
                pre = precompute_patch_augs(rng, ds, n_augs);
                policy = AugPolicy::patches(*pre);
            } else if (mode == "gan") {
                if (generator == nullptr)
                    throw ContractError("train_mil: mode 'gan' needs a generator");
                policy = AugPolicy::gan(*generator, p_apply);
            } else if (mode != "none") {
                throw ContractError("train_mil: unknown mode '" + mode + "'");
            }
            TrainedMil tm = train_mil(ds, train_bags, val_bags, policy, cfg);
            return tm.model;
        },
        py::arg("dataset"), py::arg("train_bags"), py::arg("val_bags"), py::arg("config"),
        py::arg("mode") = "none", py::arg("generator") = nullptr, py::arg("n_augs") = 8,
        py::arg("p_apply") = 1.0, py::arg("aug_seed") = 0,
        "Train the classifier; mode is 'none', 'patch' (precomputed oracle variants), or "
        "'gan' (online augmentation with the given generator).");
    m.def("save_mil",
          [](const MilModel& mm, const std::string& path) { save_mil(mm, path); },
          py::arg("model"), py::arg("path"));
    m.def("load_mil", &load_mil, py::arg("path"));

    m.def("accuracy",
          [](const std::vector<std::uint32_t>& p, const std::vector<std::uint32_t>& t) {
              return accuracy(label_vector(p), label_vector(t));
          },
          py::arg("preds"), py::arg("truth"));
    m.def("quadratic_kappa",
          [](const std::vector<std::uint32_t>& p, const std::vector<std::uint32_t>& t,
             std::size_t k) { return quadratic_kappa(label_vector(p), label_vector(t), k); },
          py::arg("preds"), py::arg("truth"), py::arg("k"));
    m.def("nll",
          [](const std::vector<std::vector<double>>& probs, const std::vector<std::uint32_t>& t) {
              return nll(probs, label_vector(t));
          },
          py::arg("probs"), py::arg("truth"));

    py::class_<FoldPlan>(m, "FoldPlan")
        .def("__len__", [](const FoldPlan& p) { return p.folds.size(); })
        .def("train", [](const FoldPlan& p, std::size_t f) { return p.folds.at(f).train; },
             py::arg("fold"))
        .def("val", [](const FoldPlan& p, std::size_t f) { return p.folds.at(f).val; },
             py::arg("fold"))
        .def("test", [](const FoldPlan& p, std::size_t f) { return p.folds.at(f).test; },
             py::arg("fold"));

    m.def(
        "make_folds",
        [](Rng& rng, const std::vector<std::uint32_t>& labels) {
            return make_folds(rng, labels.size(), labels);
        },
        py::arg("rng"), py::arg("labels"));

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("mil_seeds", &ExperimentConfig::mil_seeds)
        .def_readwrite("n_augs", &ExperimentConfig::n_augs)
        .def_readwrite("pairs_per_instance", &ExperimentConfig::pairs_per_instance)
        .def_readwrite("max_gan_pairs", &ExperimentConfig::max_gan_pairs)
        .def_readwrite("p_apply", &ExperimentConfig::p_apply)
        .def_readwrite("gan", &ExperimentConfig::gan)
        .def_readwrite("mil", &ExperimentConfig::mil)
        .def_readwrite("threads", &ExperimentConfig::threads);

    m.def(
        "run_experiment",
        [](const Dataset& ds, const std::vector<std::string>& arms,
           const ExperimentConfig& cfg) {
            std::vector<ExperimentArm> parsed;
            for (const std::string& a : arms) parsed.push_back(arm_from_name(a));
            ExperimentReport rep;
            {
                py::gil_scoped_release release;
                rep = run_experiment(ds, parsed, cfg);
            }
            py::module_ json = py::module_::import("json");
            return json.attr("loads")(report_json(rep));
        },
        py::arg("dataset"), py::arg("arms"), py::arg("config"),
        "Cross-validated arm comparison; returns the report as a dict.");

    m.def("generator_macs",
          [](const std::string& variant, std::size_t d) {
              return generator_forward_cost(parse_variant(variant), d).total_macs();
          },
          py::arg("variant"), py::arg("d"), "Analytic MACs for one augmentation.");
    m.def("reference_extractor_macs",
          []() { return reference_extractor_cost().total_macs(); },
          "Analytic MACs for re-extracting one patch embedding.");
    m.def(
        "bench_speedup",
        [](const Generator& gen, std::size_t batch, double min_seconds, std::uint64_t seed) {
            BenchConfig bc;
            bc.batch = batch;
            bc.min_seconds = min_seconds;
            bc.seed = seed;
            SpeedupReport r;
            {
                py::gil_scoped_release release;
                r = bench_speedup(gen, reference_extractor_cost(), bc);
            }
            py::dict out;
            out["variant"] = std::string(variant_name(r.variant));
            out["d"] = r.d;
            out["generator_macs"] = r.generator_macs;
            out["reference_macs"] = r.reference_macs;
            out["analytic_ratio"] = r.analytic_ratio;
            out["seconds_per_aug"] = r.seconds_per_aug;
            out["seconds_per_reference"] = r.seconds_per_reference;
            out["measured_ratio"] = r.measured_ratio;
            return out;
        },
        py::arg("generator"), py::arg("batch") = 64, py::arg("min_seconds") = 0.25,
        py::arg("seed") = 0, "Wall-clock and analytic augmentation speedup vs re-extraction.");
}
