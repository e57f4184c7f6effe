"""End-to-end smoke tests for the python module: every exposed operation runs
at toy scale and round-trips where a file format is involved."""

import math

import numpy as np
import pytest

import embaug


def small_dataset(seed=11):
    cfg = embaug.GenConfig()
    cfg.d = 8
    cfg.k = 2
    cfg.n_bags = 12
    cfg.sigma = 0.2
    cfg.mean_bag_size = 8.0
    cfg.min_bag_size = 6
    cfg.max_bag_size = 10
    return embaug.generate_dataset(cfg, seed)


def test_version_and_dataset_shapes():
    assert embaug.__version__.count(".") == 2
    ds = small_dataset()
    assert (ds.d, ds.k, ds.n_bags) == (8, 2, 12)
    assert len(ds.labels) == 12
    inst = ds.instances(0)
    assert inst.ndim == 2 and inst.shape[1] == 8
    assert inst.dtype == np.float64
    assert ds.prototypes.shape == (2, 8)
    # Prototypes are unit vectors.
    assert np.linalg.norm(ds.prototypes, axis=1) == pytest.approx([1.0, 1.0])


def test_oracle_identity_params_are_a_no_op():
    oracle = embaug.OracleAugmenter(8)
    h = np.arange(1.0, 9.0)
    out = oracle.apply(h, embaug.OracleParams.identity(8))
    assert out == pytest.approx(h, abs=0.0)
    # A sampled transform moves the vector but stays finite.
    params = oracle.sample_params(embaug.Rng(3))
    moved = oracle.apply(h, params)
    assert np.all(np.isfinite(moved)) and not np.allclose(moved, h)


def test_metrics_match_their_definitions():
    assert embaug.quadratic_kappa([0, 1, 2, 3, 4], [4, 3, 2, 1, 0], 5) == -1.0
    assert embaug.accuracy([1, 1, 0], [1, 0, 0]) == pytest.approx(2.0 / 3.0)
    uniform = [[0.2] * 5] * 4
    assert embaug.nll(uniform, [0, 1, 2, 3]) == pytest.approx(math.log(5.0), abs=1e-12)


def test_pair_building_and_leakage_audit():
    ds = small_dataset()
    pairs = embaug.make_pairs(embaug.Rng(5), ds, 2, bags=[0, 1, 2, 3])
    n_inst = sum(ds.instances(b).shape[0] for b in range(4))
    assert len(pairs) == 2 * n_inst
    assert pairs.h.shape == pairs.h_aug.shape == (len(pairs), 8)
    embaug.verify_no_leakage(pairs, [0, 1, 2, 3])
    with pytest.raises(ValueError):
        embaug.verify_no_leakage(pairs, [0, 1])
    capped = embaug.subsample_pairs(embaug.Rng(6), pairs, 10)
    assert len(capped) == 10


def test_gan_training_and_checkpoint_roundtrip(tmp_path):
    ds = small_dataset()
    pairs = embaug.make_pairs(embaug.Rng(5), ds, 1)
    cfg = embaug.GanConfig()
    cfg.variant = "ind"
    cfg.epochs = 2
    cfg.batch_size = 16
    cfg.seed = 9
    trained = embaug.train_gan(pairs, cfg)
    assert len(trained.log.epochs) == 2
    gen = trained.generator
    assert (gen.variant, gen.d) == ("ind", 8)

    one = gen.augment(np.ones(8), embaug.Rng(1))
    assert one.shape == (8,) and np.all(np.isfinite(one))
    batch = gen.augment(np.ones((5, 8)), embaug.Rng(1))
    assert batch.shape == (5, 8)

    path = str(tmp_path / "gen.bin")
    embaug.save_generator(gen, path)
    loaded = embaug.load_generator(path)
    # Same weights and same noise stream give the same augmentation bit for bit.
    again = loaded.augment(np.ones(8), embaug.Rng(1))
    assert np.array_equal(one, again)


def test_mil_training_prediction_and_roundtrip(tmp_path):
    ds = small_dataset()
    cfg = embaug.MilTrainConfig()
    cfg.d_att = 8
    cfg.epochs = 3
    cfg.lr = 1e-3
    cfg.seed = 4
    model = embaug.train_mil(ds, list(range(8)), [8, 9], cfg)
    assert (model.d, model.k, model.d_att) == (8, 2, 8)

    bag = ds.instances(10)
    probs = model.probs(bag)
    assert probs.shape == (2,) and probs.sum() == pytest.approx(1.0, abs=1e-9)
    att = model.attention(bag)
    assert att.shape == (bag.shape[0],)
    assert np.all(att > 0) and att.sum() == pytest.approx(1.0, abs=1e-9)

    result = model.evaluate(ds, [10, 11])
    assert result["n"] == 2 and 0.0 <= result["accuracy"] <= 1.0
    assert np.array(result["confusion"]).shape == (2, 2)

    path = str(tmp_path / "mil.bin")
    embaug.save_mil(model, path)
    loaded = embaug.load_mil(path)
    assert np.array_equal(probs, loaded.probs(bag))


def test_mil_gan_mode_uses_the_generator():
    ds = small_dataset()
    pairs = embaug.make_pairs(embaug.Rng(5), ds, 1)
    gan_cfg = embaug.GanConfig()
    gan_cfg.variant = "ind"
    gan_cfg.epochs = 1
    gan_cfg.batch_size = 16
    gen = embaug.train_gan(pairs, gan_cfg).generator
    cfg = embaug.MilTrainConfig()
    cfg.d_att = 8
    cfg.epochs = 2
    model = embaug.train_mil(ds, list(range(8)), [8, 9], cfg, mode="gan", generator=gen)
    assert model.d == 8
    with pytest.raises(ValueError):
        embaug.train_mil(ds, [0, 1], [2], cfg, mode="gan")


def test_fold_plan_partitions_the_bags():
    ds = small_dataset()
    plan = embaug.make_folds(embaug.Rng(2), ds.labels)
    assert len(plan) == 5
    tested = sorted(b for f in range(5) for b in plan.test(f))
    assert tested == list(range(12))
    assert not set(plan.train(0)) & set(plan.test(0))


def test_experiment_report_is_a_dict():
    ds = small_dataset()
    cfg = embaug.ExperimentConfig()
    cfg.seed = 3
    cfg.mil_seeds = [1]
    cfg.mil.epochs = 1
    cfg.mil.d_att = 8
    report = embaug.run_experiment(ds, ["no-aug"], cfg)
    (arm,) = report["arms"]
    assert arm["arm"] == "no-aug"
    assert len(arm["cells"]) == 5
    assert 0.0 <= arm["mean"]["accuracy"] <= 1.0


def test_cost_model_and_bench():
    assert embaug.generator_macs("ind", 8) == 96
    assert embaug.reference_extractor_macs() == 5_340_348_416
    ds = small_dataset()
    pairs = embaug.make_pairs(embaug.Rng(5), ds, 1)
    cfg = embaug.GanConfig()
    cfg.variant = "ind"
    cfg.epochs = 1
    cfg.batch_size = 16
    gen = embaug.train_gan(pairs, cfg).generator
    result = embaug.bench_speedup(gen, min_seconds=0.05)
    assert result["generator_macs"] == 96
    assert result["analytic_ratio"] > 1e6
    assert result["measured_ratio"] > 0


def test_contract_violations_raise_value_error(tmp_path):
    # Rotation planes pair coordinates, so the dimension must be a multiple of 4.
    with pytest.raises(embaug.ContractError):
        embaug.OracleAugmenter(6)
    assert issubclass(embaug.ContractError, ValueError)

    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(embaug.ParseError):
        embaug.load_dataset(str(bad))
