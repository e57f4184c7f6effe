"""Embedding-space augmentation workbench.

Synthetic bag datasets on a known embedding manifold, a ground-truth oracle
augmenter, two learned augmenter variants trained adversarially, an
attention-pooled bag classifier, ordinal metrics, and the cross-validated
experiment harness — all backed by the C++ core.
"""

from ._core import (
    ContractError,
    Dataset,
    ExperimentConfig,
    FoldPlan,
    GanConfig,
    GanEpochLog,
    GanTrainLog,
    GenConfig,
    Generator,
    MilModel,
    MilTrainConfig,
    OracleAugmenter,
    OracleParams,
    OracleRanges,
    PairSet,
    ParseError,
    Rng,
    TrainedGan,
    __version__,
    accuracy,
    bench_speedup,
    generate_dataset,
    generator_macs,
    load_dataset,
    load_generator,
    load_mil,
    make_folds,
    make_pairs,
    nll,
    quadratic_kappa,
    reference_extractor_macs,
    run_experiment,
    save_dataset,
    save_generator,
    save_mil,
    subsample_pairs,
    train_gan,
    train_mil,
    verify_no_leakage,
)

__all__ = [
    "ContractError",
    "Dataset",
    "ExperimentConfig",
    "FoldPlan",
    "GanConfig",
    "GanEpochLog",
    "GanTrainLog",
    "GenConfig",
    "Generator",
    "MilModel",
    "MilTrainConfig",
    "OracleAugmenter",
    "OracleParams",
    "OracleRanges",
    "PairSet",
    "ParseError",
    "Rng",
    "TrainedGan",
    "__version__",
    "accuracy",
    "bench_speedup",
    "generate_dataset",
    "generator_macs",
    "load_dataset",
    "load_generator",
    "load_mil",
    "make_folds",
    "make_pairs",
    "nll",
    "quadratic_kappa",
    "reference_extractor_macs",
    "run_experiment",
    "save_dataset",
    "save_generator",
    "save_mil",
    "subsample_pairs",
    "train_gan",
    "train_mil",
    "verify_no_leakage",
]
