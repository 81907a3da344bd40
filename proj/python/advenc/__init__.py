"""AdvEncryption: adversarial encoder/decoder defense with a model-extraction
attack harness. Thin Python surface over the C++ core."""

from ._core import (
    AdvencError,
    AdvEncModel,
    AttackResult,
    Dataset,
    EfficiencyReport,
    Network,
    Oracle,
    accuracy,
    class_subset,
    craft_augmentation,
    decrypt,
    decryption_efficiency,
    derive_seed,
    encrypt,
    encryption_efficiency,
    generate_synthetic,
    load_csv,
    oracle_from_advenc,
    oracle_from_advenc_plaintext,
    oracle_from_baseline,
    pipeline_accuracy,
    run_experiment,
    split,
    substitute_train_gan,
    substitute_train_gradient,
    success_rate,
    train_advenc,
    train_baseline,
)

__all__ = [
    "AdvencError",
    "AdvEncModel",
    "AttackResult",
    "Dataset",
    "EfficiencyReport",
    "Network",
    "Oracle",
    "accuracy",
    "class_subset",
    "craft_augmentation",
    "decrypt",
    "decryption_efficiency",
    "derive_seed",
    "encrypt",
    "encryption_efficiency",
    "generate_synthetic",
    "load_csv",
    "oracle_from_advenc",
    "oracle_from_advenc_plaintext",
    "oracle_from_baseline",
    "pipeline_accuracy",
    "run_experiment",
    "split",
    "substitute_train_gan",
    "substitute_train_gradient",
    "success_rate",
    "train_advenc",
    "train_baseline",
]

__version__ = "0.1.0"
