"""Semi-supervised PMU event classification."""

from ._pmussl import (
    ConfigError,
    Error,
    estimate_modes,
    extract,
    fit_score,
    generate,
    label_spread,
    protocol_sizes,
    roc_auc_ovr,
    run,
    self_train,
    tsvm,
)

__all__ = [
    "ConfigError",
    "Error",
    "estimate_modes",
    "extract",
    "fit_score",
    "generate",
    "label_spread",
    "protocol_sizes",
    "roc_auc_ovr",
    "run",
    "self_train",
    "tsvm",
]
