"""Desk-scale lab for functional activation sparsity in GLU-FFN transformers."""

from .ffn import ActivationSite, CostMode, FfnWeights, ffn_dense, ffn_mac_count, ffn_sparsified
from .sparsify import (
    RuleKind,
    SparsifyRule,
    SparsityMask,
    apply_mask,
    induced_sparsity,
    max_p_mask,
    top_k_mask,
    top_p_mask,
)
from .tensor import Tensor, gemv, seeded_tensor

__version__ = "0.1.0"

__all__ = [
    "ActivationSite",
    "CostMode",
    "FfnWeights",
    "RuleKind",
    "SparsifyRule",
    "SparsityMask",
    "Tensor",
    "apply_mask",
    "ffn_dense",
    "ffn_mac_count",
    "ffn_sparsified",
    "gemv",
    "induced_sparsity",
    "max_p_mask",
    "seeded_tensor",
    "top_k_mask",
    "top_p_mask",
    "__version__",
]
