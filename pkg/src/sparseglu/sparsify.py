"""Magnitude-based sparsification rules and mask plumbing.

Three rules over an activation vector v:

  top-p: smallest set of largest-magnitude entries whose absolute values sum
         to at least p * ||v||_1 (greedy by descending magnitude);
  top-k: the k entries maximizing the kept L1 mass;
  max-p: every entry with |v_i| >= p * max|v|.

Ties in magnitude are broken by lower index, in both sorting and threshold
comparisons, so results are total-order deterministic.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ShapeError


class RuleKind(str, enum.Enum):
    TOP_P = "top_p"
    TOP_K = "top_k"
    MAX_P = "max_p"


@dataclass(frozen=True)
class SparsityMask:
    """Binary keep/drop decision over one activation vector."""

    keep: np.ndarray  # bool, shape (n,)

    def __post_init__(self):
        if self.keep.dtype != np.bool_ or self.keep.ndim != 1:
            raise InputError("SparsityMask.keep must be a 1-D bool array")

    @property
    def n(self) -> int:
        return int(self.keep.shape[0])

    @property
    def kept_count(self) -> int:
        return int(np.count_nonzero(self.keep))

    def kept_indices(self) -> np.ndarray:
        return np.flatnonzero(self.keep)


@dataclass(frozen=True)
class SparsifyRule:
    kind: RuleKind
    p: float | None = None
    k: int | None = None

    def __post_init__(self):
        if self.kind in (RuleKind.TOP_P, RuleKind.MAX_P):
            if self.p is None or not (0.0 <= self.p <= 1.0):
                raise InputError(f"{self.kind.value}: p must be in [0, 1], got {self.p}")
        else:
            if self.k is None or self.k < 0:
                raise InputError(f"top_k: k must be a nonnegative integer, got {self.k}")

    def mask(self, v: np.ndarray) -> SparsityMask:
        if self.kind == RuleKind.TOP_P:
            return top_p_mask(v, self.p)
        if self.kind == RuleKind.TOP_K:
            return top_k_mask(v, self.k)
        return max_p_mask(v, self.p)

    @property
    def threshold(self) -> float:
        return float(self.k) if self.kind == RuleKind.TOP_K else float(self.p)

    @staticmethod
    def from_threshold(kind: RuleKind, threshold: float) -> "SparsifyRule":
        if kind == RuleKind.TOP_K:
            return SparsifyRule(kind, k=int(threshold))
        return SparsifyRule(kind, p=float(threshold))


def _check_vector(v) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1:
        raise ShapeError(f"expected a vector, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise InputError("sparsification over non-finite values is undefined")
    return v


def _magnitude_order(absv: np.ndarray) -> np.ndarray:
    # Stable sort on -|v| leaves equal magnitudes in ascending-index order.
    return np.argsort(-absv, kind="stable")


def top_p_mask(v, p: float) -> SparsityMask:
    v = _check_vector(v)
    if not (0.0 <= p <= 1.0):
        raise InputError(f"top_p: p must be in [0, 1], got {p}")
    n = v.shape[0]
    keep = np.zeros(n, dtype=bool)
    if n == 0 or p == 0.0:
        return SparsityMask(keep)
    absv = np.abs(v).astype(np.float64)
    order = _magnitude_order(absv)
    cum = np.cumsum(absv[order])
    total = cum[-1]
    if total == 0.0:
        # All-zero vector: the constraint is vacuous, keep nothing.
        return SparsityMask(keep)
    # First prefix whose mass reaches p * total. The total is taken from the
    # same descending cumsum so p = 1.0 is reachable exactly.
    stop = int(np.searchsorted(cum, p * total, side="left"))
    keep[order[: stop + 1]] = True
    return SparsityMask(keep)


def top_k_mask(v, k: int) -> SparsityMask:
    v = _check_vector(v)
    n = v.shape[0]
    if not (0 <= k <= n):
        raise InputError(f"top_k: k must be in [0, {n}], got {k}")
    keep = np.zeros(n, dtype=bool)
    if k > 0:
        order = _magnitude_order(np.abs(v).astype(np.float64))
        keep[order[:k]] = True
    return SparsityMask(keep)


def max_p_mask(v, p: float) -> SparsityMask:
    v = _check_vector(v)
    if not (0.0 <= p <= 1.0):
        raise InputError(f"max_p: p must be in [0, 1], got {p}")
    absv = np.abs(v).astype(np.float64)
    vmax = absv.max() if absv.size else 0.0
    return SparsityMask(absv >= p * vmax)


def apply_mask(v, mask: SparsityMask) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[0] != mask.n:
        raise ShapeError(f"apply_mask: vector length {v.shape[0]} != mask length {mask.n}")
    return v * mask.keep.astype(v.dtype)


def induced_sparsity(mask: SparsityMask) -> float:
    if mask.n == 0:
        raise InputError("induced_sparsity: empty mask")
    return float(mask.n - mask.kept_count) / mask.n
