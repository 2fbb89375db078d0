"""Gated (GLU) FFN forward passes, compute-skipping kernels, and cost model.

The block computes y = W_d((W_u x) * act(W_g x)) with four maskable
activation sites: the input x, the up-projection u, the gate g, and the
intermediate i = u * g. Skipping kernels drop whole columns/rows of the
projections and are bitwise-equal to running the dense kernel on masked
activations, because dropped terms contribute exact floating zeros and the
accumulation order is identical (see `tensor`).
"""

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import erf

from .errors import InputError, ShapeError
from .sparsify import SparsifyRule, SparsityMask, apply_mask, induced_sparsity
from .tensor import _as_f32_matrix, _as_f32_vector, _gemv_kernel, gemv

SQRT2 = float(np.sqrt(2.0))


class Activation(str, enum.Enum):
    SILU = "silu"
    GELU = "gelu"


class ActivationSite(str, enum.Enum):
    INPUT = "input"
    UP_PROJECTION = "up"
    GATE = "gate"
    INTERMEDIATE = "intermediate"


class CostMode(str, enum.Enum):
    VALUE_BASED = "value_based"
    ORACLE_PREDICTOR = "oracle_predictor"


def silu(v: np.ndarray) -> np.ndarray:
    z = np.asarray(v, dtype=np.float64)
    return (z / (1.0 + np.exp(-z))).astype(np.float32)


def gelu(v: np.ndarray) -> np.ndarray:
    z = np.asarray(v, dtype=np.float64)
    return (0.5 * z * (1.0 + erf(z / SQRT2))).astype(np.float32)


_ACTIVATIONS = {Activation.SILU: silu, Activation.GELU: gelu}


@dataclass(frozen=True)
class FfnWeights:
    """The three projections in [out x in] orientation: w_up, w_gate are
    [d x h], w_down is [h x d]."""

    w_up: np.ndarray
    w_gate: np.ndarray
    w_down: np.ndarray
    activation: Activation = Activation.SILU

    def __post_init__(self):
        wu = _as_f32_matrix(self.w_up)
        wg = _as_f32_matrix(self.w_gate)
        wd = _as_f32_matrix(self.w_down)
        object.__setattr__(self, "w_up", wu)
        object.__setattr__(self, "w_gate", wg)
        object.__setattr__(self, "w_down", wd)
        d, h = wu.shape
        if wg.shape != (d, h) or wd.shape != (h, d):
            raise ShapeError(
                f"inconsistent FFN shapes: w_up {wu.shape}, w_gate {wg.shape}, w_down {wd.shape}"
            )
        for name, w in (("w_up", wu), ("w_gate", wg), ("w_down", wd)):
            if not np.all(np.isfinite(w)):
                raise InputError(f"{name} has non-finite entries")

    @property
    def h(self) -> int:
        return self.w_up.shape[1]

    @property
    def d(self) -> int:
        return self.w_up.shape[0]

    def act(self, v: np.ndarray) -> np.ndarray:
        return _ACTIVATIONS[self.activation](v)


@dataclass(frozen=True)
class FfnTrace:
    mask: SparsityMask
    site: ActivationSite
    induced_sparsity: float


@njit(cache=True, nogil=True)
def _gemv_skip_cols_kernel(W, x, keep):
    out = np.empty(W.shape[0], dtype=np.float32)
    for i in range(W.shape[0]):
        acc = np.float32(0.0)
        for j in range(W.shape[1]):
            if keep[j]:
                acc += W[i, j] * x[j]
        out[i] = acc
    return out


@njit(cache=True, nogil=True)
def _gemv_skip_rows_kernel(W, x, keep_rows):
    out = np.zeros(W.shape[0], dtype=np.float32)
    for i in range(W.shape[0]):
        if keep_rows[i]:
            acc = np.float32(0.0)
            for j in range(W.shape[1]):
                acc += W[i, j] * x[j]
            out[i] = acc
    return out


def gemv_skip_cols(W, x, mask: SparsityMask) -> np.ndarray:
    """y = W @ (mask * x), touching only kept columns."""
    W = _as_f32_matrix(W)
    x = _as_f32_vector(x)
    if W.shape[1] != x.shape[0]:
        raise ShapeError(f"gemv_skip_cols: W is {W.shape}, x has length {x.shape[0]}")
    if mask.n != W.shape[1]:
        raise ShapeError(f"gemv_skip_cols: mask length {mask.n} != in-dim {W.shape[1]}")
    return _gemv_skip_cols_kernel(W, x, mask.keep)


def gemv_skip_rows(W, x, row_mask: SparsityMask) -> np.ndarray:
    """Computes only kept output rows; dropped rows are exact 0.0."""
    W = _as_f32_matrix(W)
    x = _as_f32_vector(x)
    if W.shape[1] != x.shape[0]:
        raise ShapeError(f"gemv_skip_rows: W is {W.shape}, x has length {x.shape[0]}")
    if row_mask.n != W.shape[0]:
        raise ShapeError(f"gemv_skip_rows: mask length {row_mask.n} != out-dim {W.shape[0]}")
    return _gemv_skip_rows_kernel(W, x, row_mask.keep)


def ffn_dense(x, w: FfnWeights) -> np.ndarray:
    x = _as_f32_vector(x)
    if x.shape[0] != w.h:
        raise ShapeError(f"ffn_dense: x has length {x.shape[0]}, expected {w.h}")
    u = _gemv_kernel(w.w_up, x)
    g = w.act(_gemv_kernel(w.w_gate, x))
    return _gemv_kernel(w.w_down, u * g)


def ffn_sparsified(
    x, w: FfnWeights, site: ActivationSite, rule: SparsifyRule
) -> tuple[np.ndarray, FfnTrace]:
    """Forward pass with the vector at `site` masked before downstream use.

    Realized with skipping kernels; bitwise-equal to the dense pass on masked
    activations. The residual stream is never touched: input-site masking
    applies only to this block's view of x.
    """
    x = _as_f32_vector(x)
    if x.shape[0] != w.h:
        raise ShapeError(f"ffn_sparsified: x has length {x.shape[0]}, expected {w.h}")

    if site == ActivationSite.INPUT:
        mask = rule.mask(x)
        u = gemv_skip_cols(w.w_up, x, mask)
        g = w.act(gemv_skip_cols(w.w_gate, x, mask))
        y = _gemv_kernel(w.w_down, u * g)
    elif site == ActivationSite.UP_PROJECTION:
        u = _gemv_kernel(w.w_up, x)
        mask = rule.mask(u)
        g = w.act(gemv_skip_rows(w.w_gate, x, mask))
        y = gemv_skip_cols(w.w_down, apply_mask(u, mask) * g, mask)
    elif site == ActivationSite.GATE:
        g = w.act(_gemv_kernel(w.w_gate, x))
        mask = rule.mask(g)
        u = gemv_skip_rows(w.w_up, x, mask)
        y = gemv_skip_cols(w.w_down, u * apply_mask(g, mask), mask)
    elif site == ActivationSite.INTERMEDIATE:
        u = _gemv_kernel(w.w_up, x)
        g = w.act(_gemv_kernel(w.w_gate, x))
        i = u * g
        mask = rule.mask(i)
        y = gemv_skip_cols(w.w_down, apply_mask(i, mask), mask)
    else:
        raise InputError(f"unknown activation site {site!r}")

    return y, FfnTrace(mask=mask, site=site, induced_sparsity=induced_sparsity(mask))


def ffn_dense_on_masked(
    x, w: FfnWeights, site: ActivationSite, mask: SparsityMask
) -> np.ndarray:
    """Reference: dense forward with the given site's vector masked.

    Kept separate from ffn_sparsified on purpose; it performs no skipping and
    serves as the oracle side of the bitwise-equality contract.
    """
    x = _as_f32_vector(x)
    if site == ActivationSite.INPUT:
        x = apply_mask(x, mask)
    u = gemv(w.w_up, x)
    if site == ActivationSite.UP_PROJECTION:
        u = apply_mask(u, mask)
    g = w.act(gemv(w.w_gate, x))
    if site == ActivationSite.GATE:
        g = apply_mask(g, mask)
    i = u * g
    if site == ActivationSite.INTERMEDIATE:
        i = apply_mask(i, mask)
    return gemv(w.w_down, i)


@dataclass(frozen=True)
class MacCount:
    macs: float
    dense_macs: float
    elementwise_ops: float
    activation_ops: float
    weight_bytes: float
    dense_weight_bytes: float

    @property
    def saving(self) -> float:
        return 1.0 - self.macs / self.dense_macs


def ffn_mac_count(
    h: int, d: int, site: ActivationSite, mode: CostMode, s: float
) -> MacCount:
    """Multiply-accumulate cost of one sparsified FFN token.

    Value-based schedules: the site's vector is computed densely first, then
    downstream work is skipped (gate-site follows the gate-first schedule;
    up-site is symmetric). The oracle-predictor mode assumes the intermediate
    mask is known up front, enabling row/column skipping of all three
    projections. Elementwise-product and activation costs (d ops each) are
    reported separately; weight bytes are 4 per touched entry.
    """
    if not (0.0 <= s <= 1.0):
        raise InputError(f"sparsity must be in [0, 1], got {s}")
    if h <= 0 or d <= 0:
        raise InputError("h and d must be positive")
    hd = float(h) * float(d)
    dense = 3.0 * hd
    keep = 1.0 - s
    if mode == CostMode.ORACLE_PREDICTOR:
        if site != ActivationSite.INTERMEDIATE:
            raise InputError("oracle_predictor mode applies to the intermediate site only")
        macs = keep * 3.0 * hd
    elif site == ActivationSite.INPUT:
        macs = keep * 2.0 * hd + hd
    elif site in (ActivationSite.GATE, ActivationSite.UP_PROJECTION):
        macs = hd + keep * 2.0 * hd
    elif site == ActivationSite.INTERMEDIATE:
        macs = 2.0 * hd + keep * hd
    else:
        raise InputError(f"unknown activation site {site!r}")
    return MacCount(
        macs=macs,
        dense_macs=dense,
        elementwise_ops=float(d),
        activation_ops=float(d),
        weight_bytes=4.0 * macs,
        dense_weight_bytes=4.0 * dense,
    )
