"""Wall-clock benchmark of dense vs. skipping-kernel execution, with
instrumented MAC counters cross-checked against the analytic cost model.

Value-based mode times the sparsified forward as-is (mask computation
included). Oracle-predictor mode records per-token intermediate masks in an
untimed pass, then times a forward that row/column-skips all three FFN
projections using the cached masks.
"""

import time
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .ffn import (
    ActivationSite,
    CostMode,
    ffn_dense,
    ffn_mac_count,
    ffn_sparsified,
    gemv_skip_cols,
    gemv_skip_rows,
)
from .model import TinyLM
from .sparsify import SparsifyRule


@dataclass(frozen=True)
class BenchReport:
    site: ActivationSite
    mode: CostMode
    tokens: int
    dense_seconds: float
    sparse_seconds: float
    dense_tokens_per_s: float
    sparse_tokens_per_s: float
    measured_sparsity: float
    measured_macs: float
    predicted_macs: float
    dense_macs: float
    mac_reduction: float


def _measured_macs(h: int, d: int, site: ActivationSite, mode: CostMode, kept: int) -> float:
    """Exact MACs performed by the skipping kernels for one token."""
    hd = float(h) * float(d)
    if mode == CostMode.ORACLE_PREDICTOR:
        return 3.0 * kept * h
    if site == ActivationSite.INPUT:
        return 2.0 * kept * d + hd
    if site in (ActivationSite.GATE, ActivationSite.UP_PROJECTION):
        return hd + 2.0 * kept * h
    return 2.0 * hd + kept * h


def _timed(fn, reps: int) -> float:
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(
    model: TinyLM,
    tokens,
    site: ActivationSite,
    rule: SparsifyRule,
    mode: CostMode = CostMode.VALUE_BASED,
    reps: int = 3,
) -> BenchReport:
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.shape[0] < 1:
        raise InputError("bench requires at least 1 token")
    if mode == CostMode.ORACLE_PREDICTOR and site != ActivationSite.INTERMEDIATE:
        raise InputError("oracle_predictor mode applies to the intermediate site only")
    m = model.manifest
    h, d = m.hidden_dim, m.intermediate_dim
    n_calls = tokens.shape[0] * m.n_layers

    # Untimed mask-recording pass (also warms numba kernels and caches).
    masks: dict[tuple[int, int], object] = {}
    kept_total = 0

    def record(layer, t, vec):
        y, trace = ffn_sparsified(vec, model.ffn_weights[layer], site, rule)
        masks[(layer, t)] = trace.mask
        return y

    model.forward_custom_ffn(tokens, record)
    kept_total = sum(mask.kept_count for mask in masks.values())
    mask_dim = d if site != ActivationSite.INPUT else h
    measured_sparsity = 1.0 - kept_total / (n_calls * mask_dim)

    def dense_run():
        model.forward_custom_ffn(
            tokens, lambda layer, t, vec: ffn_dense(vec, model.ffn_weights[layer])
        )

    if mode == CostMode.VALUE_BASED:

        def sparse_run():
            model.forward_custom_ffn(
                tokens,
                lambda layer, t, vec: ffn_sparsified(
                    vec, model.ffn_weights[layer], site, rule
                )[0],
            )

    else:

        def sparse_run():
            def apply(layer, t, vec):
                fw = model.ffn_weights[layer]
                mask = masks[(layer, t)]
                u = gemv_skip_rows(fw.w_up, vec, mask)
                g = fw.act(gemv_skip_rows(fw.w_gate, vec, mask))
                return gemv_skip_cols(fw.w_down, u * g, mask)

            model.forward_custom_ffn(tokens, apply)

    dense_run()  # warm-up
    dense_s = _timed(dense_run, reps)
    sparse_s = _timed(sparse_run, reps)

    measured_macs = sum(
        _measured_macs(h, d, site, mode, mask.kept_count) for mask in masks.values()
    )
    cost = ffn_mac_count(h, d, site if mode == CostMode.VALUE_BASED else ActivationSite.INTERMEDIATE, mode, measured_sparsity)
    predicted = cost.macs * n_calls
    dense_macs = cost.dense_macs * n_calls
    n_tok = tokens.shape[0]
    return BenchReport(
        site=site,
        mode=mode,
        tokens=n_tok,
        dense_seconds=dense_s,
        sparse_seconds=sparse_s,
        dense_tokens_per_s=n_tok / dense_s,
        sparse_tokens_per_s=n_tok / sparse_s,
        measured_sparsity=measured_sparsity,
        measured_macs=measured_macs,
        predicted_macs=predicted,
        dense_macs=dense_macs,
        mac_reduction=1.0 - measured_macs / dense_macs,
    )
