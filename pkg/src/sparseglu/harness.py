"""Threshold sweeps, per-layer heatmaps, and run manifests.

One dense baseline run plus one sparsified run per threshold; the
performance metric is greedy top-1 accuracy, normalized by the dense run.
Threshold runs are independent and may execute on a thread pool; results are
always assembled in threshold order, so output is order-deterministic.
"""

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import InputError, InvariantError
from .ffn import ActivationSite
from .model import EvalReport, TinyLM
from .sparsify import RuleKind, SparsifyRule

DEFAULT_TOP_P_GRID = (0.0, 0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.925, 0.95, 0.975, 0.99, 1.0)


@dataclass(frozen=True)
class SweepPoint:
    p_threshold: float
    induced_sparsity: float
    raw_metric: float
    normalized_metric: float


@dataclass(frozen=True)
class SweepCurve:
    site: ActivationSite
    rule_kind: RuleKind
    points: tuple[SweepPoint, ...]
    dense_metric: float


@dataclass(frozen=True)
class LayerHeatmap:
    thresholds: tuple[float, ...]
    layers: int
    sparsity: tuple[tuple[float, ...], ...]  # [threshold][layer]
    metric_per_threshold: tuple[float, ...]


def _validate_thresholds(rule_kind: RuleKind, thresholds) -> list[float]:
    thresholds = [float(t) for t in thresholds]
    if not thresholds:
        raise InputError("thresholds must be nonempty")
    if len(set(thresholds)) != len(thresholds):
        raise InputError("thresholds must be unique")
    for t in thresholds:
        if rule_kind == RuleKind.TOP_K:
            if t < 0 or t != int(t):
                raise InputError(f"top_k threshold must be a nonnegative integer, got {t}")
        elif not (0.0 <= t <= 1.0):
            raise InputError(f"threshold must be in [0, 1], got {t}")
    return thresholds


def _run_points(model, tokens, site, rule_kind, thresholds, threads):
    def one(t: float) -> EvalReport:
        rule = SparsifyRule.from_threshold(rule_kind, t)
        return model.eval_metrics(tokens, sparsify=(site, rule))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, thresholds))
    return [one(t) for t in thresholds]


def sweep(
    model: TinyLM,
    tokens,
    site: ActivationSite,
    rule_kind: RuleKind,
    thresholds,
    threads: int = 1,
) -> SweepCurve:
    thresholds = _validate_thresholds(rule_kind, thresholds)
    dense = model.eval_metrics(tokens)
    if dense.top1_accuracy == 0.0:
        raise InvariantError(
            "dense top-1 accuracy is zero; normalized metrics are undefined for this corpus"
        )
    reports = _run_points(model, tokens, site, rule_kind, thresholds, threads)
    points = tuple(
        SweepPoint(
            p_threshold=t,
            induced_sparsity=r.avg_induced_sparsity,
            raw_metric=r.top1_accuracy,
            normalized_metric=r.top1_accuracy / dense.top1_accuracy,
        )
        for t, r in zip(thresholds, reports)
    )
    return SweepCurve(site=site, rule_kind=rule_kind, points=points, dense_metric=dense.top1_accuracy)


def layer_threshold_heatmap(
    model: TinyLM,
    tokens,
    site: ActivationSite,
    thresholds,
    rule_kind: RuleKind = RuleKind.TOP_P,
    threads: int = 1,
) -> LayerHeatmap:
    thresholds = _validate_thresholds(rule_kind, thresholds)
    reports = _run_points(model, tokens, site, rule_kind, thresholds, threads)
    return LayerHeatmap(
        thresholds=tuple(thresholds),
        layers=model.manifest.n_layers,
        sparsity=tuple(tuple(float(s) for s in r.per_layer_sparsity) for r in reports),
        metric_per_threshold=tuple(r.top1_accuracy for r in reports),
    )


def sweep_csv(curve: SweepCurve) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["site", "rule", "p", "induced_sparsity", "raw_metric", "normalized_metric"])
    for pt in curve.points:
        writer.writerow(
            [
                curve.site.value,
                curve.rule_kind.value,
                repr(pt.p_threshold),
                repr(pt.induced_sparsity),
                repr(pt.raw_metric),
                repr(pt.normalized_metric),
            ]
        )
    return out.getvalue()


def heatmap_csv(hm: LayerHeatmap) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["p", "layer", "sparsity"])
    for ti, t in enumerate(hm.thresholds):
        for layer in range(hm.layers):
            writer.writerow([repr(t), layer, repr(hm.sparsity[ti][layer])])
    return out.getvalue()


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_manifest(
    *,
    subcommand: str,
    model_path,
    data_path,
    site: ActivationSite,
    rule_kind: RuleKind,
    thresholds,
    seed: int | None,
    threads: int,
    dense_metric: float | None = None,
) -> str:
    doc = {
        "subcommand": subcommand,
        "model_sha256": file_sha256(model_path),
        "data_sha256": file_sha256(data_path),
        "site": site.value,
        "rule": rule_kind.value,
        "thresholds": [float(t) for t in thresholds],
        "seed": seed,
        "threads": threads,
    }
    if dense_metric is not None:
        doc["dense_metric"] = dense_metric
    return json.dumps(doc, indent=2, sort_keys=True)
