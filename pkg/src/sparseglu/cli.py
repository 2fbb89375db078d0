"""Command-line entry point.

Subcommands: gen-model, sweep, heatmap, critical, kde, trend, flops, bench,
logits, serve. Exit codes: 0 success, 2 config error, 3 data/model format
error, 4 internal invariant violation. A JSON config file passed with
--config can supply any flag (explicit flags win). SPARSEGLU_THREADS is the
fallback for --threads.
"""

import csv
import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import bench as bench_mod
from . import harness, stats
from .container import save_container_file
from .errors import ConfigError, FormatError, InputError, InvariantError, SparsegluError
from .ffn import ActivationSite, CostMode, ffn_mac_count
from .model import ModelManifest, TinyLM, byte_tokenize, generate_weights
from .sparsify import RuleKind, SparsifyRule

SITE_CHOICES = click.Choice([s.value for s in ActivationSite])
RULE_CHOICES = click.Choice([r.value for r in RuleKind])
MODE_CHOICES = click.Choice([m.value for m in CostMode])


def _load_config(ctx, param, value):
    if value is None:
        return None
    try:
        with open(value, "r", encoding="utf-8") as f:
            cfg = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise click.ClickException(f"cannot read config file: {e}")
    if not isinstance(cfg, dict):
        raise click.ClickException("config file must hold a JSON object")
    ctx.default_map = {**cfg, **(ctx.default_map or {})}
    return value


def config_option(fn):
    return click.option(
        "--config",
        type=click.Path(exists=True, dir_okay=False),
        callback=_load_config,
        is_eager=True,
        expose_value=False,
        help="JSON file supplying default values for any flag.",
    )(fn)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, InputError) as e:
            click.echo(f"config error: {e}", err=True)
            sys.exit(2)
        except FormatError as e:
            click.echo(f"format error: {e}", err=True)
            sys.exit(3)
        except InvariantError as e:
            click.echo(f"internal invariant violation: {e}", err=True)
            sys.exit(4)
        except SparsegluError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(3)

    return wrapper


def threads_option(fn):
    return click.option(
        "--threads",
        type=int,
        default=lambda: int(os.environ.get("SPARSEGLU_THREADS", "1")),
        help="Worker threads for independent threshold runs (default 1; env SPARSEGLU_THREADS).",
    )(fn)


def _parse_thresholds(text: str | None, rule_kind: RuleKind) -> list[float]:
    if text is None:
        if rule_kind == RuleKind.TOP_K:
            raise ConfigError("top_k sweeps need an explicit --thresholds list of k values")
        return list(harness.DEFAULT_TOP_P_GRID)
    try:
        return [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError as e:
        raise ConfigError(f"cannot parse thresholds {text!r}: {e}") from e


def _load_model(model_path, manifest_path) -> TinyLM:
    return TinyLM.load(model_path, manifest_path)


def _load_tokens(data_path) -> np.ndarray:
    with open(data_path, "rb") as f:
        return byte_tokenize(f.read())


@click.group()
def main():
    """Activation-sparsity lab for GLU-FFN transformers."""


@main.command("gen-model")
@config_option
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@handle_errors
def cmd_gen_model(manifest_path, seed, out_path):
    """Write deterministic synthetic weights for a manifest to a GSPT file."""
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = ModelManifest.from_json(f.read())
    tensors = generate_weights(manifest, seed)
    save_container_file(tensors, out_path)
    for t in tensors:
        click.echo(f"{t.name}  dims={list(t.dims)}  elems={t.data.size}")
    click.echo(f"wrote {len(tensors)} tensors to {out_path}")


@main.command("sweep")
@config_option
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--site", type=SITE_CHOICES, default="intermediate", show_default=True)
@click.option("--rule", type=RULE_CHOICES, default="top_p", show_default=True)
@click.option("--thresholds", type=str, default=None, help="Comma-separated threshold list.")
@click.option("--seed", type=int, default=None)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@threads_option
@handle_errors
def cmd_sweep(model_path, manifest_path, data_path, site, rule, thresholds, seed, out_dir, threads):
    """Run a sparsity-performance sweep and write CSV + run manifest."""
    site_e = ActivationSite(site)
    rule_e = RuleKind(rule)
    grid = _parse_thresholds(thresholds, rule_e)
    model = _load_model(model_path, manifest_path)
    tokens = _load_tokens(data_path)
    curve = harness.sweep(model, tokens, site_e, rule_e, grid, threads=threads)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"sweep_{site_e.value}_{rule_e.value}.csv"
    csv_path.write_text(harness.sweep_csv(curve), encoding="utf-8")
    manifest_text = harness.run_manifest(
        subcommand="sweep",
        model_path=model_path,
        data_path=data_path,
        site=site_e,
        rule_kind=rule_e,
        thresholds=grid,
        seed=seed,
        threads=threads,
        dense_metric=curve.dense_metric,
    )
    (out / f"run_sweep_{site_e.value}_{rule_e.value}.json").write_text(manifest_text, encoding="utf-8")

    crit = stats.critical_sparsity(curve, 0.99)
    click.echo(f"wrote {csv_path}")
    click.echo(f"critical sparsity @ 0.99 retention: {crit.value:.6f}")


@main.command("heatmap")
@config_option
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--site", type=SITE_CHOICES, default="gate", show_default=True)
@click.option("--thresholds", type=str, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@threads_option
@handle_errors
def cmd_heatmap(model_path, manifest_path, data_path, site, thresholds, seed, out_dir, threads):
    """Per-layer induced-sparsity heatmap across thresholds (top-p)."""
    site_e = ActivationSite(site)
    grid = _parse_thresholds(thresholds, RuleKind.TOP_P)
    model = _load_model(model_path, manifest_path)
    tokens = _load_tokens(data_path)
    hm = harness.layer_threshold_heatmap(model, tokens, site_e, grid, threads=threads)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"heatmap_{site_e.value}.csv"
    csv_path.write_text(harness.heatmap_csv(hm), encoding="utf-8")
    manifest_text = harness.run_manifest(
        subcommand="heatmap",
        model_path=model_path,
        data_path=data_path,
        site=site_e,
        rule_kind=RuleKind.TOP_P,
        thresholds=grid,
        seed=seed,
        threads=threads,
    )
    (out / f"run_heatmap_{site_e.value}.json").write_text(manifest_text, encoding="utf-8")
    click.echo(f"wrote {csv_path}")


def _read_sweep_csv(path) -> harness.SweepCurve:
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise FormatError(f"sweep CSV {path} has no rows")
    try:
        points = tuple(
            harness.SweepPoint(
                p_threshold=float(r["p"]),
                induced_sparsity=float(r["induced_sparsity"]),
                raw_metric=float(r["raw_metric"]),
                normalized_metric=float(r["normalized_metric"]),
            )
            for r in rows
        )
        site = ActivationSite(rows[0]["site"])
        rule = RuleKind(rows[0]["rule"])
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"sweep CSV {path} is malformed: {e}") from e
    dense = next(
        (pt.raw_metric / pt.normalized_metric for pt in points if pt.normalized_metric > 0),
        float("nan"),
    )
    return harness.SweepCurve(site=site, rule_kind=rule, points=points, dense_metric=dense)


@main.command("critical")
@config_option
@click.option("--sweep-csv", "sweep_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--retention", type=float, default=0.99, show_default=True)
@handle_errors
def cmd_critical(sweep_path, retention):
    """Extract critical sparsity from a sweep CSV."""
    curve = _read_sweep_csv(sweep_path)
    crit = stats.critical_sparsity(curve, retention)
    click.echo(
        json.dumps(
            {
                "value": crit.value,
                "retention": crit.retention_threshold,
                "p_threshold": crit.source_point.p_threshold,
                "normalized_metric": crit.source_point.normalized_metric,
            }
        )
    )


def _read_values(path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            field = line.split(",")[-1]
            try:
                values.append(float(field))
            except ValueError:
                continue  # header line
    if not values:
        raise FormatError(f"no numeric values found in {path}")
    return np.asarray(values, dtype=np.float64)


@main.command("kde")
@config_option
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="File with one value per line (or CSV whose last column is the value).")
@click.option("--grid-points", type=int, default=256, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@handle_errors
def cmd_kde(input_path, grid_points, out_path):
    """Gaussian KDE with Silverman bandwidth; writes grid,density CSV."""
    xs = _read_values(input_path)
    bw = stats.silverman_bandwidth(xs)
    grid = stats.default_kde_grid(xs, bw, grid_points)
    density = stats.gaussian_kde(xs, bw, grid)
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["grid", "density"])
        for g, d in zip(grid, density):
            writer.writerow([repr(float(g)), repr(float(d))])
    click.echo(json.dumps({"bandwidth": bw, "n": int(xs.shape[0]), "out": str(out_path)}))


@main.command("trend")
@config_option
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="CSV with columns params,critical.")
@click.option("--params", type=str, default=None, help="Comma-separated parameter counts.")
@click.option("--criticals", type=str, default=None, help="Comma-separated critical sparsities.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@handle_errors
def cmd_trend(input_path, params, criticals, out_path):
    """OLS fit of critical sparsity against log10 parameter count."""
    if input_path is not None:
        with open(input_path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        try:
            xs = [float(r["params"]) for r in rows]
            ys = [float(r["critical"]) for r in rows]
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"trend CSV needs columns params,critical: {e}") from e
    elif params and criticals:
        xs = [float(t) for t in params.split(",")]
        ys = [float(t) for t in criticals.split(",")]
    else:
        raise ConfigError("trend needs either --input or both --params and --criticals")
    fit = stats.ols_trend(np.log10(np.asarray(xs, dtype=np.float64)), ys)
    doc = json.dumps(
        {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "rss": fit.residual_sum_of_squares,
            "n": fit.n_points,
        }
    )
    if out_path:
        Path(out_path).write_text(doc + "\n", encoding="utf-8")
    click.echo(doc)


@main.command("flops")
@config_option
@click.option("--h", "h", required=True, type=int)
@click.option("--d", "d", required=True, type=int)
@click.option("--site", type=SITE_CHOICES, required=True)
@click.option("--mode", type=MODE_CHOICES, default="value_based", show_default=True)
@click.option("--sparsity", "-s", type=float, required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@handle_errors
def cmd_flops(h, d, site, mode, sparsity, out_path):
    """MAC/byte accounting for one sparsified FFN token."""
    cost = ffn_mac_count(h, d, ActivationSite(site), CostMode(mode), sparsity)
    doc = json.dumps(
        {
            "h": h,
            "d": d,
            "site": site,
            "mode": mode,
            "sparsity": sparsity,
            "macs": cost.macs,
            "dense_macs": cost.dense_macs,
            "saving": cost.saving,
            "elementwise_ops": cost.elementwise_ops,
            "activation_ops": cost.activation_ops,
            "weight_bytes": cost.weight_bytes,
            "dense_weight_bytes": cost.dense_weight_bytes,
        }
    )
    if out_path:
        Path(out_path).write_text(doc + "\n", encoding="utf-8")
    click.echo(doc)


@main.command("bench")
@config_option
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--site", type=SITE_CHOICES, default="intermediate", show_default=True)
@click.option("--rule", type=RULE_CHOICES, default="top_p", show_default=True)
@click.option("--threshold", type=float, required=True)
@click.option("--mode", type=MODE_CHOICES, default="value_based", show_default=True)
@click.option("--reps", type=int, default=3, show_default=True)
@handle_errors
def cmd_bench(model_path, manifest_path, data_path, site, rule, threshold, mode, reps):
    """Time dense vs. skipping-kernel execution and cross-check MAC counts."""
    model = _load_model(model_path, manifest_path)
    tokens = _load_tokens(data_path)[: model.manifest.max_seq_len]
    rule_obj = SparsifyRule.from_threshold(RuleKind(rule), threshold)
    report = bench_mod.bench(
        model, tokens, ActivationSite(site), rule_obj, CostMode(mode), reps=reps
    )
    click.echo(
        json.dumps(
            {
                "site": report.site.value,
                "mode": report.mode.value,
                "tokens": report.tokens,
                "dense_seconds": report.dense_seconds,
                "sparse_seconds": report.sparse_seconds,
                "dense_tokens_per_s": report.dense_tokens_per_s,
                "sparse_tokens_per_s": report.sparse_tokens_per_s,
                "measured_sparsity": report.measured_sparsity,
                "measured_macs": report.measured_macs,
                "predicted_macs": report.predicted_macs,
                "dense_macs": report.dense_macs,
                "mac_reduction": report.mac_reduction,
            }
        )
    )


@main.command("logits")
@config_option
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tokens", "tokens_text", required=True, help="Comma-separated token ids.")
@handle_errors
def cmd_logits(model_path, manifest_path, tokens_text):
    """Print dense forward logits for a token sequence as JSON."""
    model = _load_model(model_path, manifest_path)
    tokens = [int(t) for t in tokens_text.split(",") if t.strip() != ""]
    logits = model.forward_logits(tokens)
    click.echo(json.dumps({"logits": logits.astype(float).tolist()}))


@main.command("serve")
@config_option
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@handle_errors
def cmd_serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
