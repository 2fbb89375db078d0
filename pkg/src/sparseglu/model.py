"""Minimal decoder-only byte-level transformer wrapping the GLU FFN.

Pre-norm architecture: x <- x + MHA(RMSNorm(x)); x <- x + FFN(RMSNorm(x));
final RMSNorm, then an untied output projection. Attention uses learned
absolute position embeddings and standard causal softmax. The FFN always
goes through the deterministic kernels in `ffn` (per token position), so a
sparsified run at p = 1.0 is bitwise-identical to the dense run.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .container import load_container_file, save_container_file
from .errors import ConfigError, InputError
from .ffn import Activation, ActivationSite, FfnWeights, ffn_dense, ffn_sparsified
from .rng import derive_seed
from .sparsify import SparsifyRule
from .tensor import Tensor, seeded_tensor

MANIFEST_FIELDS = (
    "n_layers",
    "hidden_dim",
    "intermediate_dim",
    "n_heads",
    "vocab_size",
    "activation",
    "norm_eps",
    "max_seq_len",
)


@dataclass(frozen=True)
class ModelManifest:
    n_layers: int
    hidden_dim: int
    intermediate_dim: int
    n_heads: int
    vocab_size: int
    activation: Activation
    norm_eps: float
    max_seq_len: int

    def __post_init__(self):
        for name in ("n_layers", "hidden_dim", "intermediate_dim", "n_heads", "max_seq_len"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"manifest field {name} must be positive")
        if self.vocab_size < 2:
            raise ConfigError("manifest field vocab_size must be >= 2")
        if self.hidden_dim % self.n_heads != 0:
            raise ConfigError(
                f"manifest field hidden_dim ({self.hidden_dim}) must be divisible "
                f"by n_heads ({self.n_heads})"
            )
        if self.norm_eps <= 0:
            raise ConfigError("manifest field norm_eps must be positive")

    @staticmethod
    def from_json(text: str) -> "ModelManifest":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"manifest is not valid JSON: {e}") from e
        missing = [f for f in MANIFEST_FIELDS if f not in raw]
        if missing:
            raise ConfigError(f"manifest missing fields: {', '.join(missing)}")
        try:
            activation = Activation(str(raw["activation"]).lower())
        except ValueError:
            raise ConfigError(
                f"manifest field activation must be one of silu/gelu, got {raw['activation']!r}"
            ) from None
        return ModelManifest(
            n_layers=int(raw["n_layers"]),
            hidden_dim=int(raw["hidden_dim"]),
            intermediate_dim=int(raw["intermediate_dim"]),
            n_heads=int(raw["n_heads"]),
            vocab_size=int(raw["vocab_size"]),
            activation=activation,
            norm_eps=float(raw["norm_eps"]),
            max_seq_len=int(raw["max_seq_len"]),
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_layers": self.n_layers,
                "hidden_dim": self.hidden_dim,
                "intermediate_dim": self.intermediate_dim,
                "n_heads": self.n_heads,
                "vocab_size": self.vocab_size,
                "activation": self.activation.value,
                "norm_eps": self.norm_eps,
                "max_seq_len": self.max_seq_len,
            },
            indent=2,
        )


def tensor_schema(m: ModelManifest) -> list[tuple[str, tuple[int, ...]]]:
    """The documented tensor-name schema, in canonical order."""
    h, d = m.hidden_dim, m.intermediate_dim
    names: list[tuple[str, tuple[int, ...]]] = [
        ("embed.tokens", (m.vocab_size, h)),
        ("embed.positions", (m.max_seq_len, h)),
    ]
    for i in range(m.n_layers):
        names += [
            (f"layers.{i}.attn_norm.weight", (h,)),
            (f"layers.{i}.attn.w_q", (h, h)),
            (f"layers.{i}.attn.w_k", (h, h)),
            (f"layers.{i}.attn.w_v", (h, h)),
            (f"layers.{i}.attn.w_o", (h, h)),
            (f"layers.{i}.ffn_norm.weight", (h,)),
            (f"layers.{i}.ffn.w_up", (d, h)),
            (f"layers.{i}.ffn.w_gate", (d, h)),
            (f"layers.{i}.ffn.w_down", (h, d)),
        ]
    names += [
        ("final_norm.weight", (h,)),
        ("output.weight", (m.vocab_size, h)),
    ]
    return names


def generate_weights(m: ModelManifest, seed: int) -> list[Tensor]:
    """Deterministic synthetic weights: normal(0, 1/fan_in) for projections,
    0.02-scale embeddings, all-ones norm weights."""
    tensors = []
    for name, dims in tensor_schema(m):
        if name.endswith("norm.weight"):
            tensors.append(Tensor(name=name, dims=dims, data=np.ones(dims[0], np.float32)))
        elif name.startswith("embed.") or name == "output.weight":
            tensors.append(seeded_tensor(derive_seed(seed, name), dims, 0.02, name=name))
        else:
            scale = 1.0 / np.sqrt(dims[1])
            tensors.append(seeded_tensor(derive_seed(seed, name), dims, scale, name=name))
    return tensors


def byte_tokenize(text: bytes) -> np.ndarray:
    return np.frombuffer(bytes(text), dtype=np.uint8).astype(np.int64)


def byte_detokenize(tokens) -> bytes:
    return bytes(int(t) for t in tokens)


@dataclass
class SparsityRecorder:
    """Accumulates induced sparsity per (layer, token) FFN evaluation."""

    n_layers: int
    sums: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.sums = np.zeros(self.n_layers, dtype=np.float64)
        self.counts = np.zeros(self.n_layers, dtype=np.int64)

    def record(self, layer: int, sparsity: float) -> None:
        self.sums[layer] += sparsity
        self.counts[layer] += 1

    def per_layer(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), 0.0)

    def average(self) -> float:
        return float(np.mean(self.per_layer())) if self.n_layers else 0.0


@dataclass(frozen=True)
class EvalReport:
    cross_entropy: float
    top1_accuracy: float
    avg_induced_sparsity: float
    per_layer_sparsity: np.ndarray
    tokens_evaluated: int


def _rmsnorm(x: np.ndarray, weight: np.ndarray, eps: float) -> np.ndarray:
    ms = np.mean(np.square(x), axis=-1, keepdims=True, dtype=np.float32)
    return (x / np.sqrt(ms + np.float32(eps))) * weight


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class TinyLM:
    def __init__(self, manifest: ModelManifest, tensors: list[Tensor]):
        self.manifest = manifest
        want = dict(tensor_schema(manifest))
        have = {t.name: t for t in tensors}
        missing = sorted(set(want) - set(have))
        if missing:
            raise ConfigError(f"model container missing tensors: {', '.join(missing[:5])}")
        self.weights: dict[str, np.ndarray] = {}
        for name, dims in want.items():
            t = have[name]
            if t.dims != dims:
                raise ConfigError(f"tensor {name!r} has dims {t.dims}, expected {dims}")
            self.weights[name] = np.ascontiguousarray(t.array)
        self.ffn_weights = [
            FfnWeights(
                w_up=self.weights[f"layers.{i}.ffn.w_up"],
                w_gate=self.weights[f"layers.{i}.ffn.w_gate"],
                w_down=self.weights[f"layers.{i}.ffn.w_down"],
                activation=manifest.activation,
            )
            for i in range(manifest.n_layers)
        ]

    @staticmethod
    def load(container_path, manifest_path) -> "TinyLM":
        with open(manifest_path, "r", encoding="utf-8") as f:
            manifest = ModelManifest.from_json(f.read())
        return TinyLM(manifest, load_container_file(container_path))

    def save(self, container_path, manifest_path) -> None:
        tensors = [
            Tensor(name=name, dims=dims, data=self.weights[name].reshape(-1))
            for name, dims in tensor_schema(self.manifest)
        ]
        save_container_file(tensors, container_path)
        with open(manifest_path, "w", encoding="utf-8") as f:
            f.write(self.manifest.to_json())

    def _attention(self, layer: int, x: np.ndarray) -> np.ndarray:
        m = self.manifest
        L = x.shape[0]
        hd = m.hidden_dim // m.n_heads
        w = self.weights
        q = x @ w[f"layers.{layer}.attn.w_q"].T
        k = x @ w[f"layers.{layer}.attn.w_k"].T
        v = x @ w[f"layers.{layer}.attn.w_v"].T
        # [heads, L, head_dim]
        q = q.reshape(L, m.n_heads, hd).transpose(1, 0, 2)
        k = k.reshape(L, m.n_heads, hd).transpose(1, 0, 2)
        v = v.reshape(L, m.n_heads, hd).transpose(1, 0, 2)
        scores = (q @ k.transpose(0, 2, 1)) * np.float32(1.0 / np.sqrt(hd))
        causal = np.triu(np.full((L, L), -np.inf, dtype=np.float32), k=1)
        attn = _softmax(scores + causal)
        out = (attn @ v).transpose(1, 0, 2).reshape(L, m.hidden_dim)
        return out @ w[f"layers.{layer}.attn.w_o"].T

    def forward_custom_ffn(self, tokens, ffn_apply) -> np.ndarray:
        """Forward pass delegating the FFN to ffn_apply(layer, t, vec) -> vec.

        The hook runs once per (layer, token position); everything else is
        the standard pre-norm stack.
        """
        m = self.manifest
        tokens = np.asarray(tokens, dtype=np.int64)
        if tokens.ndim != 1:
            raise InputError("tokens must be a 1-D sequence")
        L = tokens.shape[0]
        if L > m.max_seq_len:
            raise InputError(f"sequence length {L} exceeds max_seq_len {m.max_seq_len}")
        if L and (tokens.min() < 0 or tokens.max() >= m.vocab_size):
            raise InputError("token id out of range")
        w = self.weights
        x = w["embed.tokens"][tokens] + w["embed.positions"][:L]
        x = np.ascontiguousarray(x, dtype=np.float32)
        for layer in range(m.n_layers):
            x = x + self._attention(layer, _rmsnorm(x, w[f"layers.{layer}.attn_norm.weight"], m.norm_eps))
            pre = _rmsnorm(x, w[f"layers.{layer}.ffn_norm.weight"], m.norm_eps)
            ffn_out = np.empty_like(pre)
            for t in range(L):
                ffn_out[t] = ffn_apply(layer, t, pre[t])
            x = x + ffn_out
        x = _rmsnorm(x, w["final_norm.weight"], m.norm_eps)
        return x @ w["output.weight"].T

    def forward_logits(
        self,
        tokens,
        sparsify: tuple[ActivationSite, SparsifyRule] | None = None,
        recorder: SparsityRecorder | None = None,
    ) -> np.ndarray:
        if sparsify is None:

            def apply(layer, t, vec):
                return ffn_dense(vec, self.ffn_weights[layer])

        else:
            site, rule = sparsify

            def apply(layer, t, vec):
                y, trace = ffn_sparsified(vec, self.ffn_weights[layer], site, rule)
                if recorder is not None:
                    recorder.record(layer, trace.induced_sparsity)
                return y

        return self.forward_custom_ffn(tokens, apply)

    def eval_metrics(
        self,
        tokens,
        sparsify: tuple[ActivationSite, SparsifyRule] | None = None,
    ) -> EvalReport:
        """Teacher-forced next-token cross-entropy (nats) and greedy top-1
        accuracy. Long inputs are split into non-overlapping max_seq_len
        windows."""
        m = self.manifest
        tokens = np.asarray(tokens, dtype=np.int64)
        if tokens.shape[0] < 2:
            raise InputError("eval_metrics requires at least 2 tokens")
        recorder = SparsityRecorder(m.n_layers)
        nll_sum = 0.0
        hits = 0
        n_pred = 0
        for start in range(0, tokens.shape[0], m.max_seq_len):
            window = tokens[start : start + m.max_seq_len]
            if window.shape[0] < 2:
                break
            logits = self.forward_logits(window, sparsify=sparsify, recorder=recorder)
            targets = window[1:]
            pred_logits = logits[:-1].astype(np.float64)
            shifted = pred_logits - pred_logits.max(axis=-1, keepdims=True)
            logz = np.log(np.exp(shifted).sum(axis=-1))
            nll_sum += float(np.sum(logz - shifted[np.arange(targets.shape[0]), targets]))
            hits += int(np.sum(np.argmax(pred_logits, axis=-1) == targets))
            n_pred += targets.shape[0]
        per_layer = recorder.per_layer()
        return EvalReport(
            cross_entropy=nll_sum / n_pred,
            top1_accuracy=hits / n_pred,
            avg_induced_sparsity=recorder.average(),
            per_layer_sparsity=per_layer,
            tokens_evaluated=n_pred,
        )
