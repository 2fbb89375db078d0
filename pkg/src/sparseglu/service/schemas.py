"""Pydantic request/response models for the HTTP service."""

from typing import Literal, Optional

from pydantic import BaseModel, Field

SiteName = Literal["input", "up", "gate", "intermediate"]
RuleName = Literal["top_p", "top_k", "max_p"]
ModeName = Literal["value_based", "oracle_predictor"]


class RuleSpec(BaseModel):
    kind: RuleName
    p: Optional[float] = None
    k: Optional[int] = None


class SparsifyRequest(BaseModel):
    values: list[float]
    rule: RuleSpec


class SparsifyResponse(BaseModel):
    keep: list[int]
    kept_indices: list[int]
    induced_sparsity: float


class FlopsRequest(BaseModel):
    h: int
    d: int
    site: SiteName
    mode: ModeName = "value_based"
    sparsity: float = Field(ge=0.0, le=1.0)


class FlopsResponse(BaseModel):
    h: int
    d: int
    site: SiteName
    mode: ModeName
    sparsity: float
    macs: float
    dense_macs: float
    saving: float
    elementwise_ops: float
    activation_ops: float
    weight_bytes: float
    dense_weight_bytes: float


class ManifestSpec(BaseModel):
    n_layers: int
    hidden_dim: int
    intermediate_dim: int
    n_heads: int
    vocab_size: int
    activation: Literal["silu", "gelu"]
    norm_eps: float
    max_seq_len: int


class ForwardRequest(BaseModel):
    container_b64: str
    manifest: ManifestSpec
    tokens: list[int]
    site: Optional[SiteName] = None
    rule: Optional[RuleSpec] = None


class ForwardResponse(BaseModel):
    logits: list[list[float]]
    avg_induced_sparsity: Optional[float] = None


class PointSpec(BaseModel):
    p: float
    induced_sparsity: float
    raw_metric: float
    normalized_metric: float


class CriticalRequest(BaseModel):
    points: list[PointSpec]
    dense_metric: float = 1.0
    retention: float = 0.99
    site: SiteName = "intermediate"
    rule: RuleName = "top_p"


class CriticalResponse(BaseModel):
    value: float
    retention_threshold: float
    source_induced_sparsity: float
    source_normalized_metric: float


class KdeRequest(BaseModel):
    values: list[float]
    grid_points: int = 256
    bandwidth: Optional[float] = None


class KdeResponse(BaseModel):
    bandwidth: float
    grid: list[float]
    density: list[float]


class TrendRequest(BaseModel):
    parameter_counts: list[float]
    critical_sparsities: list[float]


class TrendResponse(BaseModel):
    slope: float
    intercept: float
    rss: float
    n: int
