"""Dense float32 tensors and deterministic matrix-vector kernels.

All weights are stored row-major in [out_dim x in_dim] orientation, so every
projection is y = W @ x. Kernels accumulate in float32 with a fixed
ascending-index order; this is what makes the compute-skipping kernels in
`ffn` bitwise-exact against dense references, so nothing here may be swapped
for BLAS (which does not pin an accumulation order).
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import InputError, ShapeError
from .rng import normals


@dataclass(frozen=True)
class Tensor:
    name: str
    dims: tuple[int, ...]
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if any(d <= 0 for d in self.dims):
            raise InputError(f"tensor {self.name!r}: dims must be positive, got {self.dims}")
        if self.data.dtype != np.float32:
            raise InputError(f"tensor {self.name!r}: data must be float32")
        n = int(np.prod(self.dims))
        if self.data.size != n:
            raise ShapeError(
                f"tensor {self.name!r}: {self.data.size} elements, dims {self.dims} need {n}"
            )
        if not np.all(np.isfinite(self.data)):
            raise InputError(f"tensor {self.name!r}: non-finite elements")

    @property
    def array(self) -> np.ndarray:
        return self.data.reshape(self.dims)


def _as_f32_matrix(W) -> np.ndarray:
    W = np.ascontiguousarray(W, dtype=np.float32)
    if W.ndim != 2:
        raise ShapeError(f"expected a matrix, got ndim={W.ndim}")
    return W


def _as_f32_vector(x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float32)
    if x.ndim != 1:
        raise ShapeError(f"expected a vector, got ndim={x.ndim}")
    return x


@njit(cache=True, nogil=True)
def _gemv_kernel(W, x):
    out = np.empty(W.shape[0], dtype=np.float32)
    for i in range(W.shape[0]):
        acc = np.float32(0.0)
        for j in range(W.shape[1]):
            acc += W[i, j] * x[j]
        out[i] = acc
    return out


def gemv(W, x) -> np.ndarray:
    """y = W @ x in float32 with ascending-j accumulation."""
    W = _as_f32_matrix(W)
    x = _as_f32_vector(x)
    if W.shape[1] != x.shape[0]:
        raise ShapeError(f"gemv: W is {W.shape}, x has length {x.shape[0]}")
    return _gemv_kernel(W, x)


def seeded_tensor(seed: int, dims, scale: float, name: str = "") -> Tensor:
    """Deterministic normal(0, scale^2) tensor; see `rng` for the generator."""
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise InputError("seeded_tensor: dims must be nonempty")
    n = int(np.prod(dims))
    data = (normals(seed, n) * scale).astype(np.float32)
    return Tensor(name=name, dims=dims, data=data)
