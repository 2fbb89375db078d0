"""Deterministic cross-platform random number generation.

The generator is a counter-based SplitMix64: output k of stream `seed` mixes
the 64-bit state ``seed + (k + 1) * GOLDEN_GAMMA`` (mod 2**64) through the
standard SplitMix64 finalizer. Normal variates come from the Box-Muller
transform applied to pairs of 53-bit uniforms. All arithmetic is integer or
float64, so results are bit-identical across platforms.

Constants (Steele, Lea & Flood's SplitMix64):
    GOLDEN_GAMMA = 0x9E3779B97F4A7C15
    MIX1         = 0xBF58476D1CE4E5B9
    MIX2         = 0x94D049BB133111EB
"""

import numpy as np

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)

_U53_SCALE = 2.0 ** -53


def _mix64(z: np.ndarray) -> np.ndarray:
    # uint64 wraparound is the point; silence numpy's overflow warning.
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
        return z ^ (z >> np.uint64(31))


def splitmix64(seed: int, count: int) -> np.ndarray:
    """Return `count` raw 64-bit outputs of stream `seed`."""
    with np.errstate(over="ignore"):
        counters = np.arange(1, count + 1, dtype=np.uint64)
        states = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + counters * GOLDEN_GAMMA
        return _mix64(states)


def uniforms(seed: int, count: int) -> np.ndarray:
    """Uniform float64 samples in (0, 1]."""
    bits = splitmix64(seed, count) >> np.uint64(11)
    return (bits.astype(np.float64) + 1.0) * _U53_SCALE


def normals(seed: int, count: int) -> np.ndarray:
    """Standard normal float64 samples via Box-Muller."""
    n_pairs = (count + 1) // 2
    u = uniforms(seed, 2 * n_pairs)
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * n_pairs, dtype=np.float64)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:count]


def derive_seed(seed: int, name: str) -> int:
    """Derive a per-tensor stream seed from a base seed and a tensor name.

    Uses FNV-1a over the UTF-8 name, mixed with the base seed so streams are
    independent of tensor enumeration order.
    """
    h = 0xCBF29CE484222325
    for b in name.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return int(_mix64(np.uint64((seed ^ h) & 0xFFFFFFFFFFFFFFFF)))
