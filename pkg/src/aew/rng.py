"""Counter-based random number streams for reproducible parallel Monte Carlo.

Every stochastic routine in this package draws from a substream addressed by
a tuple of integers or short labels, e.g. ``(seed, "em", block_index)``.
A substream is an independent Philox generator keyed by the whole address,
so any unit of work (a path block, a grid cell, an experiment cell) can be
computed on any thread, in any order, and still produce the same numbers.
Reductions are performed in address order, which makes final results
bit-identical for any worker count.

Uniform-to-normal conversion for the Gaussian proxy sampler goes through the
inverse CDF of strictly interior uniforms (k + 1/2) / 2^53, so no substream
can ever emit an infinite normal.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# Fixed work-partition sizes. These are part of the determinism contract:
# results depend on them, so they are constants, never tunables.
BLOCK_PATHS = 65536
ORACLE_BLOCK_PATHS = 8192

_TWO53 = float(1 << 53)


def _encode(part) -> int:
    """Map a substream address component to a nonnegative integer."""
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("substream address components must be nonnegative")
        return int(part)
    if isinstance(part, str):
        # Stable text hash; Python's hash() is salted per process.
        h = 2166136261
        for b in part.encode("utf-8"):
            h = ((h ^ b) * 16777619) & 0xFFFFFFFF
        return h
    raise TypeError(f"bad substream address component: {part!r}")


def substream(seed: int, *address) -> np.random.Generator:
    """Return the Philox generator for the given substream address.

    Args:
        seed: master seed (u64).
        *address: integers or short strings identifying the unit of work.

    Returns:
        An independent ``numpy.random.Generator``; same (seed, address)
        always yields the same generator state.
    """
    entropy = (int(seed),) + tuple(_encode(p) for p in address)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def interior_uniform(gen: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1), safe for inverse-CDF use."""
    k = gen.integers(0, 1 << 53, size=size, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) / _TWO53


def normal_inverse_cdf(gen: np.random.Generator, size) -> np.ndarray:
    """Standard normals via the inverse CDF of interior uniforms."""
    return ndtri(interior_uniform(gen, size))
