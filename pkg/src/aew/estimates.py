"""Shared result containers for pricing routines."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class MethodInfo:
    """Descriptor of how a price was produced.

    Args:
        mode: short routine tag, e.g. "q_step", "chain_grid", "chain_mc", "em".
        m: expansion order, if applicable.
        n: number of time steps, if applicable.
        gamma: time-grid exponent, if applicable.
    """

    mode: str
    m: int | None = None
    n: int | None = None
    gamma: float | None = None


@dataclass(frozen=True)
class PriceEstimate:
    """A price with its statistical error and provenance.

    Args:
        value: the estimate.
        std_err: standard error; exactly 0 for deterministic quadrature.
        paths: Monte Carlo sample count; 0 for deterministic methods.
        seed: master seed used; 0 for deterministic methods.
        method: MethodInfo descriptor.
    """

    value: float
    std_err: float
    paths: int
    seed: int
    method: MethodInfo = field(default_factory=lambda: MethodInfo("unknown"))

    def __post_init__(self):
        if self.std_err < 0:
            raise ValueError("std_err must be nonnegative")
