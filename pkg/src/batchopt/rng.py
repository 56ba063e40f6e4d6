"""Counter-based random streams for reproducible simulation.

Every draw is a pure function of (seed, stream label, key), so adding or
removing consumers of one stream never shifts the draws of another.  This
is what keeps arrival times identical across candidate policies during a
search: duration and branching draws are keyed by case/activity/visit, not
by global consumption order.
"""

from __future__ import annotations

import math
from hashlib import blake2b
from statistics import NormalDist

_U64 = 2**64


def _mix(seed: int, key: tuple) -> int:
    h = blake2b(digest_size=8, key=(seed % _U64).to_bytes(8, "little"))
    for part in key:
        h.update(repr(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def unit(seed: int, *key) -> float:
    """Uniform draw in [0, 1) fully determined by (seed, *key)."""
    return _mix(seed, key) / _U64


def derive_seed(seed: int, *key) -> int:
    """A child seed for an independent named stream."""
    return _mix(seed, key)


class Stream:
    """Sequential uniform stream with an internal counter.

    Used where draws are consumed in a naturally deterministic order
    (e.g. generating the arrival sequence).  Keyed draws via `unit` are
    preferred wherever consumption order depends on the policy.
    """

    def __init__(self, seed: int, label: str):
        self._seed = derive_seed(seed, "stream", label)
        self._counter = 0

    def next_unit(self) -> float:
        u = unit(self._seed, self._counter)
        self._counter += 1
        return u


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves away from zero toward +inf."""
    return math.floor(x + 0.5)


def exponential(u: float, mean: float) -> float:
    return -mean * math.log1p(-u) if mean > 0 else 0.0


def uniform(u: float, low: float, high: float) -> float:
    return low + u * (high - low)


def normal_truncated(u: float, mean: float, stddev: float) -> float:
    """Normal(mean, stddev) conditioned on being >= 0 (exact truncation)."""
    if stddev <= 0:
        return max(0.0, mean)
    dist = NormalDist(mean, stddev)
    lo = dist.cdf(0.0)
    # map u into the surviving tail; clamp away from the inv_cdf poles
    p = min(max(lo + u * (1.0 - lo), 1e-15), 1.0 - 1e-15)
    return max(0.0, dist.inv_cdf(p))
