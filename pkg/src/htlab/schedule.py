"""Revisit schedule for frequent universality and finite-window density proxies.

Stage k visits target ``stage_target(k) = 1 + v2(k)`` (v2 is the 2-adic
valuation) and lands on level ``stage_level(k)``, the running sum of the
stage targets.  Target m is therefore revisited at the levels of the stages
k with stage_target(k) = m.  Summing valuations gives the closed form
stage_level(k) = k + v2(k!) = 2k - popcount(k); :func:`stage_level_array`
computes the same thing as a running sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


def stage_target(k: int) -> int:
    if k < 1:
        raise ValueError("stage_target is defined for k >= 1")
    return (k & -k).bit_length()


def stage_level(k: int) -> int:
    if k < 1:
        raise ValueError("stage_level is defined for k >= 1")
    return 2 * k - bin(k).count("1")


def stage_target_array(horizon: int) -> np.ndarray:
    """stage_target(1..horizon) as int64; index 0 holds stage 1."""
    k = np.arange(1, horizon + 1, dtype=np.int64)
    low = k & -k
    # log2 of a power of two, exact for the int64 range
    return np.frexp(low.astype(np.float64))[1].astype(np.int64)


def stage_level_array(horizon: int) -> np.ndarray:
    return np.cumsum(stage_target_array(horizon))


def count_stage_target(n: int, m: int) -> int:
    """|{k <= 2^n : stage_target(k) = m}| by direct scan."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    return int(np.count_nonzero(stage_target_array(2 ** n) == m))


def stage_target_histogram(n: int) -> np.ndarray:
    """counts[m] = |{k <= 2^n : stage_target(k) = m}| for m = 0..n+1."""
    return np.bincount(stage_target_array(2 ** n), minlength=n + 2)


def hits_for(m: int, horizon: int) -> np.ndarray:
    """Levels of the stages k <= horizon that visit target m, sorted."""
    e = stage_target_array(horizon)
    return np.cumsum(e)[e == m]


@dataclass
class Schedule:
    horizon: int
    targets: np.ndarray = field(repr=False)
    levels: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, horizon: int) -> "Schedule":
        e = stage_target_array(horizon)
        return cls(horizon, e, np.cumsum(e))

    def hits(self, m: int) -> np.ndarray:
        return self.levels[self.targets == m]

    def identity_failures(self) -> list[str]:
        """Violations of stage_level(2^n) = 2^{n+1} - 1 and count_stage_target(n, m) = 2^{n-m} within the horizon."""
        out = []
        n = 0
        while 2 ** n <= self.horizon:
            if int(self.levels[2 ** n - 1]) != 2 ** (n + 1) - 1:
                out.append(f"stage_level(2^{n}) = {int(self.levels[2 ** n - 1])}, expected {2 ** (n + 1) - 1}")
            if n >= 1:
                counts = np.bincount(self.targets[: 2 ** n], minlength=n + 2)
                for m in range(1, n + 1):
                    if int(counts[m]) != 2 ** (n - m):
                        out.append(f"count_stage_target({n},{m}) = {int(counts[m])}, expected {2 ** (n - m)}")
            n += 1
        return out


@dataclass
class DensityReport:
    description: str
    window: int
    hits: int
    lower: float
    upper: float
    mode: str = "lower"

    @property
    def proxy(self) -> float:
        return self.lower if self.mode == "lower" else self.upper

    def to_json(self) -> dict:
        return {"set": self.description, "window": [0, self.window], "hits": self.hits,
                "lower_proxy": self.lower, "upper_proxy": self.upper, "mode": self.mode}


def _counts(S: Iterable[int], W: int) -> np.ndarray:
    s = np.fromiter((x for x in S), dtype=np.int64) if not isinstance(S, np.ndarray) else S.astype(np.int64)
    s = s[(s >= 0) & (s <= W)]
    member = np.zeros(W + 1, dtype=np.int64)
    member[np.unique(s)] = 1
    return np.cumsum(member)


def density(S: Iterable[int], W: int, mode: str = "lower", description: str = "") -> DensityReport:
    """Tail-window density proxy of S.

    The ratio |S ∩ [0, N]| / (N + 1) is evaluated for every N in [ceil(W/2), W];
    the lower proxy is its minimum there, the upper proxy its maximum.  These
    are finite-horizon evidence for liminf / limsup, not the limits themselves.
    """
    if W < 2:
        raise ValueError("window must be at least 2")
    if mode not in ("lower", "upper"):
        raise ValueError(f"mode must be 'lower' or 'upper', got {mode!r}")
    cum = _counts(S, W)
    lo = (W + 1) // 2
    N = np.arange(lo, W + 1)
    ratio = cum[lo:] / (N + 1)
    return DensityReport(description, W, int(cum[-1]), float(ratio.min()), float(ratio.max()), mode)


def density_series(S: Iterable[int], W: int, points: int = 1024) -> list[tuple[int, int, float]]:
    """(N, |S ∩ [0, N]|, ratio) at up to ``points`` evenly spaced N in [1, W]."""
    cum = _counts(S, W)
    Ns = np.unique(np.linspace(1, W, num=min(points, W), dtype=np.int64))
    return [(int(n), int(cum[n]), float(cum[n] / (n + 1))) for n in Ns]
