"""Point-process samplers for vehicle data extraction.

Three kinds are supported: homogeneous Poisson (exponential gaps),
non-homogeneous Poisson (thinning against a bound on the intensity) and
deterministic (constant gap ``1/rate``, the D in D/M/1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import UnboundedIntensityError, ValidationError
from .rng import make_rng

HOMOGENEOUS = "homogeneous-poisson"
NONHOMOGENEOUS = "nonhomogeneous-poisson"
DETERMINISTIC = "deterministic"
KINDS = (HOMOGENEOUS, NONHOMOGENEOUS, DETERMINISTIC)


@dataclass(frozen=True)
class ArrivalProcess:
    """Description of an arrival stream.

    For the non-homogeneous kind, ``intensity_fn`` maps time to rate. When
    ``intensity_bound`` is given it must dominate the intensity everywhere;
    otherwise the supremum is estimated on each lookahead window by a grid
    scan of ``bound_grid`` points (inflated by ``bound_margin``).
    """

    kind: str = HOMOGENEOUS
    rate: float = 1.0
    intensity_fn: Optional[Callable[[float], float]] = None
    intensity_bound: Optional[float] = None
    lookahead: float = 1.0
    seed: int = 0
    bound_grid: int = 65
    bound_margin: float = 1.05
    max_horizon: float = 1e12

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown arrival kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == NONHOMOGENEOUS:
            if self.intensity_fn is None:
                raise ValidationError("non-homogeneous process needs intensity_fn")
            if not self.lookahead > 0:
                raise ValidationError(f"lookahead must be positive, got {self.lookahead}")
            if self.intensity_bound is not None and not self.intensity_bound >= 0:
                raise ValidationError(f"intensity_bound must be >= 0, got {self.intensity_bound}")
        elif not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValidationError(f"rate must be positive and finite, got {self.rate}")

    def intensity(self, t: float) -> float:
        if self.kind != NONHOMOGENEOUS:
            return self.rate
        try:
            return float(self.intensity_fn(t))
        except (ZeroDivisionError, OverflowError) as exc:
            raise UnboundedIntensityError(f"intensity undefined at t={t}: {exc}") from exc


class ArrivalSampler:
    """Stateful sampler bound to one random stream; not shared between threads."""

    def __init__(self, proc: ArrivalProcess, rng: Optional[np.random.Generator] = None):
        self.proc = proc
        self.rng = rng if rng is not None else make_rng(proc.seed)

    def sample_interarrival(self, now: float = 0.0) -> float:
        """Gap from ``now`` to the next arrival."""
        if not now >= 0:
            raise ValidationError(f"now must be >= 0, got {now}")
        kind = self.proc.kind
        if kind == DETERMINISTIC:
            return 1.0 / self.proc.rate
        if kind == HOMOGENEOUS:
            return float(self.rng.exponential(1.0 / self.proc.rate))
        return self._thinning_gap(now)

    def _window_bound(self, t0: float, t1: float) -> float:
        if self.proc.intensity_bound is not None:
            return self.proc.intensity_bound
        grid = np.linspace(t0, t1, self.proc.bound_grid)
        values = np.array([self.proc.intensity(float(t)) for t in grid])
        if not np.all(np.isfinite(values)):
            raise UnboundedIntensityError(f"intensity is not finite on [{t0}, {t1}]")
        if np.any(values < 0):
            raise ValidationError(f"intensity is negative somewhere on [{t0}, {t1}]")
        return float(values.max()) * self.proc.bound_margin

    def _thinning_gap(self, now: float) -> float:
        t = now
        window_end = t + self.proc.lookahead
        bound = self._window_bound(t, window_end)
        while t - now < self.proc.max_horizon:
            if bound <= 0.0:
                t = window_end
            else:
                t += self.rng.exponential(1.0 / bound)
                if t <= window_end:
                    lam = self.proc.intensity(t)
                    if not math.isfinite(lam) or lam > bound * (1.0 + 1e-12):
                        raise UnboundedIntensityError(
                            f"intensity {lam} at t={t} exceeds the bound {bound}"
                        )
                    if self.rng.random() * bound < lam:
                        return t - now
                    continue
                t = window_end
            window_end = t + self.proc.lookahead
            bound = self._window_bound(t, window_end)
        raise UnboundedIntensityError(
            f"no arrival within max_horizon={self.proc.max_horizon} (intensity vanishes)"
        )

    def interarrivals(self, n: int) -> np.ndarray:
        """``n`` consecutive gaps starting at time zero."""
        kind = self.proc.kind
        if kind == DETERMINISTIC:
            return np.full(n, 1.0 / self.proc.rate)
        if kind == HOMOGENEOUS:
            return self.rng.exponential(1.0 / self.proc.rate, size=n)
        gaps = np.empty(n)
        t = 0.0
        for i in range(n):
            gaps[i] = self._thinning_gap(t)
            t += gaps[i]
        return gaps

    def arrival_times(self, n: int) -> np.ndarray:
        return np.cumsum(self.interarrivals(n))


def sample_interarrival(sampler: ArrivalSampler, now: float = 0.0) -> float:
    return sampler.sample_interarrival(now)


def count_measure(proc: ArrivalProcess, a: float, b: float) -> float:
    """Expected number of arrivals in [a, b): the integral of the intensity."""
    if not 0 <= a <= b:
        raise ValidationError(f"need 0 <= a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0
    if proc.kind != NONHOMOGENEOUS:
        return proc.rate * (b - a)
    # piecewise so oscillating intensities over long spans stay accurate
    pieces = min(max(1, math.ceil((b - a) / proc.lookahead)), 100_000)
    edges = np.linspace(a, b, pieces + 1)
    return math.fsum(
        integrate.quad(proc.intensity, float(lo), float(hi), limit=200)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    )
