"""Discrete-event Monte-Carlo oracle for the average AoI.

One tagged vehicle feeds a FCFS single-server queue with an infinite buffer.
A packet occupies the head of the queue until a transmission attempt
succeeds; every attempt takes a fresh exponential(mu) service draw. The age
process is the usual sawtooth, integrated exactly between deliveries.

Two transmission fidelities:

``geometric-retry``
    Attempt count per packet ~ Geometric((1 - p_c)(1 - p_d)), independent of
    everything else. Fully vectorized.
``markov-channel``
    A slotted two-state chain (stay probabilities P_p, P_i, slot length tau_t)
    gates each attempt: the frame fails with probability v_L in the poor
    state and l_L in the ideal state. The other M-1 vehicles form a Poisson
    interferer stream of rate (M-1)*lambda; an attempt collides when an
    interferer event lies within tau_c of its start.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .analytics import DM1, TrafficConfig, collision_exponent
from .arrivals import DETERMINISTIC, HOMOGENEOUS, ArrivalProcess, ArrivalSampler
from .channel import ChannelConfig, derive_channel, stationary_distribution
from .errors import DivergenceError, NoDeliveryError, ValidationError
from .rng import make_rng

GEOMETRIC_RETRY = "geometric-retry"
MARKOV_CHANNEL = "markov-channel"
FIDELITIES = (GEOMETRIC_RETRY, MARKOV_CHANNEL)

# substream indices under (seed, replication)
_ARRIVAL_STREAM = 0
_SERVICE_STREAM = 1
_CHANNEL_STREAM = 2
_INTERFERER_STREAM = 3


@dataclass(frozen=True)
class MarkovChannel:
    """Direct two-state channel parameters, bypassing the physical derivation."""

    stay_poor: float
    stay_ideal: float
    fail_prob_poor: float = 1.0
    fail_prob_ideal: float = 0.0

    def __post_init__(self):
        stationary_distribution(self.stay_poor, self.stay_ideal)
        for name in ("fail_prob_poor", "fail_prob_ideal"):
            p = getattr(self, name)
            if not 0 <= p <= 1:
                raise ValidationError(f"{name} must lie in [0, 1], got {p}")

    @property
    def pi_poor(self) -> float:
        return stationary_distribution(self.stay_poor, self.stay_ideal)[0]


@dataclass(frozen=True)
class SimConfig:
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    channel: Union[ChannelConfig, MarkovChannel, None] = None
    fidelity: str = GEOMETRIC_RETRY
    horizon: int = 100_000
    warmup: Optional[int] = None
    replications: int = 10
    seed: int = 0
    queue_guard: int = 10_000
    slot_interval: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        if self.fidelity not in FIDELITIES:
            raise ValidationError(f"fidelity must be one of {FIDELITIES}, got {self.fidelity!r}")
        if self.warmup is None:
            object.__setattr__(self, "warmup", self.horizon // 10)
        if not 0 <= self.warmup < self.horizon:
            raise ValidationError(
                f"need horizon > warmup >= 0, got horizon={self.horizon}, warmup={self.warmup}"
            )
        if self.horizon - self.warmup < 2:
            raise ValidationError("need at least two deliveries after warmup")
        if self.replications < 1:
            raise ValidationError(f"replications must be >= 1, got {self.replications}")
        if self.queue_guard < 1:
            raise ValidationError(f"queue_guard must be >= 1, got {self.queue_guard}")
        if self.fidelity == MARKOV_CHANNEL:
            if self.channel is None:
                raise ValidationError("markov-channel fidelity needs a channel")
            if not self.resolved_slot() > 0:
                raise ValidationError("markov-channel fidelity needs a positive slot length")
            ch = self.markov()
            if ch.fail_prob_poor == 1 and ch.fail_prob_ideal == 1:
                raise NoDeliveryError("v_L = l_L = 1: every frame fails")
        if self.fidelity == GEOMETRIC_RETRY and self.traffic.drop_prob >= 1:
            raise NoDeliveryError("drop_prob = 1: every transmission fails")

    def resolved_slot(self) -> float:
        if self.slot_interval is not None:
            return self.slot_interval
        if isinstance(self.channel, ChannelConfig):
            return self.channel.slot_interval
        return self.traffic.slot_interval

    def markov(self) -> MarkovChannel:
        if isinstance(self.channel, MarkovChannel):
            return self.channel
        d = derive_channel(self.channel)
        return MarkovChannel(
            d.stay_poor, d.stay_ideal, self.channel.fail_prob_poor, self.channel.fail_prob_ideal
        )


@dataclass(frozen=True)
class ReplicationResult:
    index: int
    empirical_aoi: float
    mean_wait: float
    mean_system_time: float
    mean_attempts: float
    mean_interarrival: float
    channel_poor_fraction: Optional[float]
    delivered: int
    elapsed: float
    age_area: float


@dataclass(frozen=True)
class SimResult:
    empirical_aoi: float
    aoi_stderr: float
    mean_wait: float
    mean_system_time: float
    mean_attempts: float
    mean_interarrival: float
    channel_poor_fraction: Optional[float]
    channel_poor_stderr: Optional[float]
    delivered: int
    per_replication: list

    def to_dict(self) -> dict:
        return asdict(self)


def _arrival_times(traffic: TrafficConfig, n: int, rng) -> np.ndarray:
    kind = DETERMINISTIC if traffic.discipline == DM1 else HOMOGENEOUS
    proc = ArrivalProcess(kind=kind, rate=traffic.arrival_rate)
    return ArrivalSampler(proc, rng).arrival_times(n)


def _departures_geometric(cfg: SimConfig, a: np.ndarray, rng):
    traffic = cfg.traffic
    p_c = -math.expm1(-collision_exponent(traffic))
    success = (1.0 - p_c) * (1.0 - traffic.drop_prob)
    n = len(a)
    attempts = rng.geometric(success, n) if success < 1.0 else np.ones(n, dtype=np.int64)
    service = rng.gamma(attempts.astype(float), 1.0 / traffic.service_rate)
    # Lindley recursion in closed form: d_i = C_i + max_{j<=i}(a_j - C_{j-1})
    cum = np.cumsum(service)
    d = cum + np.maximum.accumulate(a - (cum - service))
    return d, service, attempts, None


class _TwoStateChain:
    """Slotted Markov chain sampled lazily at non-decreasing slot indices."""

    def __init__(self, ch: MarkovChannel, rng):
        self.rng = rng
        self.pi_poor = ch.pi_poor
        self.lam2 = ch.stay_poor + ch.stay_ideal - 1.0
        self.slot = 0
        self.poor = bool(rng.random() < self.pi_poor)

    def state_at(self, slot: int) -> bool:
        n = slot - self.slot
        if n > 0:
            decay = self.lam2 ** n if n < 100_000 else 0.0
            if self.poor:
                p_poor = self.pi_poor + (1.0 - self.pi_poor) * decay
            else:
                p_poor = self.pi_poor * (1.0 - decay)
            self.poor = bool(self.rng.random() < p_poor)
            self.slot = slot
        return self.poor


class _Interferers:
    """Poisson event stream generated on demand in chunks."""

    def __init__(self, rate: float, rng, chunk: int = 4096):
        self.rate = rate
        self.rng = rng
        self.chunk = chunk
        self.times = np.empty(0)
        self.covered = 0.0

    def any_within(self, t: float, window: float) -> bool:
        if self.rate <= 0 or window <= 0:
            return False
        while self.covered < t + window:
            gaps = self.rng.exponential(1.0 / self.rate, self.chunk)
            new = self.covered + np.cumsum(gaps)
            self.times = np.concatenate([self.times[self.times >= t - window], new])
            self.covered = float(new[-1])
        idx = int(np.searchsorted(self.times, t - window, side="left"))
        return idx < len(self.times) and self.times[idx] <= t + window


def _departures_markov(cfg: SimConfig, a: np.ndarray, rng_service, rng_channel, rng_interf):
    traffic = cfg.traffic
    ch = cfg.markov()
    slot = cfg.resolved_slot()
    tau_c = traffic.collision_window
    chain = _TwoStateChain(ch, rng_channel)
    interferers = _Interferers((traffic.fleet_size - 1) * traffic.arrival_rate, rng_interf)
    scale = 1.0 / traffic.service_rate

    n = len(a)
    d = np.empty(n)
    service = np.empty(n)
    attempts = np.empty(n, dtype=np.int64)
    poor_at_arrival = np.empty(n, dtype=bool)
    probe = 0  # next arrival whose channel state is still unobserved
    prev = 0.0
    for i in range(n):
        start = max(a[i], prev)
        t = start
        k = 0
        while True:
            slot_idx = int(t // slot)
            while probe < n and a[probe] <= t:
                poor_at_arrival[probe] = chain.state_at(int(a[probe] // slot))
                probe += 1
            poor = chain.state_at(slot_idx)
            fail = ch.fail_prob_poor if poor else ch.fail_prob_ideal
            frame_lost = rng_service.random() < fail
            collided = interferers.any_within(t, tau_c)
            t += rng_service.exponential(scale)
            k += 1
            if not (frame_lost or collided):
                break
        d[i] = prev = t
        service[i] = t - start
        attempts[i] = k
    while probe < n:
        poor_at_arrival[probe] = chain.state_at(int(a[probe] // slot))
        probe += 1
    return d, service, attempts, poor_at_arrival


def _simulate(cfg: SimConfig, rep: int):
    traffic = cfg.traffic
    n = cfg.horizon
    a = _arrival_times(traffic, n, make_rng(cfg.seed, rep, _ARRIVAL_STREAM))
    rng_service = make_rng(cfg.seed, rep, _SERVICE_STREAM)
    if cfg.fidelity == GEOMETRIC_RETRY:
        d, service, attempts, poor = _departures_geometric(cfg, a, rng_service)
    else:
        d, service, attempts, poor = _departures_markov(
            cfg,
            a,
            rng_service,
            make_rng(cfg.seed, rep, _CHANNEL_STREAM),
            make_rng(cfg.seed, rep, _INTERFERER_STREAM),
        )
    in_system = np.arange(n) - np.searchsorted(d, a, side="right")
    peak = int(in_system.max())
    if peak > cfg.queue_guard:
        raise DivergenceError(
            f"queue length reached {peak} > guard {cfg.queue_guard}; "
            "the effective load is too high for a steady state"
        )
    return a, d, service, attempts, poor


def _age_area(a: np.ndarray, d: np.ndarray, w: int) -> tuple[float, float]:
    """Exact area under the sawtooth between deliveries w and n-1, and its span."""
    dd = np.diff(d[w:])
    # age rises from d_{i-1} - a_{i-1} to d_i - a_{i-1} over [d_{i-1}, d_i]
    area = dd * ((d[w:-1] - a[w:-1]) + 0.5 * dd)
    return float(np.sum(area)), float(d[-1] - d[w])


def run_replication(cfg: SimConfig, rep: int) -> ReplicationResult:
    a, d, service, attempts, poor = _simulate(cfg, rep)
    w = cfg.warmup
    area, elapsed = _age_area(a, d, w)
    system = d[w:] - a[w:]
    wait = system - service[w:]
    return ReplicationResult(
        index=rep,
        empirical_aoi=area / elapsed,
        mean_wait=float(np.mean(wait)),
        mean_system_time=float(np.mean(system)),
        mean_attempts=float(np.mean(attempts[w:])),
        mean_interarrival=float(np.mean(np.diff(a[w:]))),
        channel_poor_fraction=None if poor is None else float(np.mean(poor[w:])),
        delivered=len(system),
        elapsed=elapsed,
        age_area=area,
    )


def _stderr(values) -> float:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def run(cfg: SimConfig) -> SimResult:
    """Run all replications and aggregate; identical seeds give identical results."""
    reps = range(cfg.replications)
    if cfg.workers > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run_replication, [cfg] * cfg.replications, reps))
    else:
        results = [run_replication(cfg, r) for r in reps]
    results.sort(key=lambda r: r.index)

    aoi = [r.empirical_aoi for r in results]
    poor = [r.channel_poor_fraction for r in results]
    has_channel = poor[0] is not None
    return SimResult(
        empirical_aoi=float(np.mean(aoi)),
        aoi_stderr=_stderr(aoi),
        mean_wait=float(np.mean([r.mean_wait for r in results])),
        mean_system_time=float(np.mean([r.mean_system_time for r in results])),
        mean_attempts=float(np.mean([r.mean_attempts for r in results])),
        mean_interarrival=float(np.mean([r.mean_interarrival for r in results])),
        channel_poor_fraction=float(np.mean(poor)) if has_channel else None,
        channel_poor_stderr=_stderr(poor) if has_channel else None,
        delivered=sum(r.delivered for r in results),
        per_replication=[asdict(r) for r in results],
    )


@dataclass(frozen=True)
class AgeTrace:
    """Piecewise-linear age trajectory of replication 0 after warmup.

    ``points`` has columns (time, age). Each delivery contributes two points
    at the same time (age just before and just after the reset).
    """

    points: np.ndarray
    integral: float
    exact_integral: float
    error_bound: float
    elapsed: float
    empirical_aoi: float


def _full_trace(a, d, w):
    m = len(d) - w - 1
    t = np.empty(1 + 2 * m)
    age = np.empty(1 + 2 * m)
    t[0], age[0] = d[w], d[w] - a[w]
    t[1::2] = d[w + 1:]
    age[1::2] = d[w + 1:] - a[w:-1]
    t[2::2] = d[w + 1:]
    age[2::2] = d[w + 1:] - a[w + 1:]
    return t, age


def _trapezoid(t, age) -> float:
    return float(np.sum(np.diff(t) * (age[1:] + age[:-1]) * 0.5))


def age_trace(cfg: SimConfig, max_points: int = 10_000) -> AgeTrace:
    """Sawtooth trajectory of the first replication, decimated to ``max_points``.

    Decimation keeps evenly spaced deliveries, always including the last one. ``error_bound`` bounds
    ``|integral - exact_integral|``: on each span between kept points both
    the true age and its chord stay within the span's age range.
    """
    if max_points < 3:
        raise ValidationError(f"max_points must be >= 3, got {max_points}")
    a, d, _, _, _ = _simulate(cfg, 0)
    w = cfg.warmup
    exact, elapsed = _age_area(a, d, w)
    t, age = _full_trace(a, d, w)
    if len(t) <= max_points:
        keep = np.arange(len(t))
    else:
        deliveries = (len(t) - 1) // 2
        budget = (max_points - 1) // 2
        kept = np.unique(np.linspace(0, deliveries - 1, budget).round().astype(np.int64))
        keep = np.concatenate([[0], np.sort(np.concatenate([1 + 2 * kept, 2 + 2 * kept]))])
    tk, ak = t[keep], age[keep]
    integral = _trapezoid(tk, ak)
    if len(keep) == len(t):
        bound = 0.0
    else:
        # reduceat segments are half-open; fold in each span's right endpoint
        hi = np.maximum(np.maximum.reduceat(age, keep)[:-1], ak[1:])
        lo = np.minimum(np.minimum.reduceat(age, keep)[:-1], ak[1:])
        bound = float(np.sum(np.diff(tk) * (hi - lo)))
    return AgeTrace(
        points=np.column_stack([tk, ak]),
        integral=integral,
        exact_integral=exact,
        error_bound=bound,
        elapsed=elapsed,
        empirical_aoi=exact / elapsed,
    )
