"""Closed-form average AoI for M/M/1 and D/M/1 update queues.

Both models share a multiplicative penalty on the queueing term,

    penalty = exp(collision_exponent) / (1 - p_d) = 1 / ((1 - p_c)(1 - p_d)),

which accounts for retransmissions caused by collisions among the M
vehicles attached to a base station and by channel drops.

"utilization" always means lambda/mu in this module. The fading correlation
of the channel model lives in :mod:`aoi_v2i.channel` under its own name.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Optional

from .errors import InstabilityError, NumericalError, TotalLossError, ValidationError
from .numerics import lambert_w0

MM1 = "MM1"
DM1 = "DM1"
DISCIPLINES = (MM1, DM1)

PAPER_LITERAL = "paper-literal"
ARRIVAL_RATE = "arrival-rate"
EXPONENT_MODES = (PAPER_LITERAL, ARRIVAL_RATE)

# LTE Cat-M1 guidance: keep consecutive transmissions 3 slots apart.
COLLISION_SLOTS = 3


def normalize_discipline(name: str) -> str:
    key = str(name).strip().upper().replace("/", "")
    if key not in DISCIPLINES:
        raise ValidationError(f"unknown discipline {name!r}; expected MM1 or DM1")
    return key


@dataclass(frozen=True)
class TrafficConfig:
    """Queueing side of the model.

    ``collision_window`` defaults to ``3 * slot_interval`` when left as None.
    """

    service_rate: float = 1.0
    utilization: float = 0.5
    fleet_size: int = 1
    station_count: int = 1
    slot_interval: float = 1e-3
    collision_window: Optional[float] = None
    drop_prob: float = 0.0
    discipline: str = MM1
    collision_exponent_mode: str = PAPER_LITERAL

    def __post_init__(self):
        object.__setattr__(self, "discipline", normalize_discipline(self.discipline))
        if self.collision_exponent_mode not in EXPONENT_MODES:
            raise ValidationError(
                f"collision_exponent_mode must be one of {EXPONENT_MODES}, "
                f"got {self.collision_exponent_mode!r}"
            )
        if not (self.service_rate > 0 and math.isfinite(self.service_rate)):
            raise ValidationError(f"service_rate must be positive, got {self.service_rate}")
        if not (math.isfinite(self.utilization) and self.utilization > 0):
            raise ValidationError(f"utilization must be positive, got {self.utilization}")
        if self.utilization >= 1:
            raise InstabilityError(
                f"utilization {self.utilization} >= 1: the queue is unstable"
            )
        for name in ("fleet_size", "station_count"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValidationError(f"{name} must be an integer >= 1, got {value}")
            object.__setattr__(self, name, int(value))
        if not self.slot_interval >= 0:
            raise ValidationError(f"slot_interval must be >= 0, got {self.slot_interval}")
        if self.collision_window is None:
            object.__setattr__(self, "collision_window", COLLISION_SLOTS * self.slot_interval)
        if not (self.collision_window >= 0 and math.isfinite(self.collision_window)):
            raise ValidationError(f"collision_window must be >= 0, got {self.collision_window}")
        if self.drop_prob == 1:
            raise TotalLossError("drop_prob = 1: every transmission is lost")
        if not 0 <= self.drop_prob < 1:
            raise ValidationError(f"drop_prob must lie in [0, 1), got {self.drop_prob}")

    @property
    def arrival_rate(self) -> float:
        return self.utilization * self.service_rate

    @property
    def deterministic_gap(self) -> float:
        return 1.0 / self.arrival_rate

    def with_(self, **changes) -> "TrafficConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AoiReport:
    average_aoi: float
    collision_prob: float
    drop_prob: float
    penalty_factor: float
    beta: Optional[float]
    term_breakdown: dict = field(default_factory=dict)
    discipline: str = MM1
    utilization: float = float("nan")
    service_rate: float = float("nan")
    arrival_rate: float = float("nan")
    fleet_size: int = 1
    station_count: int = 1
    slot_interval: float = 0.0
    collision_window: float = 0.0
    collision_exponent_mode: str = PAPER_LITERAL

    def to_dict(self) -> dict:
        """Flat mapping; each breakdown term appears as ``term_<name>``."""
        out = asdict(self)
        terms = out.pop("term_breakdown")
        for name, value in terms.items():
            out[f"term_{name}"] = value
        return out


class Moments(NamedTuple):
    mean_interarrival: float
    second_moment_interarrival: float
    mean_service: float
    utilization: float


def moment_identities(arrival_rate: float, service_rate: float) -> Moments:
    if not (arrival_rate > 0 and service_rate > 0):
        raise ValidationError("rates must be positive")
    return Moments(
        1.0 / arrival_rate,
        2.0 / arrival_rate ** 2,
        1.0 / service_rate,
        arrival_rate / service_rate,
    )


def collision_probability(arrival_rate: float, fleet_size: int, collision_window: float) -> float:
    """Probability that a transmission overlaps another vehicle's within the window."""
    if not arrival_rate > 0:
        raise ValidationError(f"arrival_rate must be positive, got {arrival_rate}")
    if fleet_size < 1:
        raise ValidationError(f"fleet_size must be >= 1, got {fleet_size}")
    if not collision_window >= 0:
        raise ValidationError(f"collision_window must be >= 0, got {collision_window}")
    return -math.expm1(-arrival_rate * fleet_size * (fleet_size - 1) * collision_window / 2.0)


def collision_exponent(cfg: TrafficConfig) -> float:
    """Exponent x of the collision factor e^x.

    M/M/1 always uses the arrival rate. D/M/1 in paper-literal mode uses the
    deterministic gap D = 1/lambda in its place, as the printed D/M/1
    expression does.
    """
    pairs = cfg.fleet_size * (cfg.fleet_size - 1) * cfg.collision_window / 2.0
    if cfg.discipline == DM1 and cfg.collision_exponent_mode == PAPER_LITERAL:
        return cfg.deterministic_gap * pairs
    return cfg.arrival_rate * pairs


def penalty_factor(cfg: TrafficConfig) -> float:
    exponent = collision_exponent(cfg)
    try:
        factor = math.exp(exponent) / (1.0 - cfg.drop_prob)
    except OverflowError:
        factor = math.inf
    if not math.isfinite(factor):
        raise NumericalError(f"penalty factor overflows (collision exponent {exponent:.4g})")
    return factor


def conditional_wait(x: float, cfg: TrafficConfig) -> float:
    """Expected waiting time of an update given the preceding interarrival gap x."""
    if not x >= 0:
        raise ValidationError(f"x must be >= 0, got {x}")
    decay = cfg.service_rate * (1.0 - cfg.utilization)
    return math.exp(-decay * x) / decay * penalty_factor(cfg)


def wait_gap_moment(cfg: TrafficConfig) -> float:
    """E[W X]: closed form of the integral of x * E[W | X=x] against the gap density."""
    mu, rho = cfg.service_rate, cfg.utilization
    return rho / (mu * mu * (1.0 - rho)) * penalty_factor(cfg)


def _report(cfg, terms, penalty, beta=None):
    return AoiReport(
        average_aoi=math.fsum(terms.values()),
        collision_prob=-math.expm1(-collision_exponent(cfg)),
        drop_prob=cfg.drop_prob,
        penalty_factor=penalty,
        beta=beta,
        term_breakdown=terms,
        discipline=cfg.discipline,
        utilization=cfg.utilization,
        service_rate=cfg.service_rate,
        arrival_rate=cfg.arrival_rate,
        fleet_size=cfg.fleet_size,
        station_count=cfg.station_count,
        slot_interval=cfg.slot_interval,
        collision_window=cfg.collision_window,
        collision_exponent_mode=cfg.collision_exponent_mode,
    )


def aoi_mm1(cfg: TrafficConfig) -> AoiReport:
    """Average AoI of the M/M/1 update queue over the error-prone channel."""
    if cfg.discipline != MM1:
        raise ValidationError(f"aoi_mm1 called with discipline {cfg.discipline}")
    mu, rho = cfg.service_rate, cfg.utilization
    penalty = penalty_factor(cfg)
    terms = {
        "service": 1.0 / mu,
        "sampling": 1.0 / (rho * mu),
        "queueing": rho * rho / (1.0 - rho) * penalty / mu,
    }
    return _report(cfg, terms, penalty)


def dm1_beta(utilization: float) -> float:
    """Root in (0, 1) of beta = exp(-(1 - beta)/rho), via the principal Lambert W branch."""
    rho = float(utilization)
    if not 0 < rho < 1:
        raise ValidationError(f"utilization must lie in (0, 1), got {utilization}")
    inv = 1.0 / rho
    z = -inv * math.exp(-inv)
    beta = -rho * lambert_w0(z)
    return min(max(beta, 0.0), 1.0)


def aoi_dm1(cfg: TrafficConfig) -> AoiReport:
    """Average AoI of the D/M/1 update queue over the error-prone channel."""
    if cfg.discipline != DM1:
        raise ValidationError(f"aoi_dm1 called with discipline {cfg.discipline}")
    mu, rho = cfg.service_rate, cfg.utilization
    beta = dm1_beta(rho)
    penalty = penalty_factor(cfg)
    terms = {
        "service": 1.0 / mu,
        "sampling": 1.0 / (2.0 * rho * mu),
        "queueing": beta / (1.0 - beta) * penalty / mu,
    }
    return _report(cfg, terms, penalty, beta)


def average_aoi(cfg: TrafficConfig) -> AoiReport:
    return aoi_mm1(cfg) if cfg.discipline == MM1 else aoi_dm1(cfg)


def classic_mm1_aoi(utilization: float, service_rate: float = 1.0) -> float:
    """Ideal-channel M/M/1 FCFS age, (1/mu)(1 + 1/rho + rho^2/(1-rho))."""
    rho = utilization
    return (1.0 + 1.0 / rho + rho * rho / (1.0 - rho)) / service_rate


def classic_dm1_aoi(utilization: float, service_rate: float = 1.0) -> float:
    """Ideal-channel D/M/1 FCFS age, (1/mu)(1/(2 rho) + 1/(1-beta))."""
    beta = dm1_beta(utilization)
    return (1.0 / (2.0 * utilization) + 1.0 / (1.0 - beta)) / service_rate
