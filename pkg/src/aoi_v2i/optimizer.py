"""AoI-minimizing extraction rate, the online rate controller and the random baseline."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Optional, Union

import numpy as np

from .analytics import TrafficConfig, average_aoi, normalize_discipline
from .channel import ChannelConfig, ChannelDerived, derive_channel
from .errors import EventError, NumericalError, ValidationError
from .numerics import minimize_unimodal

RHO_BRACKET = (0.02, 0.98)
DEFAULT_TOL = 1e-6
RANDOM_RANGE = (0.2, 0.8)


class Optimum(NamedTuple):
    utilization: float
    aoi: float
    iterations: int


def aoi_at(fixed: TrafficConfig, utilization: float, discipline: Optional[str] = None) -> float:
    cfg = replace(fixed, utilization=utilization)
    if discipline is not None:
        cfg = replace(cfg, discipline=normalize_discipline(discipline))
    return average_aoi(cfg).average_aoi


def optimal_utilization(
    discipline: str,
    fixed: TrafficConfig,
    tol: float = DEFAULT_TOL,
    bracket: tuple[float, float] = RHO_BRACKET,
) -> Optimum:
    """Utilization minimizing the average AoI with every other parameter held fixed.

    ``fixed.utilization`` is ignored. A non-finite objective anywhere the
    search probes surfaces as :class:`~aoi_v2i.errors.EvaluationError`.
    """
    base = replace(fixed, discipline=normalize_discipline(discipline))

    def objective(rho):
        try:
            return aoi_at(base, rho)
        except NumericalError:
            return math.inf

    res = minimize_unimodal(objective, bracket[0], bracket[1], tol)
    return Optimum(res.argmin, res.min_value, res.iterations)


def random_strategy_aoi(
    discipline: str,
    fixed: TrafficConfig,
    samples: int = 100,
    rho_range: tuple[float, float] = RANDOM_RANGE,
    seed: int = 0,
) -> float:
    """Mean AoI when the utilization is drawn uniformly at random from ``rho_range``."""
    lo, hi = rho_range
    if not 0 < lo < hi < 1:
        raise ValidationError(f"random range must satisfy 0 < lo < hi < 1, got {rho_range}")
    if int(samples) != samples or samples < 1:
        raise ValidationError(f"samples must be a positive integer, got {samples}")
    base = replace(fixed, discipline=normalize_discipline(discipline))
    rhos = np.random.default_rng(seed).uniform(lo, hi, int(samples))
    return math.fsum(aoi_at(base, float(r)) for r in rhos) / len(rhos)


# -- online controller ---------------------------------------------------------

FLEET_CHANGE = "fleet-change"
STATION_CHANGE = "station-change"
CHANNEL_CHANGE = "channel-change"
EVENT_KINDS = (FLEET_CHANGE, STATION_CHANGE, CHANNEL_CHANGE)


@dataclass(frozen=True)
class EnvironmentEvent:
    kind: str
    new_value: Union[int, float, ChannelDerived]
    at: int

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise EventError(f"unknown event kind {self.kind!r}")
        if self.kind in (FLEET_CHANGE, STATION_CHANGE):
            v = self.new_value
            if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < 1:
                raise EventError(f"{self.kind} needs an integer count >= 1, got {v!r}")
            object.__setattr__(self, "new_value", int(v))
        else:
            p = _drop_prob_of(self.new_value)
            if not 0 <= p < 1:
                raise EventError(f"channel-change drop probability must lie in [0, 1), got {p}")


def _drop_prob_of(value) -> float:
    if isinstance(value, ChannelDerived):
        return value.drop_prob
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise EventError(f"channel-change needs a drop probability or ChannelDerived, got {value!r}")
    return float(value)


class Decision(NamedTuple):
    seq: int
    kind: str
    rho_star: float
    lambda_star: float
    aoi_star: float


@dataclass(frozen=True)
class ControllerState:
    """Tracked environment and the emitted extraction-rate decisions."""

    current_utilization: float
    optimal_utilization: float
    station_count: int
    fleet_size: int
    drop_prob: float
    last_recompute: int
    last_event: int
    decision_log: tuple = field(default_factory=tuple)


def _environment(fixed: TrafficConfig, state: ControllerState) -> TrafficConfig:
    return replace(
        fixed,
        fleet_size=state.fleet_size,
        station_count=state.station_count,
        drop_prob=state.drop_prob,
    )


def initial_state(fixed: TrafficConfig, tol: float = DEFAULT_TOL) -> ControllerState:
    """Controller start-up: compute rho* for the initial environment (logged as ``init``)."""
    opt = optimal_utilization(fixed.discipline, fixed, tol)
    decision = Decision(0, "init", opt.utilization, opt.utilization * fixed.service_rate, opt.aoi)
    return ControllerState(
        current_utilization=opt.utilization,
        optimal_utilization=opt.utilization,
        station_count=fixed.station_count,
        fleet_size=fixed.fleet_size,
        drop_prob=fixed.drop_prob,
        last_recompute=0,
        last_event=0,
        decision_log=(decision,),
    )


def controller_step(
    state: ControllerState,
    event: EnvironmentEvent,
    fixed: TrafficConfig,
    tol: float = DEFAULT_TOL,
) -> ControllerState:
    """Apply one environment event; re-optimize only if the environment changed."""
    if event.at <= state.last_event:
        raise EventError(
            f"event sequence must increase: got {event.at} after {state.last_event}"
        )
    if event.kind == FLEET_CHANGE:
        changes = {"fleet_size": event.new_value}
    elif event.kind == STATION_CHANGE:
        changes = {"station_count": event.new_value}
    else:
        changes = {"drop_prob": _drop_prob_of(event.new_value)}
    if all(getattr(state, k) == v for k, v in changes.items()):
        return replace(state, last_event=event.at)

    updated = replace(state, last_event=event.at, **changes)
    env = _environment(fixed, updated)
    opt = optimal_utilization(env.discipline, env, tol)
    decision = Decision(
        event.at, event.kind, opt.utilization, opt.utilization * env.service_rate, opt.aoi
    )
    return replace(
        updated,
        current_utilization=opt.utilization,
        optimal_utilization=opt.utilization,
        last_recompute=event.at,
        decision_log=state.decision_log + (decision,),
    )


def replay(
    events: Iterable[EnvironmentEvent], fixed: TrafficConfig, tol: float = DEFAULT_TOL
) -> ControllerState:
    state = initial_state(fixed, tol)
    for event in events:
        state = controller_step(state, event, fixed, tol)
    return state


def parse_event(record: dict) -> EnvironmentEvent:
    """Build an event from a replay record ``{seq, kind, value}``.

    A channel-change value is either a drop probability or an object of
    :class:`~aoi_v2i.channel.ChannelConfig` fields, which is derived first.
    """
    try:
        seq, kind, value = record["seq"], record["kind"], record["value"]
    except (KeyError, TypeError) as exc:
        raise EventError(f"event record needs seq, kind and value: {record!r}") from exc
    if isinstance(seq, bool) or not isinstance(seq, int):
        raise EventError(f"seq must be an integer, got {seq!r}")
    if kind == CHANNEL_CHANGE and isinstance(value, dict):
        try:
            value = derive_channel(ChannelConfig(**value))
        except TypeError as exc:
            raise EventError(f"bad channel fields in event {seq}: {exc}") from exc
    return EnvironmentEvent(kind, value, seq)


def read_events(lines: Iterable[str]) -> list[EnvironmentEvent]:
    events = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EventError(f"line {lineno}: {exc}") from exc
        events.append(parse_event(record))
    return events


DECISION_HEADER = ("seq", "kind", "rho_star", "lambda_star", "aoi_star")


def decisions_csv(state: ControllerState) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DECISION_HEADER)
    for d in state.decision_log:
        writer.writerow([d.seq, d.kind] + [f"{x:.10g}" for x in d[2:]])
    return buf.getvalue()
