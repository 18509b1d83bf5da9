"""Two-state Markov (Gilbert-Elliott) channel derived from mobility and fading.

The fading correlation between consecutive frames follows Jakes' model,
``J0(2*pi*f_d/theta)``; the poor/ideal stay probabilities come from the
first-order Markov approximation of a Rayleigh channel with fading margin F.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import (
    ParameterRegimeError,
    SingularCorrelationError,
    ValidationError,
)
from .numerics import bessel_j0, marcum_q1

SPEED_OF_LIGHT = 3.0e8
_CLAMP_TOL = 1e-12

MODEL_NOTE = (
    "channel model: stay_poor uses Q1(eta, |corr|*eta) - Q1(|corr|*eta, eta); "
    "stay_ideal = [1 - p_e(2 - stay_poor)] / (1 - p_e) so that the stationary "
    "poor-state mass equals the average error probability p_e"
)


@dataclass(frozen=True)
class ChannelConfig:
    """Physical inputs of the channel model (SI units)."""

    vehicle_speed: float = 30.0
    carrier_frequency: float = 5.9e9
    bit_rate: float = 6.0e6
    frame_size: float = 8000.0
    fading_margin: float = 10.0
    fail_prob_poor: float = 1.0
    fail_prob_ideal: float = 0.0

    def __post_init__(self):
        if not self.vehicle_speed >= 0:
            raise ValidationError(f"vehicle_speed must be >= 0, got {self.vehicle_speed}")
        for name in ("carrier_frequency", "bit_rate", "frame_size", "fading_margin"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValidationError(f"{name} must be positive and finite, got {value}")
        if not 0.0 <= self.fail_prob_ideal <= self.fail_prob_poor <= 1.0:
            raise ValidationError(
                "need 0 <= fail_prob_ideal <= fail_prob_poor <= 1, got "
                f"{self.fail_prob_ideal}, {self.fail_prob_poor}"
            )

    @property
    def slot_interval(self) -> float:
        """Transmission time of one frame, 1/theta."""
        return self.frame_size / self.bit_rate


@dataclass(frozen=True)
class ChannelDerived:
    doppler_shift: float
    frame_rate: float
    fading_correlation: float
    eta: float
    avg_error_prob: float
    stay_poor: float
    stay_ideal: float
    drop_prob: float

    def to_dict(self) -> dict:
        return asdict(self)


def doppler_shift(speed: float, carrier: float) -> float:
    """Doppler frequency f_c * v / c in hertz."""
    if not speed >= 0:
        raise ValidationError(f"speed must be >= 0, got {speed}")
    if not carrier > 0:
        raise ValidationError(f"carrier frequency must be > 0, got {carrier}")
    return carrier * speed / SPEED_OF_LIGHT


def stationary_distribution(stay_poor: float, stay_ideal: float) -> tuple[float, float]:
    """Stationary masses (pi_poor, pi_ideal) of the two-state chain."""
    for name, p in (("stay_poor", stay_poor), ("stay_ideal", stay_ideal)):
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"{name} must lie in [0, 1], got {p}")
    leave = 2.0 - stay_poor - stay_ideal
    if leave <= 0.0:
        raise ValidationError("stay_poor = stay_ideal = 1 makes both states absorbing")
    pi_poor = (1.0 - stay_ideal) / leave
    return pi_poor, 1.0 - pi_poor


def drop_probability(
    v_l: float, l_l: float, stay_poor: float, stay_ideal: float
) -> float:
    """Per-update drop probability: frame-failure rates mixed by state occupancy."""
    for name, p in (("v_L", v_l), ("l_L", l_l)):
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"{name} must lie in [0, 1], got {p}")
    pi_poor, pi_ideal = stationary_distribution(stay_poor, stay_ideal)
    return v_l * pi_poor + l_l * pi_ideal


def _check_probability(name: str, value: float) -> float:
    if not math.isfinite(value) or value < -_CLAMP_TOL or value > 1.0 + _CLAMP_TOL:
        raise ParameterRegimeError(
            f"{name} = {value!r} is not a probability for these inputs", name, value
        )
    return min(1.0, max(0.0, value))


def derive_channel(cfg: ChannelConfig) -> ChannelDerived:
    """Derive Doppler, correlation, stay probabilities and drop probability."""
    f_d = doppler_shift(cfg.vehicle_speed, cfg.carrier_frequency)
    theta = cfg.bit_rate / cfg.frame_size
    corr = bessel_j0(2.0 * math.pi * f_d / theta)
    one_minus_corr_sq = 1.0 - corr * corr
    if one_minus_corr_sq <= 0.0:
        raise SingularCorrelationError(
            f"fading correlation {corr!r} has unit magnitude; eta is undefined "
            "(a stationary vehicle gives a perfectly correlated channel)",
            "fading_correlation",
            corr,
        )
    F = cfg.fading_margin
    eta = math.sqrt(2.0 / (F * one_minus_corr_sq))
    p_e = -math.expm1(-1.0 / F)

    # envelope statistics depend on the correlation only through its magnitude
    c_eta = abs(corr) * eta
    leave_poor = (marcum_q1(eta, c_eta) - marcum_q1(c_eta, eta)) / math.expm1(1.0 / F)
    stay_poor = _check_probability("stay_poor", 1.0 - leave_poor)
    stay_ideal = _check_probability(
        "stay_ideal", (1.0 - p_e * (2.0 - stay_poor)) / (1.0 - p_e)
    )
    if stay_poor == 1.0 and stay_ideal == 1.0:
        raise ParameterRegimeError("both channel states are absorbing", "stay_poor", 1.0)
    pi_poor, _ = stationary_distribution(stay_poor, stay_ideal)
    if abs(pi_poor - p_e) > 1e-9:
        raise ParameterRegimeError(
            f"stationary poor mass {pi_poor!r} departs from p_e={p_e!r} after clamping",
            "stay_ideal",
            stay_ideal,
        )
    p_d = drop_probability(cfg.fail_prob_poor, cfg.fail_prob_ideal, stay_poor, stay_ideal)
    return ChannelDerived(
        doppler_shift=f_d,
        frame_rate=theta,
        fading_correlation=corr,
        eta=eta,
        avg_error_prob=p_e,
        stay_poor=stay_poor,
        stay_ideal=stay_ideal,
        drop_prob=p_d,
    )
