"""Average Age of Information for vehicle-to-infrastructure update streams.

Closed forms for M/M/1 and D/M/1 queues over a two-state Markov channel with
collisions, the AoI-optimal extraction rate, an event-driven rate controller
and a discrete-event simulator that checks the closed forms.
"""

__version__ = "0.1.0"

from .analytics import (
    DM1,
    MM1,
    AoiReport,
    TrafficConfig,
    aoi_dm1,
    aoi_mm1,
    average_aoi,
    collision_probability,
    conditional_wait,
    dm1_beta,
    moment_identities,
)
from .channel import ChannelConfig, ChannelDerived, derive_channel, doppler_shift
from .optimizer import (
    ControllerState,
    EnvironmentEvent,
    controller_step,
    initial_state,
    optimal_utilization,
    random_strategy_aoi,
)
from .sim import MarkovChannel, SimConfig, SimResult, age_trace, run

__all__ = [
    "DM1",
    "MM1",
    "AoiReport",
    "ChannelConfig",
    "ChannelDerived",
    "ControllerState",
    "EnvironmentEvent",
    "MarkovChannel",
    "SimConfig",
    "SimResult",
    "TrafficConfig",
    "age_trace",
    "aoi_dm1",
    "aoi_mm1",
    "average_aoi",
    "collision_probability",
    "conditional_wait",
    "controller_step",
    "derive_channel",
    "doppler_shift",
    "dm1_beta",
    "initial_state",
    "moment_identities",
    "optimal_utilization",
    "random_strategy_aoi",
    "run",
]
