"""Command-line front end.

Exit codes: 0 success, 2 usage, 3 validation, 4 numerical failure, 5 I/O.
Errors are reported on stderr as a one-line JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import fields
from typing import Optional

from . import __version__
from .analytics import TrafficConfig, average_aoi
from .channel import MODEL_NOTE, ChannelConfig, derive_channel
from .config import SECTIONS, ConfigError, load_config, merge, parse_assignment
from .errors import NumericalError, ValidationError
from .optimizer import (
    DEFAULT_TOL,
    RANDOM_RANGE,
    decisions_csv,
    optimal_utilization,
    random_strategy_aoi,
    read_events,
    replay,
)
from .sim import MarkovChannel, SimConfig, age_trace, run
from .sweeps import SweepAxis, SweepSpec, write_sweep_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4
EXIT_IO = 5

# flag dest -> (section, key)
TRAFFIC_FLAGS = {
    "model": ("traffic", "discipline"),
    "mu": ("traffic", "service_rate"),
    "rho": ("traffic", "utilization"),
    "fleet": ("traffic", "fleet_size"),
    "stations": ("traffic", "station_count"),
    "slot": ("traffic", "slot_interval"),
    "tau_c": ("traffic", "collision_window"),
    "pd": ("traffic", "drop_prob"),
    "exponent_mode": ("traffic", "collision_exponent_mode"),
}
CHANNEL_FLAGS = {
    "speed": ("channel", "vehicle_speed"),
    "fc": ("channel", "carrier_frequency"),
    "bit_rate": ("channel", "bit_rate"),
    "frame_size": ("channel", "frame_size"),
    "fading_margin": ("channel", "fading_margin"),
    "v_l": ("channel", "fail_prob_poor"),
    "l_l": ("channel", "fail_prob_ideal"),
    "stay_poor": ("channel", "stay_poor"),
    "stay_ideal": ("channel", "stay_ideal"),
}
SIM_FLAGS = {
    "fidelity": ("sim", "fidelity"),
    "horizon": ("sim", "horizon"),
    "warmup": ("sim", "warmup"),
    "reps": ("sim", "replications"),
    "seed": ("sim", "seed"),
    "queue_guard": ("sim", "queue_guard"),
    "sim_slot": ("sim", "slot_interval"),
    "workers": ("sim", "workers"),
}
ALL_FLAGS = {**TRAFFIC_FLAGS, **CHANNEL_FLAGS, **SIM_FLAGS}


def _config_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="INI or JSON config file ([traffic], [channel], [sim])")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config value (repeatable); flags still take precedence",
    )
    p.add_argument("--out", help="write the result to this file instead of stdout")
    return p


def _traffic_parent():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("traffic")
    g.add_argument("--model", type=str.upper, choices=["MM1", "DM1"], help="queue discipline")
    g.add_argument("--mu", type=float, help="service rate (packets/s)")
    g.add_argument("--rho", type=float, help="utilization lambda/mu")
    g.add_argument("--fleet", "-M", type=int, help="vehicles per base station")
    g.add_argument("--stations", "-N", type=int, help="number of base stations")
    g.add_argument("--slot", type=float, help="slot interval tau_t (s)")
    g.add_argument("--tau-c", type=float, help="collision window (s); default 3 slots")
    g.add_argument("--pd", type=float, help="channel drop probability")
    g.add_argument(
        "--exponent-mode",
        choices=["paper-literal", "arrival-rate"],
        help="D/M/1 collision exponent: deterministic gap D (paper-literal) or lambda",
    )
    g.add_argument(
        "--derive-pd",
        action="store_true",
        help="take the drop probability from the channel model",
    )
    return p


def _channel_parent():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("channel")
    g.add_argument("--speed", type=float, help="vehicle speed (m/s)")
    g.add_argument("--fc", type=float, help="carrier frequency (Hz)")
    g.add_argument("--bit-rate", type=float, help="link bit rate (bit/s)")
    g.add_argument("--frame-size", type=float, help="frame size (bits)")
    g.add_argument("--fading-margin", type=float, help="fading margin F")
    g.add_argument("--v-l", type=float, help="frame failure probability in the poor state")
    g.add_argument("--l-l", type=float, help="frame failure probability in the ideal state")
    g.add_argument("--stay-poor", type=float, help="direct Markov channel: P_p")
    g.add_argument("--stay-ideal", type=float, help="direct Markov channel: P_i")
    return p


def _sim_parent():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("simulation")
    g.add_argument("--fidelity", choices=["geometric-retry", "markov-channel"])
    g.add_argument("--horizon", type=int, help="arrivals per replication")
    g.add_argument("--warmup", type=int, help="arrivals discarded (default 10%% of horizon)")
    g.add_argument("--reps", type=int, help="replications")
    g.add_argument("--seed", type=int, help="master seed")
    g.add_argument("--queue-guard", type=int, help="queue length treated as divergence")
    g.add_argument("--sim-slot", type=float, help="channel slot length (s) for markov-channel")
    g.add_argument("--workers", type=int, help="processes for replications")
    return p


def _collect(args) -> dict:
    """Merge defaults < config file < --set < explicit flags."""
    sections = {name: {} for name in SECTIONS}
    if getattr(args, "config", None):
        sections = load_config(args.config)
    for text in getattr(args, "set", []) or []:
        section, key, value = parse_assignment(text)
        sections[section][key] = value
    flags = {name: {} for name in SECTIONS}
    for dest, (section, key) in ALL_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            flags[section][key] = value
    return merge(sections, flags)


def _build_traffic(sections: dict, derive_pd: bool = False, **force) -> TrafficConfig:
    values = dict(sections["traffic"])
    values.update(force)
    if derive_pd:
        values["drop_prob"] = _drop_from_channel(sections["channel"])
    return TrafficConfig(**values)


def _drop_from_channel(channel: dict) -> float:
    ch = _build_channel(channel) or ChannelConfig()
    if isinstance(ch, MarkovChannel):
        return ch.fail_prob_poor * ch.pi_poor + ch.fail_prob_ideal * (1 - ch.pi_poor)
    print(MODEL_NOTE, file=sys.stderr)
    return derive_channel(ch).drop_prob


def _build_channel(channel: dict):
    if not channel:
        return None
    if "stay_poor" in channel or "stay_ideal" in channel:
        try:
            return MarkovChannel(
                channel["stay_poor"],
                channel["stay_ideal"],
                channel.get("fail_prob_poor", 1.0),
                channel.get("fail_prob_ideal", 0.0),
            )
        except KeyError as exc:
            raise ConfigError(f"direct Markov channel needs channel.{exc.args[0]}", key=exc.args[0])
    physical = {f.name for f in fields(ChannelConfig)}
    return ChannelConfig(**{k: v for k, v in channel.items() if k in physical})


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


# -- commands -------------------------------------------------------------------

def cmd_eval(args) -> int:
    sections = _collect(args)
    report = average_aoi(_build_traffic(sections, args.derive_pd))
    _emit(args, _json(report.to_dict()))
    return EXIT_OK


def cmd_optimize(args) -> int:
    sections = _collect(args)
    traffic = _build_traffic(sections, args.derive_pd, utilization=0.5)
    opt = optimal_utilization(traffic.discipline, traffic, args.tol)
    _emit(
        args,
        _json(
            {
                "discipline": traffic.discipline,
                "rho_star": opt.utilization,
                "lambda_star": opt.utilization * traffic.service_rate,
                "aoi_star": opt.aoi,
                "iterations": opt.iterations,
                "tol": args.tol,
            }
        ),
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    sections = _collect(args)
    swept = {args.var, args.var2}
    explicit = {"rho": args.rho, "fleet_size": args.fleet, "drop_prob": args.pd,
                "collision_window": args.tau_c}
    for name in swept:
        if name is not None and explicit.get(name) is not None:
            raise ConfigError(f"{name} is swept and cannot also be fixed", key=name)
    force = {}
    if "rho" in swept:
        force["utilization"] = 0.5
    traffic = _build_traffic(sections, args.derive_pd, **force)
    second = None
    if args.var2:
        if args.from2 is None or args.to2 is None or args.steps2 is None:
            raise ConfigError("--var2 needs --from2, --to2 and --steps2", key="var2")
        second = SweepAxis(args.var2, args.from2, args.to2, args.steps2)
    spec = SweepSpec(
        SweepAxis(args.var, args.start, args.stop, args.steps),
        traffic,
        [m.strip() for m in args.models.split(",") if m.strip()],
        second,
    )
    buf = io.StringIO()
    write_sweep_csv(spec, buf)
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_simulate(args) -> int:
    sections = _collect(args)
    traffic = _build_traffic(sections, args.derive_pd)
    sim_kwargs = dict(sections["sim"])
    cfg = SimConfig(traffic=traffic, channel=_build_channel(sections["channel"]), **sim_kwargs)
    result = run(cfg)
    if args.trace_out:
        trace = age_trace(cfg, args.trace_points)
        with open(args.trace_out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("time", "age"))
            for t, age in trace.points:
                writer.writerow((f"{t:.10g}", f"{age:.10g}"))
    if args.format == "csv":
        buf = io.StringIO()
        rows = result.per_replication
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else (f"{v:.10g}" if isinstance(v, float) else v))
                             for k, v in row.items()})
        _emit(args, buf.getvalue())
    else:
        _emit(args, _json(result.to_dict()))
    return EXIT_OK


def cmd_channel(args) -> int:
    sections = _collect(args)
    physical = {k: v for k, v in sections["channel"].items() if k not in ("stay_poor", "stay_ideal")}
    derived = derive_channel(ChannelConfig(**physical))
    print(MODEL_NOTE, file=sys.stderr)
    _emit(args, _json(derived.to_dict()))
    return EXIT_OK


def cmd_controller(args) -> int:
    sections = _collect(args)
    traffic = _build_traffic(sections, args.derive_pd, utilization=0.5)
    with open(args.events, encoding="utf-8") as fh:
        events = read_events(fh)
    state = replay(events, traffic, args.tol)
    if args.format == "json":
        _emit(args, _json([d._asdict() for d in state.decision_log]))
    else:
        _emit(args, decisions_csv(state))
    return EXIT_OK


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must look like LO:HI, got {text!r}")
    return lo, hi


def cmd_compare_random(args) -> int:
    sections = _collect(args)
    traffic = _build_traffic(sections, args.derive_pd, utilization=0.5)
    seed = args.seed if args.seed is not None else sections["sim"].get("seed", 0)
    opt = optimal_utilization(traffic.discipline, traffic, args.tol)
    mean = random_strategy_aoi(traffic.discipline, traffic, args.samples, args.range, seed)
    _emit(
        args,
        _json(
            {
                "discipline": traffic.discipline,
                "samples": args.samples,
                "range": list(args.range),
                "seed": seed,
                "random_mean_aoi": mean,
                "optimal_utilization": opt.utilization,
                "optimal_aoi": opt.aoi,
                "ratio": mean / opt.aoi,
            }
        ),
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoi-v2i",
        description="Age of Information for V2I update streams over error-prone channels",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    cfg, traffic, channel, sim = _config_parent(), _traffic_parent(), _channel_parent(), _sim_parent()

    p = sub.add_parser("eval", parents=[cfg, traffic, channel], help="closed-form average AoI")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("optimize", parents=[cfg, traffic, channel], help="AoI-optimal utilization")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", parents=[cfg, traffic, channel], help="AoI over a parameter grid as CSV")
    p.add_argument("--var", required=True, choices=["rho", "fleet_size", "drop_prob", "collision_window"])
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--models", default="MM1,DM1", help="comma-separated disciplines")
    p.add_argument("--var2", choices=["rho", "fleet_size", "drop_prob", "collision_window"])
    p.add_argument("--from2", type=float)
    p.add_argument("--to2", type=float)
    p.add_argument("--steps2", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", parents=[cfg, traffic, channel, sim], help="Monte-Carlo AoI")
    p.add_argument("--trace-out", help="write the age trajectory of replication 0 as CSV")
    p.add_argument("--trace-points", type=int, default=10_000)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("channel", parents=[cfg, channel], help="derive the Markov channel")
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("controller", parents=[cfg, traffic, channel], help="replay environment events")
    p.add_argument("--events", required=True, help="newline-delimited JSON {seq, kind, value}")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_controller)

    p = sub.add_parser(
        "compare-random", parents=[cfg, traffic, channel], help="random vs optimal utilization"
    )
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--range", type=_parse_range, default=RANDOM_RANGE, metavar="LO:HI")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_compare_random)
    return parser


def _fail(exc: BaseException, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    key = getattr(exc, "key", None) or getattr(exc, "name", None)
    if key:
        payload["key"] = key
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        return _fail(exc, EXIT_VALIDATION)
    except (NumericalError, ArithmeticError) as exc:
        return _fail(exc, EXIT_NUMERIC)
    except OSError as exc:
        return _fail(exc, EXIT_IO)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
