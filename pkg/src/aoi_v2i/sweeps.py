"""Parameter sweeps over the closed-form AoI, written as CSV."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .analytics import DISCIPLINES, TrafficConfig, average_aoi, normalize_discipline
from .errors import ValidationError

# swept variable -> TrafficConfig field
VARIABLES = {
    "rho": "utilization",
    "fleet_size": "fleet_size",
    "drop_prob": "drop_prob",
    "collision_window": "collision_window",
}

HEADER = ("variable", "value", "discipline", "average_aoi", "collision_prob", "penalty_factor")
HEADER_2D = (
    "variable", "value", "value2", "discipline", "average_aoi", "collision_prob", "penalty_factor",
)


def fmt(x: float) -> str:
    return f"{x:.10g}"


@dataclass(frozen=True)
class SweepAxis:
    variable: str
    start: float
    stop: float
    steps: int

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ValidationError(
                f"unknown sweep variable {self.variable!r}; expected one of {sorted(VARIABLES)}"
            )
        if not self.start < self.stop:
            raise ValidationError(f"sweep needs from < to, got {self.start} >= {self.stop}")
        if int(self.steps) != self.steps or self.steps < 2:
            raise ValidationError(f"steps must be an integer >= 2, got {self.steps}")

    def values(self) -> list:
        grid = np.linspace(self.start, self.stop, int(self.steps))
        if self.variable == "fleet_size":
            ints = np.round(grid)
            if not np.allclose(ints, grid, rtol=0, atol=1e-9):
                raise ValidationError("fleet_size sweep must land on integer values")
            return [int(v) for v in ints]
        return [float(v) for v in grid]


@dataclass(frozen=True)
class SweepSpec:
    axis: SweepAxis
    fixed: TrafficConfig
    disciplines: Sequence[str] = DISCIPLINES
    second: Optional[SweepAxis] = None

    def __post_init__(self):
        object.__setattr__(
            self, "disciplines", tuple(normalize_discipline(d) for d in self.disciplines)
        )
        if not self.disciplines:
            raise ValidationError("sweep needs at least one discipline")
        if self.second is not None and self.second.variable == self.axis.variable:
            raise ValidationError("the two sweep variables must differ")


def _point(fixed: TrafficConfig, assignments: dict, discipline: str):
    changes = {VARIABLES[k]: v for k, v in assignments.items()}
    return average_aoi(replace(fixed, discipline=discipline, **changes))


def sweep_rows(spec: SweepSpec) -> list[list[str]]:
    """Rows in ascending order of the swept variable(s), disciplines innermost."""
    rows = []
    second_values = spec.second.values() if spec.second else [None]
    for v in spec.axis.values():
        for v2 in second_values:
            assignment = {spec.axis.variable: v}
            if spec.second:
                assignment[spec.second.variable] = v2
            for disc in spec.disciplines:
                rep = _point(spec.fixed, assignment, disc)
                row = [_variable_label(spec), fmt(v)]
                if spec.second:
                    row.append(fmt(v2))
                row += [disc, fmt(rep.average_aoi), fmt(rep.collision_prob), fmt(rep.penalty_factor)]
                rows.append(row)
    return rows


def _variable_label(spec: SweepSpec) -> str:
    if spec.second:
        return f"{spec.axis.variable}/{spec.second.variable}"
    return spec.axis.variable


def write_sweep_csv(spec: SweepSpec, fh) -> int:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(HEADER_2D if spec.second else HEADER)
    rows = sweep_rows(spec)
    writer.writerows(rows)
    return len(rows)
