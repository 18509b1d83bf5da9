import io

import pytest

from aoi_v2i.analytics import TrafficConfig
from aoi_v2i.errors import ValidationError
from aoi_v2i.sweeps import HEADER, SweepAxis, SweepSpec, sweep_rows, write_sweep_csv


def test_axis_values():
    assert SweepAxis("rho", 0.2, 0.8, 4).values() == pytest.approx([0.2, 0.4, 0.6, 0.8])
    assert SweepAxis("fleet_size", 2, 10, 9).values() == list(range(2, 11))


@pytest.mark.parametrize(
    "args",
    [("speed", 0, 1, 3), ("rho", 0.5, 0.5, 3), ("rho", 0.6, 0.2, 3), ("rho", 0.2, 0.6, 1),
     ("rho", 0.2, 0.6, 2.5)],
)
def test_axis_validation(args):
    with pytest.raises(ValidationError):
        SweepAxis(*args)


def test_fleet_axis_must_be_integral():
    with pytest.raises(ValidationError):
        SweepAxis("fleet_size", 1, 2, 3).values()


def test_spec_validation():
    axis = SweepAxis("rho", 0.2, 0.8, 3)
    with pytest.raises(ValidationError):
        SweepSpec(axis, TrafficConfig(), disciplines=())
    with pytest.raises(ValidationError):
        SweepSpec(axis, TrafficConfig(), second=SweepAxis("rho", 0.1, 0.2, 2))


def test_csv_layout():
    spec = SweepSpec(SweepAxis("drop_prob", 0.0, 0.5, 3), TrafficConfig(), disciplines=("mm1",))
    buf = io.StringIO()
    write_sweep_csv(spec, buf)
    lines = buf.getvalue().split("\n")
    assert lines[0] == ",".join(HEADER)
    assert lines[1].startswith("drop_prob,0,MM1,")
    assert lines[-1] == ""
    assert len(list(sweep_rows(spec))) == 3
