"""Small simulation fixtures shared by the unit tests."""
from __future__ import annotations

import numpy as np

from gridforge.controllers import ControlConfig
from gridforge.network import Attachment, Bus, NetworkCase, PiLine, lv_mv_transformer
from gridforge.system import (IB_W, ConverterConfig, InfiniteBusConfig, initialize_steady_state,
                              rk4_segment)


def infinite_bus_case(x: float = 0.3) -> NetworkCase:
    """Converter behind its LV/MV transformer, joined to an infinite bus by
    a lossless reactance ``x``."""
    buses = (Bus("lv", 1.0, 0.0, internal=True), Bus("1", 13.8, 0.05), Bus("2", 13.8, 0.05))
    lines = (PiLine("1-2", "1", "2", 0.0, x, 0.0),)
    trafos = (lv_mv_transformer("T", "lv", "1"),)
    atts = (Attachment("gfc", "gfc", "lv", "1"), Attachment("ib", "ib", "2", "2"))
    return NetworkCase(buses, lines, trafos, (), atts)


def converter_against_stiff_bus(strategy: str, p: float = 0.3, x: float = 0.3, **control):
    case = infinite_bus_case(x)
    devices = {"gfc": ConverterConfig(control=ControlConfig(strategy=strategy, **control)),
               "ib": InfiniteBusConfig(x=0.01)}
    return initialize_steady_state(case, devices, dispatch={"gfc": p}, slack="ib")


def simulate(model, x0, t_end, dt=1e-5, every=100):
    """RK4 from ``x0``; returns the sampled states (the first row is ``x0``)."""
    x = np.array(x0, dtype=float)
    n = int(round(t_end / dt))
    record = np.empty((n // every + 1, x.size))
    record[0] = x
    _, r, status = rk4_segment(x, n, dt, model.arrays(), every, 0, record, 1,
                               model.dc_voltage_indices(), 0.0, 0)
    assert status == 0
    return record[:r]


def set_bus_frequency(model, frequency: float) -> None:
    model.ib_par = model.ib_par.copy()
    model.ib_par[0, IB_W] = frequency


def droop_slope(strategy: str, step: float = 0.001, t_end: float = 4.0):
    """Steady-state frequency/power slope against a stiff bus moved to
    ``1 +- step``; returns ``(slope, omega_high, omega_low)`` in pu."""
    from gridforge.system import O_OMEGA, O_P

    eq = converter_against_stiff_bus(strategy)
    w_b = eq.model.omega_b
    ends = []
    for f in (1 + step, 1 - step):
        set_bus_frequency(eq.model, f)
        rec = simulate(eq.model, eq.state, t_end, every=1000)
        _, go = eq.model.observe_many(rec[-1:])
        ends.append((go[0, 0, O_OMEGA] / w_b, go[0, 0, O_P]))
    (w1, p1), (w2, p2) = ends
    return -(w1 - w2) / (p1 - p2), w1, w2


# Acceptance verdicts, collected for the terminal summary.
VERDICTS: dict[str, tuple[bool, str]] = {}
