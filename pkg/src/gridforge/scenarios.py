"""Scenario assembly, execution, frequency metrics and stability classification.

A scenario is the 9-bus system with one device per generator bus (machine
or grid-forming converter), a dispatch, a list of events and integration
settings. :func:`run_scenario` initialises it in steady state, integrates
it segment by segment between events, samples the trajectory at 1 kHz and
returns the time series together with a :class:`MetricsReport`.
"""
from __future__ import annotations

import copy
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .controllers import STRATEGIES, ControlConfig
from .converter import ConverterParams
from .machine import MachineConfig
from .network import NetworkCase, build_nine_bus, solve_power_flow
from .numerics import RK4, IntegratorConfig, StepFailure, TrapezoidalSolver
from .system import (G_IMAX, GFC_NOBS, O_IDC, O_IDCREF, O_OMEGA, O_P, O_Q, O_VMAG, S_OMEGA,
                     S_P, S_Q, ConverterConfig, Equilibrium, InitializationError,
                     SystemModel, assemble, initialize_steady_state, rk4_segment)

LOAD_STEP = "load-step"
MACHINE_TRIP = "machine-trip"
EVENT_KINDS = (LOAD_STEP, MACHINE_TRIP)

STABLE = "stable"
DC_COLLAPSE = "dc-collapse"
NON_SYNCHRONIZED = "non-synchronized"

ALL_SM = "all-sm"
VARIANTS = STRATEGIES + (ALL_SM,)

# generator set-points of the standard 9-bus case
NINE_BUS_VOLTAGES = (1.04, 1.025, 1.025)


@dataclass(frozen=True)
class Event:
    """Disturbance applied at ``time`` seconds.

    ``load-step`` adds ``dp`` pu of constant-conductance load at ``bus``;
    ``machine-trip`` disconnects the machine at generator bus ``bus``.
    """

    time: float
    kind: str
    bus: str
    dp: float = 0.0

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}; expected one of {EVENT_KINDS}")
        if not self.time >= 0:
            raise ValueError("event time must be non-negative")
        object.__setattr__(self, "bus", str(self.bus))


@dataclass(frozen=True)
class Thresholds:
    """Stability classifier settings (DC voltages and frequencies in pu)."""

    vdc_fraction: float = 0.6
    vdc_duration: float = 0.01
    sync_tolerance: float = 1e-3
    tail_fraction: float = 0.1

    def __post_init__(self):
        if not 0 < self.vdc_fraction < 1:
            raise ValueError("vdc_fraction must lie in (0, 1)")
        if self.vdc_duration <= 0 or self.sync_tolerance <= 0:
            raise ValueError("vdc_duration and sync_tolerance must be positive")
        if not 0 < self.tail_fraction <= 1:
            raise ValueError("tail_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one simulation.

    ``dispatch`` gives the active power set-point of the devices at generator
    buses 1, 2 and 3; ``None`` shares the total consumption (load plus
    losses) equally between them. The device at ``slack_bus`` balances the
    power flow.
    """

    name: str = "custom"
    mix: tuple[str, str, str] = ("sm", "gfc", "gfc")
    strategy: str = "droop"
    base_load: float = 2.0
    q_ratio: float = 1 / 3
    dispatch: tuple[float, float, float] | None = None
    voltages: tuple[float, float, float] = NINE_BUS_VOLTAGES
    slack_bus: str = "1"
    events: tuple[Event, ...] = ()
    t_end: float = 10.0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    sample_rate: float = 1000.0
    rocof_window: float = 0.25
    early_stop: bool = True
    modules: int = 100
    control: ControlConfig = field(default_factory=ControlConfig)
    machine: MachineConfig = field(default_factory=MachineConfig)
    converter: ConverterParams = field(default_factory=ConverterParams)
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self):
        object.__setattr__(self, "mix", tuple(self.mix))
        object.__setattr__(self, "voltages", tuple(float(v) for v in self.voltages))
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "slack_bus", str(self.slack_bus))
        if self.dispatch is not None:
            object.__setattr__(self, "dispatch", tuple(float(p) for p in self.dispatch))
            if len(self.dispatch) != 3:
                raise ValueError("dispatch needs one value per generator bus")
        if len(self.mix) != 3 or any(k not in ("sm", "gfc") for k in self.mix):
            raise ValueError("mix must list 'sm' or 'gfc' for each of the three generator buses")
        if len(self.voltages) != 3 or min(self.voltages) <= 0:
            raise ValueError("voltages must be three positive magnitudes")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.slack_bus not in ("1", "2", "3"):
            raise ValueError("slack_bus must be a generator bus (1, 2 or 3)")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.base_load < 0:
            raise ValueError("base_load must be non-negative")
        if not self.sample_rate > 0 or not self.rocof_window > 0:
            raise ValueError("sample_rate and rocof_window must be positive")
        every = 1.0 / (self.sample_rate * self.integrator.dt)
        if every < 1 - 1e-9 or abs(every - round(every)) > 1e-6:
            raise ValueError("1/sample_rate must be an integer multiple of dt")
        for ev in self.events:
            if ev.time > self.t_end:
                raise ValueError(f"event at {ev.time} s lies beyond t_end")
            if ev.kind == MACHINE_TRIP and (ev.bus not in ("1", "2", "3")
                                            or self.mix[int(ev.bus) - 1] != "sm"):
                raise ValueError(f"no machine at bus {ev.bus} to trip")

    @property
    def load_step(self) -> float:
        """Total magnitude of the load-step events (pu)."""
        return float(sum(abs(ev.dp) for ev in self.events if ev.kind == LOAD_STEP))

    def with_dp(self, dp: float) -> ScenarioConfig:
        """Copy with the magnitude of every load step set to ``dp``."""
        if not any(ev.kind == LOAD_STEP for ev in self.events):
            raise ValueError("scenario has no load-step event")
        events = tuple(replace(ev, dp=dp) if ev.kind == LOAD_STEP else ev for ev in self.events)
        return replace(self, events=events)

    def variant(self, name: str) -> ScenarioConfig:
        """Copy for one system variant: a strategy name or ``"all-sm"``."""
        if name == ALL_SM:
            return replace(self, mix=("sm", "sm", "sm"))
        if name not in STRATEGIES:
            raise ValueError(f"unknown variant {name!r}; expected one of {VARIANTS}")
        return replace(self, strategy=name)


@dataclass
class TimeSeries:
    """Uniformly sampled channels sharing the ``time`` axis."""

    time: np.ndarray
    channels: dict[str, np.ndarray]

    @property
    def names(self) -> list[str]:
        return list(self.channels)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def __len__(self) -> int:
        return self.time.size

    def window(self, t0: float, t1: float = math.inf) -> TimeSeries:
        keep = (self.time >= t0 - 1e-12) & (self.time <= t1 + 1e-12)
        return TimeSeries(self.time[keep], {k: v[keep] for k, v in self.channels.items()})


@dataclass
class MetricsReport:
    """Frequency metrics (rad/s) and stability outcome of one run."""

    nadir: float
    rocof: float
    window: float
    dp: float
    nadir_norm: float | None
    rocof_norm: float | None
    stability: str
    saturation: dict[str, list[tuple[float, float]]]
    frequency_source: str
    t0: float
    t_final: float
    residual: float

    def __post_init__(self):
        if self.nadir < 0 or self.rocof < 0 or self.window <= 0:
            raise ValueError("nadir and rocof must be non-negative and the window positive")

    @property
    def stable(self) -> bool:
        return self.stability == STABLE

    def saturation_time(self, name: str | None = None) -> float:
        """Summed length of the saturation intervals of one or all converters."""
        names = [name] if name else list(self.saturation)
        return float(sum(b - a for n in names for a, b in self.saturation[n]))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["saturation"] = {k: [list(iv) for iv in v] for k, v in self.saturation.items()}
        return d


@dataclass
class RunResult:
    series: TimeSeries
    report: MetricsReport
    equilibrium: Equilibrium


# --------------------------------------------------------------------------
# assembly


def build_case(cfg: ScenarioConfig) -> NetworkCase:
    return build_nine_bus(cfg.mix, base_load=cfg.base_load, q_ratio=cfg.q_ratio,
                          modules=cfg.modules)


def build_devices(cfg: ScenarioConfig, case: NetworkCase) -> dict:
    control = replace(cfg.control, strategy=cfg.strategy)
    plant = replace(cfg.converter, n=cfg.modules)
    devices = {}
    for att in case.attachments:
        if att.kind == "sm":
            devices[att.name] = cfg.machine
        else:
            devices[att.name] = ConverterConfig(control=control, plant=plant)
    return devices


def _site_map(case: NetworkCase) -> dict[str, str]:
    return {att.site: att.name for att in case.attachments}


def equal_share_dispatch(case: NetworkCase, devices: dict, voltages: dict[str, float],
                         slack: str, tol: float = 1e-10, max_iter: int = 50) -> dict[str, float]:
    """Set-points under which every device injects the same active power.

    Fixed-point iteration on the power flow: the slack absorbs the losses,
    then all set-points move to the mean injection.
    """
    model = assemble(case, devices)
    ybus = model.net.ybus()
    idx = case.bus_index()
    names = [att.name for att in case.attachments]
    nodes = {n: idx[case.attachment(n).bus] for n in names}
    total = sum(ld.p_nom for ld in case.loads)
    share = total / len(names)
    for _ in range(max_iter):
        pv = {nodes[n]: (share, voltages[n]) for n in names if n != slack}
        pf = solve_power_flow(ybus, nodes[slack], voltages[slack], pv)
        inj = np.array([pf.injection[nodes[n]].real for n in names])
        new = float(inj.mean())
        if np.max(np.abs(inj - new)) <= tol:
            share = new
            break
        share = new
    return {n: share for n in names}


def initialize(cfg: ScenarioConfig, tol: float = 1e-8) -> Equilibrium:
    """Steady state of the scenario before any event."""
    case = build_case(cfg)
    devices = build_devices(cfg, case)
    sites = _site_map(case)
    voltages = {sites[str(k + 1)]: cfg.voltages[k] for k in range(3)}
    slack = sites[cfg.slack_bus]
    try:
        if cfg.dispatch is None:
            dispatch = equal_share_dispatch(case, devices, voltages, slack)
        else:
            dispatch = {sites[str(k + 1)]: cfg.dispatch[k] for k in range(3)}
    except Exception as exc:  # noqa: BLE001 - any power-flow failure is an init failure
        raise InitializationError(f"dispatch power flow failed: {exc}") from exc
    return initialize_steady_state(case, devices, dispatch, voltages, slack=slack, tol=tol)


def apply_event(model: SystemModel, event: Event) -> None:
    if event.kind == LOAD_STEP:
        if event.bus not in model.case.bus_index():
            raise ValueError(f"load step at unknown bus {event.bus!r}")
        model.add_load(event.bus, event.dp)
    else:
        model.trip_machine(model.machine_at(event.bus))


# --------------------------------------------------------------------------
# metrics and classification


def frequency_metrics(omega: np.ndarray, omega_ref: float, time: np.ndarray, t0: float,
                      window: float = 0.25) -> tuple[float, float]:
    """Nadir ``max |omega_ref - omega|`` and RoCoF ``max |omega(t+T) - omega(t)| / T``
    over ``t >= t0`` for a uniformly sampled signal."""
    omega = np.asarray(omega, dtype=float)
    time = np.asarray(time, dtype=float)
    if omega.shape != time.shape or time.size < 2:
        raise ValueError("omega and time must be equally long 1-d arrays")
    if window <= 0:
        raise ValueError("window must be positive")
    if window > time[-1] - t0 + 1e-12:
        raise ValueError(f"window {window} s longer than the signal after t0")
    dt = (time[-1] - time[0]) / (time.size - 1)
    w = omega[time >= t0 - 1e-12]
    k = int(round(window / dt))
    nadir = float(np.max(np.abs(omega_ref - w)))
    rocof = float(np.max(np.abs(w[k:] - w[:-k])) / (k * dt))
    return nadir, rocof


def intervals(time: np.ndarray, mask: np.ndarray) -> list[tuple[float, float]]:
    """Maximal runs of ``mask`` as ``(first, last)`` sample times."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return []
    d = np.diff(np.concatenate(([0], mask.astype(np.int8), [0])))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1) - 1
    return [(float(time[a]), float(time[b])) for a, b in zip(starts, ends)]


def classify_stability(series: TimeSeries, thresholds: Thresholds = Thresholds(),
                       i_max: dict[str, float] | None = None,
                       frequencies: list[str] | None = None,
                       aborted: bool = False) -> tuple[str, dict[str, list[tuple[float, float]]]]:
    """Stability class and per-converter DC saturation intervals.

    ``i_max`` maps converter names to their DC current limit; their
    ``<name>.v_dc`` and ``<name>.i_tau`` channels are inspected.
    ``frequencies`` names the frequency channels compared pairwise (pu).
    ``aborted`` marks a run that ended early because the state blew up.
    """
    i_max = i_max or {}
    time = series.time
    dt = (time[-1] - time[0]) / max(time.size - 1, 1)
    need = max(1, int(round(thresholds.vdc_duration / dt)))
    saturation = {}
    collapse = False
    for name, limit in i_max.items():
        low = series[f"{name}.v_dc"] < thresholds.vdc_fraction
        if any(b - a + dt >= need * dt - 1e-12 for a, b in intervals(time, low)):
            collapse = True
        saturation[name] = intervals(time, np.abs(series[f"{name}.i_tau"]) >= limit)
    if collapse:
        return DC_COLLAPSE, saturation
    if aborted:
        return NON_SYNCHRONIZED, saturation
    freqs = frequencies or []
    if len(freqs) > 1:
        n_tail = max(1, int(math.ceil(thresholds.tail_fraction * time.size)))
        tail = np.array([series[f][-n_tail:] for f in freqs])
        if not np.all(np.isfinite(tail)):
            return NON_SYNCHRONIZED, saturation
        spread = float(np.max(tail.max(axis=0) - tail.min(axis=0)))
        if spread > thresholds.sync_tolerance:
            return NON_SYNCHRONIZED, saturation
    return STABLE, saturation


# --------------------------------------------------------------------------
# execution


def _integrate_trapezoidal(model, x, n_steps, dt, every, step0, record, r, vdc_idx, vdc_min,
                           vdc_count, tol, max_iter):
    solver = TrapezoidalSolver(model.rhs_function(), dt, tol, max_iter)
    low = np.zeros(vdc_idx.size, dtype=int)
    f = None
    for s in range(n_steps):
        try:
            x1, f = solver.step(x, f)
        except StepFailure:
            return s, r, 1
        x[:] = x1
        if (step0 + s + 1) % every == 0:
            if r < record.shape[0]:
                record[r] = x
                r += 1
            if not np.all(np.isfinite(x)):
                return s + 1, r, 1
            if vdc_count > 0:
                below = x[vdc_idx] < vdc_min
                low = np.where(below, low + 1, 0)
                if np.any(low >= vdc_count):
                    return s + 1, r, 2
    return n_steps, r, 0


def _channels(model_rows: list[tuple[int, SystemModel]], record: np.ndarray,
              case: NetworkCase) -> dict[str, np.ndarray]:
    first = model_rows[0][1]
    rows = record.shape[0]
    sm_obs = np.zeros((rows, len(first.sm_names), 4))
    gfc_obs = np.zeros((rows, len(first.gfc_names), GFC_NOBS))
    bounds = [r for r, _ in model_rows] + [rows]
    for (start, model), stop in zip(model_rows, bounds[1:]):
        if stop > start:
            so, go = model.observe_many(record[start:stop])
            sm_obs[start:stop] = so
            gfc_obs[start:stop] = go
    lay = first.layout
    w_ref = {n: first.devices[n].control.omega_ref for n in first.gfc_names}
    ch: dict[str, np.ndarray] = {}
    for bus in case.external_buses:
        a = lay.index(f"bus{bus.name}", "v_a")
        ch[f"bus{bus.name}.v"] = np.hypot(record[:, a], record[:, a + 1])
    for att in case.attachments:
        n = att.name
        if n in first.sm_names:
            k = first.sm_names.index(n)
            ch[f"{n}.omega"] = sm_obs[:, k, S_OMEGA]
            ch[f"{n}.p"] = sm_obs[:, k, S_P]
            ch[f"{n}.q"] = sm_obs[:, k, S_Q]
        else:
            k = first.gfc_names.index(n)
            ch[f"{n}.omega"] = gfc_obs[:, k, O_OMEGA] / w_ref[n]
            ch[f"{n}.p"] = gfc_obs[:, k, O_P]
            ch[f"{n}.q"] = gfc_obs[:, k, O_Q]
            ch[f"{n}.v"] = gfc_obs[:, k, O_VMAG]
            ch[f"{n}.v_dc"] = record[:, lay.index(n, "v_dc")].copy()
            ch[f"{n}.i_tau"] = record[:, lay.index(n, "i_tau")].copy()
            ch[f"{n}.i_dc"] = gfc_obs[:, k, O_IDC]
            ch[f"{n}.i_dc_ref"] = gfc_obs[:, k, O_IDCREF]
    return ch


def _frequency_source(cfg: ScenarioConfig, case: NetworkCase) -> str:
    """SM at bus 1 when it exists and stays connected, otherwise the device
    at bus 2."""
    sites = _site_map(case)
    tripped = {ev.bus for ev in cfg.events if ev.kind == MACHINE_TRIP}
    for site in ("1", "2", "3"):
        if cfg.mix[int(site) - 1] == "sm" and site not in tripped:
            return sites[site]
    return sites["2"]


def run_scenario(cfg: ScenarioConfig, equilibrium: Equilibrium | None = None) -> RunResult:
    """Initialise, integrate with events and evaluate one scenario."""
    eq = initialize(cfg) if equilibrium is None else equilibrium
    model = copy.copy(eq.model)
    case = model.case
    x = eq.state.copy()
    dt = cfg.integrator.dt
    every = int(round(1.0 / (cfg.sample_rate * dt)))
    n_total = int(round(cfg.t_end / dt))
    record = np.empty((n_total // every + 1, x.size))
    record[0] = x
    r = 1
    vdc_idx = model.dc_voltage_indices()
    vdc_count = int(round(cfg.thresholds.vdc_duration * cfg.sample_rate)) if cfg.early_stop else 0
    vdc_min = cfg.thresholds.vdc_fraction

    events = sorted(cfg.events, key=lambda e: e.time)
    event_steps = sorted({int(round(ev.time / dt)) for ev in events} | {n_total})
    model_rows = [(0, copy.copy(model))]
    step = 0
    status = 0
    pending = list(events)
    for stop in event_steps:
        while pending and int(round(pending[0].time / dt)) <= step:
            apply_event(model, pending.pop(0))
            model_rows.append((r, copy.copy(model)))
        n = stop - step
        if n <= 0:
            continue
        if cfg.integrator.method == RK4:
            done, r, status = rk4_segment(x, n, dt, model.arrays(), every, step, record, r,
                                          vdc_idx, vdc_min, vdc_count)
        else:
            done, r, status = _integrate_trapezoidal(
                model, x, n, dt, every, step, record, r, vdc_idx, vdc_min, vdc_count,
                cfg.integrator.newton_tol, cfg.integrator.newton_max_iter)
        step += done
        if status != 0:
            break
    while pending and status == 0:
        apply_event(model, pending.pop(0))
    record = record[:r]
    time = np.arange(r) / cfg.sample_rate
    model_rows = [(min(row, r), m) for row, m in model_rows]
    series = TimeSeries(time, _channels(model_rows, record, case))

    i_max = {n: float(model.gfc_par[k, G_IMAX]) for k, n in enumerate(model.gfc_names)}
    tripped = {model.machine_at(ev.bus) for ev in events if ev.kind == MACHINE_TRIP
               and ev.time <= time[-1]}
    freq_names = [f"{att.name}.omega" for att in case.attachments if att.name not in tripped]
    stability, saturation = classify_stability(series, cfg.thresholds, i_max, freq_names,
                                               aborted=status != 0)
    if status == 2:
        stability = DC_COLLAPSE

    source = _frequency_source(cfg, case)
    t0 = events[0].time if events else 0.0
    w_b = model.case.base.omega_b
    omega = series[f"{source}.omega"] * w_b
    if time[-1] - t0 >= cfg.rocof_window and np.all(np.isfinite(omega)):
        nadir, rocof = frequency_metrics(omega, w_b, time, t0, cfg.rocof_window)
    else:
        finite = omega[np.isfinite(omega) & (time >= t0)]
        nadir = float(np.max(np.abs(w_b - finite))) if finite.size else 0.0
        rocof = 0.0
    dp = cfg.load_step
    report = MetricsReport(
        nadir=nadir, rocof=rocof, window=cfg.rocof_window, dp=dp,
        nadir_norm=nadir / dp if dp > 0 else None, rocof_norm=rocof / dp if dp > 0 else None,
        stability=stability, saturation=saturation, frequency_source=source, t0=t0,
        t_final=float(time[-1]), residual=eq.residual)
    return RunResult(series, report, eq)


# --------------------------------------------------------------------------
# sweeps


def sweep_grid(start: float = 0.2, step: float = 0.007, count: int = 100) -> np.ndarray:
    """Evenly spaced disturbance magnitudes ``start + k * step``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return np.round(start + step * np.arange(count), 12)


@dataclass
class SweepEntry:
    dp: float
    report: MetricsReport | None
    error: str | None = None

    @property
    def stability(self) -> str:
        return self.report.stability if self.report else "error"


def _sweep_one(args) -> SweepEntry:
    cfg, dp = args
    try:
        return SweepEntry(dp, run_scenario(cfg.with_dp(dp)).report)
    except Exception as exc:  # noqa: BLE001 - recorded per entry, sweep continues
        return SweepEntry(dp, None, f"{type(exc).__name__}: {exc}")


def worker_count(requested: int | None = None) -> int:
    """Parallel workers, capped by ``GRIDFORGE_THREADS`` when set."""
    n = requested or os.cpu_count() or 1
    env = os.environ.get("GRIDFORGE_THREADS")
    if env:
        n = min(n, max(1, int(env)))
    return max(1, n)


def sweep_disturbances(cfg: ScenarioConfig, dps, workers: int | None = None) -> list[SweepEntry]:
    """Run ``cfg`` once per load-step magnitude; results are ordered like ``dps``."""
    dps = [float(d) for d in dps]
    if not dps:
        raise ValueError("empty disturbance list")
    cfg.with_dp(dps[0])  # validates that a load step exists
    jobs = [(cfg, d) for d in dps]
    n = min(worker_count(workers), len(jobs))
    if n == 1:
        return [_sweep_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_sweep_one, jobs))


# --------------------------------------------------------------------------
# presets

EVENT_TIME = 0.5
PRESETS = ("sweep-9bus", "large-disturbance", "loss-of-sm", "all-gfc")


def preset(name: str, strategy: str = "droop") -> ScenarioConfig:
    """Named scenario; ``strategy`` selects the converter control."""
    step = lambda dp: (Event(EVENT_TIME, LOAD_STEP, "7", dp),)  # noqa: E731
    if name == "sweep-9bus":
        return ScenarioConfig(name=name, strategy=strategy, base_load=2.0, events=step(0.2),
                              t_end=4.0)
    if name == "large-disturbance":
        return ScenarioConfig(name=name, strategy=strategy, base_load=2.25, events=step(0.75),
                              t_end=10.0)
    if name == "all-gfc":
        return ScenarioConfig(name=name, strategy=strategy, mix=("gfc", "gfc", "gfc"),
                              base_load=2.25, events=step(0.9), t_end=10.0)
    if name == "loss-of-sm":
        return ScenarioConfig(name=name, strategy=strategy, base_load=2.1,
                              dispatch=(0.6, 0.75, 0.75),
                              events=(Event(EVENT_TIME, MACHINE_TRIP, "1"),), t_end=10.0)
    raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")
