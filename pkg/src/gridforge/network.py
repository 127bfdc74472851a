"""Passive network: pi lines, linear transformers, constant-impedance loads.

All quantities are per unit on one system base. Three-phase signals are
carried as amplitude-invariant alpha/beta pairs, so instantaneous power is
simply ``v . i`` and a steady sinusoid at ``omega_b`` is a phasor rotating in
the alpha/beta plane. Inductances and capacitances are stored in seconds
(``x / omega_b`` and ``b / omega_b``).

Every node of the assembled network is a capacitor node. Line charging is
split onto the end nodes, generator terminals carry a small stray
capacitance, and a converter's output filter capacitor is the capacitance of
its low-voltage node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .numerics import NonConvergence, solve_equilibrium

# Capacitive susceptance placed on generator-side nodes (pu). Without it the
# machine stator and transformer leakage would be inductors in series with
# no state for the node voltage between them.
STRAY_B = 0.05


@dataclass(frozen=True)
class PerUnitBase:
    s_b: float = 100e6
    v_b: float = 230e3
    omega_b: float = 2 * math.pi * 50

    def __post_init__(self):
        if min(self.s_b, self.v_b, self.omega_b) <= 0:
            raise ValueError("per-unit bases must be strictly positive")

    @property
    def z_b(self) -> float:
        return self.v_b**2 / self.s_b

    @property
    def i_b(self) -> float:
        return self.s_b / (math.sqrt(3) * self.v_b)


@dataclass(frozen=True)
class Bus:
    name: str
    v_kv: float
    b_shunt: float = 0.0
    internal: bool = False


@dataclass(frozen=True)
class PiLine:
    """Nominal pi section; ``l`` is the series reactance at ``omega_b`` and
    ``c_half`` the shunt susceptance at each end, both in pu."""

    name: str
    from_bus: str
    to_bus: str
    r: float
    l: float
    c_half: float

    def __post_init__(self):
        if self.r < 0 or self.l <= 0 or self.c_half < 0:
            raise ValueError(f"line {self.name}: need r >= 0, l > 0, c_half >= 0")


@dataclass(frozen=True)
class LinearTransformer:
    """Two-winding transformer, impedances in pu of its own rating.

    The magnetising branch (``rm`` parallel ``lm``) sits at the
    secondary terminal.
    """

    name: str
    from_bus: str
    to_bus: str
    s_r: float
    v1: float
    v2: float
    r1: float
    l1: float
    r2: float
    l2: float
    rm: float
    lm: float

    def __post_init__(self):
        vals = (self.s_r, self.r1, self.l1, self.r2, self.l2, self.rm, self.lm)
        if min(vals) <= 0:
            raise ValueError(f"transformer {self.name}: parameters must be positive")

    def on_base(self, s_b: float) -> tuple[float, float, float, float]:
        """Series r, series x, magnetising r and x rescaled to ``s_b``."""
        k = s_b / self.s_r
        return (self.r1 + self.r2) * k, (self.l1 + self.l2) * k, self.rm * k, self.lm * k


@dataclass(frozen=True)
class ConstantImpedanceLoad:
    bus: str
    p_nom: float
    q_nom: float = 0.0

    def __post_init__(self):
        if self.p_nom < 0:
            raise ValueError("load conductance must be non-negative")

    @property
    def g(self) -> float:
        return self.p_nom

    @property
    def b(self) -> float:
        """Inductive susceptance (positive absorbs reactive power)."""
        return self.q_nom


@dataclass(frozen=True)
class Attachment:
    """A dynamic device connected at ``bus``; ``site`` is the grid bus it
    represents (differs from ``bus`` when the device has internal nodes)."""

    name: str
    kind: str
    bus: str
    site: str


@dataclass(frozen=True)
class NetworkCase:
    buses: tuple[Bus, ...]
    lines: tuple[PiLine, ...]
    transformers: tuple[LinearTransformer, ...]
    loads: tuple[ConstantImpedanceLoad, ...]
    attachments: tuple[Attachment, ...] = ()
    base: PerUnitBase = field(default_factory=PerUnitBase)

    def __post_init__(self):
        names = [b.name for b in self.buses]
        if len(set(names)) != len(names):
            raise ValueError("duplicate bus names")
        known = set(names)
        for item in (*self.lines, *self.transformers):
            for bus in (item.from_bus, item.to_bus):
                if bus not in known:
                    raise ValueError(f"{item.name} refers to unknown bus {bus!r}")
        for load in self.loads:
            if load.bus not in known:
                raise ValueError(f"load at unknown bus {load.bus!r}")
        taken = set()
        for att in self.attachments:
            if att.bus not in known:
                raise ValueError(f"device {att.name} at unknown bus {att.bus!r}")
            if att.bus in taken:
                raise ValueError(f"two devices attached at bus {att.bus!r}")
            taken.add(att.bus)
        if not self._connected():
            raise ValueError("network graph is not connected")

    def _connected(self) -> bool:
        adj: dict[str, set[str]] = {b.name: set() for b in self.buses}
        for item in (*self.lines, *self.transformers):
            adj[item.from_bus].add(item.to_bus)
            adj[item.to_bus].add(item.from_bus)
        start = self.buses[0].name
        seen, todo = {start}, [start]
        while todo:
            for nxt in adj[todo.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return len(seen) == len(self.buses)

    def bus_index(self) -> dict[str, int]:
        return {b.name: k for k, b in enumerate(self.buses)}

    def attachment(self, name: str) -> Attachment:
        for att in self.attachments:
            if att.name == name:
                return att
        raise KeyError(name)

    @property
    def external_buses(self) -> list[Bus]:
        return [b for b in self.buses if not b.internal]


# --------------------------------------------------------------------------
# the 9-bus case

# MATPOWER case9 lines (r, x, b on 100 MVA / 230 kV)
NINE_BUS_LINES = (
    ("4-5", "4", "5", 0.017, 0.092, 0.158),
    ("5-6", "5", "6", 0.039, 0.170, 0.358),
    ("6-7", "6", "7", 0.0119, 0.1008, 0.209),
    ("7-8", "7", "8", 0.0085, 0.072, 0.149),
    ("8-9", "8", "9", 0.032, 0.161, 0.306),
    ("9-4", "9", "4", 0.010, 0.085, 0.176),
)
# generator bus -> HV bus of its step-up transformer
NINE_BUS_STEP_UP = (("1", "4"), ("2", "8"), ("3", "6"))
NINE_BUS_LOAD_BUSES = ("5", "7", "9")


def mv_hv_transformer(name: str, lv: str, hv: str) -> LinearTransformer:
    return LinearTransformer(name, lv, hv, s_r=210e6, v1=13.8e3, v2=230e3,
                             r1=0.0027, l1=0.08, r2=0.0027, l2=0.08, rm=500.0, lm=500.0)


def lv_mv_transformer(name: str, lv: str, mv: str, modules: int = 100) -> LinearTransformer:
    """Aggregate of ``modules`` parallel 1.6 MVA module transformers."""
    return LinearTransformer(name, lv, mv, s_r=1.6e6 * modules, v1=1e3, v2=13.8e3,
                             r1=0.0073, l1=0.018, r2=0.0073, l2=0.018, rm=347.0, lm=156.0)


def build_nine_bus(mix: tuple[str, str, str] = ("sm", "sm", "sm"),
                   base_load: float = 2.0, q_ratio: float = 1 / 3,
                   modules: int = 100, stray_b: float = STRAY_B) -> NetworkCase:
    """IEEE 9-bus system with a device of kind ``mix[k]`` at generator bus k+1.

    ``mix`` entries are ``"sm"``, ``"gfc"`` or ``"none"``. A converter adds an
    internal low-voltage bus ``"<k>lv"`` joined to the generator bus through
    the aggregated LV/MV transformer. ``base_load`` is split evenly between
    buses 5, 7 and 9 with ``q = q_ratio * p``.
    """
    if len(mix) != 3:
        raise ValueError("mix needs one entry per generator bus")
    buses = [Bus(str(k), 13.8, stray_b) for k in (1, 2, 3)]
    buses += [Bus(str(k), 230.0) for k in range(4, 10)]
    lines = tuple(PiLine(n, f, t, r, x, b / 2) for n, f, t, r, x, b in NINE_BUS_LINES)
    trafos = [mv_hv_transformer(f"T{g}", g, h) for g, h in NINE_BUS_STEP_UP]
    atts = []
    for k, kind in enumerate(mix, start=1):
        site = str(k)
        if kind == "sm":
            atts.append(Attachment(f"sm{k}", "sm", site, site))
        elif kind == "gfc":
            lv = f"{k}lv"
            buses.append(Bus(lv, 1.0, 0.0, internal=True))
            trafos.append(lv_mv_transformer(f"T{k}lv", lv, site, modules))
            atts.append(Attachment(f"gfc{k}", "gfc", lv, site))
        elif kind != "none":
            raise ValueError(f"unknown device kind {kind!r}")
    share = base_load / len(NINE_BUS_LOAD_BUSES)
    loads = tuple(ConstantImpedanceLoad(b, share, q_ratio * share) for b in NINE_BUS_LOAD_BUSES)
    return NetworkCase(tuple(buses), lines, tuple(trafos), loads, tuple(atts))


# --------------------------------------------------------------------------
# compiled network


@dataclass
class NetworkArrays:
    """Flat description of the network used by the compiled kernels."""

    names: list[str]
    node_C: np.ndarray
    node_G: np.ndarray
    br_from: np.ndarray
    br_to: np.ndarray
    br_R: np.ndarray
    br_L: np.ndarray
    br_names: list[str]
    shl_node: np.ndarray
    shl_L: np.ndarray
    shl_names: list[str]
    omega_b: float

    @property
    def n_nodes(self) -> int:
        return self.node_C.size

    @property
    def n_states(self) -> int:
        return 2 * (self.node_C.size + self.br_R.size + self.shl_L.size)

    def state_names(self) -> list[tuple[str, str]]:
        out = []
        for n in self.names:
            out += [(f"bus{n}", "v_a"), (f"bus{n}", "v_b")]
        for n in self.br_names:
            out += [(f"br{n}", "i_a"), (f"br{n}", "i_b")]
        for n in self.shl_names:
            out += [(f"sh{n}", "i_a"), (f"sh{n}", "i_b")]
        return out

    def ybus(self) -> np.ndarray:
        """Nodal admittance matrix at ``omega_b``."""
        w = self.omega_b
        y = np.diag(self.node_G + 1j * w * self.node_C).astype(complex)
        for f, t, r, l in zip(self.br_from, self.br_to, self.br_R, self.br_L):
            yb = 1.0 / (r + 1j * w * l)
            y[f, f] += yb
            y[t, t] += yb
            y[f, t] -= yb
            y[t, f] -= yb
        for k, l in zip(self.shl_node, self.shl_L):
            y[k, k] += 1.0 / (1j * w * l)
        return y


def compile_network(case: NetworkCase, extra_C: dict[str, float] | None = None) -> NetworkArrays:
    """Lower a case to arrays. ``extra_C`` adds capacitance (seconds) per bus,
    used for converter filter capacitors."""
    w = case.base.omega_b
    idx = case.bus_index()
    n = len(case.buses)
    C = np.array([b.b_shunt / w for b in case.buses])
    G = np.zeros(n)
    for name, c in (extra_C or {}).items():
        C[idx[name]] += c
    br_from, br_to, br_R, br_L, br_names = [], [], [], [], []
    shl_node, shl_L, shl_names = [], [], []
    for line in case.lines:
        br_from.append(idx[line.from_bus])
        br_to.append(idx[line.to_bus])
        br_R.append(line.r)
        br_L.append(line.l / w)
        br_names.append(line.name)
        C[idx[line.from_bus]] += line.c_half / w
        C[idx[line.to_bus]] += line.c_half / w
    for tr in case.transformers:
        r, x, rm, xm = tr.on_base(case.base.s_b)
        br_from.append(idx[tr.from_bus])
        br_to.append(idx[tr.to_bus])
        br_R.append(r)
        br_L.append(x / w)
        br_names.append(tr.name)
        G[idx[tr.to_bus]] += 1.0 / rm
        shl_node.append(idx[tr.to_bus])
        shl_L.append(xm / w)
        shl_names.append(f"{tr.name}m")
    for load in case.loads:
        k = idx[load.bus]
        G[k] += load.g
        if load.b > 0:
            shl_node.append(k)
            shl_L.append(1.0 / (w * load.b))
            shl_names.append(f"load{load.bus}")
        elif load.b < 0:
            C[k] += -load.b / w
    if np.any(C <= 0):
        bad = [case.buses[k].name for k in np.flatnonzero(C <= 0)]
        raise ValueError(f"nodes without capacitance: {bad}")
    return NetworkArrays(
        names=[b.name for b in case.buses], node_C=C, node_G=G,
        br_from=np.array(br_from, dtype=np.int64), br_to=np.array(br_to, dtype=np.int64),
        br_R=np.array(br_R, dtype=float), br_L=np.array(br_L, dtype=float), br_names=br_names,
        shl_node=np.array(shl_node, dtype=np.int64), shl_L=np.array(shl_L, dtype=float),
        shl_names=shl_names, omega_b=w,
    )


@njit(cache=True)
def instantaneous_power(v, i):
    """``(p, q)`` from alpha/beta voltage and current in pu."""
    return v[0] * i[0] + v[1] * i[1], v[1] * i[0] - v[0] * i[1]


@njit(cache=True)
def network_branches(x, node_G, br_from, br_to, br_R, br_L, shl_node, shl_L, dx, outflow):
    """Branch and shunt-inductor derivatives; fills ``outflow`` with the
    current leaving each node into passive elements other than its capacitor."""
    n = node_G.size
    nb = br_R.size
    ob = 2 * n
    osh = ob + 2 * nb
    for k in range(n):
        outflow[k, 0] = node_G[k] * x[2 * k]
        outflow[k, 1] = node_G[k] * x[2 * k + 1]
    for b in range(nb):
        f = br_from[b]
        t = br_to[b]
        ia = x[ob + 2 * b]
        ib = x[ob + 2 * b + 1]
        outflow[f, 0] += ia
        outflow[f, 1] += ib
        outflow[t, 0] -= ia
        outflow[t, 1] -= ib
        dx[ob + 2 * b] = (x[2 * f] - x[2 * t] - br_R[b] * ia) / br_L[b]
        dx[ob + 2 * b + 1] = (x[2 * f + 1] - x[2 * t + 1] - br_R[b] * ib) / br_L[b]
    for s in range(shl_L.size):
        k = shl_node[s]
        outflow[k, 0] += x[osh + 2 * s]
        outflow[k, 1] += x[osh + 2 * s + 1]
        dx[osh + 2 * s] = x[2 * k] / shl_L[s]
        dx[osh + 2 * s + 1] = x[2 * k + 1] / shl_L[s]


@njit(cache=True)
def network_nodes(node_C, inj, outflow, dx):
    """KCL at every capacitor node."""
    for k in range(node_C.size):
        dx[2 * k] = (inj[k, 0] - outflow[k, 0]) / node_C[k]
        dx[2 * k + 1] = (inj[k, 1] - outflow[k, 1]) / node_C[k]


def network_derivatives(net: NetworkArrays, states: np.ndarray,
                        injected: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives of the network states and the bus voltages.

    ``injected`` holds the device current (alpha, beta) into every node.
    """
    x = np.asarray(states, dtype=float)
    dx = np.zeros_like(x)
    out = np.zeros((net.n_nodes, 2))
    network_branches(x, net.node_G, net.br_from, net.br_to, net.br_R, net.br_L,
                     net.shl_node, net.shl_L, dx, out)
    network_nodes(net.node_C, np.asarray(injected, dtype=float), out, dx)
    return dx, x[: 2 * net.n_nodes].reshape(-1, 2).copy()


# --------------------------------------------------------------------------
# phasor power flow


class PowerFlowError(RuntimeError):
    pass


@dataclass
class PowerFlowResult:
    voltage: np.ndarray  # complex phasor per node
    injection: np.ndarray  # complex power injected by devices per node
    residual: float

    def current(self) -> np.ndarray:
        return np.conj(self.injection / self.voltage)


def solve_power_flow(ybus: np.ndarray, slack: int, v_slack: float,
                     pv: dict[int, tuple[float, float]], tol: float = 1e-12,
                     max_iter: int = 30) -> PowerFlowResult:
    """Newton power flow in polar form.

    ``pv`` maps node index to ``(p, |v|)``; every other non-slack node is a
    zero-injection PQ node (loads are already inside ``ybus``).
    """
    n = ybus.shape[0]
    others = [k for k in range(n) if k != slack]
    pq = [k for k in others if k not in pv]
    p_set = np.array([pv[k][0] if k in pv else 0.0 for k in others])
    vmag = np.ones(n)
    vmag[slack] = v_slack
    for k, (_, v) in pv.items():
        vmag[k] = v

    def unpack(z):
        th = np.zeros(n)
        th[others] = z[: len(others)]
        vm = vmag.copy()
        vm[pq] = z[len(others):]
        return vm * np.exp(1j * th)

    def mismatch(z):
        v = unpack(z)
        s = v * np.conj(ybus @ v)
        return np.concatenate([s.real[others] - p_set, s.imag[pq]])

    guess = np.concatenate([np.zeros(len(others)), np.ones(len(pq))])
    try:
        z = solve_equilibrium(mismatch, guess, tol=tol, max_iter=max_iter)
    except NonConvergence as exc:
        raise PowerFlowError(f"power flow diverged: {exc}") from exc
    v = unpack(z)
    if not np.all(np.isfinite(v)) or np.min(np.abs(v)) < 0.3:
        raise PowerFlowError("power flow converged to an infeasible voltage profile")
    s = v * np.conj(ybus @ v)
    return PowerFlowResult(v, s, float(np.max(np.abs(mismatch(z)), initial=0.0)))
