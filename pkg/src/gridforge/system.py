"""Assembly of network and devices into one autonomous ODE.

The flat state vector holds the network states first (node voltages, branch
currents, shunt-inductor currents), then one block per device. Devices of
each kind are described by stacked parameter arrays so a single compiled
function evaluates the whole vector field.

Steady state in the stationary alpha/beta frame is a rotation, not a fixed
point, so equilibria are characterised by the co-rotating residual
``f(x) - omega_b * S x`` where ``S`` rotates alpha/beta pairs by 90 degrees and
advances absolute angles at unit rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from . import controllers as ctl
from .controllers import ControlConfig
from .converter import ConverterParams, dc_source, plant_rhs, switching_stage
from .machine import N_PARAMS as SM_NPAR
from .machine import N_STATES as SM_NSTATES
from .machine import STATE_NAMES as SM_STATES
from .machine import MachineConfig, sm_operating_point, sm_rhs
from .network import (NetworkArrays, NetworkCase, PowerFlowResult, compile_network,
                      instantaneous_power, network_branches, network_nodes, solve_power_flow)
from .numerics import NonConvergence, StateLayout, solve_equilibrium

# converter parameter vector
(G_GDC, G_CDC, G_R, G_L, G_C, G_TAU, G_IMAX, G_VDCREF, G_PREF, G_QREF, G_VREF, G_WREF,
 G_KPV, G_KIV, G_KPI, G_KII, G_KDC, G_DW, G_KP, G_KI, G_DP, G_J, G_KTH, G_ETA, G_ALPHA,
 G_KAPPA, G_MLIM, G_CODE) = range(28)
GFC_NPAR = 28
GFC_PLANT = ("v_dc", "i_s_a", "i_s_b", "i_tau")
# converter observation columns
O_OMEGA, O_P, O_Q, O_IDC, O_IDCREF, O_VMAG, O_IX = range(7)
GFC_NOBS = 7
# machine observation columns
S_OMEGA, S_P, S_Q, S_TE = range(4)
SM_NOBS = 4
IB_STATES = ("theta", "i_a", "i_b")
IB_E, IB_W, IB_R, IB_L = range(4)


@dataclass(frozen=True)
class ConverterConfig:
    control: ControlConfig = field(default_factory=ControlConfig)
    plant: ConverterParams = field(default_factory=ConverterParams)
    p_ref: float = 0.0
    q_ref: float = 0.0
    v_ref: float = 1.0


@dataclass(frozen=True)
class InfiniteBusConfig:
    """Ideal voltage source behind ``r + j x`` (pu on the system base)."""

    r: float = 0.0
    x: float = 0.01
    frequency: float = 1.0  # pu
    e: float = 1.0  # filled in by initialisation

    def __post_init__(self):
        if self.x <= 0 or self.r < 0 or self.frequency <= 0:
            raise ValueError("infinite bus needs x > 0, r >= 0, frequency > 0")


DeviceConfig = MachineConfig | ConverterConfig | InfiniteBusConfig


class InitializationError(RuntimeError):
    """Power flow or device back-solve failed."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


# --------------------------------------------------------------------------
# compiled vector field


@njit(cache=True)
def _rot_to_dq(a, b, c, s):
    return c * a + s * b, -s * a + c * b


@njit(cache=True)
def gfc_rhs(xs, v, i_out, par, dxs, obs):
    """Converter plant and control derivatives; returns the switching-node
    current injected into the converter's capacitor node."""
    v_dc = xs[0]
    i_sa = xs[1]
    i_sb = xs[2]
    code = int(par[G_CODE])
    v_mag = math.sqrt(v[0] * v[0] + v[1] * v[1])
    p, q = instantaneous_power(v, i_out)
    w_ref = par[G_WREF]
    if code == 0:
        omega, vhd, dxs[9] = ctl.droop_reference(p, v_mag, xs[9], par[G_PREF], par[G_VREF],
                                                 w_ref, par[G_DW], par[G_KP], par[G_KI])
        theta = xs[8]
        dxs[8] = omega
    elif code == 1:
        dxs[8], dxs[9], vhd, dxs[10] = ctl.vsm_reference(
            p, v_mag, xs[9], xs[10], par[G_PREF], par[G_VREF], w_ref, par[G_DP], par[G_J],
            par[G_KP], par[G_KI])
        theta = xs[8]
        omega = xs[9]
    elif code == 2:
        omega, vhd, dxs[9] = ctl.matching_reference(v_dc, v_mag, xs[9], par[G_VREF], par[G_KTH],
                                                    par[G_KP], par[G_KI])
        theta = xs[8]
        dxs[8] = omega
    else:
        va = xs[8]
        vb = xs[9]
        da, db = ctl.dvoc_reference(i_out, (va, vb), par[G_PREF], par[G_QREF], par[G_VREF],
                                    w_ref, par[G_ETA], par[G_ALPHA], par[G_KAPPA])
        dxs[8] = da
        dxs[9] = db
        r2 = va * va + vb * vb
        theta = math.atan2(vb, va)
        omega = (va * db - vb * da) / r2
        vhd = math.sqrt(r2)
    c = math.cos(theta)
    s = math.sin(theta)
    v_dq = _rot_to_dq(v[0], v[1], c, s)
    i_dq = _rot_to_dq(i_out[0], i_out[1], c, s)
    is_dq = _rot_to_dq(i_sa, i_sb, c, s)
    is_ref, dxv = ctl.voltage_loop((vhd, 0.0), v_dq, i_dq, omega, (xs[4], xs[5]), par[G_C],
                                   par[G_KPV], par[G_KIV])
    vs_ref, dxi = ctl.current_loop(is_ref, is_dq, v_dq, omega, (xs[6], xs[7]), par[G_L],
                                   par[G_R], par[G_KPI], par[G_KII])
    dxs[4] = dxv[0]
    dxs[5] = dxv[1]
    dxs[6] = dxi[0]
    dxs[7] = dxi[1]
    m_a, m_b = ctl.modulation(vs_ref, theta, par[G_VDCREF])
    lim = par[G_MLIM]
    if lim > 0.0:
        mm = math.sqrt(m_a * m_a + m_b * m_b)
        if mm > lim:
            m_a *= lim / mm
            m_b *= lim / mm
    _, _, i_x = switching_stage((m_a, m_b), v_dc, (i_sa, i_sb))
    i_ref = ctl.dc_voltage_control(v_dc, i_x, p, par[G_VDCREF], par[G_KDC], par[G_GDC], par[G_PREF])
    i_dc, dxs[3] = dc_source(i_ref, xs[3], par[G_TAU], par[G_IMAX])
    dxs[0], dxs[1], dxs[2], _ = plant_rhs(v_dc, i_sa, i_sb, m_a, m_b, v[0], v[1], i_dc,
                                          par[G_GDC], par[G_CDC], par[G_R], par[G_L])
    obs[O_OMEGA] = omega
    obs[O_P] = p
    obs[O_Q] = q
    obs[O_IDC] = i_dc
    obs[O_IDCREF] = i_ref
    obs[O_VMAG] = v_mag
    obs[O_IX] = i_x
    return i_sa, i_sb


@njit(cache=True)
def ib_rhs(xs, v, par, omega_b, dxs):
    e = par[IB_E]
    ea = e * math.cos(xs[0])
    eb = e * math.sin(xs[0])
    dxs[0] = omega_b * par[IB_W]
    dxs[1] = (ea - par[IB_R] * xs[1] - v[0]) / par[IB_L]
    dxs[2] = (eb - par[IB_R] * xs[2] - v[1]) / par[IB_L]
    return xs[1], xs[2]


@njit(cache=True)
def system_rhs(x, dx, model, outflow, inj, sm_obs, gfc_obs):
    """Full vector field; also fills the device observation arrays."""
    (node_C, node_G, br_from, br_to, br_R, br_L, shl_node, shl_L, omega_b,
     sm_node, sm_off, sm_par, sm_active,
     gfc_node, gfc_off, gfc_par,
     ib_node, ib_off, ib_par) = model
    network_branches(x, node_G, br_from, br_to, br_R, br_L, shl_node, shl_L, dx, outflow)
    inj[:, :] = 0.0
    for k in range(sm_node.size):
        n = sm_node[k]
        o = sm_off[k]
        xs = x[o:o + 13]
        dxs = dx[o:o + 13]
        if sm_active[k] > 0.0:
            va = x[2 * n]
            vb = x[2 * n + 1]
            ia, ib, te = sm_rhs(xs, va, vb, sm_par[k], dxs)
            inj[n, 0] += ia
            inj[n, 1] += ib
            sm_obs[k, S_OMEGA] = xs[7]
            sm_obs[k, S_P] = va * ia + vb * ib
            sm_obs[k, S_Q] = vb * ia - va * ib
            sm_obs[k, S_TE] = te
        else:
            dxs[:] = 0.0
            sm_obs[k, S_OMEGA] = xs[7]
            sm_obs[k, S_P] = 0.0
            sm_obs[k, S_Q] = 0.0
            sm_obs[k, S_TE] = 0.0
    for k in range(gfc_node.size):
        n = gfc_node[k]
        o = gfc_off[k]
        nx = 11 if int(gfc_par[k, G_CODE]) == 1 else 10
        ia, ib = gfc_rhs(x[o:o + nx], x[2 * n:2 * n + 2], outflow[n], gfc_par[k], dx[o:o + nx],
                         gfc_obs[k])
        inj[n, 0] += ia
        inj[n, 1] += ib
    for k in range(ib_node.size):
        n = ib_node[k]
        o = ib_off[k]
        ia, ib = ib_rhs(x[o:o + 3], x[2 * n:2 * n + 2], ib_par[k], omega_b, dx[o:o + 3])
        inj[n, 0] += ia
        inj[n, 1] += ib
    network_nodes(node_C, inj, outflow, dx)


def _buffers(model, n):
    n_nodes = model[0].size
    return (np.zeros(n), np.zeros((n_nodes, 2)), np.zeros((n_nodes, 2)),
            np.zeros((model[9].size, SM_NOBS)), np.zeros((model[13].size, GFC_NOBS)))


@njit(cache=True)
def rk4_segment(x, n_steps, dt, model, every, step0, record, r0, vdc_idx, vdc_min, vdc_count):
    """Advance ``x`` in place by up to ``n_steps`` RK4 steps.

    After every global step that is a multiple of ``every`` the state is
    written to ``record[r]``. Integration stops early when the state turns
    non-finite or when any entry of ``vdc_idx`` stays below ``vdc_min`` for
    ``vdc_count`` consecutive recorded samples (``vdc_count = 0`` disables
    this). Returns ``(steps_done, records_written, status)`` with status 0
    for completion, 1 for non-finite state and 2 for DC collapse.
    """
    n = x.size
    n_nodes = model[0].size
    outflow = np.zeros((n_nodes, 2))
    inj = np.zeros((n_nodes, 2))
    sm_obs = np.zeros((model[9].size, SM_NOBS))
    gfc_obs = np.zeros((model[13].size, GFC_NOBS))
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    r = r0
    low = np.zeros(vdc_idx.size, dtype=np.int64)
    half = 0.5 * dt
    sixth = dt / 6.0
    for s in range(n_steps):
        system_rhs(x, k1, model, outflow, inj, sm_obs, gfc_obs)
        for j in range(n):
            tmp[j] = x[j] + half * k1[j]
        system_rhs(tmp, k2, model, outflow, inj, sm_obs, gfc_obs)
        for j in range(n):
            tmp[j] = x[j] + half * k2[j]
        system_rhs(tmp, k3, model, outflow, inj, sm_obs, gfc_obs)
        for j in range(n):
            tmp[j] = x[j] + dt * k3[j]
        system_rhs(tmp, k4, model, outflow, inj, sm_obs, gfc_obs)
        for j in range(n):
            x[j] += sixth * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        if (step0 + s + 1) % every == 0:
            finite = True
            for j in range(n):
                if not math.isfinite(x[j]):
                    finite = False
                    break
            if r < record.shape[0]:
                record[r, :] = x
                r += 1
            if not finite:
                return s + 1, r, 1
            if vdc_count > 0:
                for c in range(vdc_idx.size):
                    if x[vdc_idx[c]] < vdc_min:
                        low[c] += 1
                        if low[c] >= vdc_count:
                            return s + 1, r, 2
                    else:
                        low[c] = 0
    return n_steps, r, 0


@njit(cache=True)
def observe_records(record, model, sm_obs, gfc_obs):
    """Device observations for every row of ``record`` (filled in place)."""
    n = record.shape[1]
    n_nodes = model[0].size
    dx = np.zeros(n)
    outflow = np.zeros((n_nodes, 2))
    inj = np.zeros((n_nodes, 2))
    for r in range(record.shape[0]):
        system_rhs(record[r], dx, model, outflow, inj, sm_obs[r], gfc_obs[r])


# --------------------------------------------------------------------------
# python-side model


def _pack_converter(cfg: ConverterConfig, s_b: float) -> np.ndarray:
    pu = cfg.plant.per_unit(s_b)
    g = cfg.control.resolved(cfg.v_ref)
    par = np.zeros(GFC_NPAR)
    par[G_GDC] = pu["G_dc"]
    par[G_CDC] = pu["C_dc"]
    par[G_R] = pu["R"]
    par[G_L] = pu["L"]
    par[G_C] = pu["C"]
    par[G_TAU] = pu["tau_dc"]
    par[G_IMAX] = pu["i_max"]
    par[G_VDCREF] = 1.0
    par[G_PREF] = cfg.p_ref
    par[G_QREF] = cfg.q_ref
    par[G_VREF] = cfg.v_ref
    par[G_WREF] = g["omega_ref"]
    par[G_KPV] = g["k_pv"]
    par[G_KIV] = g["k_iv"]
    par[G_KPI] = g["k_pi"]
    par[G_KII] = g["k_ii"]
    par[G_KDC] = g["k_dc"]
    par[G_DW] = g["d_omega"]
    par[G_KP] = g["k_p"]
    par[G_KI] = g["k_i"]
    par[G_DP] = g["D_p"]
    par[G_J] = g["J"]
    par[G_KTH] = g["k_theta"]
    par[G_ETA] = g["eta"]
    par[G_ALPHA] = g["alpha"]
    par[G_KAPPA] = g["kappa"]
    par[G_MLIM] = cfg.plant.modulation_limit
    par[G_CODE] = cfg.control.code
    return par


def converter_state_names(strategy: str) -> tuple[str, ...]:
    return GFC_PLANT + ctl.INNER_STATES + ctl.REFERENCE_STATES[strategy]


@dataclass
class SystemModel:
    """Assembled system: layout, compiled arrays and device bookkeeping."""

    case: NetworkCase
    net: NetworkArrays
    layout: StateLayout
    devices: dict[str, DeviceConfig]
    sm_names: list[str]
    gfc_names: list[str]
    ib_names: list[str]
    node_G: np.ndarray
    sm_par: np.ndarray
    sm_active: np.ndarray
    gfc_par: np.ndarray
    ib_par: np.ndarray
    pair_index: np.ndarray = field(repr=False)
    angle_index: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    @property
    def omega_b(self) -> float:
        return self.net.omega_b

    def node_of(self, name: str) -> int:
        return self.case.bus_index()[self.case.attachment(name).bus]

    def arrays(self) -> tuple:
        net = self.net
        lay = self.layout

        def offs(names):
            return np.array([lay.slice(n).start for n in names], dtype=np.int64)

        def nodes(names):
            return np.array([self.node_of(n) for n in names], dtype=np.int64)

        return (net.node_C, self.node_G, net.br_from, net.br_to, net.br_R, net.br_L,
                net.shl_node, net.shl_L, float(net.omega_b),
                nodes(self.sm_names), offs(self.sm_names),
                self.sm_par.reshape(-1, SM_NPAR), self.sm_active,
                nodes(self.gfc_names), offs(self.gfc_names),
                self.gfc_par.reshape(-1, GFC_NPAR),
                nodes(self.ib_names), offs(self.ib_names), self.ib_par.reshape(-1, 4))

    def rhs_function(self):
        """``f(x)`` closure over a snapshot of the current arrays."""
        model = self.arrays()

        def f(x):
            x = np.ascontiguousarray(x, dtype=float)
            dx, out, inj, so, go = _buffers(model, x.size)
            system_rhs(x, dx, model, out, inj, so, go)
            return dx

        return f

    def derivatives(self, x: np.ndarray) -> np.ndarray:
        return self.rhs_function()(x)

    def observe(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Machine and converter observation rows at state ``x``."""
        model = self.arrays()
        x = np.ascontiguousarray(x, dtype=float)
        dx, out, inj, so, go = _buffers(model, x.size)
        system_rhs(x, dx, model, out, inj, so, go)
        return so, go

    def rotation(self, x: np.ndarray, omega: float | None = None) -> np.ndarray:
        """``omega * S x``: the derivative of a uniform rotation at ``omega``."""
        w = self.omega_b if omega is None else omega
        r = np.zeros_like(x)
        a = self.pair_index
        r[a] = -w * x[a + 1]
        r[a + 1] = w * x[a]
        r[self.angle_index] = w
        return r

    def residual(self, x: np.ndarray, omega: float | None = None) -> np.ndarray:
        """Co-rotating equilibrium residual."""
        return self.derivatives(x) - self.rotation(x, omega)

    # events -------------------------------------------------------------
    def add_load(self, bus: str, dp: float) -> None:
        """Extra constant conductance ``dp`` (pu at 1 pu voltage) at ``bus``."""
        k = self.case.bus_index()[bus]
        self.node_G = self.node_G.copy()
        self.node_G[k] += dp

    def trip_machine(self, name: str) -> None:
        k = self.sm_names.index(name)
        self.sm_active = self.sm_active.copy()
        self.sm_active[k] = 0.0

    def machine_at(self, site: str) -> str:
        for att in self.case.attachments:
            if att.site == site and att.kind == "sm":
                return att.name
        raise KeyError(f"no machine at bus {site}")

    def observe_many(self, record: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Observations for a stack of states, shape ``(rows, devices, columns)``."""
        record = np.ascontiguousarray(record, dtype=float)
        rows = record.shape[0]
        so = np.zeros((rows, len(self.sm_names), SM_NOBS))
        go = np.zeros((rows, len(self.gfc_names), GFC_NOBS))
        observe_records(record, self.arrays(), so, go)
        return so, go

    def dc_voltage_indices(self) -> np.ndarray:
        return np.array([self.layout.index(n, "v_dc") for n in self.gfc_names], dtype=np.int64)


def assemble(case: NetworkCase, devices: dict[str, DeviceConfig],
             s_b: float | None = None) -> SystemModel:
    """Build the state layout and parameter arrays for ``devices``."""
    s_b = case.base.s_b if s_b is None else s_b
    extra_C = {}
    for att in case.attachments:
        if att.name not in devices:
            raise ValueError(f"no configuration for device {att.name!r}")
        cfg = devices[att.name]
        if isinstance(cfg, ConverterConfig):
            extra_C[att.bus] = extra_C.get(att.bus, 0.0) + cfg.plant.per_unit(s_b)["C"]
    net = compile_network(case, extra_C)
    layout = StateLayout()
    pairs, angles = [], []
    # network states as one block per element
    names = net.state_names()
    for k in range(0, len(names), 2):
        dev = names[k][0]
        sl = layout.add_block(dev, (names[k][1], names[k + 1][1]))
        pairs.append(sl.start)
    sm_names, gfc_names, ib_names = [], [], []
    sm_par, gfc_par, ib_par = [], [], []
    for att in case.attachments:
        cfg = devices[att.name]
        if isinstance(cfg, MachineConfig):
            sl = layout.add_block(att.name, SM_STATES)
            angles.append(sl.start + SM_STATES.index("theta"))
            sm_names.append(att.name)
            sm_par.append(cfg.pack(s_b))
        elif isinstance(cfg, ConverterConfig):
            strategy = cfg.control.strategy
            sl = layout.add_block(att.name, converter_state_names(strategy))
            pairs.append(sl.start + 1)
            if strategy == "dvoc":
                pairs.append(sl.start + 8)
            else:
                angles.append(sl.start + 8)
            gfc_names.append(att.name)
            gfc_par.append(_pack_converter(cfg, s_b))
        elif isinstance(cfg, InfiniteBusConfig):
            sl = layout.add_block(att.name, IB_STATES)
            angles.append(sl.start)
            pairs.append(sl.start + 1)
            ib_names.append(att.name)
            ib_par.append([cfg.e, cfg.frequency, cfg.r, cfg.x / net.omega_b])
        else:
            raise TypeError(f"unsupported device configuration {type(cfg).__name__}")
    return SystemModel(
        case=case, net=net, layout=layout, devices=dict(devices),
        sm_names=sm_names, gfc_names=gfc_names, ib_names=ib_names,
        node_G=net.node_G.copy(),
        sm_par=np.array(sm_par, dtype=float).reshape(-1, SM_NPAR),
        sm_active=np.ones(len(sm_names)),
        gfc_par=np.array(gfc_par, dtype=float).reshape(-1, GFC_NPAR),
        ib_par=np.array(ib_par, dtype=float).reshape(-1, 4),
        pair_index=np.array(pairs, dtype=np.int64),
        angle_index=np.array(angles, dtype=np.int64),
    )


# --------------------------------------------------------------------------
# steady-state initialisation


@dataclass
class Equilibrium:
    model: SystemModel
    state: np.ndarray
    power_flow: PowerFlowResult
    residual: float


def _converter_operating_point(cfg: ConverterConfig, V: complex, S: complex,
                               s_b: float) -> tuple[np.ndarray, ConverterConfig]:
    """Back-solve converter states for capacitor-node phasor ``V`` and
    complex power ``S`` delivered by the switching-node current (the filter
    capacitor is part of the network node)."""
    pu = cfg.plant.per_unit(s_b)
    w = cfg.control.omega_ref
    I_s = np.conj(S / V)
    I = I_s - 1j * w * pu["C"] * V
    S_out = V * np.conj(I)
    cfg = replace(cfg, p_ref=float(S_out.real), q_ref=float(S_out.imag), v_ref=float(abs(V)))
    g = cfg.control.resolved(cfg.v_ref)
    V_s = V + (pu["R"] + 1j * w * pu["L"]) * I_s
    i_x = float((V_s * np.conj(I_s)).real)
    i_tau = pu["G_dc"] + i_x
    if abs(i_tau) >= pu["i_max"]:
        raise InitializationError(f"converter DC current {i_tau:.3f} pu exceeds its limit")
    strategy = cfg.control.strategy
    x = np.zeros(len(converter_state_names(strategy)))
    x[0] = 1.0
    x[1], x[2] = I_s.real, I_s.imag
    x[3] = i_tau
    theta = float(np.angle(V))
    if strategy == "droop":
        x[8], x[9] = theta, cfg.v_ref / g["k_i"]
    elif strategy == "vsm":
        x[8], x[9], x[10] = theta, w, cfg.v_ref / (w * g["k_i"])
    elif strategy == "matching":
        x[8], x[9] = theta, cfg.v_ref / g["k_i"]
    else:
        x[8], x[9] = V.real, V.imag
    return x, cfg


def _network_state(net: NetworkArrays, V: np.ndarray) -> np.ndarray:
    w = net.omega_b
    x = np.zeros(net.n_states)
    x[0:2 * V.size:2] = V.real
    x[1:2 * V.size:2] = V.imag
    o = 2 * V.size
    for b in range(net.br_R.size):
        I = (V[net.br_from[b]] - V[net.br_to[b]]) / (net.br_R[b] + 1j * w * net.br_L[b])
        x[o + 2 * b], x[o + 2 * b + 1] = I.real, I.imag
    o += 2 * net.br_R.size
    for s in range(net.shl_L.size):
        I = V[net.shl_node[s]] / (1j * w * net.shl_L[s])
        x[o + 2 * s], x[o + 2 * s + 1] = I.real, I.imag
    return x


def initialize_steady_state(case: NetworkCase, devices: dict[str, DeviceConfig],
                            dispatch: dict[str, float] | None = None,
                            voltages: dict[str, float] | None = None,
                            slack: str | None = None, tol: float = 1e-8,
                            polish: bool = True) -> Equilibrium:
    """Power flow plus device back-solve.

    ``dispatch`` maps device name to active power set-point (pu, system
    base) and ``voltages`` to terminal voltage magnitude (default 1 pu).
    ``slack`` (default: the first attachment) balances the power flow. The
    returned state satisfies ``max |f(x) - omega_b S x| <= tol``.
    """
    dispatch = dict(dispatch or {})
    voltages = dict(voltages or {})
    if not case.attachments:
        raise InitializationError("case has no devices")
    slack = case.attachments[0].name if slack is None else slack
    model = assemble(case, devices)
    net = model.net
    idx = case.bus_index()
    pv = {}
    for att in case.attachments:
        if att.name == slack:
            continue
        if att.name not in dispatch:
            raise InitializationError(f"no dispatch for device {att.name!r}")
        pv[idx[att.bus]] = (float(dispatch[att.name]), float(voltages.get(att.name, 1.0)))
    slack_node = idx[case.attachment(slack).bus]
    try:
        pf = solve_power_flow(net.ybus(), slack_node, float(voltages.get(slack, 1.0)), pv)
    except Exception as exc:  # noqa: BLE001 - report as init failure
        raise InitializationError(f"power flow failed: {exc}") from exc

    s_b = case.base.s_b
    x0 = np.zeros(model.dim)
    x0[:net.n_states] = _network_state(net, pf.voltage)
    resolved = {}
    for att in case.attachments:
        cfg = devices[att.name]
        n = idx[att.bus]
        V, S = complex(pf.voltage[n]), complex(pf.injection[n])
        sl = model.layout.slice(att.name)
        try:
            if isinstance(cfg, MachineConfig):
                xs, cfg = sm_operating_point(cfg, V, S, s_b)
            elif isinstance(cfg, ConverterConfig):
                xs, cfg = _converter_operating_point(cfg, V, S, s_b)
            else:
                I = np.conj(S / V)
                E = V + (cfg.r + 1j * cfg.x) * I
                cfg = replace(cfg, e=float(abs(E)))
                xs = np.array([np.angle(E), I.real, I.imag])
        except ValueError as exc:
            raise InitializationError(f"{att.name}: {exc}") from exc
        x0[sl] = xs
        resolved[att.name] = cfg
    model = assemble(case, resolved)
    res = float(np.max(np.abs(model.residual(x0))))
    if polish and res > 0.01 * tol:
        try:
            x0 = solve_equilibrium(model.residual, x0, tol=0.01 * tol, max_iter=8)
        except NonConvergence as exc:
            if exc.residual < res:
                x0 = exc.best
        res = float(np.max(np.abs(model.residual(x0))))
    if not res <= tol:
        raise InitializationError(f"equilibrium residual {res:.3e} above {tol:.1e}", res)
    return Equilibrium(model, x0, pf, res)
