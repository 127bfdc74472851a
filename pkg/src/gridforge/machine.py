"""Synchronous machine with stator transients, ST1A-style AVR, PSS, governor.

The electrical model is the flux-linkage Park model with one field winding,
one d-axis and two q-axis damper windings, written in the rotor frame. The
stator currents are rotated into the common alpha/beta frame by the absolute
rotor angle ``theta`` (``d theta/dt = omega_b * omega``), so the rotor angle
relative to a frame turning at nominal speed is ``theta - omega_b * t``.

Governor droop ``d_p`` is a gain in pu power per pu frequency: a 1 % droop
means a 0.01 pu frequency drop calls for 1 pu more power, i.e. ``d_p = 100``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

STATE_NAMES = ("psi_d", "psi_q", "psi_fd", "psi_1d", "psi_1q", "psi_2q",
               "theta", "omega", "p_tau", "v_sens", "x_w", "x_ll1", "x_ll2")
N_STATES = len(STATE_NAMES)

# parameter vector layout
P_WB, P_RS, P_RFD, P_R1D, P_R1Q, P_R2Q, P_LAD = range(7)
P_MD = 7  # 9 entries, inverse d-axis inductance matrix
P_MQ = 16  # 9 entries, inverse q-axis inductance matrix
(P_H, P_DP, P_TG, P_PREF, P_KA, P_TA, P_VREF, P_EF0, P_EFMIN, P_EFMAX,
 P_KS, P_TW, P_T1, P_T2, P_T3, P_T4, P_VSMAX, P_PSS_ON) = range(25, 43)
N_PARAMS = 43


@dataclass(frozen=True)
class SmParams:
    s_r: float = 100e6
    v_r: float = 13.8e3
    omega_b: float = 2 * math.pi * 50
    H: float = 3.7
    d_p: float = 100.0
    tau_g: float = 5.0
    x_d: float = 1.8
    x_q: float = 1.7
    x_d1: float = 0.3
    x_q1: float = 0.55
    x_d2: float = 0.25
    x_q2: float = 0.25
    x_l: float = 0.15
    r_s: float = 0.0025
    T_d01: float = 8.0
    T_q01: float = 0.4
    T_d02: float = 0.03
    T_q02: float = 0.05

    def __post_init__(self):
        if self.H <= 0 or self.tau_g <= 0:
            raise ValueError("H and tau_g must be positive")
        if not (self.x_d >= self.x_d1 >= self.x_d2 > self.x_l >= 0):
            raise ValueError("need x_d >= x_d' >= x_d'' > x_l >= 0")
        if not (self.x_q >= self.x_q1 >= self.x_q2 > self.x_l):
            raise ValueError("need x_q >= x_q' >= x_q'' > x_l")
        if min(self.T_d01, self.T_q01, self.T_d02, self.T_q02) <= 0:
            raise ValueError("time constants must be positive")

    def fundamental(self) -> dict[str, float]:
        """Winding inductances and resistances from the standard parameters
        (classical approximations, machine base)."""
        wb = self.omega_b
        xl = self.x_l
        lad = self.x_d - xl
        laq = self.x_q - xl
        lfd = lad * (self.x_d1 - xl) / (self.x_d - self.x_d1)
        rfd = (lad + lfd) / (wb * self.T_d01)
        l1d = 1.0 / (1.0 / (self.x_d2 - xl) - 1.0 / lad - 1.0 / lfd)
        r1d = (l1d + lad * lfd / (lad + lfd)) / (wb * self.T_d02)
        l1q = laq * (self.x_q1 - xl) / (self.x_q - self.x_q1)
        r1q = (laq + l1q) / (wb * self.T_q01)
        l2q = 1.0 / (1.0 / (self.x_q2 - xl) - 1.0 / laq - 1.0 / l1q)
        r2q = (l2q + laq * l1q / (laq + l1q)) / (wb * self.T_q02)
        return dict(lad=lad, laq=laq, lfd=lfd, rfd=rfd, l1d=l1d, r1d=r1d,
                    l1q=l1q, r1q=r1q, l2q=l2q, r2q=r2q)

    def inductance_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        f = self.fundamental()
        xl, lad, laq = self.x_l, f["lad"], f["laq"]
        md = np.array([[lad + xl, lad, lad],
                       [lad, lad + f["lfd"], lad],
                       [lad, lad, lad + f["l1d"]]])
        mq = np.array([[laq + xl, laq, laq],
                       [laq, laq + f["l1q"], laq],
                       [laq, laq, laq + f["l2q"]]])
        return md, mq


@dataclass(frozen=True)
class ExciterParams:
    k_a: float = 200.0
    t_a: float = 0.01
    e_f_min: float = -6.0
    e_f_max: float = 7.0

    def __post_init__(self):
        if self.k_a <= 0 or self.t_a <= 0:
            raise ValueError("k_a and t_a must be positive")
        if not self.e_f_min < self.e_f_max:
            raise ValueError("field voltage limits out of order")


@dataclass(frozen=True)
class PssParams:
    k_s: float = 20.0
    t_w: float = 10.0
    t_1: float = 0.05
    t_2: float = 0.02
    t_3: float = 3.0
    t_4: float = 5.4
    v_max: float = 0.1
    enabled: bool = True

    def __post_init__(self):
        if min(self.t_w, self.t_1, self.t_2, self.t_3, self.t_4) <= 0:
            raise ValueError("PSS time constants must be positive")


@dataclass(frozen=True)
class MachineConfig:
    """Machine plus its controls; ``p_ref``/``v_ref``/``e_f0`` are operating
    point values filled in by initialisation."""

    machine: SmParams = field(default_factory=SmParams)
    exciter: ExciterParams = field(default_factory=ExciterParams)
    pss: PssParams = field(default_factory=PssParams)
    p_ref: float = 0.0
    v_ref: float = 1.0
    e_f0: float = 1.0

    def pack(self, s_b: float = 100e6) -> np.ndarray:
        """Parameter vector on the system power base ``s_b``."""
        m = self.machine
        k = s_b / m.s_r  # impedance rescaling to system base
        f = m.fundamental()
        md, mq = m.inductance_matrices()
        par = np.zeros(N_PARAMS)
        par[P_WB] = m.omega_b
        par[P_RS] = m.r_s * k
        par[P_RFD] = f["rfd"] * k
        par[P_R1D] = f["r1d"] * k
        par[P_R1Q] = f["r1q"] * k
        par[P_R2Q] = f["r2q"] * k
        par[P_LAD] = f["lad"] * k
        par[P_MD:P_MD + 9] = np.linalg.inv(md * k).ravel()
        par[P_MQ:P_MQ + 9] = np.linalg.inv(mq * k).ravel()
        par[P_H] = m.H / k
        par[P_DP] = m.d_p / k
        par[P_TG] = m.tau_g
        par[P_PREF] = self.p_ref
        par[P_KA] = self.exciter.k_a
        par[P_TA] = self.exciter.t_a
        par[P_VREF] = self.v_ref
        par[P_EF0] = self.e_f0
        par[P_EFMIN] = self.exciter.e_f_min
        par[P_EFMAX] = self.exciter.e_f_max
        p = self.pss
        par[P_KS] = p.k_s
        par[P_TW] = p.t_w
        par[P_T1] = p.t_1
        par[P_T2] = p.t_2
        par[P_T3] = p.t_3
        par[P_T4] = p.t_4
        par[P_VSMAX] = p.v_max
        par[P_PSS_ON] = 1.0 if p.enabled else 0.0
        return par


@njit(cache=True)
def governor_turbine(omega, p_ref, p_tau, d_p, tau_g, omega_ref=1.0):
    """Speed droop governor feeding a first-order turbine.

    Returns the governor output and the turbine power derivative.
    """
    p = p_ref + d_p * (omega_ref - omega)
    return p, (p - p_tau) / tau_g


@njit(cache=True)
def exciter_avr(v_mag, v_ref, pss_out, v_sens, k_a, t_a, e_f0, e_f_min, e_f_max):
    """Proportional static exciter with a first-order voltage transducer.

    ``e_f0`` is the field voltage that holds the operating point, so a zero
    error leaves the field at its steady value.
    """
    e_f = e_f0 + k_a * (v_ref - v_sens + pss_out)
    e_f = min(max(e_f, e_f_min), e_f_max)
    return e_f, (v_mag - v_sens) / t_a


@njit(cache=True)
def pss(omega, x_w, x_1, x_2, k_s, t_w, t_1, t_2, t_3, t_4, v_max):
    """Washout followed by two lead-lag stages acting on ``omega - 1``."""
    u = omega - 1.0
    y_w = k_s * (u - x_w)
    y_1 = x_1 + (t_1 / t_2) * (y_w - x_1)
    y_2 = x_2 + (t_3 / t_4) * (y_1 - x_2)
    out = min(max(y_2, -v_max), v_max)
    return out, (u - x_w) / t_w, (y_w - x_1) / t_2, (y_1 - x_2) / t_4


@njit(cache=True)
def sm_rhs(xs, v_a, v_b, par, dxs):
    """Machine derivatives into ``dxs``; returns the stator current injected
    into the network (alpha, beta) and the electrical torque."""
    wb = par[P_WB]
    th = xs[6]
    c = math.cos(th)
    s = math.sin(th)
    v_d = c * v_a + s * v_b
    v_q = -s * v_a + c * v_b
    pd0, pd1, pd2 = xs[0], xs[2], xs[3]
    pq0, pq1, pq2 = xs[1], xs[4], xs[5]
    md = par[P_MD:P_MD + 9]
    mq = par[P_MQ:P_MQ + 9]
    i_d = -(md[0] * pd0 + md[1] * pd1 + md[2] * pd2)
    i_fd = md[3] * pd0 + md[4] * pd1 + md[5] * pd2
    i_1d = md[6] * pd0 + md[7] * pd1 + md[8] * pd2
    i_q = -(mq[0] * pq0 + mq[1] * pq1 + mq[2] * pq2)
    i_1q = mq[3] * pq0 + mq[4] * pq1 + mq[5] * pq2
    i_2q = mq[6] * pq0 + mq[7] * pq1 + mq[8] * pq2
    omega = xs[7]
    r_s = par[P_RS]

    if par[P_PSS_ON] > 0.0:
        u_pss, dxs[10], dxs[11], dxs[12] = pss(
            omega, xs[10], xs[11], xs[12], par[P_KS], par[P_TW], par[P_T1],
            par[P_T2], par[P_T3], par[P_T4], par[P_VSMAX])
    else:
        u_pss = 0.0
        dxs[10] = 0.0
        dxs[11] = 0.0
        dxs[12] = 0.0
    v_mag = math.sqrt(v_a * v_a + v_b * v_b)
    e_f, dxs[9] = exciter_avr(v_mag, par[P_VREF], u_pss, xs[9], par[P_KA], par[P_TA],
                              par[P_EF0], par[P_EFMIN], par[P_EFMAX])
    _, dxs[8] = governor_turbine(omega, par[P_PREF], xs[8], par[P_DP], par[P_TG])

    dxs[0] = wb * (v_d + r_s * i_d + omega * pq0)
    dxs[1] = wb * (v_q + r_s * i_q - omega * pd0)
    dxs[2] = wb * (par[P_RFD] / par[P_LAD] * e_f - par[P_RFD] * i_fd)
    dxs[3] = -wb * par[P_R1D] * i_1d
    dxs[4] = -wb * par[P_R1Q] * i_1q
    dxs[5] = -wb * par[P_R2Q] * i_2q
    t_e = pd0 * i_q - pq0 * i_d
    dxs[6] = wb * omega
    dxs[7] = (xs[8] / omega - t_e) / (2.0 * par[P_H])
    return c * i_d - s * i_q, s * i_d + c * i_q, t_e


def sm_derivatives(state, v_terminal, cfg: MachineConfig, s_b: float = 100e6):
    """Derivatives and terminal current of one machine (convenience wrapper)."""
    xs = np.asarray(state, dtype=float)
    dxs = np.zeros(N_STATES)
    i_a, i_b, _ = sm_rhs(xs, float(v_terminal[0]), float(v_terminal[1]), cfg.pack(s_b), dxs)
    return dxs, np.array([i_a, i_b])


def sm_operating_point(cfg: MachineConfig, voltage: complex, power: complex,
                       s_b: float = 100e6) -> tuple[np.ndarray, MachineConfig]:
    """Back-solve the machine states that hold terminal phasor ``voltage``
    while injecting complex power ``power`` at nominal speed.

    Returns the state vector (``theta`` is the rotor angle at t = 0) and the
    config with ``p_ref``, ``v_ref`` and ``e_f0`` set.
    """
    m = cfg.machine
    k = s_b / m.s_r
    f = m.fundamental()
    r_s, x_q, x_d, lad = m.r_s * k, m.x_q * k, m.x_d * k, f["lad"] * k
    current = np.conj(power / voltage)
    e_q = voltage + (r_s + 1j * x_q) * current
    theta = float(np.angle(e_q) - math.pi / 2)
    rot = np.exp(-1j * theta)
    v_dq = voltage * rot
    i_dq = current * rot
    v_d, v_q, i_d, i_q = v_dq.real, v_dq.imag, i_dq.real, i_dq.imag
    i_fd = (abs(e_q) + (x_d - x_q) * i_d) / lad
    e_fd = lad * i_fd
    md, mq = m.inductance_matrices()
    psi_d_vec = (md * k) @ np.array([-i_d, i_fd, 0.0])
    psi_q_vec = (mq * k) @ np.array([-i_q, 0.0, 0.0])
    t_e = psi_d_vec[0] * i_q - psi_q_vec[0] * i_d
    if not cfg.exciter.e_f_min <= e_fd <= cfg.exciter.e_f_max:
        raise ValueError(f"required field voltage {e_fd:.3f} outside exciter limits")
    x = np.zeros(N_STATES)
    x[0], x[2], x[3] = psi_d_vec
    x[1], x[4], x[5] = psi_q_vec
    x[6] = theta
    x[7] = 1.0
    x[8] = t_e
    x[9] = abs(voltage)
    # stator flux consistency with the terminal constraint
    assert abs(v_d + r_s * i_d + psi_q_vec[0]) < 1e-9
    assert abs(v_q + r_s * i_q - psi_d_vec[0]) < 1e-9
    return x, replace(cfg, p_ref=t_e, v_ref=abs(voltage), e_f0=e_fd)
