"""Grid-forming converter control.

Cascaded dq voltage and current PI loops turn a voltage reference into a
modulation signal; a proportional DC-voltage controller with power
feed-forward sets the DC source reference; one of four reference models
(droop, virtual synchronous machine, matching, dVOC) provides the angle and
magnitude of the voltage reference.

Frequencies are in rad/s, everything else per unit. The dq frame of a
controller is aligned with its own reference angle ``theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit

STRATEGIES = ("droop", "vsm", "matching", "dvoc")
DROOP, VSM, MATCHING, DVOC = range(4)

REFERENCE_STATES = {
    "droop": ("theta", "x_v_ref"),
    "vsm": ("theta", "omega", "x_f"),
    "matching": ("theta", "x_mu"),
    "dvoc": ("vhat_a", "vhat_b"),
}
INNER_STATES = ("x_v_d", "x_v_q", "x_i_d", "x_i_q")

OMEGA_NOM = 2 * math.pi * 50

# raw numbers from the published parameter table, used when gains="table"
TABLE_GAINS = dict(d_omega=2 * math.pi * 0.05, D_p=1e5, J=2e3, eta=0.021, alpha=6.66e4,
                   k_dc=1.6e3)
TABLE_K_IV = 232.2
# The table integral gain excites an oscillation between the voltage loop
# and the lightly damped network current modes; this value keeps every
# strategy well damped on the 9-bus system.
TUNED_K_IV = 10.0


@dataclass(frozen=True)
class ControlConfig:
    """Strategy choice and gains for one converter.

    With ``gains="tuned"`` the load-sharing gains of every strategy are
    derived from one common droop slope (pu frequency per pu power), so all
    strategies and the machine governor share load identically in steady
    state. ``gains="table"`` plugs the raw table numbers in instead.
    Explicit values for ``d_omega``, ``D_p``, ``J``, ``eta``, ``alpha`` or
    ``k_dc`` override either choice.
    """

    strategy: str = "droop"
    gains: str = "tuned"
    droop_slope: float = 0.01
    omega_ref: float = OMEGA_NOM
    k_pv: float = 0.52
    k_iv: float | None = None
    k_pi: float = 0.73
    k_ii: float = 0.0059
    k_p: float | None = None
    k_i: float | None = None
    vsm_time_constant: float = 0.02
    dvoc_alpha: float = 60.0
    kappa: float = math.pi / 2
    d_omega: float | None = None
    D_p: float | None = None
    J: float | None = None
    eta: float | None = None
    alpha: float | None = None
    k_dc: float | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.gains not in ("tuned", "table"):
            raise ValueError("gains must be 'tuned' or 'table'")
        if self.droop_slope <= 0:
            raise ValueError("droop_slope must be positive")
        if min(self.k_pv, self.k_iv or 0.0, self.k_pi, self.k_ii) < 0:
            raise ValueError("inner loop gains must be non-negative")

    @property
    def code(self) -> int:
        return STRATEGIES.index(self.strategy)

    def resolved(self, v_ref: float = 1.0) -> dict[str, float]:
        """Numeric gains for every control law."""
        w = self.omega_ref
        if self.gains == "table":
            g = dict(TABLE_GAINS)
        else:
            d_omega = self.droop_slope * w
            D_p = 1.0 / (w * d_omega)
            g = dict(d_omega=d_omega, D_p=D_p, J=self.vsm_time_constant * D_p,
                     eta=d_omega * v_ref**2, alpha=self.dvoc_alpha, k_dc=1.0 / self.droop_slope)
        for key in ("d_omega", "D_p", "J", "eta", "alpha", "k_dc"):
            val = getattr(self, key)
            if val is not None:
                g[key] = val
        default_ki = 0.0021 if self.strategy == "vsm" else 0.5
        g["k_p"] = 0.001 if self.k_p is None else self.k_p
        g["k_i"] = default_ki if self.k_i is None else self.k_i
        if self.k_iv is not None:
            k_iv = self.k_iv
        else:
            k_iv = TABLE_K_IV if self.gains == "table" else TUNED_K_IV
        g.update(k_pv=self.k_pv, k_iv=k_iv, k_pi=self.k_pi, k_ii=self.k_ii,
                 kappa=self.kappa, omega_ref=w, k_theta=w)
        if g["D_p"] <= 0 or g["J"] <= 0 or g["eta"] <= 0 or g["alpha"] <= 0 or g["k_dc"] <= 0:
            raise ValueError("D_p, J, eta, alpha and k_dc must be positive")
        return g


def matching_gain_si(omega_ref: float, v_dc_ref: float) -> float:
    """``k_theta`` in rad/(V s) for a DC voltage in volts."""
    return omega_ref / v_dc_ref


# --------------------------------------------------------------------------
# inner loops


@njit(cache=True)
def voltage_loop(v_hat, v, i, omega, x_v, c, k_pv, k_iv):
    """Voltage PI with current and capacitor feed-forward.

    Returns the switching-current reference and the integrator derivative.
    """
    e_d = v_hat[0] - v[0]
    e_q = v_hat[1] - v[1]
    ref_d = i[0] - c * omega * v[1] + k_pv * e_d + k_iv * x_v[0]
    ref_q = i[1] + c * omega * v[0] + k_pv * e_q + k_iv * x_v[1]
    return (ref_d, ref_q), (e_d, e_q)


@njit(cache=True)
def current_loop(i_s_ref, i_s, v, omega, x_i, l, r, k_pi, k_ii):
    """Current PI with voltage and filter-impedance feed-forward."""
    e_d = i_s_ref[0] - i_s[0]
    e_q = i_s_ref[1] - i_s[1]
    ref_d = v[0] - l * omega * i_s[1] + r * i_s[0] + k_pi * e_d + k_ii * x_i[0]
    ref_q = v[1] + l * omega * i_s[0] + r * i_s[1] + k_pi * e_q + k_ii * x_i[1]
    return (ref_d, ref_q), (e_d, e_q)


@njit(cache=True)
def modulation(v_s_ref, theta, v_dc_ref):
    """Rotate the dq switching-voltage reference to alpha/beta and scale it
    by ``2 / v_dc_ref``."""
    c = math.cos(theta)
    s = math.sin(theta)
    k = 2.0 / v_dc_ref
    return k * (c * v_s_ref[0] - s * v_s_ref[1]), k * (s * v_s_ref[0] + c * v_s_ref[1])


@njit(cache=True)
def dc_voltage_control(v_dc, i_x, p, v_dc_ref, k_dc, g_dc, p_ref):
    """DC source current reference: proportional DC voltage control, DC loss
    compensation, power set-point and filter-loss feed-forward."""
    return (k_dc * (v_dc_ref - v_dc) + g_dc * v_dc + p_ref / v_dc_ref
            + (v_dc * i_x - p) / v_dc_ref)


# --------------------------------------------------------------------------
# reference models


@njit(cache=True)
def droop_reference(p, v_mag, x_v, p_ref, v_ref, omega_ref, d_omega, k_p, k_i):
    """``(omega, v_hat_d, d x_v/dt)`` for frequency droop with a PI on the
    voltage magnitude."""
    e = v_ref - v_mag
    return omega_ref + d_omega * (p_ref - p), k_p * e + k_i * x_v, e


@njit(cache=True)
def vsm_reference(p, v_mag, omega, x_f, p_ref, v_ref, omega_ref, D_p, J, k_p, k_i):
    """Synchronverter swing dynamics.

    Returns ``(d theta/dt, d omega/dt, |v_hat|, d x_f/dt)`` where
    ``|v_hat| = omega * M_f * i_f`` and ``M_f * i_f = k_p e + k_i x_f``.
    """
    e = v_ref - v_mag
    domega = (D_p / J) * (omega_ref - omega) + (p_ref - p) / (J * omega_ref)
    return omega, domega, omega * (k_p * e + k_i * x_f), e


@njit(cache=True)
def matching_reference(v_dc, v_mag, x_mu, v_ref, k_theta, k_p, k_i):
    """``(omega, mu, d x_mu/dt)``: frequency proportional to the DC voltage,
    modulation magnitude from a PI on the AC voltage."""
    e = v_ref - v_mag
    return k_theta * v_dc, k_p * e + k_i * x_mu, e


@njit(cache=True)
def dvoc_reference(i, v_hat, p_ref, q_ref, v_ref, omega_ref, eta, alpha, kappa):
    """Time derivative of the dVOC oscillator state (alpha/beta)."""
    va = v_hat[0]
    vb = v_hat[1]
    ck = math.cos(kappa)
    sk = math.sin(kappa)
    v2 = v_ref * v_ref
    # K = R(kappa) [[p, q], [-q, p]] / v_ref^2
    pa = (p_ref * va + q_ref * vb) / v2
    pb = (-q_ref * va + p_ref * vb) / v2
    kva = ck * pa - sk * pb
    kvb = sk * pa + ck * pb
    ria = ck * i[0] - sk * i[1]
    rib = sk * i[0] + ck * i[1]
    g = alpha / v2 * (v2 - (va * va + vb * vb))
    da = -omega_ref * vb + eta * (kva - ria + g * va)
    db = omega_ref * va + eta * (kvb - rib + g * vb)
    return da, db


@njit(cache=True)
def dvoc_polar(p, q, v_mag, p_ref, q_ref, v_ref, omega_ref, eta, alpha):
    """Angle and magnitude rates of dVOC for an inductive network."""
    v2 = v_ref * v_ref
    r2 = v_mag * v_mag
    omega = omega_ref + eta * (p_ref / v2 - p / r2)
    dmag = eta * (q_ref / v2 - q / r2) * v_mag + eta * alpha / v2 * (v2 - r2) * v_mag
    return omega, dmag
