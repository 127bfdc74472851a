"""Averaged two-level converter: DC link, saturated DC source, LC filter.

Per-unit conventions
--------------------
AC side: system base (``s_b``, converter AC voltage ``v_ac``), alpha/beta
amplitude-invariant, so AC power is ``v . i``. DC side: voltage base
``v_dc_ref`` and current base ``s_b / v_dc_ref``. With these bases the
averaged switch keeps its textbook form ``v_s = m v_dc / 2``,
``i_x = m . i_s / 2`` and the switching stage is lossless,
``v_dc i_x = v_s . i_s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

PLANT_STATES = ("v_dc", "i_s_a", "i_s_b", "i_tau")


@dataclass(frozen=True)
class ModuleValues:
    g_dc: float
    c_dc: float
    r: float
    l: float
    c: float


def scale_module_params(values: ModuleValues, n: int) -> ModuleValues:
    """Aggregate ``n`` modules of two identical converters into one."""
    if n < 1:
        raise ValueError("module count must be at least 1")
    k = 2 * n
    return ModuleValues(g_dc=k * values.g_dc, c_dc=k * values.c_dc,
                        r=values.r / k, l=values.l / k, c=k * values.c)


# DC conductance per converter giving 1 % rated loss at nominal DC voltage
# for the default 500 kVA / 2.44 kV unit.
G_DC_ONE_PERCENT = 0.01 * 500e3 / 2440.0**2
G_DC_TABLE = 0.83


@dataclass(frozen=True)
class ConverterParams:
    """Per-module ratings and parameters in SI units."""

    s_r: float = 500e3
    v_ac: float = 1e3
    v_dc_ref: float = 2440.0
    g_dc: float = G_DC_ONE_PERCENT
    c_dc: float = 0.008
    r: float = 0.001
    l: float = 200e-6
    c: float = 300e-6
    n: int = 100
    tau_dc: float = 0.05
    i_max: float = 1.2
    omega_b: float = 2 * math.pi * 50
    modulation_limit: float = 0.0  # 0 disables the clamp
    aggregate: ModuleValues | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("module count must be at least 1")
        if self.tau_dc <= 0 or self.i_max <= 0 or self.v_dc_ref <= 0:
            raise ValueError("tau_dc, i_max and v_dc_ref must be positive")

    @property
    def rating(self) -> float:
        return 2 * self.n * self.s_r

    def aggregated(self) -> ModuleValues:
        if self.aggregate is not None:
            return self.aggregate
        return scale_module_params(ModuleValues(self.g_dc, self.c_dc, self.r, self.l, self.c), self.n)

    def per_unit(self, s_b: float = 100e6) -> dict[str, float]:
        """Aggregate plant in pu; L and C in seconds."""
        agg = self.aggregated()
        z_ac = self.v_ac**2 / s_b
        z_dc = self.v_dc_ref**2 / s_b
        return dict(
            G_dc=agg.g_dc * z_dc,
            C_dc=agg.c_dc * z_dc,
            R=agg.r / z_ac,
            L=agg.l / z_ac,
            C=agg.c * z_ac,
            tau_dc=self.tau_dc,
            # i_max is given on the converter rating
            i_max=self.i_max * self.rating / s_b,
        )


@njit(cache=True)
def saturate(i_tau, i_max):
    if abs(i_tau) < i_max:
        return i_tau
    return math.copysign(i_max, i_tau)


@njit(cache=True)
def dc_source(i_dc_ref, i_tau, tau_dc, i_max):
    """First-order DC source with a hard current limit: ``(i_dc, d i_tau/dt)``."""
    return saturate(i_tau, i_max), (i_dc_ref - i_tau) / tau_dc


@njit(cache=True)
def switching_stage(m, v_dc, i_s):
    """Averaged bridge: returns ``(v_s_a, v_s_b, i_x)``."""
    return 0.5 * m[0] * v_dc, 0.5 * m[1] * v_dc, 0.5 * (m[0] * i_s[0] + m[1] * i_s[1])


@njit(cache=True)
def plant_rhs(v_dc, i_s_a, i_s_b, m_a, m_b, v_a, v_b, i_dc, G_dc, C_dc, R, L):
    """DC link and filter inductor derivatives plus ``i_x``."""
    v_s_a = 0.5 * m_a * v_dc
    v_s_b = 0.5 * m_b * v_dc
    i_x = 0.5 * (m_a * i_s_a + m_b * i_s_b)
    dv_dc = (i_dc - G_dc * v_dc - i_x) / C_dc
    di_a = (v_s_a - R * i_s_a - v_a) / L
    di_b = (v_s_b - R * i_s_b - v_b) / L
    return dv_dc, di_a, di_b, i_x


def converter_derivatives(state, m, i_out, i_dc, pu: dict[str, float]) -> np.ndarray:
    """Derivatives of ``(v_dc, i_s_a, i_s_b, v_a, v_b)`` for the stand-alone
    converter with its filter capacitor, given modulation, output current
    and DC source current."""
    v_dc, i_sa, i_sb, v_a, v_b = (float(s) for s in state)
    dv_dc, di_a, di_b, _ = plant_rhs(v_dc, i_sa, i_sb, float(m[0]), float(m[1]), v_a, v_b,
                                     float(i_dc), pu["G_dc"], pu["C_dc"], pu["R"], pu["L"])
    dv_a = (i_sa - float(i_out[0])) / pu["C"]
    dv_b = (i_sb - float(i_out[1])) / pu["C"]
    return np.array([dv_dc, di_a, di_b, dv_a, dv_b])
