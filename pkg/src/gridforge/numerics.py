"""Time stepping and Newton solves shared by every simulation in the package."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
import scipy.linalg

Vector = np.ndarray
DerivFn = Callable[[Vector], Vector]

RK4 = "explicit-RK4"
TRAPEZOIDAL = "implicit-trapezoidal"
METHODS = (RK4, TRAPEZOIDAL)

FD_REL_STEP = 1e-7


class StepFailure(RuntimeError):
    """Implicit step whose Newton iteration did not reach the tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NonConvergence(RuntimeError):
    """Newton solve that ran out of iterations."""

    def __init__(self, message: str, best: Vector, residual: float):
        super().__init__(f"{message} (best residual {residual:.3e})")
        self.best = best
        self.residual = residual


@dataclass
class StateLayout:
    """Maps ``(device, state)`` names onto positions of the flat state vector.

    Blocks are appended in order, so the entries always partition
    ``[0, total_dim)`` without gaps.
    """

    entries: list[tuple[str, str, int]] = field(default_factory=list)
    _lookup: dict[tuple[str, str], int] = field(default_factory=dict, repr=False)
    _blocks: dict[str, tuple[int, int]] = field(default_factory=dict, repr=False)

    @property
    def total_dim(self) -> int:
        return len(self.entries)

    def add_block(self, device: str, names: Iterable[str]) -> slice:
        if device in self._blocks:
            raise ValueError(f"device {device!r} already has a block")
        start = self.total_dim
        for name in names:
            key = (device, name)
            if key in self._lookup:
                raise ValueError(f"duplicate state {key}")
            self._lookup[key] = self.total_dim
            self.entries.append((device, name, self.total_dim))
        self._blocks[device] = (start, self.total_dim)
        return slice(start, self.total_dim)

    def index(self, device: str, name: str) -> int:
        return self._lookup[(device, name)]

    def slice(self, device: str) -> slice:
        start, stop = self._blocks[device]
        return slice(start, stop)

    def devices(self) -> list[str]:
        return list(self._blocks)

    def labels(self) -> list[str]:
        return [f"{dev}.{name}" for dev, name, _ in self.entries]


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = RK4
    dt: float = 1e-5
    newton_tol: float = 1e-10
    newton_max_iter: int = 8

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown integration method {self.method!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter must be at least 1")


def fd_jacobian(fn: DerivFn, x: Vector, f0: Vector | None = None,
                rel_step: float = FD_REL_STEP) -> np.ndarray:
    """Forward-difference Jacobian of ``fn`` at ``x``."""
    x = np.asarray(x, dtype=float)
    f0 = fn(x) if f0 is None else f0
    jac = np.empty((f0.size, x.size))
    for k in range(x.size):
        h = rel_step * max(1.0, abs(x[k]))
        xp = x.copy()
        xp[k] += h
        jac[:, k] = (fn(xp) - f0) / h
    return jac


def rk4_step(state: Vector, deriv_fn: DerivFn, dt: float) -> Vector:
    k1 = deriv_fn(state)
    k2 = deriv_fn(state + 0.5 * dt * k1)
    k3 = deriv_fn(state + 0.5 * dt * k2)
    k4 = deriv_fn(state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class TrapezoidalSolver:
    """Trapezoidal rule with a reusable factorised iteration matrix.

    The matrix ``I - dt/2 * J`` is rebuilt only when the simplified Newton
    iteration stalls, which keeps coarse-step runs cheap.
    """

    def __init__(self, deriv_fn: DerivFn, dt: float, tol: float = 1e-10,
                 max_iter: int = 8):
        self.deriv_fn = deriv_fn
        self.dt = dt
        self.tol = tol
        self.max_iter = max_iter
        self._lu = None

    def _refresh(self, x: Vector, f: Vector):
        jac = fd_jacobian(self.deriv_fn, x, f)
        self._lu = scipy.linalg.lu_factor(np.eye(x.size) - 0.5 * self.dt * jac)

    def step(self, x0: Vector, f0: Vector | None = None) -> tuple[Vector, Vector]:
        """Advance one step; returns ``(x1, f(x1))``."""
        f0 = self.deriv_fn(x0) if f0 is None else f0
        for attempt in range(2):
            if self._lu is None or attempt == 1:
                self._refresh(x0, f0)
            x1 = x0 + self.dt * f0
            res = np.inf
            for _ in range(self.max_iter):
                f1 = self.deriv_fn(x1)
                g = x1 - x0 - 0.5 * self.dt * (f0 + f1)
                res = float(np.max(np.abs(g)))
                if res <= self.tol:
                    return x1, f1
                if not np.isfinite(res):
                    raise StepFailure("trapezoidal Newton iteration diverged", res)
                x1 = x1 - scipy.linalg.lu_solve(self._lu, g)
            f1 = self.deriv_fn(x1)
            g = x1 - x0 - 0.5 * self.dt * (f0 + f1)
            res = float(np.max(np.abs(g)))
            if res <= self.tol:
                return x1, f1
        raise StepFailure("trapezoidal Newton iteration did not converge", res)


def integrate_step(state: Vector, deriv_fn: DerivFn, cfg: IntegratorConfig) -> Vector:
    """Advance ``state`` by one step of ``cfg.dt``."""
    state = np.asarray(state, dtype=float)
    if cfg.method == RK4:
        return rk4_step(state, deriv_fn, cfg.dt)
    solver = TrapezoidalSolver(deriv_fn, cfg.dt, cfg.newton_tol, cfg.newton_max_iter)
    x1, _ = solver.step(state)
    return x1


def rk4_amplification(z: complex) -> complex:
    """Stability polynomial of classical RK4 at ``z = dt * lambda``."""
    return 1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24


def solve_equilibrium(residual_fn: DerivFn, guess: Vector, tol: float = 1e-10,
                      max_iter: int = 50) -> Vector:
    """Newton iteration with finite-difference Jacobians.

    Uses least-squares steps, so residuals with a continuous symmetry
    (for instance a free global phase) still converge. Raises
    :class:`NonConvergence` carrying the best iterate.
    """
    x = np.array(guess, dtype=float, ndmin=1)
    r = np.atleast_1d(np.asarray(residual_fn(x), dtype=float))
    if r.size == 0:
        return x
    norm = float(np.max(np.abs(r)))
    best, best_norm = x.copy(), norm
    for _ in range(max_iter):
        if norm <= tol:
            return x
        jac = fd_jacobian(lambda y: np.atleast_1d(residual_fn(y)), x, r)
        step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        lam = 1.0
        while True:
            x_new = x + lam * step
            r_new = np.atleast_1d(np.asarray(residual_fn(x_new), dtype=float))
            new_norm = float(np.max(np.abs(r_new)))
            if np.isfinite(new_norm) and (new_norm < norm or lam < 1e-3):
                break
            lam *= 0.5
        x, r, norm = x_new, r_new, new_norm
        if norm < best_norm:
            best, best_norm = x.copy(), norm
    if norm <= tol:
        return x
    raise NonConvergence("Newton iteration exceeded max_iter", best, best_norm)
