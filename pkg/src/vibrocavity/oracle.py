"""Independent brute-force reference solvers.

These validate the closed-form engine without sharing any of its kernel
code: a high-order adaptive ODE integration of the modal membrane
equations, and a fully coupled 1D leapfrog FDTD solver for the cavity
pressure with damped piston walls.  Only data types are imported from the
other modules; no Duhamel, Magnus or fixed-point machinery is used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidArgumentError, NumericFailureError
from .geometry import CavityGeometry, SpectralBasis
from .membrane import MembraneOperator, MembraneSolution, PatchSource, TimeLapse

__all__ = [
    "OracleConfig",
    "SimulationResult",
    "ode_membrane_oracle",
    "fdtd_coupled_oracle",
    "compare",
]


@dataclass(frozen=True)
class OracleConfig:
    """Discretization settings for the brute-force solvers."""

    dx: float = 1e-2
    cfl_safety: float = 0.5
    scheme_order: int = 2
    ode_tol: float = 1e-10

    def __post_init__(self):
        if self.dx <= 0:
            raise InvalidArgumentError("dx must be positive")
        if not (0 < self.cfl_safety <= 0.5):
            raise InvalidArgumentError("CFL safety factor must lie in (0, 0.5]")


@dataclass(frozen=True)
class SimulationResult:
    """Named time-series bundle used by compare()."""

    t: np.ndarray
    fields: dict[str, np.ndarray]


def _integrate_real(rhs, t_grid, n):
    sol = solve_ivp(
        rhs,
        (t_grid[0], t_grid[-1]),
        np.zeros(2 * n),
        method="DOP853",
        t_eval=t_grid,
        rtol=1e-10,
        atol=1e-12,
    )
    if not sol.success:
        raise NumericFailureError(f"ODE oracle failed: {sol.message}")
    return sol.y


def ode_membrane_oracle(
    op: MembraneOperator,
    lapse: TimeLapse,
    src: PatchSource,
    basis: SpectralBasis,
    t_grid: np.ndarray,
    stiffness: np.ndarray | None = None,
) -> MembraneSolution:
    """Direct integration of u'' + (Sigma'/Sigma) u' + P(gamma) u = Psi."""
    t_grid = np.asarray(t_grid, dtype=float)
    pvals = (
        np.asarray(op.stiffness(basis.eigenvalues), dtype=float)
        if stiffness is None
        else np.asarray(stiffness, dtype=float)
    )
    n = basis.size
    complex_src = np.iscomplexobj(src.values)

    def make_rhs(part):
        def rhs(t, y):
            u, v = y[:n], y[n:]
            psi = src.sample(np.array([t]))[0]
            psi = getattr(np, part)(psi) if complex_src else psi
            damp = 2.0 * float(lapse.g1(np.array([t]))[0])
            return np.concatenate([v, psi - damp * v - pvals * u])

        return rhs

    if complex_src:
        yr = _integrate_real(make_rhs("real"), t_grid, n)
        yi = _integrate_real(make_rhs("imag"), t_grid, n)
        y = yr + 1j * yi
    else:
        y = _integrate_real(make_rhs("real"), t_grid, n)
    u = y[:n].T
    udot = y[n:].T
    psi_t = src.sample(t_grid)
    g1_t = np.asarray(lapse.g1(t_grid), dtype=float)
    uddot = psi_t - 2.0 * g1_t[:, None] * udot - pvals[None, :] * u
    return MembraneSolution(basis=basis, t_grid=t_grid, u=u, udot=udot, uddot=uddot)


@dataclass(frozen=True)
class FdtdResult:
    """Raw FDTD output: pressure snapshots and wall displacements."""

    t: np.ndarray
    x: np.ndarray
    p: np.ndarray  # (n_t, n_x)
    u_ends: np.ndarray  # (n_t, 2)
    udot_ends: np.ndarray  # (n_t, 2)
    energy: np.ndarray  # (n_t,)


def fdtd_coupled_oracle(
    ocfg: OracleConfig,
    geom: CavityGeometry,
    c: float,
    rho0: float,
    sigma_m: float,
    piston_stiffness: tuple[float, float],
    lapse: TimeLapse,
    p_ex: Callable[[float], tuple[float, float]],
    t_grid: np.ndarray,
) -> FdtdResult:
    """Fully coupled 1D leapfrog FDTD with damped piston walls.

    Pressure obeys p_tt = c^2 p_xx on [0, L]; the walls are damped piston
    oscillators driven by (p_ex - p_wall)/sigma_m, and feed back through
    the flux conditions p_x(0) = -rho0 * u0'' and p_x(L) = +rho0 * uL''
    (displacements positive into the cavity).  No modal decomposition and
    no closed-form kernels are used.

    p_ex(t) returns the external pressure at the (left, right) wall.
    """
    if geom.dim != 1:
        raise InvalidArgumentError("the FDTD oracle is one-dimensional")
    t_grid = np.asarray(t_grid, dtype=float)
    length = geom.edge_lengths[0]
    n_x = max(int(round(length / ocfg.dx)), 8)
    dx = length / n_x
    x = np.linspace(0.0, length, n_x + 1)
    dt = ocfg.cfl_safety * dx / c
    n_steps = int(math.ceil((t_grid[-1] - t_grid[0]) / dt))
    dt = (t_grid[-1] - t_grid[0]) / n_steps
    if c * dt / dx > 0.5 + 1e-12:
        raise InvalidArgumentError("CFL condition violated")
    lam2 = (c * dt / dx) ** 2
    p_stiff = np.asarray(piston_stiffness, dtype=float)

    t0 = t_grid[0]
    p_prev = np.zeros(n_x + 1)
    p_cur = np.zeros(n_x + 1)
    u_prev = np.zeros(2)
    u_cur = np.zeros(2)

    def wall_accel(t, u, udot, p_wall):
        ex = np.asarray(p_ex(t), dtype=float)
        psi = (ex - p_wall) / sigma_m
        damp = 2.0 * float(lapse.g1(np.array([t]))[0])
        return psi - damp * udot - p_stiff * u

    # Taylor start: all fields vanish at t0, u'' = psi(t0)
    a0 = wall_accel(t0, u_prev, np.zeros(2), np.array([0.0, 0.0]))
    u_cur = 0.5 * dt**2 * a0
    # pressure start couples through the boundary flux of the first step
    out_t = []
    out_p = []
    out_u = []
    out_ud = []
    out_e = []

    def record(t, p_now, p_old, u_now, u_old):
        out_t.append(t)
        out_p.append(p_now.copy())
        out_u.append(u_now.copy())
        out_ud.append((u_now - u_old) / dt)
        pdot = (p_now - p_old) / dt
        px = np.gradient(p_now, dx)
        energy = 0.5 * np.sum(pdot**2 + c**2 * px**2) * dx
        out_e.append(energy)

    record(t0, p_cur, p_prev, np.zeros(2), np.zeros(2))
    t = t0
    for step in range(1, n_steps + 1):
        t_new = t0 + step * dt
        # implicit-in-damping second-order wall update (needs p at level n)
        damp = float(lapse.g1(np.array([t]))[0])
        ex = np.asarray(p_ex(t), dtype=float)
        psi = (ex - p_cur[[0, -1]]) / sigma_m
        u_new = (
            2.0 * u_cur
            - (1.0 - damp * dt) * u_prev
            + dt**2 * (psi - p_stiff * u_cur)
        ) / (1.0 + damp * dt)
        # exactly centered wall acceleration at level n drives the flux BC
        acc = (u_new - 2.0 * u_cur + u_prev) / dt**2
        ghost_left = p_cur[1] + 2.0 * dx * rho0 * acc[0]
        ghost_right = p_cur[-2] + 2.0 * dx * rho0 * acc[1]
        p_new = np.empty_like(p_cur)
        p_new[1:-1] = (
            2.0 * p_cur[1:-1]
            - p_prev[1:-1]
            + lam2 * (p_cur[2:] - 2.0 * p_cur[1:-1] + p_cur[:-2])
        )
        p_new[0] = 2.0 * p_cur[0] - p_prev[0] + lam2 * (p_cur[1] - 2.0 * p_cur[0] + ghost_left)
        p_new[-1] = (
            2.0 * p_cur[-1] - p_prev[-1] + lam2 * (ghost_right - 2.0 * p_cur[-1] + p_cur[-2])
        )
        p_prev, p_cur = p_cur, p_new
        u_prev, u_cur = u_cur, u_new
        t = t_new
        record(t, p_cur, p_prev, u_cur, u_prev)

    res = FdtdResult(
        t=np.asarray(out_t),
        x=x,
        p=np.asarray(out_p),
        u_ends=np.asarray(out_u),
        udot_ends=np.asarray(out_ud),
        energy=np.asarray(out_e),
    )
    return res


@dataclass(frozen=True)
class ComparisonReport:
    """Per-field absolute and relative error between two results."""

    norm: str
    absolute: dict[str, float]
    relative: dict[str, float]

    def max_relative(self) -> float:
        return max(self.relative.values())


def compare(a: SimulationResult, b: SimulationResult, norm: str = "L2") -> ComparisonReport:
    """Error report between two named time-series bundles.

    Fields of b are linearly interpolated onto a's time grid; the relative
    error is normalized by the norm of a's field.
    """
    if norm not in ("L2", "Linf"):
        raise InvalidArgumentError("norm must be 'L2' or 'Linf'")
    lo = max(a.t[0], b.t[0])
    hi = min(a.t[-1], b.t[-1])
    if hi <= lo:
        raise InvalidArgumentError("time ranges do not overlap")
    keep = (a.t >= lo - 1e-12) & (a.t <= hi + 1e-12)
    absolute: dict[str, float] = {}
    relative: dict[str, float] = {}
    for name, fa in a.fields.items():
        if name not in b.fields:
            raise InvalidArgumentError(f"field {name!r} missing from second result")
        fb = b.fields[name]
        fa_k = np.asarray(fa)[keep]
        flat_b = np.asarray(fb).reshape(len(b.t), -1)
        flat = np.empty((keep.sum(), flat_b.shape[1]), dtype=flat_b.dtype)
        for j in range(flat_b.shape[1]):
            if np.iscomplexobj(flat_b):
                flat[:, j] = np.interp(a.t[keep], b.t, flat_b[:, j].real) + 1j * np.interp(
                    a.t[keep], b.t, flat_b[:, j].imag
                )
            else:
                flat[:, j] = np.interp(a.t[keep], b.t, flat_b[:, j])
        interp = flat.reshape(fa_k.shape)
        diff = fa_k - interp
        if norm == "L2":
            err = float(np.linalg.norm(diff))
            ref = float(np.linalg.norm(fa_k))
        else:
            err = float(np.max(np.abs(diff))) if diff.size else 0.0
            ref = float(np.max(np.abs(fa_k))) if fa_k.size else 0.0
        absolute[name] = err
        relative[name] = err / ref if ref > 0 else (0.0 if err == 0 else math.inf)
    return ComparisonReport(norm=norm, absolute=absolute, relative=relative)
