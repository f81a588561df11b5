"""Damped membrane-plate dynamics on wall patches.

The damped modal equation u'' + (Sigma'/Sigma) u' + P(gamma) u = Psi is
solved in closed form: the substitution u = w / sqrt(Sigma) removes the
first-order term at the price of the effective mass q = g'^2 + g'' with
g = log sqrt(Sigma), and w obeys a pure oscillator driven by
sqrt(Sigma) Psi whose Duhamel kernel uses the zeta-averaged mass
qbar(D) = int_0^1 q(D z) dz.  The convolution is evaluated with composite
4-point Gauss-Legendre panels on the uniform output grid via FFT.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.signal import fftconvolve

from .errors import InvalidArgumentError, NumericFailureError
from .geometry import SpectralBasis
from .magnus import wave_cos, wave_sinc, wave_sinc_prime

__all__ = [
    "TimeLapse",
    "MembraneOperator",
    "PatchSource",
    "MembraneSolution",
    "time_lapse_from_damping",
    "exponential_lapse",
    "power_lapse",
    "unit_lapse",
    "damping_ode_solve",
    "effective_mass",
    "solve_membrane",
    "harmonic_patch_source",
]

_PANEL_NODES, _PANEL_WEIGHTS = leggauss(4)
_PANEL_NODES = 0.5 * (_PANEL_NODES + 1.0)
_PANEL_WEIGHTS = 0.5 * _PANEL_WEIGHTS
_ZETA_NODES, _ZETA_WEIGHTS = leggauss(16)
_ZETA_NODES = 0.5 * (_ZETA_NODES + 1.0)
_ZETA_WEIGHTS = 0.5 * _ZETA_WEIGHTS


@dataclass(frozen=True)
class TimeLapse:
    """Time-lapse function Sigma = 1/D^2 with derivatives of log sqrt(Sigma).

    ``g1`` and ``g2`` are the first and second time derivatives of
    log sqrt(Sigma); the effective mass is q = g1^2 + g2.
    """

    sigma: Callable[[np.ndarray], np.ndarray]
    g1: Callable[[np.ndarray], np.ndarray]
    g2: Callable[[np.ndarray], np.ndarray]
    family: str = "custom"

    def damping(self, t: np.ndarray) -> np.ndarray:
        return 1.0 / np.sqrt(self.sigma(t))

    def sqrt_sigma(self, t: np.ndarray) -> np.ndarray:
        s = np.asarray(self.sigma(np.asarray(t, dtype=float)), dtype=float)
        if np.any(s < 1.0 - 1e-9):
            raise InvalidArgumentError("time lapse must satisfy Sigma >= 1")
        return np.sqrt(s)

    def mass(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.asarray(self.g1(t), dtype=float) ** 2 + np.asarray(self.g2(t), dtype=float)


def exponential_lapse(alpha: float) -> TimeLapse:
    """Sigma = exp(2 alpha t) (linear damping D = exp(-alpha t))."""
    if alpha < 0:
        raise InvalidArgumentError("damping rate must be nonnegative")
    return TimeLapse(
        sigma=lambda t: np.exp(2.0 * alpha * np.asarray(t, dtype=float)),
        g1=lambda t: np.full_like(np.asarray(t, dtype=float), alpha),
        g2=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        family="exponential",
    )


def power_lapse(rate: float = 1.0) -> TimeLapse:
    """Sigma = (1 + rate*t)^2 (damping D = 1/(1 + rate*t))."""
    if rate < 0:
        raise InvalidArgumentError("rate must be nonnegative")
    return TimeLapse(
        sigma=lambda t: (1.0 + rate * np.asarray(t, dtype=float)) ** 2,
        g1=lambda t: rate / (1.0 + rate * np.asarray(t, dtype=float)),
        g2=lambda t: -(rate**2) / (1.0 + rate * np.asarray(t, dtype=float)) ** 2,
        family="power",
    )


def unit_lapse() -> TimeLapse:
    """No damping: Sigma = 1."""
    return TimeLapse(
        sigma=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        g1=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        g2=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        family="none",
    )


def time_lapse_from_damping(
    damping: Callable[[np.ndarray], np.ndarray],
    step: float = 1e-6,
) -> TimeLapse:
    """Build a TimeLapse from a damping function D(t).

    Sigma = 1/D^2; derivatives of log sqrt(Sigma) = -log D are taken by
    central differences with the given step.
    """
    d0 = float(np.asarray(damping(np.zeros(1)))[0])
    if abs(d0 - 1.0) > 1e-8:
        raise InvalidArgumentError("damping must satisfy D(0) = 1")

    def _d(t):
        val = np.asarray(damping(np.asarray(t, dtype=float)), dtype=float)
        if np.any(val <= 0):
            raise InvalidArgumentError("damping must stay positive")
        return val

    def g(t):
        return -np.log(_d(t))

    def g1(t):
        t = np.asarray(t, dtype=float)
        return (g(t + step) - g(np.maximum(t - step, 0.0))) / (
            step + np.minimum(t, step)
        )

    def g2(t):
        t = np.asarray(t, dtype=float)
        tm = np.maximum(t, step)  # one-sided guard near t = 0
        return (g(tm + step) - 2.0 * g(tm) + g(tm - step)) / step**2

    return TimeLapse(sigma=lambda t: 1.0 / _d(t) ** 2, g1=g1, g2=g2, family="custom")


def effective_mass(lapse: TimeLapse, t: np.ndarray | float) -> np.ndarray | float:
    """Effective mass q(t) = (d log sqrt(Sigma))^2 + d^2 log sqrt(Sigma).

    The sign convention is fixed by the exponential check: for
    Sigma = exp(2 alpha t) the modal frequency squared is P(gamma) - alpha^2.
    """
    out = lapse.mass(np.asarray(t, dtype=float))
    return out if out.ndim else float(out)


def damping_ode_solve(
    f1: Callable[[float], float],
    f2: Callable[[float], float],
    g: Callable[[float], float] | None,
    alpha: float,
    t_grid: np.ndarray,
) -> np.ndarray:
    """Damping values for D' = -alpha f1(t) f2(D) + g(t), D(0) = 1.

    The separable homogeneous part is solved by inverting
    H2(D) = int_1^D dx/f2(x) = -alpha H1(t), H1(t) = int_0^t f1; a nonzero
    g adds the first-order variation-of-constants correction about the
    homogeneous solution.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    # cumulative H1 on the grid
    h1 = np.zeros_like(t_grid)
    for i in range(1, len(t_grid)):
        h1[i] = h1[i - 1] + quad(f1, t_grid[i - 1], t_grid[i], epsabs=1e-12)[0]

    def h2(x: float) -> float:
        return quad(lambda y: 1.0 / f2(y), 1.0, x, epsabs=1e-12)[0]

    d_hom = np.empty_like(t_grid)
    for i, target in enumerate(-alpha * h1):
        if target == 0.0:
            d_hom[i] = 1.0
            continue
        lo, hi = 1.0, 1.0
        while h2(lo) > target:
            if lo <= 1e-12:
                raise NumericFailureError("could not bracket the damping ODE inverse")
            lo *= 0.5
        try:
            d_hom[i] = brentq(lambda x: h2(x) - target, lo, hi, xtol=1e-14)
        except ValueError as exc:
            raise NumericFailureError(f"damping inversion failed: {exc}") from exc
    if g is None:
        return d_hom
    g_vals = np.array([g(t) for t in t_grid])
    if np.all(g_vals == 0.0):
        return d_hom
    # variation of constants about the homogeneous solution
    eps = 1e-7
    f2p = np.array([(f2(x + eps) - f2(x - eps)) / (2 * eps) for x in d_hom])
    f1_vals = np.array([f1(t) for t in t_grid])
    rate = alpha * f1_vals * f2p
    phi = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t_grid))])
    corr = np.zeros_like(t_grid)
    integrand = np.exp(phi) * g_vals
    cumulative = np.concatenate(
        [[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(t_grid))]
    )
    corr = np.exp(-phi) * cumulative
    return d_hom + corr


@dataclass(frozen=True)
class MembraneOperator:
    """Stiffness data: P(gamma) = c_m2 * gamma - c_H2 * d^2 * gamma^2."""

    c_m2: float
    c_H2: float
    d: float

    def __post_init__(self):
        if self.c_m2 <= 0 or self.c_H2 < 0 or self.d <= 0:
            raise InvalidArgumentError("membrane parameters must be positive")

    def stiffness(self, gamma: np.ndarray | float) -> np.ndarray | float:
        gamma = np.asarray(gamma, dtype=float)
        out = self.c_m2 * gamma - self.c_H2 * self.d**2 * gamma**2
        return out if out.ndim else float(out)

    def validate_spectrum(self, gamma_max: float) -> None:
        if self.c_m2 <= self.c_H2 * self.d**2 * gamma_max:
            raise InvalidArgumentError(
                "stiffness constraint violated: c_m2 must exceed c_H2 d^2 gamma_max"
            )


@dataclass(frozen=True)
class PatchSource:
    """Time-indexed modal coefficients of the forcing Psi on a patch basis.

    ``values`` holds samples on ``t_grid``; ``evaluator`` (optional) returns
    exact values at arbitrary times and is used at quadrature nodes when
    present, otherwise a cubic spline of the samples is used.
    """

    basis: SpectralBasis
    t_grid: np.ndarray
    values: np.ndarray
    evaluator: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        values = np.asarray(self.values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "t_grid", np.asarray(self.t_grid, dtype=float))
        if values.shape != (len(self.t_grid), self.basis.size):
            raise InvalidArgumentError("source values must have shape (n_times, n_modes)")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("source values must be finite")

    def sample(self, times: np.ndarray) -> np.ndarray:
        if self.evaluator is not None:
            return np.asarray(self.evaluator(np.asarray(times, dtype=float)))
        if np.all(self.values == 0):
            return np.zeros((len(times), self.basis.size), dtype=self.values.dtype)
        spline = CubicSpline(self.t_grid, self.values, axis=0)
        return spline(np.asarray(times, dtype=float))


def harmonic_patch_source(
    basis: SpectralBasis, t_grid: np.ndarray, amplitudes: np.ndarray, omega: float
) -> PatchSource:
    """Psi(t) = amplitudes * exp(i omega t) with an exact evaluator."""
    t_grid = np.asarray(t_grid, dtype=float)
    amplitudes = np.asarray(amplitudes)

    def evaluator(times):
        return np.exp(1j * omega * np.asarray(times))[:, None] * amplitudes[None, :]

    return PatchSource(basis, t_grid, evaluator(t_grid), evaluator)


@dataclass(frozen=True)
class MembraneSolution:
    """Displacement, velocity and acceleration samples per patch mode."""

    basis: SpectralBasis
    t_grid: np.ndarray
    u: np.ndarray
    udot: np.ndarray
    uddot: np.ndarray


def _uniform_step(t_grid: np.ndarray) -> float:
    diffs = np.diff(t_grid)
    if len(diffs) == 0 or np.any(diffs <= 0):
        raise InvalidArgumentError("time grid must be strictly increasing")
    h = float(diffs[0])
    if not np.allclose(diffs, h, rtol=1e-10, atol=1e-14):
        raise InvalidArgumentError("time grid must be uniform")
    return h


def _zeta_averaged_mass(lapse: TimeLapse, deltas: np.ndarray) -> np.ndarray:
    """qbar(Delta) = int_0^1 q(Delta * zeta) d zeta by 16-point Gauss."""
    pts = deltas[:, None] * _ZETA_NODES[None, :]
    return lapse.mass(pts) @ _ZETA_WEIGHTS


def solve_membrane(
    basis: SpectralBasis,
    op: MembraneOperator,
    lapse: TimeLapse,
    src: PatchSource,
    t_grid: np.ndarray,
    mass_mode: str = "zeta-average",
    stiffness: np.ndarray | None = None,
) -> MembraneSolution:
    """Closed-form Duhamel solution of the damped modal equations.

    u_k(t) = int_0^t (sqrt(Sigma(tau))/sqrt(Sigma(t)))
             * sin((t-tau) s_k(t-tau)) / s_k(t-tau) * Psi_k(tau) d tau
    with s_k(Delta)^2 = P(gamma_k) - qbar(Delta); over-damped modes fall
    back to the hyperbolic branch automatically.  Velocities use the exact
    kernel derivative, accelerations the equation itself.
    """
    if mass_mode not in ("zeta-average", "pointwise"):
        raise InvalidArgumentError("mass_mode must be 'zeta-average' or 'pointwise'")
    t_grid = np.asarray(t_grid, dtype=float)
    h = _uniform_step(t_grid)
    n_panels = len(t_grid) - 1
    if stiffness is None:
        op.validate_spectrum(float(np.max(basis.eigenvalues)))
        pvals = np.asarray(op.stiffness(basis.eigenvalues), dtype=float)
    else:
        pvals = np.asarray(stiffness, dtype=float)
        if pvals.shape != (basis.size,):
            raise InvalidArgumentError("stiffness override must have one entry per mode")
    if not np.all(np.isfinite(pvals)):
        raise NumericFailureError("non-finite stiffness values")
    omega_max = math.sqrt(max(float(np.max(np.abs(pvals))), 0.0))
    if omega_max * h > 0.2 + 1e-12:
        warnings.warn(
            f"time step {h:.3g} exceeds the accuracy contract 0.2/max frequency "
            f"({0.2 / max(omega_max, 1e-300):.3g})",
            stacklevel=2,
        )
    sqrt_sigma_t = lapse.sqrt_sigma(t_grid)
    # For the exponential family the weight sqrt(Sigma(tau))/sqrt(Sigma(t))
    # depends only on t - tau, so it can be folded into the difference kernel.
    # This keeps every array O(1) instead of O(exp(alpha * t_final)), which
    # would otherwise dominate the FFT roundoff at early times.
    exp_rate: float | None = None
    if lapse.family == "exponential":
        exp_rate = float(np.asarray(lapse.g1(np.zeros(1)))[0])
    complex_src = np.iscomplexobj(src.values)
    dtype = complex if complex_src else float
    m = basis.size
    u_w = np.zeros((len(t_grid), m), dtype=dtype)
    v_w = np.zeros((len(t_grid), m), dtype=dtype)
    if n_panels > 0:
        mrange = np.arange(1, n_panels + 1)
        for xg, wg in zip(_PANEL_NODES, _PANEL_WEIGHTS):
            taus = t_grid[:-1] + h * xg
            if exp_rate is None:
                s_vals = (lapse.sqrt_sigma(taus)[:, None] * src.sample(taus)).T  # (M, N)
            else:
                s_vals = src.sample(taus).T  # (M, N)
            deltas = h * (mrange - xg)  # (N,)
            if mass_mode == "zeta-average":
                qbar = _zeta_averaged_mass(lapse, deltas)
                qbar_prime = (lapse.mass(deltas) - qbar) / deltas
                freq2 = pvals[:, None] - qbar[None, :]  # (M, N)
                z = deltas[None, :] ** 2 * freq2
                zprime = 2.0 * deltas[None, :] * freq2 - deltas[None, :] ** 2 * qbar_prime[None, :]
                kern = deltas[None, :] * wave_sinc(z)
                kern_d = wave_sinc(z) + deltas[None, :] * wave_sinc_prime(z) * zprime
                if exp_rate is not None:
                    damp = np.exp(-exp_rate * deltas)[None, :]
                    kern_d = damp * (kern_d - exp_rate * kern)
                    kern = damp * kern
                conv = fftconvolve(kern, s_vals, axes=1)[:, :n_panels]
                conv_d = fftconvolve(kern_d, s_vals, axes=1)[:, :n_panels]
                u_w[1:] += (h * wg) * conv.T
                v_w[1:] += (h * wg) * conv_d.T
            else:
                # pointwise mass: kernel frequency uses q at the source time,
                # so the integrand is no longer a pure convolution
                q_tau = lapse.mass(taus)  # (N,)
                for i in range(1, len(t_grid)):
                    dl = t_grid[i] - taus[:i]  # (i,)
                    z = dl[None, :] ** 2 * (pvals[:, None] - q_tau[None, :i])
                    kern = dl[None, :] * wave_sinc(z)
                    kern_d = wave_cos(z)
                    if exp_rate is not None:
                        damp = np.exp(-exp_rate * dl)[None, :]
                        kern_d = damp * (kern_d - exp_rate * kern)
                        kern = damp * kern
                    u_w[i] += (h * wg) * (kern * s_vals[:, :i]).sum(axis=1)
                    v_w[i] += (h * wg) * (kern_d * s_vals[:, :i]).sum(axis=1)
    g1_t = np.asarray(lapse.g1(t_grid), dtype=float)
    if exp_rate is None:
        u = u_w / sqrt_sigma_t[:, None]
        udot = (v_w - g1_t[:, None] * u_w) / sqrt_sigma_t[:, None]
    else:
        # damping already folded into the kernel; u_w, v_w are u and udot
        u = u_w
        udot = v_w
    psi_t = src.values if src.t_grid.shape == t_grid.shape and np.allclose(src.t_grid, t_grid) else src.sample(t_grid)
    uddot = psi_t - 2.0 * g1_t[:, None] * udot - pvals[None, :] * u
    if not np.all(np.isfinite(u)):
        raise NumericFailureError("membrane solve produced non-finite values")
    return MembraneSolution(basis=basis, t_grid=t_grid, u=u, udot=udot, uddot=uddot)
