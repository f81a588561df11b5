"""Magnus-expansion machinery and wave-propagator kernels.

Provides Bernoulli numbers, the first three graded Magnus terms of a
non-autonomous linear system, a convergence certificate, a
scaling-and-squaring matrix exponential, and the scalar sine/cosine
kernels (with an explicit hyperbolic branch for over-damped modes) used
by every closed-form Duhamel solution in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, pi
from typing import Callable

import numpy as np
from scipy.integrate import quad, quad_vec

from .errors import InvalidArgumentError, NumericFailureError, UnsupportedError

__all__ = [
    "TimeDependentGenerator",
    "MagnusGenerator",
    "bernoulli",
    "magnus_terms",
    "convergence_certificate",
    "matrix_exponential",
    "sine_kernel",
    "cosine_kernel",
    "hyperbolic_sine_kernel",
    "block_wave_exponential",
    "wave_sinc",
    "wave_cos",
    "wave_sinc_prime",
]

_QUAD_ABS_TOL = 1e-11


@dataclass(frozen=True)
class TimeDependentGenerator:
    """Square-matrix-valued function of time, A(t)."""

    evaluator: Callable[[float], np.ndarray]
    dimension: int

    def __call__(self, t: float) -> np.ndarray:
        a = np.asarray(self.evaluator(t), dtype=float)
        if a.shape != (self.dimension, self.dimension):
            raise InvalidArgumentError(
                f"generator returned shape {a.shape}, expected square of size {self.dimension}"
            )
        if not np.all(np.isfinite(a)):
            raise NumericFailureError(f"generator produced non-finite entries at t={t}")
        return a


@dataclass(frozen=True)
class MagnusGenerator:
    """Graded expansion terms for one time interval."""

    terms: tuple[np.ndarray, ...]
    interval: tuple[float, float]

    def total(self) -> np.ndarray:
        return sum(self.terms[1:], self.terms[0])


def bernoulli(k: int) -> Fraction:
    """Bernoulli number B_k from the generating function x/(e^x - 1)."""
    if k < 0:
        raise InvalidArgumentError("index must be nonnegative")
    if k > 20:
        raise UnsupportedError("Bernoulli numbers implemented up to k = 20")
    # Recurrence sum_{j<=m} C(m+1, j) B_j = 0 for m >= 1, with B_0 = 1.
    b = [Fraction(1)]
    for m in range(1, k + 1):
        s = sum(Fraction(comb(m + 1, j)) * b[j] for j in range(m))
        b.append(-s / (m + 1))
    return b[k]


def _commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def magnus_terms(
    gen: TimeDependentGenerator, tau: float, t: float, order: int
) -> MagnusGenerator:
    """First one to three graded expansion terms over [tau, t].

    Term 1 is the plain integral of A; term 2 the half-integral of the
    ordered commutator; term 3 the sixth of the doubly nested commutator
    integrals.  All integrals use adaptive Gauss-Kronrod quadrature.
    """
    if order not in (1, 2, 3):
        raise InvalidArgumentError("order must be 1, 2 or 3")
    if tau > t:
        raise InvalidArgumentError("interval must satisfy tau <= t")
    terms: list[np.ndarray] = []

    def integrate(f, lo, hi):
        try:
            val, err = quad_vec(
                f, lo, hi, epsabs=_QUAD_ABS_TOL, epsrel=1e-11, quadrature="gk15"
            )
        except Exception as exc:  # pragma: no cover - scipy internal failure
            raise NumericFailureError(f"quadrature failed on [{lo}, {hi}]: {exc}") from exc
        if not np.all(np.isfinite(val)):
            raise NumericFailureError("quadrature produced non-finite result")
        return val

    terms.append(integrate(gen, tau, t))
    if order >= 2:
        def inner2(t1):
            return integrate(lambda t2: _commutator(gen(t1), gen(t2)), tau, t1)

        terms.append(0.5 * integrate(inner2, tau, t))
    if order >= 3:
        def inner3(t1):
            a1 = gen(t1)

            def mid(t2):
                a2 = gen(t2)

                def core(t3):
                    a3 = gen(t3)
                    return _commutator(a1, _commutator(a2, a3)) + _commutator(
                        a3, _commutator(a2, a1)
                    )

                return integrate(core, tau, t2)

            return integrate(mid, tau, t1)

        terms.append(integrate(inner3, tau, t) / 6.0)
    return MagnusGenerator(terms=tuple(terms), interval=(tau, t))


def convergence_certificate(
    gen: TimeDependentGenerator, tau: float, t: float
) -> tuple[float, bool]:
    """Integral of the Frobenius norm of A; sufficient bound is pi."""
    if tau > t:
        raise InvalidArgumentError("interval must satisfy tau <= t")
    value, _ = quad(lambda s: float(np.linalg.norm(gen(s))), tau, t, epsabs=1e-11, limit=200)
    return value, value < pi


def matrix_exponential(m: np.ndarray) -> np.ndarray:
    """Scaling-and-squaring matrix exponential (Taylor core)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError("matrix_exponential expects a square matrix")
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError("matrix entries must be finite")
    norm = np.linalg.norm(m)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.25))) if norm > 0.25 else 0)
    a = m / (2.0**squarings)
    out = np.eye(m.shape[0])
    term = np.eye(m.shape[0])
    for k in range(1, 60):
        term = term @ a / k
        out = out + term
        if np.linalg.norm(term) < 1e-18 * max(np.linalg.norm(out), 1.0):
            break
    for _ in range(squarings):
        out = out @ out
        if not np.all(np.isfinite(out)):
            raise NumericFailureError("overflow while squaring the exponential")
    return out


def wave_sinc(z: np.ndarray | float) -> np.ndarray:
    """f(z) = sin(sqrt(z))/sqrt(z) for z > 0, sinh for z < 0, 1 at 0.

    This is the entire function sum (-z)^k / (2k+1)!, evaluated stably on
    both branches; the oscillator kernel is Delta * wave_sinc(Delta^2 w2).
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-8
    zs = z[small]
    out[small] = 1.0 - zs / 6.0 + zs * zs / 120.0
    pos = (~small) & (z > 0)
    neg = (~small) & (z < 0)
    sq = np.sqrt(z[pos])
    out[pos] = np.sin(sq) / sq
    sq = np.sqrt(-z[neg])
    out[neg] = np.sinh(sq) / sq
    return out


def wave_cos(z: np.ndarray | float) -> np.ndarray:
    """cos(sqrt(z)) for z >= 0, cosh(sqrt(-z)) for z < 0 (entire in z)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = np.cos(np.sqrt(z[pos]))
    out[~pos] = np.cosh(np.sqrt(-z[~pos]))
    return out


def wave_sinc_prime(z: np.ndarray | float) -> np.ndarray:
    """Derivative of wave_sinc with respect to z (stable at z = 0)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-6
    zs = z[small]
    out[small] = -1.0 / 6.0 + zs / 60.0 - zs * zs / 1680.0
    big = ~small
    out[big] = (wave_cos(z[big]) - wave_sinc(z[big])) / (2.0 * z[big])
    return out


def sine_kernel(lam: np.ndarray | float, dt: np.ndarray | float) -> np.ndarray | float:
    """sin(dt sqrt(lam))/sqrt(lam), continuous value dt at lam = 0."""
    lam = np.asarray(lam, dtype=float)
    dt = np.asarray(dt, dtype=float)
    if np.any(lam < 0):
        raise InvalidArgumentError(
            "negative frequency-squared: use hyperbolic_sine_kernel for the over-damped branch"
        )
    if np.any(dt < 0):
        raise InvalidArgumentError("dt must be nonnegative")
    out = dt * wave_sinc(dt * dt * lam)
    return out if out.ndim else float(out)


def cosine_kernel(lam: np.ndarray | float, dt: np.ndarray | float) -> np.ndarray | float:
    """cos(dt sqrt(lam))."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise InvalidArgumentError(
            "negative frequency-squared: use the hyperbolic branch explicitly"
        )
    out = wave_cos(np.asarray(dt, dtype=float) ** 2 * lam)
    return out if out.ndim else float(out)


def hyperbolic_sine_kernel(mu: np.ndarray | float, dt: np.ndarray | float) -> np.ndarray | float:
    """sinh(dt sqrt(mu))/sqrt(mu) for the over-damped branch, mu >= 0."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0):
        raise InvalidArgumentError("hyperbolic kernel needs mu >= 0")
    dt = np.asarray(dt, dtype=float)
    out = dt * wave_sinc(-(dt * dt) * mu)
    return out if out.ndim else float(out)


def block_wave_exponential(lams: np.ndarray, dt: float) -> np.ndarray:
    """2x2 propagator blocks of (w, dw/dt) for w'' = -lam w, per eigenvalue.

    Returns shape (len(lams), 2, 2):
    [[cos(dt s), sin(dt s)/s], [-lam sin(dt s)/s, cos(dt s)]], s = sqrt(lam).
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if np.any(lams < 0):
        raise InvalidArgumentError("eigenvalues must be nonnegative")
    if dt < 0:
        raise InvalidArgumentError("dt must be nonnegative")
    c = cosine_kernel(lams, dt)
    s = sine_kernel(lams, np.full_like(lams, dt))
    out = np.empty((lams.size, 2, 2))
    out[:, 0, 0] = c
    out[:, 0, 1] = s
    out[:, 1, 0] = -lams * s
    out[:, 1, 1] = c
    return out
