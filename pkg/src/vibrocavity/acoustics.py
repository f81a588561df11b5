"""Cavity pressure dynamics and geometric perturbation diagnostics.

The cavity pressure is evolved with closed-form Duhamel sine kernels per
Neumann mode, driven by the boundary-trace integral of the wall
acceleration.  Wall motion also induces a pull-back metric perturbation on
the fibered reference box; this module assembles that perturbation, the
associated operators V (spatial), T (temporal) and W = V + T as Galerkin
matrices, first/second-order eigenvalue corrections, and the relative
magnitude of the kernel correction terms these operators generate.

Conventions: each patch owns a fibration coordinate s in [0, 1] measuring
the normalized distance from its wall across the cavity depth L_f, with
fiber metric coefficient g_ss = L_f^2; the wall displacement u extends
into the cavity as U = (1 - s) u.  The temporal index is raised with -1
(time measured in units where the sound speed is 1), which only sets the
relative weight of T against V in the diagnostics.  Quadratic forms use
the real part of the harmonic bookkeeping, so all operator matrices are
real symmetric.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve

from .errors import (
    DegenerateEigenvalueError,
    EnvelopeViolationError,
    InvalidArgumentError,
    NumericFailureError,
)
from .geometry import (
    CavityGeometry,
    ModalField,
    PatchGeometry,
    SpectralBasis,
    coupling_matrix,
    gauss_rule,
)
from .magnus import wave_sinc
from .membrane import (
    _PANEL_NODES,
    _PANEL_WEIGHTS,
    MembraneSolution,
    _uniform_step,
)

__all__ = [
    "AcousticMedium",
    "PatchVibration",
    "BoundaryVibration",
    "MetricPerturbation",
    "assemble_metric_perturbation",
    "assemble_V",
    "assemble_T_and_W",
    "eigenvalue_shift",
    "eigenfunction_correction",
    "PressureSolution",
    "solve_pressure",
    "kernel_correction_diagnostic",
]

_ZETA8_NODES, _ZETA8_WEIGHTS = gauss_rule(8, 0.0, 1.0)


@dataclass(frozen=True)
class AcousticMedium:
    """Homogeneous fluid filling the cavity."""

    c: float
    rho0: float

    def __post_init__(self):
        if self.c <= 0 or self.rho0 <= 0:
            raise InvalidArgumentError("sound speed and density must be positive")


@dataclass(frozen=True)
class PatchVibration:
    """Modal displacement history of one wall patch.

    ``u``, ``udot`` and ``uddot`` hold samples of shape (n_times, n_modes)
    on ``t_grid``.  ``accel_evaluator`` (optional) returns exact
    accelerations at arbitrary times; otherwise a cubic spline of the
    samples is used.
    """

    patch: PatchGeometry
    basis: SpectralBasis
    t_grid: np.ndarray
    u: np.ndarray
    udot: np.ndarray
    uddot: np.ndarray
    accel_evaluator: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        object.__setattr__(self, "t_grid", t)
        for name in ("u", "udot", "uddot"):
            arr = np.asarray(getattr(self, name))
            object.__setattr__(self, name, arr)
            if arr.shape != (len(t), self.basis.size):
                raise InvalidArgumentError(f"{name} must have shape (n_times, n_modes)")
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError(f"{name} must be finite")

    @classmethod
    def from_solution(
        cls,
        patch: PatchGeometry,
        sol: MembraneSolution,
        accel_evaluator: Callable[[np.ndarray], np.ndarray] | None = None,
    ) -> "PatchVibration":
        return cls(patch, sol.basis, sol.t_grid, sol.u, sol.udot, sol.uddot, accel_evaluator)

    @classmethod
    def from_samples(
        cls,
        patch: PatchGeometry,
        basis: SpectralBasis,
        t_grid: np.ndarray,
        u: np.ndarray,
    ) -> "PatchVibration":
        """Build velocities and accelerations by centered second-order
        differences of the displacement samples."""
        t_grid = np.asarray(t_grid, dtype=float)
        u = np.asarray(u)
        udot = np.gradient(u, t_grid, axis=0, edge_order=2)
        uddot = np.gradient(udot, t_grid, axis=0, edge_order=2)
        return cls(patch, basis, t_grid, u, udot, uddot)

    def accel_sample(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if self.accel_evaluator is not None:
            return np.asarray(self.accel_evaluator(times))
        if np.all(self.uddot == 0):
            return np.zeros((len(times), self.basis.size), dtype=self.uddot.dtype)
        return CubicSpline(self.t_grid, self.uddot, axis=0)(times)

    def scaled(self, factor: float) -> "PatchVibration":
        ev = self.accel_evaluator
        scaled_ev = None if ev is None else (lambda t: factor * np.asarray(ev(t)))
        return PatchVibration(
            self.patch,
            self.basis,
            self.t_grid,
            factor * self.u,
            factor * self.udot,
            factor * self.uddot,
            scaled_ev,
        )


@dataclass(frozen=True)
class BoundaryVibration:
    """Displacement histories of every vibrating patch of a cavity.

    ``epsilon`` is the dimensionless vibration scale against which the
    physical envelope |u| <= 3 epsilon is checked.
    """

    geom: CavityGeometry
    patches: tuple[PatchVibration, ...]
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "patches", tuple(self.patches))
        if self.epsilon <= 0:
            raise InvalidArgumentError("epsilon must be positive")
        if not self.patches:
            raise InvalidArgumentError("at least one vibrating patch is required")
        t0 = self.patches[0].t_grid
        for pv in self.patches[1:]:
            if pv.t_grid.shape != t0.shape or not np.allclose(pv.t_grid, t0):
                raise InvalidArgumentError("all patches must share one time grid")

    @property
    def t_grid(self) -> np.ndarray:
        return self.patches[0].t_grid

    def scaled(self, factor: float) -> "BoundaryVibration":
        return BoundaryVibration(
            self.geom,
            tuple(pv.scaled(factor) for pv in self.patches),
            abs(factor) * self.epsilon,
        )


def _max_abs_displacement(vib: BoundaryVibration) -> float:
    out = 0.0
    for pv in vib.patches:
        modes = pv.basis.mode_values()
        vals = np.tensordot(pv.u, modes, axes=([1], [0]))
        out = max(out, float(np.max(np.abs(vals))) if vals.size else 0.0)
    return out


def _check_envelope(vib: BoundaryVibration) -> None:
    peak = _max_abs_displacement(vib)
    bound = 3.0 * vib.epsilon
    if peak > bound * (1.0 + 1e-12):
        raise EnvelopeViolationError(
            f"displacement peak {peak:.3g} exceeds the physical envelope {bound:.3g}"
        )


class MetricPerturbation:
    """Pointwise pull-back metric perturbation of the fibered box.

    ``delta_G(patch_index, t, s, y)`` returns the symmetric
    (dim+1) x (dim+1) matrix in coordinates (t, s, tangentials); the
    spatial metric perturbation ``delta_g`` is its lower-right block.
    """

    def __init__(self, vibration: BoundaryVibration, geom: CavityGeometry):
        self.vibration = vibration
        self.geom = geom
        self._u_spline = [CubicSpline(pv.t_grid, pv.u, axis=0) for pv in vibration.patches]
        self._udot_spline = [CubicSpline(pv.t_grid, pv.udot, axis=0) for pv in vibration.patches]

    def _point_values(self, patch_index: int, t: float, y: tuple[float, ...]):
        pv = self.vibration.patches[patch_index]
        basis = pv.basis
        n_tan = self.geom.dim - 1
        if len(y) != n_tan:
            raise InvalidArgumentError(f"expected {n_tan} tangential coordinates")
        pts = tuple(np.array([float(yi)]) for yi in y)
        cu = np.real(self._u_spline[patch_index](t))
        cud = np.real(self._udot_spline[patch_index](t))

        def synth(coef, derivs):
            vals = basis.mode_values(pts, derivs=derivs)
            return float(np.tensordot(coef, vals, axes=([0], [0])).ravel()[0])

        zero = (0,) * n_tan
        u = synth(cu, zero)
        ut = synth(cud, zero)
        du = [synth(cu, tuple(1 if a == k else 0 for a in range(n_tan))) for k in range(n_tan)]
        return u, ut, du

    def delta_G(self, patch_index: int, t: float, s: float, y: tuple[float, ...] = ()) -> np.ndarray:
        if not 0.0 <= s <= 1.0:
            raise InvalidArgumentError("fibration coordinate s must lie in [0, 1]")
        pv = self.vibration.patches[patch_index]
        u, ut, du = self._point_values(patch_index, t, y)
        dim = self.geom.dim
        lf = self.geom.edge_lengths[pv.patch.face_axis]
        r = 1.0 - s
        mat = np.zeros((dim + 1, dim + 1))
        mat[0, 0] = r * r * ut * ut
        mat[0, 1] = mat[1, 0] = -r * u * ut
        mat[1, 1] = u * u
        for i, di in enumerate(du):
            mat[0, 2 + i] = mat[2 + i, 0] = -r * r * ut * di
            mat[1, 2 + i] = mat[2 + i, 1] = -r * u * di
            for j, dj in enumerate(du):
                mat[2 + i, 2 + j] = r * r * di * dj
        return lf * lf * mat

    def delta_g(self, patch_index: int, t: float, s: float, y: tuple[float, ...] = ()) -> np.ndarray:
        return self.delta_G(patch_index, t, s, y)[1:, 1:]


def assemble_metric_perturbation(u: BoundaryVibration, geom: CavityGeometry) -> MetricPerturbation:
    """Envelope-checked pointwise metric perturbation built from u."""
    _check_envelope(u)
    return MetricPerturbation(u, geom)


class _PatchAssemblyGrid:
    """Precomputed quadrature data for the Galerkin assembly on one patch.

    The grid is the tensor product of a Gauss rule across the cavity depth
    (normal axis) and Gauss rules on the patch rectangle (tangential
    axes); cavity-mode values and first derivatives are tabulated once.
    """

    def __init__(self, cavity_basis: SpectralBasis, geom: CavityGeometry, pv: PatchVibration):
        patch = pv.patch
        dim = geom.dim
        f = patch.face_axis
        self.f = f
        self.lf = geom.edge_lengths[f]
        self.sigma = 1.0 if patch.side == 0 else -1.0
        self.tan_axes = geom.tangential_axes(patch)
        kmax_c = int(cavity_basis.multi_indices.max())
        if pv.basis.kind == "patch-dirichlet":
            kmax_p = int(pv.basis.multi_indices.max())
        else:
            kmax_p = 0

        axes_points: list[np.ndarray] = [None] * dim  # type: ignore[list-item]
        axes_weights: list[np.ndarray] = [None] * dim  # type: ignore[list-item]
        xn, wn = gauss_rule(3 * kmax_c + 10, 0.0, self.lf)
        axes_points[f], axes_weights[f] = xn, wn
        tan_pts = []
        for (lo, hi), a in zip(geom.patch_rect(patch), self.tan_axes):
            xt, wt = gauss_rule(3 * (kmax_c + kmax_p) + 8, lo, hi)
            axes_points[a], axes_weights[a] = xt, wt
            tan_pts.append(xt)
        self.tan_pts = tuple(tan_pts)
        self.grid_shape = tuple(len(p) for p in axes_points)

        mc = cavity_basis.size
        pts = tuple(axes_points)
        self.psi = cavity_basis.mode_values(pts).reshape(mc, -1)
        self.dpsi = [
            cavity_basis.mode_values(
                pts, derivs=tuple(1 if b == a else 0 for b in range(dim))
            ).reshape(mc, -1)
            for a in range(dim)
        ]
        w = np.ones(())
        for a in range(dim):
            w = np.multiply.outer(w, axes_weights[a])
        self.w = w.reshape(-1)

        wall = 0.0 if patch.side == 0 else self.lf
        s1d = np.abs(xn - wall) / self.lf
        shape = [1] * dim
        shape[f] = len(xn)
        self.r = (
            np.broadcast_to(1.0 - s1d.reshape(shape), self.grid_shape).reshape(-1)
        )

        n_tan = len(self.tan_axes)
        basis = pv.basis
        self.phi0 = basis.mode_values(self.tan_pts)
        self.phid = [
            basis.mode_values(self.tan_pts, derivs=tuple(1 if b == k else 0 for b in range(n_tan)))
            for k in range(n_tan)
        ]
        self.phidd = {
            (i, j): basis.mode_values(
                self.tan_pts,
                derivs=tuple((2 if i == j else 1) if b in (i, j) else 0 for b in range(n_tan)),
            )
            for i in range(n_tan)
            for j in range(i, n_tan)
        }

    def expand(self, tan_field: np.ndarray) -> np.ndarray:
        """Broadcast a tangential-grid field over the full flattened grid."""
        shape = [1] * len(self.grid_shape)
        arr = np.asarray(tan_field)
        for pos, a in enumerate(self.tan_axes):
            shape[a] = arr.shape[pos] if arr.ndim else 1
        return np.broadcast_to(arr.reshape(shape), self.grid_shape).reshape(-1)

    def synth(self, coef: np.ndarray, table: np.ndarray) -> np.ndarray:
        return self.expand(np.tensordot(coef, table, axes=([0], [0])))


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _v_matrix(grid: _PatchAssemblyGrid, cu: np.ndarray) -> np.ndarray:
    """Galerkin matrix of the spatial perturbation operator on one patch."""
    n_tan = len(grid.tan_axes)
    w, r, lf, sg = grid.w, grid.r, grid.lf, grid.sigma
    u = grid.synth(cu, grid.phi0)
    du = [grid.synth(cu, grid.phid[k]) for k in range(n_tan)]
    d2u = {}
    for i in range(n_tan):
        for j in range(i, n_tan):
            d2u[(i, j)] = d2u[(j, i)] = grid.synth(cu, grid.phidd[(i, j)])

    sum_du2 = sum((d * d for d in du), np.zeros_like(u))
    # Trace-gradient term, Euclidean components.
    grad_dot = (-2.0 * sg * lf * r * sum_du2) * grid.dpsi[grid.f]
    for jpos, a in enumerate(grid.tan_axes):
        gt = 2.0 * u * du[jpos]
        for ipos in range(n_tan):
            gt = gt + 2.0 * lf * lf * r * r * du[ipos] * d2u[(ipos, jpos)]
        grad_dot = grad_dot + gt * grid.dpsi[a]
    first = _sym(0.5 * (grid.psi * w) @ grad_dot.T)

    # Raised-index metric pairing (symmetric by construction).
    b = (grid.dpsi[grid.f] * (w * u * u)) @ grid.dpsi[grid.f].T
    for jpos, a in enumerate(grid.tan_axes):
        coef = -sg * lf * r * u * du[jpos]
        cross = (grid.dpsi[grid.f] * (w * coef)) @ grid.dpsi[a].T
        b = b + cross + cross.T
    if n_tan:
        e = sum(du[jpos] * grid.dpsi[a] for jpos, a in enumerate(grid.tan_axes))
        b = b + (e * (w * lf * lf * r * r)) @ e.T
    return first + b


def _t_matrix(
    grid: _PatchAssemblyGrid, cu: np.ndarray, cud: np.ndarray, cudd: np.ndarray
) -> np.ndarray:
    """Galerkin matrix of the temporal perturbation operator on one patch."""
    n_tan = len(grid.tan_axes)
    w, r, lf, sg = grid.w, grid.r, grid.lf, grid.sigma
    u = grid.synth(cu, grid.phi0)
    ut = grid.synth(cud, grid.phi0)
    utt = grid.synth(cudd, grid.phi0)
    du = [grid.synth(cu, grid.phid[k]) for k in range(n_tan)]
    dut = [grid.synth(cud, grid.phid[k]) for k in range(n_tan)]

    # Temporal trace contribution (raised with the -1 temporal metric).
    grad_dot = (2.0 * sg * lf * r * ut * ut) * grid.dpsi[grid.f]
    for jpos, a in enumerate(grid.tan_axes):
        grad_dot = grad_dot + (-2.0 * lf * lf * r * r * ut * dut[jpos]) * grid.dpsi[a]
    first = _sym(0.5 * (grid.psi * w) @ grad_dot.T)

    # Time derivative of the mixed raised components paired with gradients.
    pair = (r * (ut * ut + u * utt)) * (sg * lf) * grid.dpsi[grid.f]
    for jpos, a in enumerate(grid.tan_axes):
        pair = pair + (lf * lf * r * r * (utt * du[jpos] + ut * dut[jpos])) * grid.dpsi[a]
    second = _sym(-(grid.psi * w) @ pair.T)
    return first + second


def _assembly_coeffs(pv: PatchVibration, idx: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return np.real(pv.u[idx]), np.real(pv.udot[idx]), np.real(pv.uddot[idx])


def assemble_V(
    u: BoundaryVibration,
    cavity_basis: SpectralBasis,
    time_indices: np.ndarray | None = None,
) -> np.ndarray:
    """Real symmetric Galerkin matrices of the spatial perturbation
    operator, one per requested time sample; shape (n_times, M, M)."""
    _check_envelope(u)
    idxs = np.arange(len(u.t_grid)) if time_indices is None else np.asarray(time_indices, int)
    grids = [_PatchAssemblyGrid(cavity_basis, u.geom, pv) for pv in u.patches]
    out = np.zeros((len(idxs), cavity_basis.size, cavity_basis.size))
    for row, ti in enumerate(idxs):
        for pv, grid in zip(u.patches, grids):
            cu, _, _ = _assembly_coeffs(pv, ti)
            out[row] += _v_matrix(grid, cu)
    if not np.all(np.isfinite(out)):
        raise NumericFailureError("perturbation-operator assembly produced non-finite values")
    return out


def assemble_T_and_W(
    u: BoundaryVibration,
    cavity_basis: SpectralBasis,
    time_indices: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Temporal operator T and total operator W = V + T per time sample."""
    _check_envelope(u)
    idxs = np.arange(len(u.t_grid)) if time_indices is None else np.asarray(time_indices, int)
    grids = [_PatchAssemblyGrid(cavity_basis, u.geom, pv) for pv in u.patches]
    t_out = np.zeros((len(idxs), cavity_basis.size, cavity_basis.size))
    v_out = np.zeros_like(t_out)
    for row, ti in enumerate(idxs):
        for pv, grid in zip(u.patches, grids):
            cu, cud, cudd = _assembly_coeffs(pv, ti)
            v_out[row] += _v_matrix(grid, cu)
            t_out[row] += _t_matrix(grid, cu, cud, cudd)
    w_out = v_out + t_out
    if not (np.all(np.isfinite(t_out)) and np.all(np.isfinite(w_out))):
        raise NumericFailureError("perturbation-operator assembly produced non-finite values")
    return t_out, w_out


def _check_gap(n: int, eigenvalues: np.ndarray) -> None:
    lam = np.asarray(eigenvalues, dtype=float)
    if not 0 <= n < lam.size:
        raise InvalidArgumentError("mode index outside the truncated basis")
    others = np.delete(lam, n)
    if others.size and float(np.min(np.abs(others - lam[n]))) <= 1e-9:
        raise DegenerateEigenvalueError(
            f"eigenvalue {lam[n]!r} is degenerate within the truncated basis"
        )


def eigenvalue_shift(
    n: int, eigenvalues: np.ndarray, v: np.ndarray, order: int = 1
) -> float:
    """First- or second-order correction to eigenvalue n of diag(lam) + v."""
    if order not in (1, 2):
        raise InvalidArgumentError("order must be 1 or 2")
    _check_gap(n, eigenvalues)
    v = np.asarray(v)
    if v.shape != (len(eigenvalues), len(eigenvalues)):
        raise InvalidArgumentError("perturbation matrix shape does not match eigenvalues")
    shift = float(np.real(v[n, n]))
    if order == 2:
        lam = np.asarray(eigenvalues, dtype=float)
        denom = lam[n] - lam
        mask = np.arange(lam.size) != n
        shift += float(np.sum(np.abs(v[mask, n]) ** 2 / denom[mask]))
    return shift


def eigenfunction_correction(n: int, eigenvalues: np.ndarray, v: np.ndarray) -> np.ndarray:
    """First-order mixing coefficients of eigenvector n of diag(lam) + v;
    the coefficient on mode n itself is zero."""
    _check_gap(n, eigenvalues)
    lam = np.asarray(eigenvalues, dtype=float)
    v = np.asarray(v)
    if v.shape != (lam.size, lam.size):
        raise InvalidArgumentError("perturbation matrix shape does not match eigenvalues")
    coeffs = np.zeros(lam.size, dtype=v.dtype)
    mask = np.arange(lam.size) != n
    coeffs[mask] = v[mask, n] / (lam[n] - lam[mask])
    return coeffs


@dataclass(frozen=True)
class PressureSolution:
    """Cavity pressure modal history on the Neumann basis."""

    basis: SpectralBasis
    t_grid: np.ndarray
    p: np.ndarray  # (n_times, n_modes)

    def field(self, index: int) -> ModalField:
        return ModalField(self.basis, self.p[index], time=float(self.t_grid[index]))


def _boundary_source(
    u: BoundaryVibration, cavity_basis: SpectralBasis
) -> Callable[[np.ndarray], np.ndarray]:
    """Modal source b_n(t) = sum over patches of the boundary-trace
    integral of the wall acceleration; returns (n_modes, n_times)."""
    mats = [
        coupling_matrix(cavity_basis, u.geom, pv.patch, pv.basis) for pv in u.patches
    ]

    def source(times: np.ndarray) -> np.ndarray:
        total = None
        for pv, mat in zip(u.patches, mats):
            term = mat @ pv.accel_sample(times).T
            total = term if total is None else total + term
        return total

    return source


def solve_pressure(
    u: BoundaryVibration,
    cavity_basis: SpectralBasis,
    medium: AcousticMedium,
    t_grid: np.ndarray,
) -> PressureSolution:
    """Duhamel evolution of the cavity pressure from rest.

    p_n(t) = rho0 c^2 int_0^t sine_kernel(c^2 lam_n, t - tau) b_n(tau) dtau
    with b_n the boundary-trace acceleration source; the constant mode
    (lam = 0) degenerates to the double time integral of the net source.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    h = _uniform_step(t_grid)
    n_panels = len(t_grid) - 1
    lam = medium.c**2 * np.asarray(cavity_basis.eigenvalues, dtype=float)
    omega_max = math.sqrt(float(np.max(lam)))
    if omega_max * h > 0.2 + 1e-12:
        warnings.warn(
            f"time step {h:.3g} exceeds the accuracy contract 0.2/max frequency "
            f"({0.2 / max(omega_max, 1e-300):.3g})",
            stacklevel=2,
        )
    source = _boundary_source(u, cavity_basis)
    probe = source(t_grid[:1])
    dtype = complex if np.iscomplexobj(probe) else float
    p = np.zeros((len(t_grid), cavity_basis.size), dtype=dtype)
    if n_panels > 0:
        mrange = np.arange(1, n_panels + 1)
        scale = medium.rho0 * medium.c**2
        for xg, wg in zip(_PANEL_NODES, _PANEL_WEIGHTS):
            taus = t_grid[:-1] + h * xg
            s_vals = source(taus)  # (M, N)
            deltas = h * (mrange - xg)
            kern = deltas[None, :] * wave_sinc(deltas[None, :] ** 2 * lam[:, None])
            conv = fftconvolve(kern, s_vals, axes=1)[:, :n_panels]
            p[1:] += (scale * h * wg) * conv.T
    if not np.all(np.isfinite(p)):
        raise NumericFailureError("pressure solve produced non-finite values")
    return PressureSolution(basis=cavity_basis, t_grid=t_grid, p=p)


def _correction_kernel(lam_c2: np.ndarray, delta: float) -> np.ndarray:
    """f_n(Delta) = sin(Delta w)/w^3 - Delta cos(Delta w)/w^2 per mode,
    with w = sqrt(c^2 lam_n); the w -> 0 limit is Delta^3 / 3."""
    x2 = lam_c2 * delta * delta
    out = np.empty_like(lam_c2)
    small = x2 < 1e-8
    out[small] = delta**3 * (1.0 / 3.0 - x2[small] / 30.0 + x2[small] ** 2 / 840.0)
    if np.any(~small):
        w = np.sqrt(lam_c2[~small])
        x = w * delta
        out[~small] = (np.sin(x) - x * np.cos(x)) / w**3
    return out


def kernel_correction_diagnostic(
    u: BoundaryVibration,
    cavity_basis: SpectralBasis,
    medium: AcousticMedium,
    t_grid: np.ndarray,
    w_matrices: np.ndarray | None = None,
) -> float:
    """Relative magnitude of the first-order kernel correction terms.

    The correction convolves the averaged total perturbation operator
    W-bar(Delta) = int_0^1 W(zeta Delta) d zeta against the boundary
    source with the mode-wise kernel f_n; the returned scalar is its norm
    over the norm of the leading Duhamel pressure.  ``w_matrices``
    (samples on the vibration time grid) overrides the assembled W.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    h = _uniform_step(t_grid)
    leading = solve_pressure(u, cavity_basis, medium, t_grid)
    lead_norm = float(np.linalg.norm(leading.p))
    if lead_norm == 0.0:
        return 0.0
    if w_matrices is None:
        _, w_matrices = assemble_T_and_W(u, cavity_basis)
    else:
        w_matrices = np.asarray(w_matrices)
        expected = (len(u.t_grid), cavity_basis.size, cavity_basis.size)
        if w_matrices.shape != expected:
            raise InvalidArgumentError(f"w_matrices must have shape {expected}")
    if np.all(w_matrices == 0):
        return 0.0
    w_interp = CubicSpline(u.t_grid, w_matrices, axis=0)

    def w_bar(delta: float) -> np.ndarray:
        vals = w_interp(delta * _ZETA8_NODES)
        return np.tensordot(_ZETA8_WEIGHTS, vals, axes=([0], [0]))

    lam = medium.c**2 * np.asarray(cavity_basis.eigenvalues, dtype=float)
    b = _boundary_source(u, cavity_basis)(t_grid)  # (M, n_t)
    scale = 0.5 * medium.rho0 * medium.c**4
    corr = np.zeros((len(t_grid), cavity_basis.size), dtype=b.dtype)
    for i in range(1, len(t_grid)):
        acc = np.zeros(cavity_basis.size, dtype=b.dtype)
        for j in range(i + 1):
            wj = h * (0.5 if j in (0, i) else 1.0)
            delta = t_grid[i] - t_grid[j]
            acc += wj * _correction_kernel(lam, delta) * (w_bar(delta) @ b[:, j])
        corr[i] = scale * acc
    return float(np.linalg.norm(corr)) / lead_norm
