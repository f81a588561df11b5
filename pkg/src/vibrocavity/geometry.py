"""Reference-domain geometry and spectral bases.

Axis-aligned box cavities in 1/2/3 dimensions with rectangular wall
patches.  Cavity fields use tensor-product cosine (Neumann) modes, patch
displacements use tensor-product sine (Dirichlet) modes; in 1D a patch is a
wall endpoint represented by a single constant mode with a configurable
stiffness eigenvalue.  All eigenpairs are analytic, inner products are
evaluated with tensor-product Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (
    DegenerateInputError,
    InvalidArgumentError,
    NumericFailureError,
)

__all__ = [
    "PatchGeometry",
    "CavityGeometry",
    "SpectralBasis",
    "ModalField",
    "build_cavity_basis",
    "build_patch_basis",
    "piston_basis",
    "project",
    "geometric_mean",
    "poincare_certificate",
    "coupling_matrix",
    "gauss_rule",
]

DEFAULT_PISTON_GAMMA = math.pi**2


def gauss_rule(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on the interval [lo, hi]."""
    if n < 1:
        raise InvalidArgumentError("quadrature rule needs at least one node")
    x, w = leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


@dataclass(frozen=True)
class PatchGeometry:
    """A vibrating rectangular patch on one wall of the box.

    Parameters
    ----------
    face_axis:
        Coordinate axis whose wall hosts the patch.
    side:
        0 for the wall at coordinate 0, 1 for the wall at the far end.
    extents:
        Optional (lo, hi) pairs, one per tangential axis, restricting the
        patch to a sub-rectangle of the face.  None means the full face.
    """

    face_axis: int
    side: int
    extents: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.side not in (0, 1):
            raise InvalidArgumentError("patch side must be 0 or 1")
        if self.face_axis < 0:
            raise InvalidArgumentError("face_axis must be nonnegative")


@dataclass(frozen=True)
class CavityGeometry:
    """Box cavity [0,a1]x...x[0,an] with vibrating wall patches."""

    edge_lengths: tuple[float, ...]
    patches: tuple[PatchGeometry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "edge_lengths", tuple(float(a) for a in self.edge_lengths))
        object.__setattr__(self, "patches", tuple(self.patches))
        n = len(self.edge_lengths)
        if n not in (1, 2, 3):
            raise InvalidArgumentError("dimension must be 1, 2 or 3")
        if any(a <= 0 for a in self.edge_lengths):
            raise InvalidArgumentError("every edge length must be positive")
        for p in self.patches:
            self._check_patch(p)

    @property
    def dim(self) -> int:
        return len(self.edge_lengths)

    def tangential_axes(self, patch: PatchGeometry) -> tuple[int, ...]:
        return tuple(a for a in range(self.dim) if a != patch.face_axis)

    def patch_rect(self, patch: PatchGeometry) -> tuple[tuple[float, float], ...]:
        """(lo, hi) per tangential axis of the patch rectangle."""
        axes = self.tangential_axes(patch)
        if patch.extents is None:
            return tuple((0.0, self.edge_lengths[a]) for a in axes)
        return tuple(tuple(map(float, e)) for e in patch.extents)

    def patch_measure(self, patch: PatchGeometry) -> float:
        """Surface measure of the patch (1.0 for a 0-dimensional endpoint)."""
        rect = self.patch_rect(patch)
        out = 1.0
        for lo, hi in rect:
            out *= hi - lo
        return out

    def _check_patch(self, patch: PatchGeometry) -> None:
        if patch.face_axis >= self.dim:
            raise InvalidArgumentError("patch face_axis outside cavity dimension")
        rect = self.patch_rect(patch)
        if len(rect) != self.dim - 1:
            raise InvalidArgumentError("patch extents must cover every tangential axis")
        for (lo, hi), axis in zip(rect, self.tangential_axes(patch)):
            if not (0.0 <= lo < hi <= self.edge_lengths[axis] + 1e-15):
                raise InvalidArgumentError("patch extents must lie within the host face")


def _cavity_norm(index: int, length: float) -> float:
    return math.sqrt(1.0 / length) if index == 0 else math.sqrt(2.0 / length)


@dataclass(frozen=True)
class SpectralBasis:
    """Orthonormal tensor-product spectral basis with its quadrature rule.

    kind is one of "cavity-neumann", "patch-dirichlet", "patch-constant".
    ``eigenvalues`` are the dynamic (stiffness) eigenvalues; for the
    constant piston mode the gradient eigenvalue is 0 while the dynamic one
    is the configured piston value, so ``grad_eigenvalues`` is kept
    separately.
    """

    kind: str
    lengths: tuple[float, ...]
    offsets: tuple[float, ...]
    multi_indices: np.ndarray  # (M, dim) int
    eigenvalues: np.ndarray  # (M,)
    grad_eigenvalues: np.ndarray  # (M,)
    nodes: tuple[np.ndarray, ...]
    weights: tuple[np.ndarray, ...]
    measure: float

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def size(self) -> int:
        return int(self.multi_indices.shape[0])

    def axis_factors(self, axis: int, points: np.ndarray, deriv: int = 0) -> np.ndarray:
        """Per-axis 1D factor table, shape (max_index+1, len(points)).

        Row ``k`` holds the deriv-th derivative of the axis-``axis`` factor
        of index ``k`` evaluated at ``points`` (absolute coordinates).
        """
        points = np.asarray(points, dtype=float)
        length = self.lengths[axis]
        off = self.offsets[axis]
        kmax = int(self.multi_indices[:, axis].max())
        rows = []
        for k in range(kmax + 1):
            freq = k * math.pi / length
            ph = freq * (points - off)
            if self.kind == "cavity-neumann":
                norm = _cavity_norm(k, length)
                base = {0: np.cos, 1: lambda a: -np.sin(a), 2: lambda a: -np.cos(a)}[deriv](ph)
            else:
                norm = math.sqrt(2.0 / length)
                base = {0: np.sin, 1: np.cos, 2: lambda a: -np.sin(a)}[deriv](ph)
            rows.append(norm * freq**deriv * base)
        return np.asarray(rows)

    def mode_values(
        self, axes_points: tuple[np.ndarray, ...] | None = None, derivs: tuple[int, ...] | None = None
    ) -> np.ndarray:
        """Evaluate all modes on a tensor grid; shape (M, n1, ..., nd).

        ``derivs`` gives the derivative order per axis (default all 0).
        A constant-mode basis returns the normalized constant.
        """
        if axes_points is None:
            axes_points = self.nodes
        if self.kind == "patch-constant":
            shape = tuple(len(p) for p in axes_points)
            val = self.measure ** (-0.5)
            if derivs and any(d > 0 for d in derivs):
                val = 0.0
            return np.full((1,) + shape, val)
        if derivs is None:
            derivs = (0,) * self.dim
        m = self.size
        shape = tuple(len(p) for p in axes_points)
        out = np.ones((m,) + shape)
        for a in range(self.dim):
            fac = self.axis_factors(a, axes_points[a], derivs[a])[self.multi_indices[:, a]]
            out *= fac.reshape((m,) + tuple(shape[b] if b == a else 1 for b in range(self.dim)))
        return out

    def mode_integrals(self) -> np.ndarray:
        """Vector of integrals of each mode over the domain."""
        if self.kind == "patch-constant":
            return np.array([math.sqrt(self.measure)])
        out = np.ones(self.size)
        for a in range(self.dim):
            idx = self.multi_indices[:, a]
            length = self.lengths[a]
            if self.kind == "cavity-neumann":
                vals = np.where(idx == 0, math.sqrt(length), 0.0)
            else:
                k = np.maximum(idx, 1)
                vals = math.sqrt(2.0 * length) * (1.0 - np.cos(k * math.pi)) / (k * math.pi)
            out *= vals
        return out


def _sorted_modes(indices: np.ndarray, eigs: np.ndarray) -> np.ndarray:
    """Order modes by ascending eigenvalue, lexicographic tie-break."""
    keys = [indices[:, a] for a in reversed(range(indices.shape[1]))]
    return np.lexsort(keys + [eigs])


def build_cavity_basis(geom: CavityGeometry, modes_per_axis: int) -> SpectralBasis:
    """Tensor-product Neumann cosine basis on the box.

    Eigenvalues are sums of squared axis frequencies n_i^2 pi^2 / a_i^2,
    sorted ascending; the first mode is the normalized constant with
    eigenvalue 0.
    """
    if modes_per_axis < 1:
        raise InvalidArgumentError("modes_per_axis must be positive")
    dim = geom.dim
    grids = np.meshgrid(*[np.arange(modes_per_axis)] * dim, indexing="ij")
    indices = np.stack([g.ravel() for g in grids], axis=1)
    lengths = np.asarray(geom.edge_lengths)
    eigs = np.sum((indices * math.pi / lengths) ** 2, axis=1)
    order = _sorted_modes(indices, eigs)
    indices, eigs = indices[order], eigs[order]
    nq = 3 * modes_per_axis + 6
    rules = [gauss_rule(nq, 0.0, a) for a in geom.edge_lengths]
    return SpectralBasis(
        kind="cavity-neumann",
        lengths=tuple(geom.edge_lengths),
        offsets=(0.0,) * dim,
        multi_indices=indices,
        eigenvalues=eigs,
        grad_eigenvalues=eigs.copy(),
        nodes=tuple(r[0] for r in rules),
        weights=tuple(r[1] for r in rules),
        measure=float(np.prod(lengths)),
    )


def build_patch_basis(
    geom: CavityGeometry,
    patch: PatchGeometry,
    modes_per_axis: int,
    piston_gamma: float = DEFAULT_PISTON_GAMMA,
) -> SpectralBasis:
    """Dirichlet sine basis on a patch (constant piston mode in 1D).

    For 1D cavities the patch is a wall endpoint with no tangential extent;
    it carries a single normalized constant mode whose dynamic eigenvalue
    is ``piston_gamma`` (> 0) so the stiffness polynomial still applies.
    """
    if modes_per_axis < 1:
        raise InvalidArgumentError("modes_per_axis must be positive")
    rect = geom.patch_rect(patch)
    if len(rect) == 0:
        return piston_basis(geom, patch, piston_gamma)
    lengths = tuple(hi - lo for lo, hi in rect)
    offsets = tuple(lo for lo, _ in rect)
    if any(li <= 0 for li in lengths):
        raise InvalidArgumentError("patch extents must be nonempty")
    dim = len(lengths)
    grids = np.meshgrid(*[np.arange(1, modes_per_axis + 1)] * dim, indexing="ij")
    indices = np.stack([g.ravel() for g in grids], axis=1)
    eigs = np.sum((indices * math.pi / np.asarray(lengths)) ** 2, axis=1)
    order = _sorted_modes(indices, eigs)
    indices, eigs = indices[order], eigs[order]
    nq = 3 * modes_per_axis + 6
    rules = [gauss_rule(nq, lo, hi) for lo, hi in rect]
    return SpectralBasis(
        kind="patch-dirichlet",
        lengths=lengths,
        offsets=offsets,
        multi_indices=indices,
        eigenvalues=eigs,
        grad_eigenvalues=eigs.copy(),
        nodes=tuple(r[0] for r in rules),
        weights=tuple(r[1] for r in rules),
        measure=float(np.prod(lengths)),
    )


def piston_basis(
    geom: CavityGeometry, patch: PatchGeometry, gamma: float = DEFAULT_PISTON_GAMMA
) -> SpectralBasis:
    """Single-constant-mode basis representing rigid piston motion."""
    if gamma <= 0:
        raise InvalidArgumentError("piston eigenvalue must be positive")
    rect = geom.patch_rect(patch)
    lengths = tuple(hi - lo for lo, hi in rect)
    offsets = tuple(lo for lo, _ in rect)
    measure = geom.patch_measure(patch)
    rules = [gauss_rule(3, lo, hi) for lo, hi in rect]
    return SpectralBasis(
        kind="patch-constant",
        lengths=lengths,
        offsets=offsets,
        multi_indices=np.zeros((1, len(lengths)), dtype=int),
        eigenvalues=np.array([float(gamma)]),
        grad_eigenvalues=np.zeros(1),
        nodes=tuple(r[0] for r in rules),
        weights=tuple(r[1] for r in rules),
        measure=measure,
    )


@dataclass(frozen=True)
class ModalField:
    """Coefficient vector on a spectral basis, optionally time-stamped."""

    basis: SpectralBasis
    coefficients: np.ndarray
    time: float | None = None

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if coeffs.shape != (self.basis.size,):
            raise InvalidArgumentError(
                f"coefficient vector length {coeffs.shape} does not match basis size {self.basis.size}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise InvalidArgumentError("coefficients must be finite")

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))


def project(samples: np.ndarray, basis: SpectralBasis) -> ModalField:
    """Project gridded samples (on the basis quadrature grid) onto modes."""
    samples = np.asarray(samples)
    shape = tuple(len(n) for n in basis.nodes)
    if basis.kind == "patch-constant":
        if samples.shape not in (shape, (), (1,)):
            raise InvalidArgumentError("sample grid does not match basis quadrature grid")
        if samples.shape == shape and shape:
            w = np.ones(())
            for a, wa in enumerate(basis.weights):
                w = np.multiply.outer(w, wa)
            coeff = np.array([np.sum(w * samples) / math.sqrt(basis.measure)])
        else:
            coeff = np.atleast_1d(samples).astype(float) * math.sqrt(basis.measure)
        return ModalField(basis, coeff)
    if samples.shape != shape:
        raise InvalidArgumentError(
            f"sample grid shape {samples.shape} does not match quadrature grid {shape}"
        )
    work = samples
    for a in range(basis.dim):
        fac = basis.axis_factors(a, basis.nodes[a]) * basis.weights[a]
        work = np.tensordot(fac, work, axes=([1], [a]))
        work = np.moveaxis(work, 0, a)
    coeffs = work[tuple(basis.multi_indices.T)]
    return ModalField(basis, coeffs)


def evaluate(field: ModalField, axes_points: tuple[np.ndarray, ...] | None = None) -> np.ndarray:
    """Synthesize a modal field on a tensor grid (default: quadrature grid)."""
    basis = field.basis
    if axes_points is None:
        axes_points = basis.nodes
    modes = basis.mode_values(axes_points)
    return np.tensordot(field.coefficients, modes, axes=([0], [0]))


def geometric_mean(u: ModalField) -> complex | float:
    """Surface mean (1/|Gamma|) * integral of u over the patch."""
    if not u.basis.kind.startswith("patch"):
        raise InvalidArgumentError("geometric_mean expects a patch-basis field")
    val = np.dot(u.coefficients, u.basis.mode_integrals()) / u.basis.measure
    return complex(val) if np.iscomplexobj(u.coefficients) else float(val)


def poincare_certificate(
    u: ModalField, eps: float | None = None, constant: float = 1.0
) -> tuple[float, float, bool | None]:
    """Relative mean-deviation bound for a patch displacement.

    Returns (lhs, rhs, leading_order) with
    lhs = ||u - <u>|| / ||u||, rhs = ||grad u|| / (sqrt(gamma_1) ||u||);
    the first Dirichlet eigenvalue guarantees lhs <= rhs.  leading_order is
    rhs < constant * eps (None when eps is not supplied).
    """
    basis = u.basis
    if not basis.kind.startswith("patch"):
        raise InvalidArgumentError("poincare_certificate expects a patch-basis field")
    c = u.coefficients
    norm_sq = float(np.sum(np.abs(c) ** 2))
    if norm_sq == 0.0:
        raise DegenerateInputError("zero displacement has no certificate")
    mean = np.dot(c, basis.mode_integrals()) / basis.measure
    dev_sq = max(norm_sq - basis.measure * abs(mean) ** 2, 0.0)
    gamma1 = float(np.min(basis.eigenvalues))
    grad_sq = float(np.sum(basis.grad_eigenvalues * np.abs(c) ** 2))
    lhs = math.sqrt(dev_sq / norm_sq)
    rhs = math.sqrt(grad_sq / (gamma1 * norm_sq))
    if lhs > rhs * (1.0 + 1e-12) + 1e-14:
        raise NumericFailureError(f"mean-deviation bound violated: {lhs} > {rhs}")
    leading = None if eps is None else bool(rhs < constant * eps)
    return lhs, rhs, leading


def coupling_matrix(
    cavity_basis: SpectralBasis,
    geom: CavityGeometry,
    patch: PatchGeometry,
    patch_basis: SpectralBasis,
) -> np.ndarray:
    """Boundary-trace inner products C[n,k] = int_Gamma Psi_n|_Gamma Phi_k.

    Used both to turn modal patch accelerations into cavity source
    coefficients and to project cavity-pressure traces back onto the patch.
    """
    axes = geom.tangential_axes(patch)
    f = patch.face_axis
    wall = 0.0 if patch.side == 0 else geom.edge_lengths[f]
    # Normal-axis factor of every cavity mode at the wall coordinate.
    normal_fac = cavity_basis.axis_factors(f, np.array([wall]))[
        cavity_basis.multi_indices[:, f], 0
    ]
    if patch_basis.dim == 0:
        # 0-dimensional endpoint patch: the trace integral is a point value.
        return normal_fac[:, None] * patch_basis.mode_values(())[None, :]
    # Tangential quadrature on the patch grid.
    phi = patch_basis.mode_values()  # (M, grid)
    w = np.ones(())
    for wa in patch_basis.weights:
        w = np.multiply.outer(w, wa)
    cav = np.ones((cavity_basis.size,) + phi.shape[1:])
    for a_pos, a in enumerate(axes):
        fac = cavity_basis.axis_factors(a, patch_basis.nodes[a_pos])[
            cavity_basis.multi_indices[:, a]
        ]
        cav *= fac.reshape(
            (cavity_basis.size,)
            + tuple(phi.shape[1 + b] if b == a_pos else 1 for b in range(patch_basis.dim))
        )
    flat_axes = tuple(range(1, 1 + patch_basis.dim))
    mat = np.tensordot(cav * w, phi, axes=(flat_axes, flat_axes))
    return normal_fac[:, None] * mat
