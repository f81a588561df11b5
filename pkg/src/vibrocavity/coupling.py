"""Picard decoupling of cavity pressure and wall vibrations.

The coupled system (membrane patches driven by the pressure difference,
pressure driven by wall accelerations) is solved by a Jacobi-style fixed
point: u^(k+1) follows from the membrane solve with forcing
(p_ex - p^(k)) / sigma_m on each driven patch, and p^(k+1) follows from
the pressure solve driven by the accelerations of u^(k).  The correction
norms contract geometrically with the coupling strength g = rho0/rho_m.

The module also houses the closed-form harmonic Duhamel integral and its
resonance function, the resulting mean-pressure formula for piston-like
wall motion, the spectral mean-curvature operator, the local curvature
perturbation iteration, and the piston-approximation pipeline.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .acoustics import (
    AcousticMedium,
    BoundaryVibration,
    PatchVibration,
    PressureSolution,
    solve_pressure,
)
from .errors import (
    AssumptionViolationError,
    ContractionViolationError,
    DegenerateInputError,
    InvalidArgumentError,
    ResonanceSingularityError,
)
from .geometry import (
    CavityGeometry,
    ModalField,
    SpectralBasis,
    coupling_matrix,
    piston_basis,
)
from .magnus import wave_cos, wave_sinc
from .membrane import (
    MembraneOperator,
    MembraneSolution,
    PatchSource,
    TimeLapse,
    solve_membrane,
)

__all__ = [
    "CouplingConfig",
    "HarmonicSource",
    "HarmonicIntegral",
    "IterateLedger",
    "LcpoResult",
    "PistonReport",
    "picard_iterate",
    "harmonic_integral",
    "closed_form_mean_pressure",
    "mean_curvature",
    "lcpo_iteration",
    "piston_pipeline",
]


@dataclass(frozen=True)
class CouplingConfig:
    """Material densities and the derived coupling bookkeeping.

    sigma_m = rho_m * d and sigma0 = rho0 * d are the membrane and
    displaced-fluid surface densities; g = rho0 / rho_m is the contraction
    factor of the fixed point and is expected to satisfy g^2 ~ epsilon.
    """

    rho0: float
    rho_m: float
    d: float
    epsilon: float

    def __post_init__(self):
        if self.rho0 <= 0 or self.rho_m <= 0 or self.d <= 0 or self.epsilon <= 0:
            raise InvalidArgumentError("densities, thickness and epsilon must be positive")
        g = self.g
        if not 0.0 < g < 1.0:
            raise InvalidArgumentError(
                f"coupling strength {g:.3g} outside (0, 1); the fluid must be light"
            )
        ratio = max(g * g / self.epsilon, self.epsilon / (g * g))
        if ratio > 10.0:
            warnings.warn(
                f"coupling strength squared {g * g:.3g} and amplitude scale "
                f"{self.epsilon:.3g} differ by more than a factor 10",
                stacklevel=2,
            )

    @property
    def g(self) -> float:
        return self.rho0 / self.rho_m

    @property
    def sigma_m(self) -> float:
        return self.rho_m * self.d

    @property
    def sigma0(self) -> float:
        return self.rho0 * self.d


@dataclass(frozen=True)
class HarmonicSource:
    """Exterior pressure p_ex(t) = p0 exp(i omega t) on masked patches."""

    p0: complex
    omega: float
    patch_mask: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "patch_mask", tuple(bool(m) for m in self.patch_mask))
        if self.omega <= 0:
            raise InvalidArgumentError("driving frequency must be positive")
        if not self.patch_mask:
            raise InvalidArgumentError("patch mask must not be empty")

    def pressure(self, times: np.ndarray) -> np.ndarray:
        return self.p0 * np.exp(1j * self.omega * np.asarray(times, dtype=float))


@dataclass(frozen=True)
class HarmonicIntegral:
    """Closed form of int_0^t e^{i w tau} sin(W (t-tau)) / W dtau, W = c sqrt(lambda).

    ``resonance`` is R(t) = cos(W t) + i w sin(W t) / W, ``denominator`` is
    W^2 - w^2, and ``value`` = (e^{i w t} - R(t)) / (W^2 - w^2) away from
    resonance, with the L'Hopital limit branch inside the guard band.
    """

    value: complex
    resonance: complex
    denominator: float
    resonant: bool


_RESONANCE_GUARD = 1e-8


def harmonic_integral(
    omega: float,
    lam: float,
    t: float,
    c: float,
    allow_resonance_limit: bool = True,
) -> HarmonicIntegral:
    """Evaluate the harmonic Duhamel integral in closed form."""
    if lam < 0 or c <= 0 or omega < 0 or t < 0:
        raise InvalidArgumentError("harmonic_integral needs lam, t >= 0 and c, omega > 0")
    big_omega_sq = c * c * lam
    z = t * t * big_omega_sq
    sinc_term = t * wave_sinc(z)  # sin(W t) / W, exact at W = 0
    resonance = complex(wave_cos(z), omega * sinc_term)
    denominator = big_omega_sq - omega * omega
    scale = max(omega * omega, big_omega_sq)
    if abs(denominator) < _RESONANCE_GUARD * scale or scale == 0.0:
        if not allow_resonance_limit:
            raise ResonanceSingularityError(
                f"driving frequency squared {omega * omega:.6g} coincides with "
                f"the modal frequency squared {big_omega_sq:.6g}"
            )
        if omega == 0.0:
            value = complex(0.5 * t * t)
        else:
            value = (t * np.exp(1j * omega * t) - math.sin(omega * t) / omega) / (2j * omega)
        return HarmonicIntegral(complex(value), resonance, denominator, True)
    value = (np.exp(1j * omega * t) - resonance) / denominator
    return HarmonicIntegral(complex(value), resonance, denominator, False)


def closed_form_mean_pressure(
    cfg: CouplingConfig,
    src: HarmonicSource,
    medium: AcousticMedium,
    chi_basis: SpectralBasis,
    u_mean: complex,
    t_grid: np.ndarray,
) -> PressureSolution:
    """Mean pressure response to piston wall motion <u> e^{i omega t}.

    The wall sits at coordinate 0 of the one-dimensional basis ``chi_basis``
    across the cavity depth; each mode responds through the harmonic
    Duhamel integral, so
    p_n(t) = -rho0 c^2 omega^2 <u> chi_n(0) (e^{i omega t} - R_n(t)) / (c^2 lam_n - omega^2).
    """
    if chi_basis.kind != "cavity-neumann" or chi_basis.dim != 1:
        raise InvalidArgumentError("chi_basis must be a one-dimensional cavity basis")
    t_grid = np.asarray(t_grid, dtype=float)
    wall_values = chi_basis.mode_values((np.zeros(1),))[:, 0]  # chi_n(0)
    p = np.zeros((len(t_grid), chi_basis.size), dtype=complex)
    if u_mean == 0:
        return PressureSolution(chi_basis, t_grid, p)
    prefactor = -medium.rho0 * medium.c**2 * src.omega**2 * u_mean
    for n, lam in enumerate(chi_basis.eigenvalues):
        vals = np.array(
            [harmonic_integral(src.omega, float(lam), float(t), medium.c).value for t in t_grid]
        )
        p[:, n] = prefactor * wall_values[n] * vals
    return PressureSolution(chi_basis, t_grid, p)


def mean_curvature(u: ModalField) -> ModalField:
    """Half the surface Laplacian applied spectrally: H_k = -gamma_k u_k / 2."""
    if not u.basis.kind.startswith("patch"):
        raise InvalidArgumentError("mean_curvature expects a patch-basis field")
    coeffs = -0.5 * u.basis.grad_eigenvalues * u.coefficients
    return ModalField(u.basis, coeffs, u.time)


# ---------------------------------------------------------------------------
# Picard iteration


@dataclass(frozen=True)
class IterateLedger:
    """Per-iteration records of the Picard fixed point.

    ``u_iterates[k]`` holds one displacement array (n_times, n_modes) per
    patch for iterate k; ``p_iterates[k]`` the cavity pressure coefficients.
    Correction norms are Frobenius norms of consecutive differences, and
    ratios are taken between consecutive *nonzero* corrections (the
    alternating zero corrections of the Jacobi sweep carry no information).
    """

    t_grid: np.ndarray
    u_iterates: tuple[tuple[np.ndarray, ...], ...]
    p_iterates: tuple[np.ndarray, ...]
    u_corrections: tuple[float, ...]
    p_corrections: tuple[float, ...]
    u_ratios: tuple[float, ...]
    p_ratios: tuple[float, ...]
    solutions: tuple[MembraneSolution, ...] = field(repr=False, default=())
    pressure: PressureSolution | None = field(repr=False, default=None)


def _combined_source(
    basis: SpectralBasis,
    t_grid: np.ndarray,
    harmonic_amp: np.ndarray,
    omega: float,
    trace_values: np.ndarray | None,
) -> PatchSource:
    """Forcing Psi = (p_ex - p)/sigma_m as modal patch coefficients.

    ``harmonic_amp`` already carries the p0/sigma_m scale and the patch-mode
    projection of the spatially uniform exterior pressure; ``trace_values``
    is the (already negated and scaled) pressure-trace contribution sampled
    on ``t_grid`` or None when the pressure iterate vanishes identically.
    """
    harm = np.exp(1j * omega * t_grid)[:, None] * harmonic_amp[None, :]
    if trace_values is None:

        def evaluator(times):
            times = np.asarray(times, dtype=float)
            return np.exp(1j * omega * times)[:, None] * harmonic_amp[None, :]

        return PatchSource(basis, t_grid, harm, evaluator)
    spline = CubicSpline(t_grid, trace_values, axis=0)

    def evaluator(times):
        times = np.asarray(times, dtype=float)
        harm_part = np.exp(1j * omega * times)[:, None] * harmonic_amp[None, :]
        return harm_part + spline(times)

    return PatchSource(basis, t_grid, harm + trace_values, evaluator)


def picard_iterate(
    cfg: CouplingConfig,
    src: HarmonicSource,
    geom: CavityGeometry,
    bases: tuple[SpectralBasis, Sequence[SpectralBasis]],
    lapse: TimeLapse,
    op: MembraneOperator,
    medium: AcousticMedium,
    t_grid: np.ndarray,
    k_max: int = 3,
) -> IterateLedger:
    """Run the Jacobi fixed point u^(k+1) <- p^(k), p^(k+1) <- u^(k).

    Starting from u^(0) = 0 this gives p^(0) = p^(1) = 0 and
    u^(1) = u^(2) exactly (the first membrane solve sees no back-pressure
    twice in a row); the first nonzero pressure appears at k = 2.
    """
    if k_max < 2:
        raise InvalidArgumentError("k_max must be at least 2")
    cavity_basis, patch_bases = bases
    patch_bases = tuple(patch_bases)
    if len(patch_bases) != len(geom.patches):
        raise InvalidArgumentError("one patch basis per geometry patch is required")
    if len(src.patch_mask) != len(geom.patches):
        raise InvalidArgumentError("patch mask length must match the number of patches")
    if not math.isclose(medium.rho0, cfg.rho0, rel_tol=1e-12):
        raise InvalidArgumentError("medium density must match the coupling config")
    t_grid = np.asarray(t_grid, dtype=float)
    n_t = len(t_grid)
    sigma_m = cfg.sigma_m
    couplers = [
        coupling_matrix(cavity_basis, geom, patch, pb)
        for patch, pb in zip(geom.patches, patch_bases)
    ]
    harmonic_amps = [
        (src.p0 / sigma_m) * pb.mode_integrals() if masked else np.zeros(pb.size)
        for pb, masked in zip(patch_bases, src.patch_mask)
    ]

    zero_u = tuple(np.zeros((n_t, pb.size), dtype=complex) for pb in patch_bases)
    zero_p = np.zeros((n_t, cavity_basis.size), dtype=complex)
    u_iterates: list[tuple[np.ndarray, ...]] = [zero_u]
    p_iterates: list[np.ndarray] = [zero_p]
    sols_by_k: list[tuple[MembraneSolution, ...] | None] = [None]
    pressure_by_k: list[PressureSolution | None] = [None]

    for k in range(k_max):
        p_cur = p_iterates[k]
        p_is_zero = not np.any(p_cur)
        if p_is_zero and k >= 1 and sols_by_k[k] is not None and not np.any(p_iterates[k - 1]):
            # identical forcing as the previous sweep: reuse it bit for bit
            sols = sols_by_k[k]
        else:
            sols = []
            for pb, coupler, amp in zip(patch_bases, couplers, harmonic_amps):
                trace = None if p_is_zero else -(p_cur @ coupler) / sigma_m
                psi = _combined_source(pb, t_grid, amp, src.omega, trace)
                sols.append(solve_membrane(pb, op, lapse, psi, t_grid))
            sols = tuple(sols)
        u_iterates.append(tuple(s.u for s in sols))
        sols_by_k.append(sols)

        driver = sols_by_k[k]
        if driver is None:
            p_iterates.append(zero_p)
            pressure_by_k.append(None)
        else:
            vib = BoundaryVibration(
                geom,
                tuple(
                    PatchVibration.from_solution(patch, s)
                    for patch, s in zip(geom.patches, driver)
                ),
                epsilon=cfg.epsilon,
            )
            psol = solve_pressure(vib, cavity_basis, medium, t_grid)
            p_iterates.append(psol.p)
            pressure_by_k.append(psol)

    u_corr = tuple(
        float(
            math.sqrt(
                sum(
                    float(np.sum(np.abs(a - b) ** 2))
                    for a, b in zip(u_iterates[k + 1], u_iterates[k])
                )
            )
        )
        for k in range(k_max)
    )
    p_corr = tuple(
        float(np.linalg.norm(p_iterates[k + 1] - p_iterates[k])) for k in range(k_max)
    )
    u_ratios = _nonzero_ratios(u_corr, "displacement")
    p_ratios = _nonzero_ratios(p_corr, "pressure")

    last_pressure = next((p for p in reversed(pressure_by_k) if p is not None), None)
    return IterateLedger(
        t_grid=t_grid,
        u_iterates=tuple(u_iterates),
        p_iterates=tuple(p_iterates),
        u_corrections=u_corr,
        p_corrections=p_corr,
        u_ratios=u_ratios,
        p_ratios=p_ratios,
        solutions=sols_by_k[-1] or (),
        pressure=last_pressure,
    )


def _nonzero_ratios(corrections: Sequence[float], label: str) -> tuple[float, ...]:
    nonzero = [c for c in corrections if c > 0.0]
    ratios = tuple(b / a for a, b in zip(nonzero, nonzero[1:]))
    for r in ratios:
        if r >= 1.0:
            raise ContractionViolationError(
                f"{label} corrections stopped contracting (ratio {r:.3g} >= 1)"
            )
    return ratios


# ---------------------------------------------------------------------------
# Local curvature perturbation iteration


@dataclass(frozen=True)
class LcpoResult:
    """Constant-curvature truncation of a membrane solve.

    ``iterates[l]`` is the displacement array of the l-th correction stage
    (l = 0 is the plain constant-coefficient solve); ``correction_norms[l]``
    is ||u^(l+1) - u^(l)||, and ``next_correction`` is the first norm beyond
    the requested truncation.
    """

    iterates: tuple[np.ndarray, ...]
    correction_norms: tuple[float, ...]
    next_correction: float
    gamma_bar: float
    delta_h_ratio: float


def lcpo_iteration(
    u: MembraneSolution,
    op: MembraneOperator,
    gamma_bar: float,
    lapse: TimeLapse,
    src: PatchSource,
    t_grid: np.ndarray,
    l_max: int = 1,
) -> LcpoResult:
    """Iterate the constant-curvature equation toward the full solve.

    Writing the per-mode curvature as -gamma_k u_k / 2 = -gamma_bar u_k +
    delta_H_k splits the stiffness into the constant polynomial p(2 gamma_bar)
    plus the correction (2 c_m^2 - 8 gamma_bar c_H^2 d^2) delta_H, which is
    fed back as an extra source term built from the previous iterate.
    """
    if l_max < 1:
        raise InvalidArgumentError("l_max must be at least 1")
    if gamma_bar == 0.0:
        raise InvalidArgumentError("gamma_bar must be nonzero")
    basis = u.basis
    t_grid = np.asarray(t_grid, dtype=float)
    gammas = basis.eigenvalues
    delta_h_factor = gamma_bar - 0.5 * gammas  # delta_H_k = factor * u_k
    ref_norm = float(np.linalg.norm(u.u))
    if ref_norm > 0.0:
        delta_norm = float(np.linalg.norm(delta_h_factor[None, :] * u.u))
        ratio = delta_norm / (abs(gamma_bar) * ref_norm)
        if ratio >= 1.0:
            raise AssumptionViolationError(
                f"curvature deviation {ratio:.3g} is not small against the "
                "uniform mean curvature"
            )
    else:
        ratio = 0.0

    two_gamma = 2.0 * gamma_bar
    stiffness = np.full(
        basis.size, op.c_m2 * two_gamma - op.c_H2 * op.d**2 * two_gamma**2
    )
    source_coef = 2.0 * op.c_m2 - 8.0 * gamma_bar * op.c_H2 * op.d**2

    def corrected_source(prev: np.ndarray) -> PatchSource:
        corr = source_coef * delta_h_factor[None, :] * prev
        spline = CubicSpline(t_grid, corr, axis=0)

        def evaluator(times):
            return src.sample(times) + spline(np.asarray(times, dtype=float))

        return PatchSource(basis, t_grid, src.sample(t_grid) + corr, evaluator)

    iterates = [solve_membrane(basis, op, lapse, src, t_grid, stiffness=stiffness).u]
    norms: list[float] = []
    for _ in range(l_max + 1):
        nxt = solve_membrane(
            basis, op, lapse, corrected_source(iterates[-1]), t_grid, stiffness=stiffness
        ).u
        norms.append(float(np.linalg.norm(nxt - iterates[-1])))
        iterates.append(nxt)
    return LcpoResult(
        iterates=tuple(iterates[: l_max + 1]),
        correction_norms=tuple(norms[:l_max]),
        next_correction=norms[l_max],
        gamma_bar=float(gamma_bar),
        delta_h_ratio=ratio,
    )


# ---------------------------------------------------------------------------
# Piston pipeline


@dataclass(frozen=True)
class PistonReport:
    """Piston-approximation diagnostics for one boundary vibration."""

    u_means: tuple[np.ndarray, ...]
    ratios: tuple[float, ...]
    c_piston: float
    leading_order: bool
    full: PressureSolution
    piston: PressureSolution
    deviation: float


def _patch_mean_series(pv: PatchVibration, arr: np.ndarray) -> np.ndarray:
    integrals = pv.basis.mode_integrals()
    return (arr @ integrals) / pv.basis.measure


def _poincare_block_ratio(pv: PatchVibration) -> float:
    """Time-aggregated Poincare bound ||grad u|| / (sqrt(gamma_1) ||u||)."""
    norm_sq = float(np.sum(np.abs(pv.u) ** 2))
    if norm_sq == 0.0:
        raise DegenerateInputError("zero displacement has no piston certificate")
    grad_sq = float(np.sum(pv.basis.grad_eigenvalues[None, :] * np.abs(pv.u) ** 2))
    gamma1 = float(np.min(pv.basis.eigenvalues))
    return math.sqrt(grad_sq / (gamma1 * norm_sq))


def piston_pipeline(
    u: BoundaryVibration,
    geom: CavityGeometry,
    epsilon: float,
    cavity_basis: SpectralBasis,
    medium: AcousticMedium,
    leading_constant: float = 10.0,
) -> PistonReport:
    """Compare the full pressure solve against its piston approximation.

    Each patch displacement is replaced by its surface mean carried on a
    single constant mode (with the Rayleigh-quotient effective stiffness
    eigenvalue), the pressure is re-solved, and the relative deviation is
    reported together with the Poincare ratio and C_piston = ratio/epsilon.
    """
    if epsilon <= 0:
        raise InvalidArgumentError("epsilon must be positive")
    ratios = tuple(_poincare_block_ratio(pv) for pv in u.patches)
    c_piston = max(ratios) / epsilon
    u_means = tuple(_patch_mean_series(pv, pv.u) for pv in u.patches)

    piston_patches = []
    for pv, mean_u in zip(u.patches, u_means):
        if pv.basis.kind == "patch-constant":
            piston_patches.append(pv)
            continue
        weights = np.sum(np.abs(pv.u) ** 2)
        gamma_eff = float(
            np.sum(pv.basis.eigenvalues[None, :] * np.abs(pv.u) ** 2) / weights
        )
        pb = piston_basis(geom, pv.patch, gamma=gamma_eff)
        scale = math.sqrt(pb.measure)  # constant mode value is measure^(-1/2)
        piston_patches.append(
            PatchVibration(
                pv.patch,
                pb,
                pv.t_grid,
                (scale * mean_u)[:, None],
                (scale * _patch_mean_series(pv, pv.udot))[:, None],
                (scale * _patch_mean_series(pv, pv.uddot))[:, None],
            )
        )
    piston_vib = BoundaryVibration(geom, tuple(piston_patches), u.epsilon)

    t_grid = u.t_grid
    full = solve_pressure(u, cavity_basis, medium, t_grid)
    piston = solve_pressure(piston_vib, cavity_basis, medium, t_grid)
    full_norm = float(np.linalg.norm(full.p))
    dev = float(np.linalg.norm(full.p - piston.p))
    deviation = dev / full_norm if full_norm > 0.0 else dev
    return PistonReport(
        u_means=u_means,
        ratios=ratios,
        c_piston=c_piston,
        leading_order=bool(c_piston <= leading_constant),
        full=full,
        piston=piston,
        deviation=deviation,
    )
