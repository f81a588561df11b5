"""Tests for the pressure/vibration fixed point and its closed forms."""

import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from vibrocavity.acoustics import (
    AcousticMedium,
    BoundaryVibration,
    PatchVibration,
    solve_pressure,
)
from vibrocavity.coupling import (
    CouplingConfig,
    HarmonicSource,
    closed_form_mean_pressure,
    harmonic_integral,
    lcpo_iteration,
    mean_curvature,
    picard_iterate,
    piston_pipeline,
)
from vibrocavity.errors import (
    AssumptionViolationError,
    ContractionViolationError,
    DegenerateInputError,
    InvalidArgumentError,
    ResonanceSingularityError,
)
from vibrocavity.geometry import (
    CavityGeometry,
    ModalField,
    PatchGeometry,
    build_cavity_basis,
    build_patch_basis,
    piston_basis,
)
from vibrocavity.membrane import (
    MembraneOperator,
    exponential_lapse,
    harmonic_patch_source,
    solve_membrane,
)


def wall_geometry():
    return CavityGeometry((1.0,), (PatchGeometry(0, 0),))


def strip_geometry():
    patch = PatchGeometry(0, 0, ((0.0, 1.0),))
    return CavityGeometry((1.0, 1.0), (patch,))


class TestCouplingConfig:
    def test_derived_quantities(self):
        cfg = CouplingConfig(rho0=1.2, rho_m=1200.0, d=0.5, epsilon=1e-6)
        assert cfg.g == pytest.approx(1e-3)
        assert cfg.sigma_m == pytest.approx(600.0)
        assert cfg.sigma0 == pytest.approx(0.6)

    def test_heavy_fluid_rejected(self):
        with pytest.raises(InvalidArgumentError):
            CouplingConfig(rho0=2.0, rho_m=1.0, d=1.0, epsilon=1e-6)

    def test_scale_mismatch_warns(self):
        with pytest.warns(UserWarning, match="factor 10"):
            CouplingConfig(rho0=1.2, rho_m=1200.0, d=1.0, epsilon=1e-1)

    def test_matched_scales_are_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            CouplingConfig(rho0=1.2, rho_m=1200.0, d=1.0, epsilon=1e-6)


class TestHarmonicSource:
    def test_rejects_nonpositive_frequency(self):
        with pytest.raises(InvalidArgumentError):
            HarmonicSource(p0=1.0, omega=0.0, patch_mask=(True,))

    def test_pressure_samples(self):
        src = HarmonicSource(p0=2.0, omega=3.0, patch_mask=(True,))
        t = np.array([0.0, 0.5])
        np.testing.assert_allclose(src.pressure(t), 2.0 * np.exp(3j * t))


def quadrature_integral(omega, lam, t, c):
    big = c * math.sqrt(lam)

    def kern(tau):
        s = (t - tau) if big == 0.0 else math.sin(big * (t - tau)) / big
        return np.exp(1j * omega * tau) * s

    re = quad(lambda x: kern(x).real, 0.0, t, limit=300, epsabs=1e-13)[0]
    im = quad(lambda x: kern(x).imag, 0.0, t, limit=300, epsabs=1e-13)[0]
    return complex(re, im)


class TestHarmonicIntegral:
    def test_empty_integral_is_zero(self):
        assert harmonic_integral(2.0, 5.0, 0.0, 1.0).value == 0.0

    def test_matches_quadrature_over_random_draws(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            omega = float(rng.uniform(0.1, 10.0))
            lam = float(rng.uniform(0.0, 50.0))
            t = float(rng.uniform(0.0, 5.0))
            c = float(rng.uniform(0.5, 3.0))
            closed = harmonic_integral(omega, lam, t, c).value
            assert abs(closed - quadrature_integral(omega, lam, t, c)) < 1e-10

    def test_zero_frequency_reduces_to_sine_kernel_integral(self):
        lam, t, c = 4.0, 1.3, 1.0
        closed = harmonic_integral(0.0, lam, t, c).value
        expected = (1.0 - math.cos(t * c * math.sqrt(lam))) / (c * c * lam)
        assert closed == pytest.approx(expected, rel=1e-12)
        assert closed.imag == 0.0

    def test_resonance_limit_branch(self):
        omega = 2.0
        t = 0.7
        res = harmonic_integral(omega, omega**2 * (1.0 + 1e-12), t, 1.0)
        assert res.resonant
        assert abs(res.value - quadrature_integral(omega, omega**2, t, 1.0)) < 1e-10

    def test_resonance_without_limit_branch_raises(self):
        with pytest.raises(ResonanceSingularityError):
            harmonic_integral(2.0, 4.0, 1.0, 1.0, allow_resonance_limit=False)

    def test_constant_mode_branch(self):
        omega, t = 1.3, 2.1
        closed = harmonic_integral(omega, 0.0, t, 1.0).value
        assert abs(closed - quadrature_integral(omega, 0.0, t, 1.0)) < 1e-12


class TestClosedFormMeanPressure:
    def make_inputs(self):
        geom = wall_geometry()
        cav = build_cavity_basis(geom, 8)
        med = AcousticMedium(c=1.0, rho0=1.2)
        cfg = CouplingConfig(rho0=1.2, rho_m=1200.0, d=1.0, epsilon=1e-6)
        src = HarmonicSource(p0=1.0, omega=1.7, patch_mask=(True,))
        t = np.linspace(0.0, 2.0, 641)
        return geom, cav, med, cfg, src, t

    def test_zero_mean_displacement_gives_zero(self):
        _, cav, med, cfg, src, t = self.make_inputs()
        sol = closed_form_mean_pressure(cfg, src, med, cav, 0.0, t)
        assert np.all(sol.p == 0.0)

    def test_amplitude_scales_with_frequency_squared(self):
        _, cav, med, cfg, _, t = self.make_inputs()
        norms = []
        for omega in (1e-3, 1e-4):
            src = HarmonicSource(p0=1.0, omega=omega, patch_mask=(True,))
            sol = closed_form_mean_pressure(cfg, src, med, cav, 1e-4, t)
            norms.append(np.max(np.abs(sol.p)))
        assert norms[0] / norms[1] == pytest.approx(100.0, rel=1e-2)

    def test_matches_duhamel_pressure_solver(self):
        geom, cav, med, cfg, src, t = self.make_inputs()
        omega, u_mean = src.omega, 3e-4 + 0j
        pb = piston_basis(geom, geom.patches[0])
        u = u_mean * np.exp(1j * omega * t)[:, None]

        def accel(times):
            times = np.asarray(times, dtype=float)
            return -(omega**2) * u_mean * np.exp(1j * omega * times)[:, None]

        pv = PatchVibration(
            geom.patches[0], pb, t, u, 1j * omega * u, -(omega**2) * u, accel
        )
        vib = BoundaryVibration(geom, (pv,), epsilon=abs(u_mean))
        numeric = solve_pressure(vib, cav, med, t)
        closed = closed_form_mean_pressure(cfg, src, med, cav, u_mean, t)
        rel = np.linalg.norm(numeric.p - closed.p) / np.linalg.norm(closed.p)
        assert rel < 1e-6


class TestMeanCurvature:
    def test_piston_mode_has_zero_curvature(self):
        geom = wall_geometry()
        basis = piston_basis(geom, geom.patches[0])
        h = mean_curvature(ModalField(basis, np.array([2.0])))
        assert np.all(h.coefficients == 0.0)

    def test_first_sine_mode(self):
        geom = strip_geometry()
        basis = build_patch_basis(geom, geom.patches[0], 3)
        coeffs = np.zeros(basis.size)
        coeffs[0] = 1.0  # sin(pi y) on a unit patch
        h = mean_curvature(ModalField(basis, coeffs))
        assert h.coefficients[0] == pytest.approx(-math.pi**2 / 2.0, rel=1e-12)
        assert np.all(h.coefficients[1:] == 0.0)

    def test_linearity(self):
        geom = strip_geometry()
        basis = build_patch_basis(geom, geom.patches[0], 3)
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=basis.size), rng.normal(size=basis.size)
        ha = mean_curvature(ModalField(basis, a)).coefficients
        hb = mean_curvature(ModalField(basis, b)).coefficients
        hab = mean_curvature(ModalField(basis, a + 2.0 * b)).coefficients
        np.testing.assert_allclose(hab, ha + 2.0 * hb, rtol=1e-12)


class TestPicardIterate:
    def run_picard(self, g, p0=1.0, k_max=5, n_steps=641, t_final=4.0):
        geom = wall_geometry()
        cav = build_cavity_basis(geom, 8)
        pb = build_patch_basis(geom, geom.patches[0], 1)
        cfg = CouplingConfig(rho0=1.2, rho_m=1.2 / g, d=1.0, epsilon=g * g)
        src = HarmonicSource(p0=p0, omega=1.7, patch_mask=(True,))
        op = MembraneOperator(c_m2=1.0, c_H2=0.0, d=1.0)
        med = AcousticMedium(c=1.0, rho0=1.2)
        t = np.linspace(0.0, t_final, n_steps)
        return picard_iterate(
            cfg, src, geom, (cav, [pb]), exponential_lapse(0.3), op, med, t, k_max
        )

    def test_zero_amplitude_gives_zero_iterates(self):
        ledger = self.run_picard(1e-3, p0=0.0, k_max=3, n_steps=161, t_final=1.0)
        assert all(not np.any(u[0]) for u in ledger.u_iterates)
        assert all(not np.any(p) for p in ledger.p_iterates)
        assert ledger.u_ratios == () and ledger.p_ratios == ()

    def test_first_two_displacement_iterates_coincide_exactly(self):
        ledger = self.run_picard(1e-2, k_max=3)
        assert np.array_equal(ledger.u_iterates[1][0], ledger.u_iterates[2][0])

    def test_corrections_contract_with_coupling_strength(self):
        for g in (1e-2, 1e-3):
            ledger = self.run_picard(g)
            assert ledger.u_ratios and ledger.p_ratios
            assert all(r <= 10.0 * g for r in ledger.u_ratios)
            assert all(r <= 10.0 * g for r in ledger.p_ratios)

    def test_second_pressure_iterate_linear_in_amplitude(self):
        a = self.run_picard(1e-3, p0=2.0, k_max=2)
        b = self.run_picard(1e-3, p0=4.0, k_max=2)
        assert np.array_equal(b.p_iterates[2], 2.0 * a.p_iterates[2])

    def test_grid_refinement_convergence_order(self):
        runs = [self.run_picard(1e-2, k_max=2, n_steps=n + 1) for n in (640, 1280, 2560)]
        p = [r.p_iterates[2] for r in runs]
        e1 = np.linalg.norm(p[0] - p[1][::2])
        e2 = np.linalg.norm(p[1] - p[2][::2])
        assert math.log2(e1 / e2) >= 2.0

    def test_non_contracting_feedback_raises(self):
        geom = wall_geometry()
        cav = build_cavity_basis(geom, 8)
        pb = build_patch_basis(geom, geom.patches[0], 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cfg = CouplingConfig(rho0=1.2, rho_m=1.21, d=1.0, epsilon=0.9)
            src = HarmonicSource(p0=1.0, omega=math.pi, patch_mask=(True,))
            op = MembraneOperator(c_m2=1.0, c_H2=0.0, d=1.0)
            med = AcousticMedium(c=1.0, rho0=1.2)
            t = np.linspace(0.0, 12.0, 1921)
            with pytest.raises(ContractionViolationError):
                picard_iterate(
                    cfg, src, geom, (cav, [pb]), exponential_lapse(0.0), op, med, t, 6
                )

    def test_rejects_short_iteration(self):
        with pytest.raises(InvalidArgumentError):
            self.run_picard(1e-3, k_max=1, n_steps=161, t_final=1.0)


class TestLcpoIteration:
    def make_problem(self, amps, c_H2=0.0):
        geom = strip_geometry()
        basis = build_patch_basis(geom, geom.patches[0], 2)
        op = MembraneOperator(c_m2=1.0, c_H2=c_H2, d=1.0)
        lapse = exponential_lapse(0.2)
        t = np.linspace(0.0, 1.0, 501)
        src = harmonic_patch_source(basis, t, np.asarray(amps, dtype=float), 2.0)
        full = solve_membrane(basis, op, lapse, src, t)
        return basis, op, lapse, t, src, full

    def test_matched_uniform_curvature_is_exact(self):
        # A single-mode field with gamma_bar = gamma_1 / 2 has zero
        # curvature deviation, so the l = 0 solve already equals the full
        # variable-coefficient solution.
        basis, op, lapse, t, src, full = self.make_problem([1e-3, 0.0])
        gamma_bar = 0.5 * float(basis.eigenvalues[0])
        res = lcpo_iteration(full, op, gamma_bar, lapse, src, t, l_max=1)
        ref = np.linalg.norm(full.u)
        assert np.linalg.norm(res.iterates[0] - full.u) < 1e-12 * ref
        assert np.linalg.norm(res.iterates[1] - full.u) < 1e-12 * ref
        assert res.delta_h_ratio < 1e-3

    def test_corrections_converge_toward_full_solve(self):
        # Both excited modes sit within the contraction basin of the
        # constant-curvature operator, so each feedback round shrinks the
        # distance to the variable-coefficient solution.
        basis, op, lapse, t, src, full = self.make_problem([1e-3, 4e-4])
        gamma_bar = 0.25 * float(basis.eigenvalues[0] + basis.eigenvalues[1])
        res = lcpo_iteration(full, op, gamma_bar, lapse, src, t, l_max=3)
        errs = [np.linalg.norm(it - full.u) for it in res.iterates]
        assert errs[3] < errs[2] < errs[1] < errs[0]
        assert res.next_correction < res.correction_norms[0]

    def test_large_curvature_deviation_raises(self):
        basis, op, lapse, t, src, full = self.make_problem([1e-3, 4e-4])
        with pytest.raises(AssumptionViolationError):
            lcpo_iteration(full, op, 1e-3, lapse, src, t, l_max=1)


class TestPistonPipeline:
    def make_vibration(self, coeffs_of_t, basis, geom, eps):
        t = np.linspace(0.0, 1.0, 501)
        u = coeffs_of_t(t)
        pv = PatchVibration.from_samples(geom.patches[0], basis, t, u)
        return BoundaryVibration(geom, (pv,), epsilon=eps)

    def test_zero_displacement_rejected(self):
        geom = strip_geometry()
        basis = build_patch_basis(geom, geom.patches[0], 2)
        vib = self.make_vibration(
            lambda t: np.zeros((len(t), basis.size)), basis, geom, 1e-3
        )
        cav = build_cavity_basis(geom, 4)
        with pytest.raises(DegenerateInputError):
            piston_pipeline(vib, geom, 1e-3, cav, AcousticMedium(1.0, 1.2))

    def test_constant_motion_is_its_own_piston(self):
        geom = wall_geometry()
        basis = piston_basis(geom, geom.patches[0])
        eps = 1e-3
        vib = self.make_vibration(
            lambda t: eps * np.sin(3.0 * t)[:, None], basis, geom, eps
        )
        cav = build_cavity_basis(geom, 4)
        report = piston_pipeline(vib, geom, eps, cav, AcousticMedium(1.0, 1.2))
        assert report.ratios == (0.0,)
        assert report.c_piston == 0.0
        assert report.leading_order
        assert np.array_equal(report.full.p, report.piston.p)
        assert report.deviation == 0.0

    def test_eigenmode_deviation_within_certified_bound(self):
        geom = strip_geometry()
        basis = build_patch_basis(geom, geom.patches[0], 2)
        eps = 1e-3

        def motion(t):
            u = np.zeros((len(t), basis.size))
            u[:, 0] = eps * np.sin(3.0 * t)
            return u

        vib = self.make_vibration(motion, basis, geom, eps)
        cav = build_cavity_basis(geom, 4)
        report = piston_pipeline(vib, geom, eps, cav, AcousticMedium(1.0, 1.2))
        # Pure eigenmode: the gradient/stiffness Rayleigh quotient saturates
        # the mean-deviation bound at exactly 1.
        assert report.ratios[0] == pytest.approx(1.0, rel=1e-12)
        assert report.deviation <= report.c_piston * eps
        # Normalized first mode sqrt(2) sin(pi y) has surface mean
        # sqrt(2) * 2 / pi times the coefficient.
        mean = report.u_means[0]
        assert np.max(np.abs(mean)) == pytest.approx(
            eps * 2.0 * math.sqrt(2.0) / math.pi, rel=1e-6
        )
