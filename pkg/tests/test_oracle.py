"""Tests for the brute-force reference solvers."""

import math

import numpy as np
import pytest

from vibrocavity.errors import InvalidArgumentError
from vibrocavity.geometry import CavityGeometry, PatchGeometry, piston_basis
from vibrocavity.membrane import (
    MembraneOperator,
    PatchSource,
    exponential_lapse,
    solve_membrane,
)
from vibrocavity.oracle import (
    FdtdResult,
    OracleConfig,
    SimulationResult,
    compare,
    fdtd_coupled_oracle,
)


def piston_geometry():
    left = PatchGeometry(face_axis=0, side=0)
    right = PatchGeometry(face_axis=0, side=1)
    return CavityGeometry((1.0,), (left, right))


def run_fdtd(dx, p_ex, t_final=2.0, rho0=1.2, alpha=0.2, n_out=81):
    geom = piston_geometry()
    t_grid = np.linspace(0.0, t_final, n_out)
    return fdtd_coupled_oracle(
        OracleConfig(dx=dx),
        geom,
        c=1.0,
        rho0=rho0,
        sigma_m=1.0,
        piston_stiffness=(math.pi**2, math.pi**2),
        lapse=exponential_lapse(alpha),
        p_ex=p_ex,
        t_grid=t_grid,
    )


class TestOracleConfig:
    def test_rejects_unsafe_cfl(self):
        with pytest.raises(InvalidArgumentError):
            OracleConfig(cfl_safety=0.8)
        with pytest.raises(InvalidArgumentError):
            OracleConfig(dx=-1.0)


class TestFdtdOracle:
    def test_quiescent_without_forcing(self):
        res = run_fdtd(1e-2, lambda t: (0.0, 0.0), t_final=1.0)
        assert np.all(res.p == 0.0)
        assert np.all(res.u_ends == 0.0)
        assert np.all(res.energy == 0.0)

    def test_rejects_higher_dimensions(self):
        patch = PatchGeometry(face_axis=0, side=0)
        geom = CavityGeometry((1.0, 1.0), (patch,))
        with pytest.raises(InvalidArgumentError):
            fdtd_coupled_oracle(
                OracleConfig(),
                geom,
                1.0,
                1.0,
                1.0,
                (1.0, 1.0),
                exponential_lapse(0.0),
                lambda t: (0.0, 0.0),
                np.linspace(0, 1, 5),
            )

    def test_grid_halving_convergence_order(self):
        omega = 1.7

        def p_ex(t):
            return (math.sin(omega * t), 0.0)

        coarse = run_fdtd(1.0 / 100, p_ex)
        medium = run_fdtd(1.0 / 200, p_ex)
        fine = run_fdtd(1.0 / 400, p_ex)
        # Each run records its own internal time steps; interpolate the
        # wall displacements onto a shared grid before differencing.
        tc = np.linspace(0.0, 2.0, 81)

        def on_common(res):
            return np.column_stack(
                [np.interp(tc, res.t, res.u_ends[:, k]) for k in range(2)]
            )

        e1 = np.max(np.abs(on_common(coarse) - on_common(medium)))
        e2 = np.max(np.abs(on_common(medium) - on_common(fine)))
        order = math.log2(e1 / e2)
        assert order >= 1.9

    def test_decoupled_walls_match_closed_form_membrane(self):
        # With rho0 = 0 the pressure never leaves zero and each wall is an
        # independent damped oscillator driven by p_ex / sigma_m.
        omega, alpha = 1.7, 0.3
        res = run_fdtd(
            1.0 / 400, lambda t: (math.sin(omega * t), 0.0), rho0=0.0, alpha=alpha
        )
        assert np.all(res.p == 0.0)
        patch = PatchGeometry(face_axis=0, side=0)
        geom = CavityGeometry((1.0,), (patch,))
        basis = piston_basis(geom, patch, gamma=math.pi**2)
        op = MembraneOperator(c_m2=1.0, c_H2=0.0, d=1.0)
        t_grid = res.t

        def evaluator(times):
            return np.sin(omega * np.asarray(times))[:, None]

        src = PatchSource(basis, t_grid, evaluator(t_grid), evaluator)
        sol = solve_membrane(basis, op, exponential_lapse(alpha), src, t_grid)
        ref = np.real(sol.u[:, 0])
        err = np.max(np.abs(res.u_ends[:, 0] - ref))
        assert err < 1e-4 * np.max(np.abs(ref))

    def test_compression_by_both_walls_raises_pressure(self):
        # Pushing both walls inward compresses the cavity.  With strong
        # damping the system settles near the static equilibrium: each
        # wall satisfies pi^2 u = (2 - p) / sigma_m with the uniform
        # back-pressure p = rho0 c^2 (u0 + uL) / L, giving
        # u0 = uL = 2 / (pi^2 + 2 rho0 c^2 / L).
        res = run_fdtd(1.0 / 400, lambda t: (2.0, 2.0), t_final=6.0, alpha=1.5)
        mean_p = np.trapezoid(res.p[-1], res.x)
        u_sum = res.u_ends[-1].sum()
        u_static_sum = 2.0 * 2.0 / (math.pi**2 + 2.4)
        p_static = 1.2 * u_static_sum
        assert u_sum == pytest.approx(u_static_sum, rel=0.05)
        assert mean_p == pytest.approx(p_static, rel=0.05)


class TestCompare:
    def make_results(self):
        t = np.linspace(0.0, 1.0, 101)
        a = SimulationResult(t=t, fields={"u": np.sin(t), "p": np.cos(t)})
        return t, a

    def test_identical_results_have_zero_error(self):
        t, a = self.make_results()
        rep = compare(a, a)
        assert rep.max_relative() == 0.0
        assert all(v == 0.0 for v in rep.absolute.values())

    def test_known_offset_in_linf(self):
        t, a = self.make_results()
        b = SimulationResult(t=t, fields={"u": np.sin(t) + 1e-3, "p": np.cos(t)})
        rep = compare(a, b, norm="Linf")
        assert rep.absolute["u"] == pytest.approx(1e-3, rel=1e-9)
        assert rep.relative["u"] == pytest.approx(1e-3 / np.max(np.abs(np.sin(t))), rel=1e-6)

    def test_interpolates_second_grid(self):
        t, a = self.make_results()
        t2 = np.linspace(0.0, 1.0, 1001)
        b = SimulationResult(t=t2, fields={"u": np.sin(t2), "p": np.cos(t2)})
        rep = compare(a, b)
        assert rep.max_relative() < 1e-6

    def test_disjoint_ranges_rejected(self):
        t, a = self.make_results()
        b = SimulationResult(t=t + 5.0, fields={"u": np.sin(t), "p": np.cos(t)})
        with pytest.raises(InvalidArgumentError):
            compare(a, b)

    def test_missing_field_rejected(self):
        t, a = self.make_results()
        b = SimulationResult(t=t, fields={"u": np.sin(t)})
        with pytest.raises(InvalidArgumentError):
            compare(a, b)
