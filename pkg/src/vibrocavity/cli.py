"""Configuration-driven command-line front end.

Subcommands
-----------
simulate      run the coupled fixed point and write CSV time series
eigs          perturbation shifts of the cavity spectrum for the scenario
magnus-check  convergence diagnostic of the graded propagator expansion
piston        piston-approximation certificate and deviation report
validate      cross-check the coupled solve against the FDTD reference

All commands read a versioned JSON scenario config (--config), write results
under --out, and exit with 0 on success, 2 on configuration errors (with a
line-anchored message) and 3 on numerical failures.  Outputs carry no
timestamps, so reruns of an identical config are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import click
import numpy as np
from scipy.integrate import solve_ivp

from . import __version__
from .acoustics import (
    AcousticMedium,
    BoundaryVibration,
    PatchVibration,
    assemble_V,
    eigenvalue_shift,
)
from .coupling import CouplingConfig, HarmonicSource, picard_iterate, piston_pipeline
from .errors import ConfigError, VibrocavityError
from .geometry import (
    CavityGeometry,
    PatchGeometry,
    SpectralBasis,
    build_cavity_basis,
    build_patch_basis,
)
from .magnus import (
    TimeDependentGenerator,
    convergence_certificate,
    magnus_terms,
    matrix_exponential,
)
from .membrane import (
    MembraneOperator,
    TimeLapse,
    exponential_lapse,
    power_lapse,
    unit_lapse,
)
from .oracle import OracleConfig, fdtd_coupled_oracle

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_FLOAT_FMT = "%.17g"


# ---------------------------------------------------------------------------
# Configuration parsing


class Scenario:
    """Validated scenario assembled from one JSON config file."""

    def __init__(self, raw: dict, text: str, modes_override: int | None = None):
        self._text = text
        if raw.get("version") != 1:
            raise self._error("version", "config version must be 1")
        self.geometry = self._parse_geometry(self._block(raw, "geometry"))
        self.medium = self._parse_medium(self._block(raw, "medium"))
        self.membrane = self._block(raw, "membrane")
        self.damping = raw.get("damping", {"kind": "none"})
        self.source = self._block(raw, "source")
        self.numerics = self._block(raw, "numerics")
        self.probes = raw.get("probes", [])
        if modes_override is not None:
            self.numerics = dict(self.numerics, cavity_modes=modes_override)
        self._validate()

    # -- helpers

    def _line_of(self, key: str) -> int | None:
        needle = f'"{key}"'
        for i, line in enumerate(self._text.splitlines(), start=1):
            if needle in line:
                return i
        return None

    def _error(self, key: str, message: str) -> ConfigError:
        return ConfigError(message, line=self._line_of(key))

    def _block(self, raw: dict, key: str) -> dict:
        if key not in raw or not isinstance(raw[key], dict):
            raise self._error(key, f"missing or malformed '{key}' block")
        return raw[key]

    def _positive(self, block: dict, block_name: str, key: str) -> float:
        if key not in block:
            raise self._error(block_name, f"missing '{key}' in '{block_name}'")
        value = block[key]
        if not isinstance(value, (int, float)) or value <= 0:
            raise self._error(key, f"'{key}' must be a positive number")
        return float(value)

    # -- blocks

    def _parse_geometry(self, block: dict) -> CavityGeometry:
        lengths = block.get("edge_lengths")
        if not isinstance(lengths, list) or not lengths or any(
            not isinstance(v, (int, float)) or v <= 0 for v in lengths
        ):
            raise self._error("edge_lengths", "edge_lengths must be positive numbers")
        patches_raw = block.get("patches")
        if not isinstance(patches_raw, list) or not patches_raw:
            raise self._error("patches", "at least one patch is required")
        patches = []
        for spec in patches_raw:
            try:
                extents = spec.get("extents")
                patches.append(
                    PatchGeometry(
                        face_axis=int(spec["face_axis"]),
                        side=int(spec["side"]),
                        extents=tuple(tuple(float(v) for v in r) for r in extents)
                        if extents is not None
                        else None,
                    )
                )
            except (KeyError, TypeError, ValueError, VibrocavityError) as exc:
                raise self._error("patches", f"invalid patch: {exc}") from exc
        try:
            return CavityGeometry(tuple(float(v) for v in lengths), tuple(patches))
        except VibrocavityError as exc:
            raise self._error("geometry", str(exc)) from exc

    def _parse_medium(self, block: dict) -> AcousticMedium:
        return AcousticMedium(
            c=self._positive(block, "medium", "c"),
            rho0=self._positive(block, "medium", "rho0"),
        )

    def _validate(self) -> None:
        for key in ("rho_m", "d", "c_m2"):
            self._positive(self.membrane, "membrane", key)
        c_h2 = self.membrane.get("c_H2", 0.0)
        if not isinstance(c_h2, (int, float)) or c_h2 < 0:
            raise self._error("c_H2", "'c_H2' must be nonnegative")
        kind = self.damping.get("kind", "none")
        if kind not in ("exponential", "power", "none"):
            raise self._error("damping", "damping kind must be exponential, power or none")
        if kind != "none":
            self._positive(self.damping, "damping", "alpha")
        self._positive(self.source, "source", "omega")
        mask = self.source.get("patch_mask")
        if mask is not None and (
            not isinstance(mask, list) or len(mask) != len(self.geometry.patches)
        ):
            raise self._error("patch_mask", "patch_mask must list one flag per patch")
        for key in ("cavity_modes", "patch_modes", "t_final", "n_steps"):
            self._positive(self.numerics, "numerics", key)
        for probe in self.probes:
            if not isinstance(probe, list) or len(probe) != self.geometry.dim:
                raise self._error("probes", "each probe needs one coordinate per axis")

    # -- assembled objects

    def coupling_config(self) -> CouplingConfig:
        eps = self.numerics.get("epsilon")
        if eps is None:
            g = self.medium.rho0 / float(self.membrane["rho_m"])
            eps = g * g
        return CouplingConfig(
            rho0=self.medium.rho0,
            rho_m=float(self.membrane["rho_m"]),
            d=float(self.membrane["d"]),
            epsilon=float(eps),
        )

    def operator(self) -> MembraneOperator:
        return MembraneOperator(
            c_m2=float(self.membrane["c_m2"]),
            c_H2=float(self.membrane.get("c_H2", 0.0)),
            d=float(self.membrane["d"]),
        )

    def lapse(self) -> TimeLapse:
        kind = self.damping.get("kind", "none")
        if kind == "exponential":
            return exponential_lapse(float(self.damping["alpha"]))
        if kind == "power":
            return power_lapse(float(self.damping["alpha"]))
        return unit_lapse()

    def harmonic_source(self) -> HarmonicSource:
        mask = self.source.get("patch_mask") or [True] * len(self.geometry.patches)
        p0 = complex(self.source.get("p0_re", 0.0), self.source.get("p0_im", 0.0))
        return HarmonicSource(p0=p0, omega=float(self.source["omega"]), patch_mask=tuple(mask))

    def bases(self) -> tuple[SpectralBasis, list[SpectralBasis]]:
        cavity = build_cavity_basis(self.geometry, int(self.numerics["cavity_modes"]))
        patch_bases = [
            build_patch_basis(self.geometry, patch, int(self.numerics["patch_modes"]))
            for patch in self.geometry.patches
        ]
        return cavity, patch_bases

    def t_grid(self) -> np.ndarray:
        return np.linspace(
            0.0, float(self.numerics["t_final"]), int(self.numerics["n_steps"]) + 1
        )


def load_scenario(path: str | None, modes: int | None) -> Scenario:
    if path is None:
        raise ConfigError("--config is required for this command")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = p.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object", line=1)
    return Scenario(raw, text, modes_override=modes)


# ---------------------------------------------------------------------------
# Output helpers


def _fmt(value: float) -> str:
    return _FLOAT_FMT % value


def _mode_label(prefix: str, multi_index: np.ndarray) -> str:
    return prefix + "-".join(str(int(i)) for i in multi_index)


def _write_series_csv(
    path: Path, t_grid: np.ndarray, labels: list[str], data: np.ndarray
) -> None:
    """Write t plus one re/im column pair per labelled series."""
    complex_data = np.iscomplexobj(data)
    header = ["t"]
    for lab in labels:
        header.extend([f"{lab}_re", f"{lab}_im"] if complex_data else [lab])
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, t in enumerate(t_grid):
            row = [_fmt(t)]
            for j in range(data.shape[1]):
                if complex_data:
                    row.extend([_fmt(data[i, j].real), _fmt(data[i, j].imag)])
                else:
                    row.append(_fmt(data[i, j]))
            writer.writerow(row)


def _write_manifest(out_dir: Path, config_text: str, command: str, outputs: list[str]) -> None:
    manifest = {
        "package": "vibrocavity",
        "package_version": __version__,
        "command": command,
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "outputs": sorted(outputs),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _emit_report(report: dict, out_dir: Path | None, name: str, quiet: bool, config_text: str) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text + "\n")
        _write_manifest(out_dir, config_text, name.removesuffix("_report.json"), [name])
    if not quiet:
        click.echo(text)


def _probe_values(scenario: Scenario, cavity: SpectralBasis, p: np.ndarray) -> np.ndarray:
    cols = []
    for probe in scenario.probes:
        axes_points = tuple(np.array([float(x)]) for x in probe)
        vals = cavity.mode_values(axes_points).reshape(cavity.size)
        cols.append(p @ vals)
    return np.stack(cols, axis=1) if cols else np.zeros((len(p), 0), dtype=p.dtype)


# ---------------------------------------------------------------------------
# Command bodies (shared by subcommands)


def _run_simulate(scenario: Scenario, out_dir: Path, config_text: str, quiet: bool) -> None:
    cavity, patch_bases = scenario.bases()
    t = scenario.t_grid()
    ledger = picard_iterate(
        scenario.coupling_config(),
        scenario.harmonic_source(),
        scenario.geometry,
        (cavity, patch_bases),
        scenario.lapse(),
        scenario.operator(),
        scenario.medium,
        t,
        k_max=int(scenario.numerics.get("k_max", 3)),
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []

    p_labels = [_mode_label("p", mi) for mi in cavity.multi_indices]
    _write_series_csv(out_dir / "pressure_modes.csv", t, p_labels, ledger.p_iterates[-1])
    outputs.append("pressure_modes.csv")

    for i, (basis, u) in enumerate(zip(patch_bases, ledger.u_iterates[-1])):
        labels = [_mode_label("u", mi) for mi in basis.multi_indices]
        name = f"membrane_patch{i}.csv"
        _write_series_csv(out_dir / name, t, labels, u)
        outputs.append(name)

    probe = _probe_values(scenario, cavity, ledger.p_iterates[-1])
    probe_labels = [f"probe{j}" for j in range(probe.shape[1])]
    _write_series_csv(out_dir / "probe_pressure.csv", t, probe_labels, probe)
    outputs.append("probe_pressure.csv")

    with (out_dir / "ledger.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "u_correction", "p_correction"])
        for k, (du, dp) in enumerate(zip(ledger.u_corrections, ledger.p_corrections), start=1):
            writer.writerow([str(k), _fmt(du), _fmt(dp)])
    outputs.append("ledger.csv")

    _write_manifest(out_dir, config_text, "simulate", outputs)
    if not quiet:
        click.echo(f"wrote {len(outputs) + 1} files to {out_dir}")


def _first_vibration(scenario: Scenario) -> tuple[SpectralBasis, BoundaryVibration]:
    """The first Picard displacement iterate as a boundary vibration."""
    cavity, patch_bases = scenario.bases()
    t = scenario.t_grid()
    ledger = picard_iterate(
        scenario.coupling_config(),
        scenario.harmonic_source(),
        scenario.geometry,
        (cavity, patch_bases),
        scenario.lapse(),
        scenario.operator(),
        scenario.medium,
        t,
        k_max=2,
    )
    eps = max(
        float(np.max(np.abs(u))) for u in ledger.u_iterates[1]
    ) or scenario.coupling_config().epsilon
    patches = tuple(
        PatchVibration.from_solution(patch, sol)
        for patch, sol in zip(scenario.geometry.patches, ledger.solutions)
    )
    return cavity, BoundaryVibration(scenario.geometry, patches, epsilon=eps)


def _run_eigs(scenario: Scenario) -> dict:
    cavity, vib = _first_vibration(scenario)
    t = vib.t_grid
    v = assemble_V(vib, cavity, time_indices=[len(t) - 1])[0]
    lams = cavity.eigenvalues
    n_report = min(12, cavity.size)
    shifts1 = [float(eigenvalue_shift(n, lams, v, order=1).real) for n in range(n_report)]
    shifts2 = [float(eigenvalue_shift(n, lams, v, order=2).real) for n in range(n_report)]
    exact = np.linalg.eigvalsh(np.diag(lams) + v)
    v_norm = float(np.linalg.norm(v, 2))
    residual2 = float(
        np.max(np.abs(np.sort(lams[:n_report] + np.array(shifts2)) - exact[:n_report]))
    )
    bound = 50.0 * v_norm**3 + 1e-12
    return {
        "epsilon": float(vib.epsilon),
        "eigenvalues": [float(x) for x in lams[:n_report]],
        "first_order_shifts": shifts1,
        "second_order_shifts": shifts2,
        "operator_norm": v_norm,
        "second_order_residual": residual2,
        "residual_bound": bound,
        "passed": residual2 <= bound,
    }


def _run_magnus_check() -> dict:
    gen = TimeDependentGenerator(lambda t: np.array([[0.0, 1.0], [t, 0.0]]), 2)
    bound, certified = convergence_certificate(gen, 0.0, 1.0)

    sol = solve_ivp(
        lambda t, y: (gen(t) @ y.reshape(2, 2)).ravel(),
        (0.0, 1.0),
        np.eye(2).ravel(),
        rtol=1e-12,
        atol=1e-14,
        dense_output=False,
    )
    reference = sol.y[:, -1].reshape(2, 2)

    n_steps = 5
    edges = np.linspace(0.0, 1.0, n_steps + 1)
    errors = {}
    for order in (1, 2, 3):
        prop = np.eye(2)
        for lo, hi in zip(edges[:-1], edges[1:]):
            prop = matrix_exponential(magnus_terms(gen, lo, hi, order).total()) @ prop
        errors[f"order_{order}"] = float(np.linalg.norm(prop - reference))
    monotone = errors["order_1"] >= errors["order_2"] >= errors["order_3"]
    return {
        "certificate_integral": float(bound),
        "certified": bool(certified),
        "propagator_errors": errors,
        "monotone": bool(monotone),
        "passed": bool(certified and monotone and errors["order_3"] <= 1e-4),
    }


def _run_piston(scenario: Scenario) -> dict:
    cavity, vib = _first_vibration(scenario)
    # Idle patches (e.g. undriven walls) carry no certificate; restrict the
    # pipeline to the patches that actually move.
    moving = tuple(pv for pv in vib.patches if np.any(pv.u))
    if moving:
        vib = BoundaryVibration(vib.geom, moving, vib.epsilon)
    eps = vib.epsilon
    report = piston_pipeline(vib, scenario.geometry, eps, cavity, scenario.medium)
    bound = report.c_piston * eps
    return {
        "epsilon": eps,
        "poincare_ratios": [float(r) for r in report.ratios],
        "c_piston": float(report.c_piston),
        "leading_order": bool(report.leading_order),
        "deviation": float(report.deviation),
        "deviation_bound": float(bound),
        "passed": bool(report.deviation <= bound + 1e-15),
    }


def _run_validate(scenario: Scenario) -> dict:
    geom = scenario.geometry
    if geom.dim != 1 or len(geom.patches) != 2 or {p.side for p in geom.patches} != {0, 1}:
        raise ConfigError("validate needs a 1D geometry with patches on both walls")
    cavity, patch_bases = scenario.bases()
    t = scenario.t_grid()
    cfg = scenario.coupling_config()
    src = scenario.harmonic_source()
    op = scenario.operator()
    lapse = scenario.lapse()
    ledger = picard_iterate(
        cfg, src, geom, (cavity, patch_bases), lapse, op, scenario.medium, t, k_max=3
    )
    # Order the two wall solutions as (left, right).
    by_side = {p.side: u for p, u in zip(geom.patches, ledger.u_iterates[-1])}
    mask_by_side = {p.side: m for p, m in zip(geom.patches, src.patch_mask)}
    stiff_by_side = {
        p.side: float(op.stiffness(b.eigenvalues[0]))
        for p, b in zip(geom.patches, patch_bases)
    }

    def p_ex(time):
        val = (src.p0 * np.exp(1j * src.omega * time)).real
        return (
            val if mask_by_side[0] else 0.0,
            val if mask_by_side[1] else 0.0,
        )

    dx = float(scenario.numerics.get("oracle_dx", 1.0 / 800.0))
    fdtd = fdtd_coupled_oracle(
        OracleConfig(dx=dx),
        geom,
        c=scenario.medium.c,
        rho0=scenario.medium.rho0,
        sigma_m=cfg.sigma_m,
        piston_stiffness=(stiff_by_side[0], stiff_by_side[1]),
        lapse=lapse,
        p_ex=p_ex,
        t_grid=t,
    )
    num = 0.0
    den = 0.0
    for side in (0, 1):
        spectral = np.real(by_side[side][:, 0])
        reference = np.interp(t, fdtd.t, fdtd.u_ends[:, side])
        num += float(np.sum((spectral - reference) ** 2))
        den += float(np.sum(reference**2))
    rel = math.sqrt(num / den) if den > 0 else math.sqrt(num)
    g = cfg.g
    bound = max(10.0 * g * g, 1e-3)
    return {
        "coupling_strength": g,
        "relative_l2_error": rel,
        "error_bound": bound,
        "passed": bool(rel <= bound),
    }


# ---------------------------------------------------------------------------
# Click wiring


def _common_options(fn):
    fn = click.option("--config", "config_path", type=str, default=None, help="JSON scenario config")(fn)
    fn = click.option("--out", "out_dir", type=str, default=None, help="output directory")(fn)
    fn = click.option("--modes", type=int, default=None, help="override cavity mode count")(fn)
    fn = click.option("--quiet", is_flag=True, default=False, help="suppress console output")(fn)
    return fn


def _dispatch(runner, config_path, out_dir, modes, quiet, name, needs_config=True):
    try:
        config_text = ""
        scenario = None
        if needs_config or config_path is not None:
            scenario = load_scenario(config_path, modes)
            config_text = Path(config_path).read_text()
        report = runner(scenario)
        if isinstance(report, dict):
            _emit_report(
                report,
                Path(out_dir) if out_dir else None,
                f"{name}_report.json",
                quiet,
                config_text,
            )
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (VibrocavityError, FloatingPointError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    sys.exit(EXIT_OK)


@click.group()
def main():
    """Spectral vibro-acoustic cavity simulation engine."""


@main.command()
@_common_options
def simulate(config_path, out_dir, modes, quiet):
    """Run the coupled solve and write CSV time series."""

    def runner(scenario):
        if out_dir is None:
            raise ConfigError("simulate requires --out")
        _run_simulate(scenario, Path(out_dir), Path(config_path).read_text(), quiet)
        return None

    _dispatch(runner, config_path, out_dir, modes, quiet, "simulate")


@main.command()
@_common_options
def eigs(config_path, out_dir, modes, quiet):
    """Perturbed cavity spectrum diagnostic."""
    _dispatch(lambda s: _run_eigs(s), config_path, out_dir, modes, quiet, "eigs")


@main.command("magnus-check")
@_common_options
def magnus_check(config_path, out_dir, modes, quiet):
    """Graded-propagator convergence diagnostic (fixed 2x2 generator)."""
    _dispatch(
        lambda s: _run_magnus_check(),
        config_path,
        out_dir,
        modes,
        quiet,
        "magnus-check",
        needs_config=False,
    )


@main.command()
@_common_options
def piston(config_path, out_dir, modes, quiet):
    """Piston-approximation certificate and deviation report."""
    _dispatch(lambda s: _run_piston(s), config_path, out_dir, modes, quiet, "piston")


@main.command()
@_common_options
def validate(config_path, out_dir, modes, quiet):
    """Cross-check the coupled solve against the FDTD reference."""
    _dispatch(lambda s: _run_validate(s), config_path, out_dir, modes, quiet, "validate")


if __name__ == "__main__":
    main()
