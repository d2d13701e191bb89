"""Declarative scenarios, potential family registries, studies and reports.

A scenario is a JSON-compatible document (versioned schema) naming a grid, a
scalar and vector potential family, Gaussian initial/final states, a total
time, slice counts, and quadrature schedule parameters.  Studies turn a
scenario into a report: rows of (quantity, value, reference, errors) where
every row is tagged with the oracle that produced its reference.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapExceededError, SizeError
from . import gauge, pathint, reference, splitstep
from .fields import (
    Grid,
    ScalarPotentialSpec,
    VectorPotentialSpec,
    collect_singularities,
    gaussian_evaluator,
    gaussian_wave,
    l2_norm,
    pair_bilinear,
)

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# potential families


def _broadcast(params, key, ndim, default):
    val = params.get(key, default)
    arr = np.broadcast_to(np.atleast_1d(np.asarray(val, float)), (ndim,))
    return np.array(arr)


def _scalar_free(ndim, params):
    return None


def _scalar_harmonic(ndim, params):
    strength = float(params.get("strength", 1.0))
    center = _broadcast(params, "center", ndim, 0.0)

    def evaluate(p):
        return strength * np.sum((p - center) ** 2, axis=-1)

    return ScalarPotentialSpec(evaluate, declared_class="smooth")


def _scalar_constant(ndim, params):
    value = float(params.get("value", 1.0))

    def evaluate(p):
        return np.full(p.shape[:-1], value)

    return ScalarPotentialSpec(evaluate, declared_class="L^inf")


def _scalar_step(ndim, params):
    height = float(params.get("height", 1.0))
    edge = float(params.get("edge", 0.0))
    edge_point = tuple([edge] + [0.0] * (ndim - 1))

    def evaluate(p):
        return np.where(p[..., 0] > edge, height, 0.0)

    return ScalarPotentialSpec(
        evaluate, singular_points=(edge_point,), declared_class="L^inf, discontinuous"
    )


def _scalar_regularized_coulomb(ndim, params):
    charge = float(params.get("charge", 1.0))
    soft = float(params.get("softening", 0.1))
    center = _broadcast(params, "center", ndim, 0.0)

    def evaluate(p):
        return -charge / np.sqrt(np.sum((p - center) ** 2, axis=-1) + soft**2)

    return ScalarPotentialSpec(evaluate, declared_class="smooth (regularized)")


def _scalar_inverse_power(ndim, params):
    coeff = float(params.get("coeff", 1.0))
    power = float(params.get("power", 0.5))
    center = _broadcast(params, "center", ndim, 0.0)

    def evaluate(p):
        r = np.sqrt(np.sum((p - center) ** 2, axis=-1))
        with np.errstate(divide="ignore"):
            return coeff * r ** (-power)

    return ScalarPotentialSpec(
        evaluate, singular_points=(tuple(center),), declared_class="L^p_loc singular"
    )


SCALAR_FAMILIES = {
    "free": _scalar_free,
    "harmonic": _scalar_harmonic,
    "constant": _scalar_constant,
    "step-discontinuity": _scalar_step,
    "regularized-coulomb": _scalar_regularized_coulomb,
    "inverse-power-singular": _scalar_inverse_power,
}


def _vector_zero(ndim, params):
    return None


def _vector_constant(ndim, params):
    values = _broadcast(params, "values", ndim, 0.0)

    def make(l):
        return lambda p: np.full(p.shape[:-1], values[l])

    return VectorPotentialSpec(tuple(make(l) for l in range(ndim)), declared_class="L^inf")


def _vector_sinusoidal(ndim, params):
    amplitude = _broadcast(params, "amplitude", ndim, 1.0)
    period = _broadcast(params, "period", ndim, 2.0 * np.pi)

    def make(l):
        freq = 2.0 * np.pi / period[l]
        return lambda p: amplitude[l] * np.sin(freq * p[..., l])

    return VectorPotentialSpec(tuple(make(l) for l in range(ndim)), declared_class="smooth")


def _vector_constant_field_2d(ndim, params):
    if ndim != 2:
        raise ValueError("constant-field-2d requires dimension 2")
    b = float(params.get("field", 1.0))
    comps = (
        lambda p: -0.5 * b * p[..., 1],
        lambda p: 0.5 * b * p[..., 0],
    )
    return VectorPotentialSpec(comps, declared_class="smooth (symmetric gauge)")


def _vector_linear(ndim, params):
    matrix = np.asarray(params.get("matrix"), dtype=float)
    if matrix.shape != (ndim, ndim):
        raise ValueError("linear vector potential needs an n x n coefficient matrix")

    def make(l):
        return lambda p: np.einsum("m,...m->...", matrix[l], p)

    return VectorPotentialSpec(tuple(make(l) for l in range(ndim)), declared_class="smooth")


VECTOR_FAMILIES = {
    "zero": _vector_zero,
    "constant": _vector_constant,
    "sinusoidal": _vector_sinusoidal,
    "constant-field-2d": _vector_constant_field_2d,
    "linear": _vector_linear,
}


# ---------------------------------------------------------------------------
# scenario model


@dataclass(frozen=True)
class StateSpec:
    center: tuple[float, ...]
    width: tuple[float, ...]
    momentum: tuple[float, ...]

    def on_grid(self, grid: Grid):
        return gaussian_wave(grid, self.center, self.width, self.momentum)

    def evaluator(self, ndim: int):
        return gaussian_evaluator(self.center, self.width, self.momentum, ndim)


@dataclass(frozen=True)
class Scenario:
    name: str
    ndim: int
    grid: Grid
    scalar: ScalarPotentialSpec | None
    vector: VectorPotentialSpec | None
    initial_state: StateSpec
    final_state: StateSpec
    time: float
    slice_counts: tuple[int, ...]
    amplitude_params: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)


def _state_from_config(cfg: dict, ndim: int) -> StateSpec:
    def tup(key, default):
        val = cfg.get(key, default)
        return tuple(float(v) for v in np.broadcast_to(np.atleast_1d(val), (ndim,)))

    return StateSpec(tup("center", 0.0), tup("width", 1.0), tup("momentum", 0.0))


def scenario_from_dict(cfg: dict) -> Scenario:
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported scenario schema version {version!r}")
    ndim = int(cfg["dimension"])
    gcfg = cfg["grid"]
    grid = Grid(tuple(gcfg["lo"]), tuple(gcfg["hi"]), tuple(gcfg["shape"]))
    if grid.ndim != ndim:
        raise ValueError("grid dimension does not match the scenario dimension")

    scfg = cfg.get("scalar_potential", {"family": "free"})
    family = scfg.get("family", "free")
    if family not in SCALAR_FAMILIES:
        raise ValueError(f"unknown scalar potential family {family!r}")
    scalar = SCALAR_FAMILIES[family](ndim, scfg.get("params", {}))

    vcfg = cfg.get("vector_potential", {"family": "zero"})
    vfamily = vcfg.get("family", "zero")
    if vfamily not in VECTOR_FAMILIES:
        raise ValueError(f"unknown vector potential family {vfamily!r}")
    vector = VECTOR_FAMILIES[vfamily](ndim, vcfg.get("params", {}))

    for key in ("time",):
        if not np.isfinite(float(cfg[key])):
            raise ValueError(f"non-finite scenario parameter {key}")
    return Scenario(
        name=str(cfg["name"]),
        ndim=ndim,
        grid=grid,
        scalar=scalar,
        vector=vector,
        initial_state=_state_from_config(cfg.get("initial_state", {}), ndim),
        final_state=_state_from_config(cfg.get("final_state", {}), ndim),
        time=float(cfg["time"]),
        slice_counts=tuple(int(k) for k in cfg.get("slice_counts", (4, 8, 16, 32))),
        amplitude_params=dict(cfg.get("amplitude", {})),
        checks=dict(cfg.get("checks", {})),
    )


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# reports


CSV_COLUMNS = ("scenario", "quantity", "k_or_step", "value", "reference", "abs_error", "rel_error", "oracle")


@dataclass
class ReportRow:
    scenario: str
    quantity: str
    k_or_step: str
    value: complex
    reference: complex | None
    abs_error: float | None
    rel_error: float | None
    oracle: str


@dataclass
class Report:
    scenario: str
    rows: list[ReportRow] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    passed: bool = True

    def add(self, quantity, k_or_step, value, reference=None, oracle="", rel_scale=None):
        if reference is not None:
            abs_error = abs(value - reference)
            scale = rel_scale if rel_scale is not None else abs(reference)
            rel_error = abs_error / scale if scale > 0 else None
        else:
            abs_error = rel_error = None
        self.rows.append(
            ReportRow(self.scenario, quantity, str(k_or_step), value, reference, abs_error, rel_error, oracle)
        )

    def merge(self, other: "Report") -> None:
        self.rows.extend(other.rows)
        self.diagnostics.update(other.diagnostics)
        self.timings.update(other.timings)
        self.passed = self.passed and other.passed

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(
                    [
                        row.scenario,
                        row.quantity,
                        row.k_or_step,
                        _fmt_number(row.value),
                        _fmt_number(row.reference),
                        _fmt_number(row.abs_error),
                        _fmt_number(row.rel_error),
                        row.oracle,
                    ]
                )

    def write_json(self, path) -> None:
        doc = {
            "scenario": self.scenario,
            "passed": self.passed,
            "rows": [
                {
                    "quantity": r.quantity,
                    "k_or_step": r.k_or_step,
                    "value": _jsonify(r.value),
                    "reference": _jsonify(r.reference),
                    "abs_error": r.abs_error,
                    "rel_error": r.rel_error,
                    "oracle": r.oracle,
                }
                for r in self.rows
            ],
            "diagnostics": _jsonify(self.diagnostics),
            "timings": self.timings,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)


def _fmt_number(v):
    if v is None:
        return ""
    if isinstance(v, complex):
        if v.imag == 0.0:
            return repr(v.real)
        return f"{v.real!r}{v.imag:+}j"
    return repr(float(v))


def _jsonify(v):
    if isinstance(v, dict):
        return {k: _jsonify(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonify(x) for x in v]
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


# ---------------------------------------------------------------------------
# studies


def _fit_loglog_slope(x, y) -> float:
    x = np.log(np.asarray(x, float))
    y = np.log(np.asarray(y, float))
    return float(np.polyfit(x, y, 1)[0])


def run_trotter_study(scenario: Scenario, max_dense: int = reference.DENSE_SIZE_CAP,
                      threads: int = 1) -> Report:
    """Split-step error against dense matrix-exponential evolution per slice count."""
    report = Report(scenario.name)
    start = time.perf_counter()
    grid = scenario.grid
    ham = reference.assemble_hamiltonian(
        grid, scenario.vector, scenario.scalar, stencil="spectral", max_size=max_dense
    )
    psi0 = scenario.initial_state.on_grid(grid)
    exact = reference.expm_evolve(ham, psi0, scenario.time)

    def one_k(k: int):
        op = splitstep.SliceOperator(
            grid, scenario.scalar, scenario.vector, splitstep.TimeSlicing(scenario.time, k)
        )
        evolved = splitstep.evolve(op, psi0)
        err = l2_norm(evolved.with_values(evolved.values - exact.values))
        drift = abs(l2_norm(evolved) - l2_norm(psi0))
        return err, drift

    ks = list(scenario.slice_counts)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_k, ks))
    else:
        results = [one_k(k) for k in ks]

    errors = []
    for k, (err, drift) in zip(ks, results):
        errors.append(err)
        report.add("split_vs_dense_error", k, err, reference=0.0, oracle="dense", rel_scale=1.0)
        report.add("norm_drift", k, drift, reference=0.0, oracle="unitarity", rel_scale=1.0)
        if drift > k * 1e-12:
            report.passed = False

    checks = scenario.checks
    floor = checks.get("trotter_floor")
    if floor is not None:
        if any(e > floor for e in errors):
            report.passed = False
        report.diagnostics["trotter_floor"] = floor
    else:
        order = -_fit_loglog_slope(ks, np.maximum(errors, 1e-300))
        report.add("fitted_order", "-", order, oracle="dense")
        report.diagnostics["fitted_order"] = order
        if any(b >= a for a, b in zip(errors, errors[1:])):
            report.passed = False
        band = checks.get("trotter_order_band")
        if band is not None and not (band[0] <= order <= band[1]):
            report.passed = False
    report.diagnostics["trotter_errors"] = dict(zip(map(str, ks), errors))
    report.timings["trotter"] = time.perf_counter() - start
    return report


def run_gauge_check(scenario: Scenario) -> Report:
    """Conjugation residual per axis and the midpoint-discrepancy slope fit."""
    report = Report(scenario.name)
    start = time.perf_counter()
    grid = scenario.grid
    psi = scenario.initial_state.on_grid(grid)
    tol = scenario.checks.get("gauge_residual_tol", 1e-6)

    if scenario.vector is None:
        for axis in range(scenario.ndim):
            report.add("conjugation_residual", f"axis{axis}", 0.0, reference=0.0,
                       oracle="spectral", rel_scale=1.0)
    else:
        for axis in range(scenario.ndim):
            resid = gauge.gauge_conjugation_residual(scenario.vector, axis, psi)
            report.add("conjugation_residual", f"axis{axis}", resid, reference=0.0,
                       oracle="spectral", rel_scale=1.0)
            if resid > tol:
                report.passed = False

    if scenario.vector is not None:
        base = np.full(scenario.ndim, 0.2)
        direction = np.ones(scenario.ndim) / np.sqrt(scenario.ndim)
        seps = 0.4 * 0.5 ** np.arange(5)
        discrepancies = [
            gauge.midpoint_discrepancy(scenario.vector, base + s * direction, base)
            for s in seps
        ]
        if max(discrepancies) <= 1e-12:
            report.add("midpoint_discrepancy_max", "-", max(discrepancies), reference=0.0,
                       oracle="symbolic", rel_scale=1.0)
            report.diagnostics["midpoint_constant_field"] = True
        else:
            slope = _fit_loglog_slope(seps, discrepancies)
            report.add("midpoint_slope", "-", slope, oracle="symbolic")
            report.diagnostics["midpoint_slope"] = slope
            min_slope = scenario.checks.get("midpoint_slope_min")
            if min_slope is not None and slope < min_slope:
                report.passed = False
    report.timings["gauge"] = time.perf_counter() - start
    return report


def _closed_form_free_amplitude(scenario: Scenario) -> complex:
    """Fine-mesh overlap of the final state with the exactly evolved Gaussian (1D free)."""
    phi = scenario.final_state
    psi = scenario.initial_state
    x = np.linspace(-40.0, 40.0, 160001)
    phi_vals = gaussian_evaluator(phi.center, phi.width, phi.momentum, 1)(x[:, None])
    psi_vals = reference.exact_free_gaussian(
        x, scenario.time, psi.center[0], psi.width[0], psi.momentum[0]
    )
    return complex(np.trapezoid(phi_vals * psi_vals, x))


def run_amplitude_study(scenario: Scenario, max_dense: int = reference.DENSE_SIZE_CAP) -> Report:
    """Excised path-integral amplitudes vs split-step / dense / closed-form oracles."""
    report = Report(scenario.name)
    start = time.perf_counter()
    params = scenario.amplitude_params
    slices_list = params.get("slices", [1])
    if np.isscalar(slices_list):
        slices_list = [int(slices_list)]

    singular = collect_singularities(scenario.scalar, scenario.vector)
    phi_fn = scenario.final_state.evaluator(scenario.ndim)
    psi_fn = scenario.initial_state.evaluator(scenario.ndim)
    grid = scenario.grid
    phi_grid = scenario.final_state.on_grid(grid)
    psi_grid = scenario.initial_state.on_grid(grid)

    free = scenario.scalar is None and scenario.vector is None
    rel_tol = scenario.checks.get("amplitude_rel_tol")

    dense_ref = None
    if grid.size <= max_dense:
        ham = reference.assemble_hamiltonian(
            grid, scenario.vector, scenario.scalar, stencil="spectral", max_size=max_dense
        )
        dense_ref = pair_bilinear(phi_grid, reference.expm_evolve(ham, psi_grid, scenario.time))

    for k in slices_list:
        eps = scenario.time / k
        schedule = pathint.BoxSchedule.fresnel(
            eps,
            float(params.get("r_start", 6.0)),
            steps=int(params.get("steps", 16)),
            gap=float(params.get("gap", 0.0)),
            gap_final=params.get("gap_final"),
            tail_window=int(params.get("tail_window", pathint.DEFAULT_TAIL_WINDOW)),
        )
        estimate = pathint.amplitude_quadrature(
            phi_fn,
            psi_fn,
            scenario.time,
            k,
            schedule,
            ndim=scenario.ndim,
            vector=scenario.vector,
            scalar=scenario.scalar,
            singular_points=singular.points,
            max_evals=int(params.get("max_evals", pathint.DEFAULT_EVAL_CAP)),
        )
        report.diagnostics[f"amplitude_k{k}"] = {
            "raw": list(estimate.raw),
            "radii": list(estimate.radii),
            "tail_oscillation": estimate.tail_oscillation,
            "mesh_sizes": list(estimate.mesh_sizes),
        }

        op = splitstep.SliceOperator(
            grid, scenario.scalar, scenario.vector, splitstep.TimeSlicing(scenario.time, k)
        )
        split_ref = pair_bilinear(phi_grid, splitstep.evolve(op, psi_grid))
        rep = pathint.amplitude_error_report(estimate, split_ref)
        report.add("amplitude", k, estimate.value, reference=split_ref, oracle="split-step")
        primary_rel = rep.rel_error

        if free and scenario.ndim == 1:
            closed = _closed_form_free_amplitude(scenario)
            rep_closed = pathint.amplitude_error_report(estimate, closed)
            report.add("amplitude", k, estimate.value, reference=closed, oracle="closed-form")
            primary_rel = rep_closed.rel_error
        if dense_ref is not None:
            report.add("amplitude", k, estimate.value, reference=dense_ref, oracle="dense")

        if not rep.converged:
            report.passed = False
        if rel_tol is not None and primary_rel > rel_tol:
            report.passed = False
    report.timings["amplitude"] = time.perf_counter() - start
    return report


def run_all(scenario: Scenario, max_dense: int = reference.DENSE_SIZE_CAP, threads: int = 1) -> Report:
    report = Report(scenario.name)
    report.merge(run_gauge_check(scenario))
    try:
        report.merge(run_trotter_study(scenario, max_dense=max_dense, threads=threads))
    except SizeError as exc:
        report.diagnostics["trotter_skipped"] = str(exc)
    if scenario.amplitude_params:
        report.merge(run_amplitude_study(scenario, max_dense=max_dense))
    return report
