"""Grids, wavefunctions, potential specifications and L2 pairings.

Grids are uniform, periodic, cell-centered boxes: along axis ``b`` the nodes
sit at ``lo + (i + 1/2) * h`` with ``h = (hi - lo) / N``.  Cell-centering means
a singular point placed on a cell boundary (for example the origin of a
symmetric box) is never a grid node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GridMismatchError, NonFiniteError, SingularNodeError

# Absolute distance below which a quadrature node counts as "on" a singular point.
SINGULAR_NODE_TOL = 1e-9

# Points closer than this are merged when singular sets are unioned.
DEDUP_TOL = 1e-12


def _as_point_tuple(p) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic tensor-product sampling of a box in R^n."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        shape = tuple(int(v) for v in np.atleast_1d(self.shape))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "shape", shape)
        if not (len(lo) == len(hi) == len(shape)):
            raise ValueError("lo, hi and shape must have equal length")
        if len(shape) == 0:
            raise ValueError("grid dimension must be positive")
        for a, b, n in zip(lo, hi, shape):
            if not b > a:
                raise ValueError(f"box bounds must satisfy hi > lo, got ({a}, {b})")
            if n < 2:
                raise ValueError("need at least 2 points per axis")
        if self.size > 2**62:
            raise ValueError("total point count not representable")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        out = 1
        for n in self.shape:
            out *= n
        return out

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / n for a, b, n in zip(self.lo, self.hi, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_coords(self, axis: int) -> np.ndarray:
        """Cell-centered node coordinates along one axis."""
        h = self.spacing[axis]
        return self.lo[axis] + (np.arange(self.shape[axis]) + 0.5) * h

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*(self.axis_coords(b) for b in range(self.ndim)), indexing="ij"))

    def points(self) -> np.ndarray:
        """All nodes as an array of shape (size, ndim)."""
        return np.stack([m.ravel() for m in self.meshgrid()], axis=-1)

    def frequencies(self, axis: int) -> np.ndarray:
        """Angular FFT frequencies for this axis (periodic convention)."""
        n = self.shape[axis]
        return 2.0 * np.pi * np.fft.fftfreq(n, d=self.spacing[axis])


@dataclass(frozen=True)
class WaveFunction:
    """Complex field on a grid; values carry shape ``grid.shape``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteError("wavefunction contains non-finite entries")
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, values)


@dataclass(frozen=True)
class ScalarPotentialSpec:
    """Closed-form scalar potential with a registered finite singular set.

    ``evaluator`` maps an array of points with trailing dimension n to real
    values; it is only ever called off the singular set.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    singular_points: tuple[tuple[float, ...], ...] = ()
    declared_class: str = ""

    def __post_init__(self):
        object.__setattr__(
            self, "singular_points", tuple(_as_point_tuple(p) for p in self.singular_points)
        )

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(points, dtype=float)), dtype=float)


@dataclass(frozen=True)
class VectorPotentialSpec:
    """Component-wise vector potential with a registered finite singular set."""

    components: tuple[Callable[[np.ndarray], np.ndarray], ...]
    singular_points: tuple[tuple[float, ...], ...] = ()
    declared_class: str = ""

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(
            self, "singular_points", tuple(_as_point_tuple(p) for p in self.singular_points)
        )

    @property
    def ndim(self) -> int:
        return len(self.components)

    def component(self, axis: int, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.components[axis](np.asarray(points, dtype=float)), dtype=float)


def zero_vector_potential(ndim: int) -> VectorPotentialSpec:
    return VectorPotentialSpec(tuple(lambda p: np.zeros(p.shape[:-1]) for _ in range(ndim)))


@dataclass(frozen=True)
class SingularPointSet:
    """Deduplicated union of registered singular points with provenance."""

    points: tuple[tuple[float, ...], ...]
    sources: tuple[tuple[str, ...], ...]

    def __len__(self) -> int:
        return len(self.points)

    def as_array(self, ndim: int) -> np.ndarray:
        if not self.points:
            return np.zeros((0, ndim))
        return np.asarray(self.points, dtype=float)


def collect_singularities(
    scalar: ScalarPotentialSpec | None = None,
    vector: VectorPotentialSpec | None = None,
    phi_points: Sequence = (),
    psi_points: Sequence = (),
) -> SingularPointSet:
    """Union the registered singular points of states and fields."""
    tagged: list[tuple[tuple[float, ...], str]] = []
    for p in phi_points:
        tagged.append((_as_point_tuple(p), "phi"))
    for p in psi_points:
        tagged.append((_as_point_tuple(p), "psi"))
    if scalar is not None:
        for p in scalar.singular_points:
            tagged.append((p, "scalar"))
    if vector is not None:
        for p in vector.singular_points:
            tagged.append((p, "vector"))

    points: list[tuple[float, ...]] = []
    sources: list[list[str]] = []
    for p, tag in tagged:
        merged = False
        for i, q in enumerate(points):
            if len(p) == len(q) and max(abs(a - b) for a, b in zip(p, q)) <= DEDUP_TOL:
                if tag not in sources[i]:
                    sources[i].append(tag)
                merged = True
                break
        if not merged:
            points.append(p)
            sources.append([tag])
    return SingularPointSet(tuple(points), tuple(tuple(s) for s in sources))


def _check_nodes_off_singular(points: np.ndarray, singular_points, tol: float) -> None:
    for w in singular_points:
        d = np.max(np.abs(points - np.asarray(w, dtype=float)), axis=-1)
        idx = np.argmin(d)
        if d.flat[idx] <= tol:
            raise SingularNodeError(
                f"node {points.reshape(-1, points.shape[-1])[idx]} coincides with singular point {w}"
            )


def sample_field(
    spec: ScalarPotentialSpec | VectorPotentialSpec,
    grid: Grid,
    component: int | None = None,
) -> np.ndarray:
    """Evaluate a scalar potential (or one vector component) on all grid nodes."""
    pts = grid.points()
    _check_nodes_off_singular(pts, spec.singular_points, SINGULAR_NODE_TOL)
    if isinstance(spec, VectorPotentialSpec):
        if component is None:
            raise ValueError("component index required for a vector potential")
        vals = spec.component(component, pts)
    else:
        vals = spec(pts)
    vals = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = pts[~np.isfinite(vals)][0]
        raise NonFiniteError(f"evaluator returned non-finite value at {bad}")
    return vals.reshape(grid.shape)


def pair_bilinear(phi: WaveFunction, psi: WaveFunction) -> complex:
    """Riemann-sum approximation of the unconjugated pairing  integral phi*psi dx.

    Deliberately bilinear: neither argument is conjugated.
    """
    if phi.grid != psi.grid:
        raise GridMismatchError("pairing requires both wavefunctions on the same grid")
    return complex(np.sum(phi.values * psi.values) * phi.grid.cell_volume)


def inner_product(phi: WaveFunction, psi: WaveFunction) -> complex:
    """Conjugated L2 inner product <phi|psi>, used for norms only."""
    if phi.grid != psi.grid:
        raise GridMismatchError("inner product requires both wavefunctions on the same grid")
    return complex(np.sum(np.conj(phi.values) * psi.values) * phi.grid.cell_volume)


def l2_norm(psi: WaveFunction) -> float:
    return float(np.sqrt(np.sum(np.abs(psi.values) ** 2) * psi.grid.cell_volume))


def constant_wave(grid: Grid, value: complex = 1.0) -> WaveFunction:
    return WaveFunction(grid, np.full(grid.shape, value, dtype=complex))


def gaussian_wave(grid: Grid, center=0.0, width=1.0, momentum=0.0) -> WaveFunction:
    """Normalized Gaussian packet sampled on the grid.

    Along each axis: (2 pi w^2)^(-1/4) exp(-(x-c)^2/(4 w^2) + i p (x - c)).
    """
    center = np.broadcast_to(np.atleast_1d(np.asarray(center, float)), (grid.ndim,))
    width = np.broadcast_to(np.atleast_1d(np.asarray(width, float)), (grid.ndim,))
    momentum = np.broadcast_to(np.atleast_1d(np.asarray(momentum, float)), (grid.ndim,))
    vals = np.ones(grid.shape, dtype=complex)
    mesh = grid.meshgrid()
    for b in range(grid.ndim):
        x = mesh[b] - center[b]
        vals = vals * (2.0 * np.pi * width[b] ** 2) ** (-0.25) * np.exp(
            -(x**2) / (4.0 * width[b] ** 2) + 1j * momentum[b] * x
        )
    return WaveFunction(grid, vals)


def gaussian_evaluator(center=0.0, width=1.0, momentum=0.0, ndim: int = 1):
    """Continuum version of :func:`gaussian_wave` as a callable on (..., n) points."""
    center = np.broadcast_to(np.atleast_1d(np.asarray(center, float)), (ndim,))
    width = np.broadcast_to(np.atleast_1d(np.asarray(width, float)), (ndim,))
    momentum = np.broadcast_to(np.atleast_1d(np.asarray(momentum, float)), (ndim,))

    def evaluate(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.ones(pts.shape[:-1], dtype=complex)
        for b in range(ndim):
            x = pts[..., b] - center[b]
            out = out * (2.0 * np.pi * width[b] ** 2) ** (-0.25) * np.exp(
                -(x**2) / (4.0 * width[b] ** 2) + 1j * momentum[b] * x
            )
        return out

    return evaluate
