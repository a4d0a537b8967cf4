"""Truncated Fourier-Galerkin system for

    D_t^alpha u + K (-Delta)^beta u - div(grad V u) = f   on T^d,

and its two solvers: the Mittag-Leffler propagator for autonomous problems and
the fractional Adams-Bashforth-Moulton stepper for time-dependent ones.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .fracops import (
    IllConditionedEigenbasisError,
    TimeGrid,
    eigensystem,
    ml_values,
    solve_linear_fode,
)
from .spectral import Lattice, SpectralField, analyze, grid_points, synthesize, zeros

log = logging.getLogger(__name__)

# A field input is one of: None (zero), a SpectralField, or a closed form.
# Closed forms take the grid coordinates, f(*coords); time-dependent ones take
# the time first, f(t, *coords). Either may return samples or a SpectralField.
FieldInput = Union[None, SpectralField, Callable[..., object]]

MASS_TOL = 1e-12


class UnknownSnapshotError(KeyError):
    pass


class NonZeroMeanSourceError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    alpha: float
    beta: float
    K: float
    T: float
    d: int = 1
    potential: FieldInput = None
    source: FieldInput = None
    initial: FieldInput = None
    potential_time_dependent: bool = False
    source_time_dependent: bool = False
    zero_mean_source: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.K <= 0:
            raise ValueError(f"K must be positive, got {self.K}")
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        for name, flag in (
            ("potential", self.potential_time_dependent),
            ("source", self.source_time_dependent),
        ):
            if flag and not callable(getattr(self, name)):
                raise ValueError(f"a time-dependent {name} must be given as a callable")
        if self.beta <= 0.5:
            warnings.warn(
                f"beta={self.beta} <= 1/2: outside the range covered by the well-posedness "
                "theory; the scheme still runs but may degrade",
                stacklevel=3,
            )

    @property
    def autonomous(self) -> bool:
        return not (self.potential_time_dependent or self.source_time_dependent)


def _sample_grid(lattice: Lattice) -> int:
    return max(4 * (lattice.m + 1), 64)


def field_on(obj: FieldInput, lattice: Lattice, t: float | None = None) -> SpectralField:
    """Project a field input onto the lattice (at time t for time-dependent inputs)."""
    if obj is None:
        return zeros(lattice)
    if isinstance(obj, SpectralField):
        return obj.resample(lattice)
    coords = grid_points(lattice.d, _sample_grid(lattice))
    out = obj(*coords) if t is None else obj(t, *coords)
    if isinstance(out, SpectralField):
        return out.resample(lattice)
    values = np.broadcast_to(np.asarray(out), coords[0].shape)
    return analyze(values, lattice)


def _pair_indices(lattice: Lattice):
    """Linear index of k - j for every (k, j) pair and whether it stays on the lattice."""
    ks = lattice.ks
    m, side = lattice.m, lattice.side
    index = np.zeros((lattice.size, lattice.size), dtype=np.int64)
    inside = np.ones((lattice.size, lattice.size), dtype=bool)
    for c in range(lattice.d):
        diff = ks[:, None, c] - ks[None, :, c]
        inside &= np.abs(diff) <= m
        index = index * side + np.clip(diff + m, 0, side - 1)
    return index, inside


def _k_dot_diff(lattice: Lattice) -> np.ndarray:
    """k . (k - j) for every pair."""
    ks = lattice.ks.astype(float)
    return np.sum(ks**2, axis=1)[:, None] - ks @ ks.T


def drift_matrix(V: SpectralField, pairs=None, kdot=None) -> np.ndarray:
    """Matrix of u -> div(grad V u), restricted to the lattice."""
    lat = V.lattice
    index, inside = _pair_indices(lat) if pairs is None else pairs
    kdot = _k_dot_diff(lat) if kdot is None else kdot
    vals = np.where(inside, V.coeffs[index], 0.0)
    return -(2 * np.pi) ** (-lat.d / 2) * kdot * vals


def diffusion_diagonal(lattice: Lattice, K: float, beta: float) -> np.ndarray:
    norms = lattice.norms
    out = np.zeros(lattice.size)
    nz = norms > 0
    out[nz] = -K * norms[nz] ** (2 * beta)
    return out


@dataclass
class GalerkinSystem:
    problem: ProblemSpec
    lattice: Lattice
    A: np.ndarray  # matrix at t = 0
    y0: np.ndarray
    f0: np.ndarray  # forcing at t = 0
    _diag: np.ndarray = field(repr=False)
    _pairs: tuple = field(repr=False, default=None)
    _kdot: np.ndarray = field(repr=False, default=None)

    @property
    def autonomous(self) -> bool:
        return self.problem.autonomous

    def matrix(self, t: float) -> np.ndarray:
        if not self.problem.potential_time_dependent:
            return self.A
        V = field_on(self.problem.potential, self.lattice, t)
        A = drift_matrix(V, self._pairs, self._kdot)
        A[np.diag_indices_from(A)] += self._diag
        return A

    def forcing(self, t: float) -> np.ndarray:
        if not self.problem.source_time_dependent:
            return self.f0
        f = field_on(self.problem.source, self.lattice, t).coeffs
        if self.problem.zero_mean_source:
            _check_zero_mean(f, self.lattice, t)
        return f


def _check_zero_mean(f: np.ndarray, lattice: Lattice, t: float) -> None:
    scale = max(1.0, float(np.max(np.abs(f), initial=0.0)))
    if abs(f[lattice.zero_index]) > MASS_TOL * scale:
        raise NonZeroMeanSourceError(
            f"source has mean coefficient {f[lattice.zero_index]:.3e} at t={t}; "
            "zero-mean source was requested"
        )


def assemble(problem: ProblemSpec, lattice: Lattice) -> GalerkinSystem:
    if lattice.d != problem.d:
        raise ValueError(f"lattice dimension {lattice.d} does not match problem d={problem.d}")
    pairs = _pair_indices(lattice)
    kdot = _k_dot_diff(lattice)
    diag = diffusion_diagonal(lattice, problem.K, problem.beta)
    t0 = 0.0 if problem.potential_time_dependent else None
    V = field_on(problem.potential, lattice, t0)
    A = drift_matrix(V, pairs, kdot)
    A[np.diag_indices_from(A)] += diag
    y0 = field_on(problem.initial, lattice).coeffs.copy()
    f0 = field_on(problem.source, lattice, 0.0 if problem.source_time_dependent else None).coeffs
    if problem.zero_mean_source:
        _check_zero_mean(f0, lattice, 0.0)
    return GalerkinSystem(problem, lattice, A, y0, f0, diag, pairs, kdot)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), lattice.size)
    problem: ProblemSpec
    lattice: Lattice
    method: str
    grid: TimeGrid | None = None

    def index_of_time(self, t: float) -> int:
        hits = np.flatnonzero(np.isclose(self.times, t, rtol=1e-12, atol=1e-12))
        if hits.size == 0:
            raise UnknownSnapshotError(f"t={t} is not an output time of this trajectory")
        return int(hits[0])

    def field_at(self, t: float) -> SpectralField:
        return SpectralField(self.lattice, self.states[self.index_of_time(t)])

    def fields(self) -> list[SpectralField]:
        return [SpectralField(self.lattice, s) for s in self.states]

    @property
    def uniform(self) -> bool:
        tt = self.times
        if len(tt) < 2 or tt[0] != 0:
            return False
        return bool(np.allclose(np.diff(tt), tt[1] - tt[0], rtol=1e-9, atol=0))


def solve_ml(system: GalerkinSystem, snapshot_times, max_condition: float = 1e8) -> Trajectory:
    """y(t) = E_a(A t^a) y0 + t^a E_{a,a+1}(A t^a) f for constant A and f."""
    if not system.autonomous:
        raise ValueError("the propagator needs time-independent V and f; use solve_stepping")
    alpha = system.problem.alpha
    times = np.asarray(snapshot_times, dtype=float).ravel()
    if np.any(times < 0):
        raise ValueError("snapshot times must be non-negative")
    es = eigensystem(system.A, max_condition)
    ta = times**alpha
    z = es.values[None, :] * ta[:, None]
    c0 = es.inverse @ system.y0
    states = (ml_values(alpha, 1.0, z) * c0) @ es.vectors.T
    if np.any(system.f0 != 0):
        cf = es.inverse @ system.f0
        states += ta[:, None] * (ml_values(alpha, alpha + 1.0, z) * cf) @ es.vectors.T
    states[times == 0] = system.y0
    grid = None
    if len(times) > 1 and times[0] == 0:
        candidate = TimeGrid(float(times[-1]), len(times) - 1)
        if np.allclose(candidate.t, times, rtol=1e-12, atol=1e-12):
            grid = candidate
    return Trajectory(times, states, system.problem, system.lattice, "ml", grid)


def solve_stepping(system: GalerkinSystem, grid: TimeGrid, implicit: bool = False) -> Trajectory:
    p = system.problem
    A = system.matrix if p.potential_time_dependent else system.A
    g = system.forcing if p.source_time_dependent else system.f0
    states = solve_linear_fode(p.alpha, A, g, system.y0, grid, implicit=implicit)
    states[0] = system.y0
    return Trajectory(grid.t, states, p, system.lattice, "stepping", grid)


def solve(
    problem: ProblemSpec,
    lattice: Lattice,
    n_steps: int,
    solver: str = "auto",
    implicit: bool = False,
) -> Trajectory:
    """Assemble and solve on the uniform grid of n_steps steps over [0, T].

    "auto" uses the propagator for autonomous problems and falls back to
    stepping when the eigenbasis is too ill-conditioned.
    """
    if solver not in ("ml", "stepping", "auto"):
        raise ValueError(f"unknown solver {solver!r}")
    system = assemble(problem, lattice)
    grid = TimeGrid(problem.T, n_steps)
    if solver == "ml" or (solver == "auto" and system.autonomous):
        try:
            return solve_ml(system, grid.t)
        except IllConditionedEigenbasisError as exc:
            if solver == "ml":
                raise
            log.warning("propagator unavailable (%s); falling back to stepping", exc)
    return solve_stepping(system, grid, implicit=implicit)


def mass_drift(traj: Trajectory) -> float:
    """max_t |u_hat(0, t) - u_hat(0, 0)|."""
    z = traj.lattice.zero_index
    return float(np.max(np.abs(traj.states[:, z] - traj.states[0, z])))


def evaluate(traj: Trajectory, x, t: float) -> float | np.ndarray:
    """Real value of the solution at point(s) x and output time t."""
    f = traj.field_at(t)
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 0 or (pts.ndim == 1 and traj.lattice.d > 1)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif single:
        pts = pts[None, :]
    vals = synthesize(f, pts)
    worst = float(np.max(np.abs(vals.imag), initial=0.0))
    if worst > 1e-8:
        warnings.warn(f"solution has imaginary part {worst:.2e} at t={t}", stacklevel=2)
    return float(vals.real[0]) if single else vals.real
