"""Numerical audits of the analytical estimates behind the solver.

Everything here evaluates inequalities on concrete lattice data: the potential
constant c(V), the per-mode Young constant, coercivity constants of the
bilinear form, fractional Gronwall bounds, energy norms of trajectories and
refinement studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fracops import TimeGrid, caputo_l1, frac_integral, ml_values
from .galerkin import (
    GalerkinSystem,
    ProblemSpec,
    Trajectory,
    assemble,
    field_on,
    solve_ml,
    solve_stepping,
)
from .spectral import (
    Lattice,
    SpectralField,
    convolve_product,
    gradient,
    inner,
    l2_norm,
    seminorm,
)


class DomainError(ValueError):
    pass


class NonMonotoneError(ValueError):
    pass


class InsufficientPointsError(ValueError):
    pass


OVERFLOW_EXPONENT = 690.0  # exp of anything larger is out of double range


# --- constants ------------------------------------------------------------------


def _weighted_l1(V: SpectralField, power: float) -> float:
    norms = V.lattice.norms
    return float(np.sum(norms**power * np.abs(V.coeffs)))


def potential_constant(V: SpectralField) -> float:
    """c(V) = (2 pi)^(-d/2) (sum |l| |V(l)| + sum |l|^(3/2) |V(l)|)."""
    scale = (2 * np.pi) ** (-V.lattice.d / 2)
    return scale * (_weighted_l1(V, 1.0) + _weighted_l1(V, 1.5))


def young_constant(epsilon: float, beta: float, target: tuple[float, float] = (0.5, 0.0)) -> float:
    """Smallest c with |k|^(2b') <= eps |k|^(2 beta) + c |k|^(2b'') for all |k| >= 1.

    With r = |k| this is max_{r >= 1} (r^a - eps r^b), a = 2(b' - b''),
    b = 2(beta - b''). The default target (1/2, 0) gives max(r - eps r^(2 beta)).
    """
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    bp, bpp = target
    a = 2 * (bp - bpp)
    b = 2 * (beta - bpp)
    if b <= a:
        raise DomainError(
            f"need beta > {bp} for target {target} (got beta={beta}); the bound has no finite constant"
        )
    if a <= 0:
        r_star = 1.0
    else:
        r_star = max(1.0, (a / (epsilon * b)) ** (1 / (b - a)))
    return max(0.0, r_star**a - epsilon * r_star**b)


@dataclass(frozen=True)
class CoercivityConstants:
    gamma1: float
    gamma2: float
    epsilon: float
    cV: float
    K: float
    beta: float
    gamma: float | None = None  # single constant, only when K > c(V)


def coercivity_constants(
    K: float, cV: float, beta: float, epsilon: float | None = None
) -> CoercivityConstants:
    """gamma1 = K - eps, gamma2 = K - eps + cV c(eps), eps = K/2 unless given.

    When K > cV the single constant gamma = K - cV is also reported; that branch
    allows beta = 1/2 (then gamma1 = gamma2 = gamma).
    """
    if K <= 0 or cV < 0:
        raise DomainError(f"need K > 0 and cV >= 0, got K={K}, cV={cV}")
    single = K - cV if (K > cV and beta >= 0.5) else None
    if beta <= 0.5:
        if single is None:
            raise DomainError(f"beta={beta} needs beta > 1/2, or beta = 1/2 with K > cV")
        return CoercivityConstants(single, single, 0.0, cV, K, beta, single)
    eps = K / 2 if epsilon is None else epsilon
    if not 0 < eps < K:
        raise DomainError(f"epsilon must lie in (0, K), got {eps}")
    g1 = K - eps
    g2 = K - eps + cV * young_constant(eps, beta)
    return CoercivityConstants(g1, g2, eps, cV, K, beta, single)


# --- bilinear form and forcing bounds ---------------------------------------------


def drift_pairing(u: SpectralField, v: SpectralField, V: SpectralField) -> complex:
    """int (u grad V) . grad conj(v) dx, spectrally."""
    total = 0.0j
    for dV, dv in zip(gradient(V), gradient(v)):
        total += inner(convolve_product(u, dV), dv)
    return total


def bilinear_form(u: SpectralField, v: SpectralField, K: float, beta: float, V: SpectralField) -> float:
    """Re B[u, v] = Re( K <(-Delta)^(b/2) u, (-Delta)^(b/2) v> + int (u grad V) . grad v )."""
    if not (u.lattice == v.lattice == V.lattice):
        raise ValueError("u, v and V must share a lattice")
    norms = u.lattice.norms
    w = np.zeros_like(norms)
    nz = norms > 0
    w[nz] = norms[nz] ** (2 * beta)
    diffusion = K * np.vdot(v.coeffs, w * u.coeffs)
    return float((diffusion + drift_pairing(u, v, V)).real)


@dataclass(frozen=True)
class ForcingBoundCheck:
    lhs: float
    term_bound: float  # split bound with separate gradient / 3/4-power norms
    constant_bound: float  # c(V) sm(u) sm(v)

    @property
    def violation(self) -> float:
        return max(self.lhs - self.term_bound, self.lhs - self.constant_bound)


def forcing_bounds(u: SpectralField, v: SpectralField, V: SpectralField) -> ForcingBoundCheck:
    """Both forcing-term bounds for one pair.

    ||(-Delta)^(1/4) w|| is seminorm(w, 1/2) in this package's convention. The
    single-constant bound assumes u has zero mean.
    """
    lhs = abs(drift_pairing(u, v, V))
    scale = (2 * np.pi) ** (-u.lattice.d / 2)
    su, sv = seminorm(u, 0.5), seminorm(v, 0.5)
    split = scale * (_weighted_l1(V, 1.0) * su * sv + _weighted_l1(V, 1.5) * l2_norm(u) * sv)
    return ForcingBoundCheck(lhs, split, potential_constant(V) * su * sv)


def coercivity_violation(u: SpectralField, V: SpectralField, consts: CoercivityConstants) -> float:
    """gamma1 ||u||_{H^beta}^2 - B[u,u] - gamma2 ||u||^2 (positive means violated)."""
    h2 = seminorm(u, consts.beta) ** 2 + l2_norm(u) ** 2
    B = bilinear_form(u, u, consts.K, consts.beta, V)
    return consts.gamma1 * h2 - B - consts.gamma2 * l2_norm(u) ** 2


# --- Gronwall ---------------------------------------------------------------------


def gronwall_audit(phi, c: float, zeta, alpha: float, grid: TimeGrid) -> float:
    """max_t phi(t) - (I^a zeta(t) + phi(0)) E_a(c t^a); <= tolerance means the bound holds."""
    phi = np.asarray(phi, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if c <= 0:
        raise DomainError(f"c must be positive, got {c}")
    if np.any(zeta < 0):
        raise NonMonotoneError("zeta must be non-negative")
    if np.any(np.diff(zeta) < -1e-14 * max(1.0, float(np.max(np.abs(zeta))))):
        raise NonMonotoneError("zeta must be non-decreasing")
    # E_a(c t^a) grows like exp(c^(1/a) t); past double range the bound is +inf
    growth = np.full(grid.n + 1, np.inf)
    finite = c ** (1 / alpha) * grid.t < OVERFLOW_EXPONENT
    growth[finite] = ml_values(alpha, 1.0, c * grid.t[finite] ** alpha).real
    bound = (frac_integral(alpha, zeta, grid) + phi[0]) * growth
    return float(np.max(phi - bound))


def source_norms(traj: Trajectory) -> np.ndarray:
    """||f(t)|| at every output time."""
    p = traj.problem
    if not p.source_time_dependent:
        return np.full(len(traj.times), l2_norm(field_on(p.source, traj.lattice)))
    return np.array([l2_norm(field_on(p.source, traj.lattice, float(t))) for t in traj.times])


def energy_gronwall_audit(traj: Trajectory, gamma2: float) -> float:
    """Gronwall audit of ||u_m(t)||^2 with c = 2 gamma2 + 1 and zeta = running max of ||f||^2."""
    grid = _uniform_grid(traj)
    phi = np.sum(np.abs(traj.states) ** 2, axis=1)
    zeta = np.maximum.accumulate(source_norms(traj) ** 2)
    return gronwall_audit(phi, 2 * gamma2 + 1, zeta, traj.problem.alpha, grid)


# --- energy norms -------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyReport:
    sup_l2: float
    l2_hbeta: float
    caputo_hminus: float  # L2(0,T; H^-beta) proxy with weights 1/(1 + |k|^(2 beta))
    h_norm: float
    f_sup: float
    l2_h2beta: float
    sup_hbeta: float
    caputo_l2: float
    h_hbeta: float

    @property
    def lhs(self) -> float:
        return self.sup_l2 + self.l2_hbeta + self.caputo_hminus

    @property
    def ratio(self) -> float:
        return _ratio(self.lhs, self.h_norm + self.f_sup)

    @property
    def regularity_lhs(self) -> float:
        return self.l2_h2beta**2 + self.sup_hbeta + self.caputo_l2

    @property
    def regularity_ratio(self) -> float:
        return _ratio(self.regularity_lhs, self.h_hbeta + self.f_sup)

    def as_dict(self) -> dict[str, float]:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out.update(lhs=self.lhs, ratio=self.ratio, regularity_ratio=self.regularity_ratio)
        return out


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def _uniform_grid(traj: Trajectory) -> TimeGrid:
    if traj.grid is not None:
        return traj.grid
    if not traj.uniform:
        raise ValueError("trajectory output times must form a uniform grid starting at 0")
    return TimeGrid(float(traj.times[-1]), len(traj.times) - 1)


def _time_l2(values: np.ndarray, grid: TimeGrid) -> float:
    return float(np.sqrt(np.trapezoid(values, dx=grid.dt)))


def caputo_modes(traj: Trajectory) -> np.ndarray:
    """D^alpha of every mode at t_1..t_n (L1 rule; backward differences for alpha = 1)."""
    grid = _uniform_grid(traj)
    alpha = traj.problem.alpha
    if alpha == 1:
        return np.diff(traj.states, axis=0) / grid.dt
    return caputo_l1(alpha, traj.states, grid)


def energy_report(traj: Trajectory) -> EnergyReport:
    grid = _uniform_grid(traj)
    beta = traj.problem.beta
    lat = traj.lattice
    norms = lat.norms
    w_beta = np.where(norms > 0, norms ** (2 * beta), 0.0)
    mag2 = np.abs(traj.states) ** 2
    l2_sq = mag2.sum(axis=1)
    hb_sq = (w_beta * mag2).sum(axis=1) + l2_sq
    h2b_sq = (w_beta**2 * mag2).sum(axis=1) + l2_sq

    D = np.abs(caputo_modes(traj)) ** 2
    # the derivative lives on t_1..t_n; the first cell reuses the t_1 value
    d_minus = np.concatenate([[0.0], (D / (1 + w_beta)).sum(axis=1)])
    d_plain = np.concatenate([[0.0], D.sum(axis=1)])
    d_minus[0], d_plain[0] = d_minus[1], d_plain[1]

    h = SpectralField(lat, traj.states[0])
    return EnergyReport(
        sup_l2=float(np.sqrt(l2_sq.max())),
        l2_hbeta=_time_l2(hb_sq, grid),
        caputo_hminus=_time_l2(d_minus, grid),
        h_norm=l2_norm(h),
        f_sup=float(source_norms(traj).max()),
        l2_h2beta=_time_l2(h2b_sq, grid),
        sup_hbeta=float(np.sqrt(hb_sq.max())),
        caputo_l2=_time_l2(d_plain, grid),
        h_hbeta=float(np.sqrt(hb_sq[0])),
    )


# --- refinement studies ---------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceTable:
    spatial: list[tuple[int, float, float]] = field(default_factory=list)
    temporal: list[tuple[int, float, float]] = field(default_factory=list)
    spatial_rate: float = math.nan  # slope of log(error) against m
    temporal_order: float = math.nan  # slope of log(error) against log(dt)
    m_ref: int = 0

    def rows(self) -> list[tuple[int, float, float]]:
        return self.spatial + self.temporal


def _steps_for(T: float, dt: float) -> int:
    n = int(round(T / dt))
    if n < 1 or not math.isclose(n * dt, T, rel_tol=1e-9):
        raise ValueError(f"dt={dt} does not divide T={T}")
    return n


def _sup_gap(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(a - b, axis=1)))


def _padded(traj: Trajectory, lattice: Lattice) -> np.ndarray:
    return np.array([SpectralField(traj.lattice, s).resample(lattice).coeffs for s in traj.states])


def _run(system: GalerkinSystem, grid: TimeGrid, use_ml: bool, implicit: bool) -> Trajectory:
    if use_ml:
        return solve_ml(system, grid.t)
    return solve_stepping(system, grid, implicit=implicit)


def convergence_study(
    problem: ProblemSpec,
    m_list,
    dt_list,
    m_ref: int | None = None,
    m_time: int | None = None,
    n_spatial: int = 50,
    implicit: bool = False,
) -> ConvergenceTable:
    """Spatial and temporal refinement tables with fitted rates.

    Spatial: runs at each m on a common time grid of n_spatial steps, compared with
    m_ref (default 2 max(m_list)) after zero-padding; the error is sup_t of the
    coefficient l2 distance, i.e. the L2 distance by Parseval.
    Temporal: stepping runs on lattice m_time (default min(m_list)) at each dt,
    compared at the coarse nodes with the propagator when the problem is
    autonomous, else with a stepping run at min(dt)/4.
    """
    m_list = sorted(int(m) for m in m_list)
    dt_list = sorted((float(dt) for dt in dt_list), reverse=True)
    if len(m_list) < 3 or len(dt_list) < 3:
        raise InsufficientPointsError("need at least 3 lattice sizes and 3 time steps")
    use_ml = problem.autonomous

    m_ref = 2 * m_list[-1] if m_ref is None else int(m_ref)
    if m_ref <= m_list[-1]:
        raise ValueError("reference lattice must be finer than every m in m_list")
    grid = TimeGrid(problem.T, n_spatial)
    ref_lat = Lattice(problem.d, m_ref)
    ref = _run(assemble(problem, ref_lat), grid, use_ml, implicit).states
    spatial = []
    for m in m_list:
        traj = _run(assemble(problem, Lattice(problem.d, m)), grid, use_ml, implicit)
        spatial.append((m, grid.dt, _sup_gap(_padded(traj, ref_lat), ref)))

    lat = Lattice(problem.d, m_list[0] if m_time is None else int(m_time))
    system = assemble(problem, lat)
    temporal = []
    if use_ml:
        for dt in dt_list:
            g = TimeGrid(problem.T, _steps_for(problem.T, dt))
            num = solve_stepping(system, g, implicit=implicit).states
            temporal.append((lat.m, dt, _sup_gap(num, solve_ml(system, g.t).states)))
    else:
        n_fine = 4 * _steps_for(problem.T, dt_list[-1])
        fine = solve_stepping(system, TimeGrid(problem.T, n_fine), implicit=implicit).states
        for dt in dt_list:
            n = _steps_for(problem.T, dt)
            if n_fine % n:
                raise ValueError(f"dt={dt} grid is not nested in the reference grid")
            num = solve_stepping(system, TimeGrid(problem.T, n), implicit=implicit).states
            temporal.append((lat.m, dt, _sup_gap(num, fine[:: n_fine // n])))

    return ConvergenceTable(
        spatial=spatial,
        temporal=temporal,
        spatial_rate=_fit([r[0] for r in spatial], [r[2] for r in spatial], log_x=False),
        temporal_order=_fit([r[1] for r in temporal], [r[2] for r in temporal], log_x=True),
        m_ref=m_ref,
    )


def _fit(x, err, log_x: bool) -> float:
    x = np.asarray(x, dtype=float)
    err = np.asarray(err, dtype=float)
    ok = err > 0
    if ok.sum() < 2:
        return math.nan
    xs = np.log(x[ok]) if log_x else x[ok]
    return float(np.polyfit(xs, np.log(err[ok]), 1)[0])
