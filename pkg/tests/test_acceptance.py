"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with `pytest tests/test_acceptance.py -v` (the lines are collected
in the terminal summary) or as a script, `python tests/test_acceptance.py`.
"""

from __future__ import annotations

import math
import sys
import time
import warnings
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
import pytest
from scipy.special import erfcx, gamma

from fractorus.config import bump, double_well
from fractorus.diagnostics import (
    coercivity_constants,
    coercivity_violation,
    convergence_study,
    energy_gronwall_audit,
    energy_report,
    forcing_bounds,
    potential_constant,
)
from fractorus.fracops import TimeGrid, ml_matrix, ml_values
from fractorus.galerkin import ProblemSpec, assemble, field_on, mass_drift, solve, solve_ml, solve_stepping
from fractorus.spectral import (
    Lattice,
    SpectralField,
    analyze,
    basis,
    frac_laplacian,
    grid_points,
    inner,
    l2_norm,
    seminorm,
    synthesize,
    to_grid,
)
from fractorus.stable import stable_density, tail_mass


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d}. {self.title}: {self.detail} ({self.seconds:.1f}s / {self.budget:.0f}s)"


RESULTS: dict[int, Outcome] = {}


@contextmanager
def criterion(number: int, title: str, budget: float):
    """Times the block; the block fills `checks` with (description, ok) pairs."""
    checks: list[tuple[str, bool]] = []
    start = time.perf_counter()
    try:
        yield checks
    finally:
        elapsed = time.perf_counter() - start
        checks.append((f"runtime {elapsed:.1f}s < {budget:.0f}s", elapsed < budget))
        ok = all(c[1] for c in checks)
        detail = "; ".join(d for d, c in checks if not c) if not ok else "; ".join(d for d, _ in checks[:-1])
        RESULTS[number] = Outcome(number, title, ok, detail, elapsed, budget)
        print(RESULTS[number].line())
    failed = [d for d, c in checks if not c]
    assert not failed, "; ".join(failed)


def rand_field(lat: Lattice, rng, zero_mean=False, real=False) -> SpectralField:
    c = rng.normal(size=lat.size) + 1j * rng.normal(size=lat.size)
    if real:
        c = 0.5 * (c + np.conj(c[lat.reflection]))
    if zero_mean:
        c[lat.zero_index] = 0
    return SpectralField(lat, c / np.linalg.norm(c))


def sample(f, lat: Lattice) -> SpectralField:
    return analyze(f(*grid_points(lat.d, 4 * (lat.m + 1))), lat)


def analytic_initial(x):
    return np.exp(np.cos(x - 1.0))


# ---------------------------------------------------------------------------------------


def test_01_operator_identities():
    rng = np.random.default_rng(1)
    worst = dict.fromkeys(["parseval", "poincare_i", "poincare_ii", "divergence", "self_adjoint"], 0.0)
    orders = (0.25, 0.5, 0.75)
    with criterion(1, "operator identities", 10) as checks:
        for i in range(200):
            d = 1 + i % 2
            m = int(rng.integers(1, 17 if d == 1 else 9))
            lat = Lattice(d, m)
            u, v = rand_field(lat, rng), rand_field(lat, rng)
            # Parseval: field built from samples of a degree-m trig polynomial
            n = 2 * m + 2
            vals = to_grid(u, n)
            f = analyze(vals, lat)
            quad = math.sqrt(np.sum(np.abs(vals) ** 2) * (2 * math.pi / n) ** d)
            worst["parseval"] = max(worst["parseval"], abs(quad - l2_norm(f)))
            z = rand_field(lat, rng, zero_mean=True)
            s = float(rng.uniform(0.01, 1.0))
            g = float(rng.uniform(0.0, s))
            worst["poincare_i"] = max(worst["poincare_i"], l2_norm(z) - seminorm(z, s))
            worst["poincare_ii"] = max(worst["poincare_ii"], seminorm(z, g) - seminorm(z, s))
            for a in orders:
                for b in orders:
                    lhs = inner(frac_laplacian(u, a), frac_laplacian(v, b))
                    rhs = inner(u, frac_laplacian(v, a + b))
                    worst["divergence"] = max(worst["divergence"], abs(lhs - rhs))
                lhs = inner(frac_laplacian(u, a), v)
                rhs = inner(u, frac_laplacian(v, a))
                worst["self_adjoint"] = max(worst["self_adjoint"], abs(lhs - rhs))
        for name, value in worst.items():
            checks.append((f"{name} {value:.1e}", value <= 1e-10))


def test_02_mittag_leffler():
    with criterion(2, "Mittag-Leffler correctness", 5) as checks:
        z = np.linspace(-30, 3, 100)
        rel = np.max(np.abs(ml_values(1, 1, z) - np.exp(z)) / np.exp(z))
        checks.append((f"E_1 vs exp rel {rel:.1e}", rel <= 1e-10))

        x = np.linspace(0, 20, 100)
        rel = np.max(np.abs(ml_values(0.5, 1, -x) - erfcx(x)) / erfcx(x))
        checks.append((f"E_1/2 vs erfc rel {rel:.1e}", rel <= 1e-8))

        z = np.linspace(-20, 5, 101)
        z = z[z != 0]
        closed = np.expm1(z) / z
        rel = np.max(np.abs(ml_values(1, 2, z) - closed) / np.abs(closed))
        checks.append((f"E_1,2 closed form rel {rel:.1e}", rel <= 1e-10))

        rng = np.random.default_rng(2)
        worst = 0.0
        for alpha in (0.5, 0.8, 1.0):
            for _ in range(5):
                A = rng.normal(size=(3, 3))
                A *= 2 * rng.uniform(0.2, 1.0) / np.linalg.norm(A, 2)
                series = sum(np.linalg.matrix_power(A, k) / gamma(alpha * k + 1) for k in range(60))
                worst = max(worst, np.max(np.abs(ml_matrix(alpha, 1, A) - series)))
        checks.append((f"matrix ML vs series abs {worst:.1e}", worst <= 1e-8))


def decoupled_problem(alpha: float):
    lat = Lattice(1, 4)
    h = basis(lat, (1,)) + basis(lat, (-1,)) + 0.5 * (basis(lat, (2,)) + basis(lat, (-2,)))
    f = 0.3 * (basis(lat, (1,)) + basis(lat, (-1,)))
    return ProblemSpec(alpha, 0.75, 1.0, 1.0, source=f, initial=h), lat


def decoupled_exact(problem: ProblemSpec, lat: Lattice, t: np.ndarray) -> np.ndarray:
    sys_ = assemble(problem, lat)
    lam = np.diag(sys_.A)
    a = problem.alpha
    z = lam[None, :] * t[:, None] ** a
    ta = t[:, None] ** a
    out = ml_values(a, 1, z) * sys_.y0 + ta * ml_values(a, a + 1, z) * sys_.f0
    out[t == 0] = sys_.y0
    return out


def test_03_decoupled_oracle():
    with criterion(3, "decoupled-oracle equivalence", 30) as checks:
        for alpha in (0.5, 0.8, 1.0):
            problem, lat = decoupled_problem(alpha)
            grid = TimeGrid(1.0, 2000)
            exact = decoupled_exact(problem, lat, grid.t)
            prop = solve(problem, lat, 2000, solver="ml").states
            step = solve(problem, lat, 2000, solver="stepping").states
            e_ml = np.max(np.abs(prop - exact))
            e_st = np.max(np.abs(step - exact))
            checks.append((f"alpha={alpha}: propagator {e_ml:.1e}", e_ml <= 1e-8))
            checks.append((f"stepper {e_st:.1e}", e_st <= 5e-4))


def double_well_problem(alpha=0.8, beta=0.8, T=1.0, **kw) -> ProblemSpec:
    return ProblemSpec(alpha, beta, 1.0, T, potential=double_well, initial=bump(math.pi / 2, 1.0), **kw)


def test_04_cross_solver():
    with criterion(4, "cross-solver agreement", 30) as checks:
        lat = Lattice(1, 16)
        system = assemble(double_well_problem(), lat)
        grid = TimeGrid(1.0, 2000)
        a = solve_ml(system, grid.t).states
        b = solve_stepping(system, grid).states
        gap = float(np.max(np.linalg.norm(a - b, axis=1)))
        checks.append((f"sup_t l2 gap {gap:.1e}", gap <= 5e-4))


def test_05_mass_conservation():
    with criterion(5, "conservation of mass", 10) as checks:
        cases = {
            "double well, ml": (double_well_problem(source=lambda x: np.sin(2 * x), zero_mean_source=True), Lattice(1, 16), "ml"),
            "double well, stepping": (double_well_problem(alpha=0.6, source=lambda x: np.sin(2 * x), zero_mean_source=True), Lattice(1, 16), "stepping"),
            "time-dependent, stepping": (
                ProblemSpec(
                    0.7, 0.9, 1.0, 1.0,
                    potential=lambda t, x: (1 + t) * np.cos(x),
                    source=lambda t, x: np.cos(3 * t) * np.sin(x),
                    initial=analytic_initial,
                    potential_time_dependent=True,
                    source_time_dependent=True,
                    zero_mean_source=True,
                ),
                Lattice(1, 8),
                "stepping",
            ),
            "d=2, ml": (
                ProblemSpec(0.9, 1.0, 1.0, 1.0, d=2, potential=double_well, source=lambda x, y: np.cos(x + y), initial=lambda x, y: 1 + np.cos(x) * np.sin(y), zero_mean_source=True),
                Lattice(2, 5),
                "ml",
            ),
        }
        for name, (problem, lat, solver) in cases.items():
            drift = mass_drift(solve(problem, lat, 500, solver=solver))
            checks.append((f"{name} {drift:.1e}", drift <= 1e-8))


def test_06_coercivity_and_forcing():
    rng = np.random.default_rng(6)
    with criterion(6, "coercivity and forcing-bound audits", 10) as checks:
        cos_V = sample(lambda x: np.cos(x), Lattice(1, 8))
        c = potential_constant(cos_V)
        checks.append((f"c(cos) - 2 = {c - 2:.1e}", abs(c - 2) <= 1e-12))
        worst_split = worst_const = worst_coer = -math.inf
        setups = [(Lattice(1, 12), double_well, 1.0, 0.8), (Lattice(2, 4), double_well, 0.5, 1.0), (Lattice(1, 12), np.cos, 1.0, 1.0)]
        for i in range(100):
            lat, Vf, K, beta = setups[i % len(setups)]
            V = sample(Vf, lat) if lat.d == 1 else sample(lambda x, y: Vf(x) + Vf(y), lat)
            consts = coercivity_constants(K, potential_constant(V), beta)
            u = rand_field(lat, rng, zero_mean=True, real=bool(i % 2))
            v = rand_field(lat, rng, zero_mean=True)
            fb = forcing_bounds(u, v, V)
            worst_split = max(worst_split, fb.lhs - fb.term_bound)
            worst_const = max(worst_const, fb.lhs - fb.constant_bound)
            worst_coer = max(worst_coer, coercivity_violation(u, V, consts))
        checks.append((f"split forcing bound {worst_split:.1e}", worst_split <= 1e-8))
        checks.append((f"c(V) forcing bound {worst_const:.1e}", worst_const <= 1e-8))
        checks.append((f"coercivity {worst_coer:.1e}", worst_coer <= 1e-8))


def test_07_gronwall():
    with criterion(7, "Gronwall audit on solver energy series", 30) as checks:
        problems = {
            "double well": (double_well_problem(), Lattice(1, 16)),
            "cos V, source": (ProblemSpec(0.5, 1.0, 1.0, 2.0, potential=np.cos, source=lambda x: np.sin(3 * x), initial=analytic_initial), Lattice(1, 12)),
            "time-dependent": (
                ProblemSpec(
                    0.7, 0.9, 1.0, 1.0,
                    potential=double_well,
                    source=lambda t, x: (1 + t) * np.cos(2 * x),
                    initial=bump(math.pi, 2.0),
                    source_time_dependent=True,
                ),
                Lattice(1, 8),
            ),
            "alpha=1": (ProblemSpec(1.0, 0.6, 0.5, 1.0, potential=double_well, initial=analytic_initial), Lattice(1, 16)),
            "d=2": (ProblemSpec(0.8, 0.8, 1.0, 1.0, d=2, potential=lambda x, y: np.cos(x) * np.cos(y), initial=lambda x, y: np.exp(np.sin(x + y))), Lattice(2, 5)),
        }
        for name, (problem, lat) in problems.items():
            traj = solve(problem, lat, 400)
            V = field_on(problem.potential, lat, None)
            consts = coercivity_constants(problem.K, potential_constant(V), problem.beta)
            worst = energy_gronwall_audit(traj, consts.gamma2)
            checks.append((f"{name} {worst:.1e}", worst <= 1e-8))


def test_08_energy_boundedness():
    with criterion(8, "energy-estimate boundedness in m", 60) as checks:
        ratios = []
        for m in (4, 8, 16, 32):
            traj = solve(double_well_problem(), Lattice(1, m), 400)
            ratios.append(energy_report(traj).ratio)
        spread = max(ratios) / min(ratios)
        checks.append((f"ratios {', '.join(f'{r:.3f}' for r in ratios)}, spread {spread:.3f}", spread < 2))


def test_09_convergence():
    with criterion(9, "spatial convergence and temporal order", 120) as checks:
        problem = ProblemSpec(0.8, 0.8, 1.0, 1.0, potential=double_well, initial=analytic_initial)
        table = convergence_study(problem, [4, 8, 16, 32], [0.02, 0.01, 0.005, 0.0025], m_ref=64, m_time=4)
        errs = [e for _, _, e in table.spatial]
        decreasing = all(b < a for a, b in zip(errs, errs[1:]))
        checks.append((f"spatial errors {', '.join(f'{e:.1e}' for e in errs)}", decreasing and errs[-1] < 1e-6))
        order = table.temporal_order
        checks.append((f"temporal order {order:.2f}", 1.5 <= order <= 2.1))


def test_10_metastability():
    with criterion(10, "double-well metastability at T=100", 120) as checks:
        lat = Lattice(1, 64)
        n = 4 * (lat.m + 1)
        x = 2 * np.pi * np.arange(n) / n
        window = np.abs(x - math.pi / 2) <= 0.5
        masses = []
        for beta in (1.0, 0.7, 0.4):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)  # beta <= 1/2 is allowed here
                problem = ProblemSpec(1.0, beta, 1.0, 100.0, potential=double_well, initial=bump(math.pi / 2, 1.0))
            traj = solve_ml(assemble(problem, lat), [0.0, 100.0])
            u = synthesize(traj.field_at(100.0), x[:, None]).real
            if beta == 1.0:
                gap = abs(x[np.argmax(u)] - 1.5 * math.pi)
                checks.append((f"beta=1 maximizer off by {gap:.3f}", gap <= 2 * math.pi / n + 1e-12))
            masses.append(float(np.sum(u[window]) * 2 * math.pi / n))
        checks.append(
            (f"window masses {', '.join(f'{v:.4f}' for v in masses)}", masses[0] < masses[1] < masses[2])
        )


def test_11_stable_density():
    with criterion(11, "stable-density emitter", 5) as checks:
        x = np.linspace(-40, 40, 2001)
        gauss = np.max(np.abs(stable_density(1.0, x) - np.exp(-x * x / 4) / (2 * math.sqrt(math.pi))))
        cauchy = np.max(np.abs(stable_density(0.5, x) - 1 / (math.pi * (1 + x * x))))
        checks.append((f"Gaussian {gauss:.1e}", gauss <= 1e-8))
        checks.append((f"Cauchy {cauchy:.1e}", cauchy <= 1e-8))
        for beta in (1.0, 0.75, 0.5, 0.25):
            total = np.trapezoid(stable_density(beta, x), x) + tail_mass(beta, 40.0)
            checks.append((f"beta={beta} mass {total:.6f}", abs(total - 1) <= 1e-3))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
