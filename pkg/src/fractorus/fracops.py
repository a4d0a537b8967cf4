"""Fractional calculus kernels.

Mittag-Leffler functions (scalar, vectorized, matrix), the Riemann-Liouville
integral, the L1 Caputo derivative and an Adams-Bashforth-Moulton stepper for
linear fractional systems D^alpha y = A(t) y + g(t).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import gammaln, gammasgn

log = logging.getLogger(__name__)

ML_TOL = 1e-10
EPS = np.finfo(float).eps


class MLConvergenceError(ArithmeticError):
    pass


class IllConditionedEigenbasisError(np.linalg.LinAlgError):
    def __init__(self, condition: float, limit: float):
        super().__init__(
            f"eigenvector matrix condition number {condition:.3e} exceeds {limit:.1e}"
        )
        self.condition = condition


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n: int

    def __post_init__(self) -> None:
        if self.T <= 0 or self.n < 1:
            raise ValueError(f"need T > 0 and n >= 1, got T={self.T}, n={self.n}")

    @property
    def dt(self) -> float:
        return self.T / self.n

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n + 1)


@dataclass(frozen=True)
class MLEvaluation:
    alpha: float
    b: float
    value: complex
    method_used: str  # "series" | "asymptotic" | "integral"
    est_error: float


def _check_ml_args(alpha: float, b: float) -> None:
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if b <= 0:
        raise ValueError(f"b must be positive, got {b}")


# --- Mittag-Leffler: individual methods, vectorized over z ------------------


def _series(alpha: float, b: float, z: np.ndarray, kmax: int = 4000, tol: float | None = None):
    """Taylor series with a running round-off bound. NaN where not applicable.

    With ``tol`` given, points whose predicted cancellation error exceeds it are
    skipped without summing.
    """
    az = np.abs(z)
    value = np.full(z.shape, np.nan, dtype=complex)
    err = np.full(z.shape, np.inf)
    # terms stop growing once Gamma(alpha k + b) outpaces |z|^k
    need = np.ceil(2 * np.maximum(az, 1.0) ** (1 / alpha) / alpha + 60)
    ok = need <= kmax
    if tol is not None:
        # largest term ~ exp(|z|^(1/a)), value ~ exp(Re z^(1/a)) at best
        with np.errstate(invalid="ignore"):
            w = z ** (1 / alpha)
        loss = az ** (1 / alpha) - np.maximum(w.real, 0.0)
        ok &= loss <= math.log(tol / (4 * EPS)) + 3.0
    idx = np.flatnonzero(ok)
    idx = idx[np.argsort(need[idx], kind="stable")]
    for chunk in np.array_split(idx, max(1, len(idx) // 1024)):
        if chunk.size == 0:
            continue
        zs = z[chunk]
        k = np.arange(int(need[chunk].max()))
        with np.errstate(divide="ignore", invalid="ignore"):
            logmag = np.log(np.abs(zs))[:, None] * k - gammaln(alpha * k + b)
        logmag[:, 0] = -gammaln(b)  # z == 0 gives 0 * -inf above
        with np.errstate(over="ignore", invalid="ignore"):
            terms = np.exp(logmag + 1j * np.angle(zs)[:, None] * k)
            value[chunk] = terms.sum(axis=1)
            err[chunk] = 4 * EPS * np.abs(terms).sum(axis=1) + np.abs(terms[:, -1])
    return value, err


def _residue(alpha: float, b: float, z: np.ndarray) -> np.ndarray:
    """(1/alpha) z^((1-b)/alpha) exp(z^(1/alpha)) on the principal branch."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        w = z ** (1 / alpha)
        return np.exp(w + np.log(z) * (1 - b) / alpha) / alpha


def _contour_angles(alpha: float, z: np.ndarray):
    """Pick the Hankel-contour opening per point, away from arg(z).

    Returns (delta, include_residue). Any opening in (alpha*pi/2, min(pi, alpha*pi)]
    is admissible; the residue term belongs to points inside the sector.
    """
    hi = min(np.pi, alpha * np.pi) * (0.999 if alpha == 1 else 1.0)
    lo = 0.6 * alpha * np.pi
    mid = 0.5 * (lo + hi)
    arg = np.abs(np.angle(z))
    inside = arg < mid
    delta = np.where(inside, hi, lo)
    return delta, inside


def _asymptotic(alpha: float, b: float, z: np.ndarray, kmax: int = 400, tol: float | None = None):
    """Optimally truncated algebraic expansion plus the sector exponential.

    With ``tol`` given, points whose truncation error clearly exceeds it are skipped.
    """
    value = np.full(z.shape, np.nan, dtype=complex)
    err = np.full(z.shape, np.inf)
    big = np.abs(z) >= 2.0
    k = np.arange(1, kmax + 1)
    x = b - alpha * k
    # 1/Gamma(x) = sign * exp(-log|Gamma(x)|), kept in log form to survive large k
    log_rg = -gammaln(x)
    sign_rg = np.where(np.isfinite(log_rg), gammasgn(x), 0.0)
    # |1/Gamma(x)| <= Gamma(1-x)/pi for x < 1/2 (reflection); the envelope ignores
    # the zeros of 1/Gamma so they cannot fake an early optimal cut
    env_log = np.where(x < 0.5, gammaln(np.maximum(1 - x, 0.5)) - np.log(np.pi), -gammaln(x))
    log_env = env_log - np.log(np.abs(z[big]))[:, None] * k
    cut = np.argmin(log_env, axis=1) + 1
    smallest = np.exp(log_env[np.arange(len(cut)), cut - 1])
    if tol is not None:
        _, include = _contour_angles(alpha, z[big])
        with np.errstate(over="ignore"):
            scale = np.maximum(1.0, np.where(include, np.abs(_residue(alpha, b, z[big])), 0.0))
        hopeful = smallest <= 10 * tol * scale
        big[big] = hopeful
        cut, smallest = cut[hopeful], smallest[hopeful]
    if not np.any(big):
        return value, err
    zs = z[big]
    algebraic = np.empty(zs.shape, dtype=complex)
    spread = np.empty(zs.shape)
    order = np.argsort(cut, kind="stable")
    for chunk in np.array_split(order, max(1, len(order) // 1024)):
        if chunk.size == 0:
            continue
        kk = k[: int(cut[chunk].max())]
        logz = np.log(np.abs(zs[chunk]))[:, None]
        with np.errstate(over="ignore", invalid="ignore"):
            terms = sign_rg[: kk.size] * np.exp(
                log_rg[: kk.size] - logz * kk - 1j * np.angle(zs[chunk])[:, None] * kk
            )
        kept = np.where(kk[None, :] < cut[chunk, None], terms, 0.0)
        algebraic[chunk] = -kept.sum(axis=1)
        spread[chunk] = np.abs(kept).sum(axis=1)
    _, include = _contour_angles(alpha, zs)
    res = _residue(alpha, b, zs)
    with np.errstate(invalid="ignore"):
        out = np.where(include, algebraic + res, algebraic)
        stokes = np.where(include, 0.0, np.abs(res))
    bad = ~np.isfinite(out)
    value[big] = np.where(bad, np.nan, out)
    cond = 4 * EPS * (spread + np.abs(out) + np.where(include, np.abs(res), 0.0) * (1 + np.abs(zs) ** (1 / alpha)))
    err[big] = np.where(bad, np.inf, 2 * smallest + stokes + cond)
    return value, err


def _integral(alpha: float, b: float, z: np.ndarray, tol: float):
    """Hankel-contour integral of exp(s^(1/a)) s^((1-b)/a) / (s - z), |z| >= 1."""
    delta, inside = _contour_angles(alpha, z)
    value = np.empty(z.shape, dtype=complex)
    err = np.empty(z.shape)
    for d in np.unique(delta):
        sel = delta == d
        value[sel], err[sel] = _contour_integral(alpha, b, z[sel], float(d), tol)
    res = _residue(alpha, b, z)
    value = np.where(inside, value + res, value)
    err = err + 8 * EPS * (
        np.abs(value) + np.where(inside, np.abs(res), 0.0) * (1 + np.abs(z) ** (1 / alpha))
    )
    bad = ~np.isfinite(value)
    return np.where(bad, np.nan, value), np.where(bad, np.inf, err)


def _contour_integral(alpha: float, b: float, z: np.ndarray, delta: float, tol: float):
    # two rays at angle +-delta joined by an arc of radius eps_r; the ray length
    # is cut where the integrand has decayed below exp(-45)
    eps_r = 0.5
    R = max((45.0 / -math.cos(delta / alpha)) ** alpha, 2 * eps_r)
    p = (1 - b) / alpha
    e_up, e_dn = np.exp(1j * delta), np.exp(-1j * delta)

    def h(s):
        return np.exp(s ** (1 / alpha) + p * np.log(s))

    def rays(u):
        r = eps_r + (R - eps_r) * u
        s_up, s_dn = r * e_up, r * e_dn
        val = h(s_up) * e_up / (s_up - z) - h(s_dn) * e_dn / (s_dn - z)
        return val * (R - eps_r)

    def arc(v):
        s = eps_r * np.exp(1j * delta * v)
        return h(s) * 1j * s * delta / (s - z)

    opts = dict(epsabs=tol * 1e-3, epsrel=1e-14, norm="max", limit=4000)
    with np.errstate(over="ignore", invalid="ignore"):
        r1, e1 = quad_vec(rays, 0.0, 1.0, **opts)
        r2, e2 = quad_vec(arc, -1.0, 1.0, **opts)
    total = (r1 + r2) / (2j * alpha * np.pi)
    return total, np.full(z.shape, (e1 + e2) / (2 * alpha * np.pi))


def _alpha_one(b: float, z: np.ndarray):
    """Closed forms for E_{1,1} = exp and E_{1,2} = expm1(z)/z."""
    if b == 1:
        return np.exp(z), 4 * EPS * np.abs(np.exp(z))
    small = np.abs(z) < 1
    out = np.empty(z.shape, dtype=complex)
    err = np.empty(z.shape)
    if np.any(small):
        out[small], err[small] = _series(1.0, 2.0, z[small])
    if np.any(~small):
        zz = z[~small]
        out[~small] = np.expm1(zz) / zz
        err[~small] = 4 * EPS * (np.abs(out[~small]) + 1 / np.abs(zz))
    return out, err


def _tolerance(tol: float, value: np.ndarray) -> np.ndarray:
    # absolute tolerance, scaled up for values that are large in magnitude
    return tol * np.maximum(1.0, np.abs(value))


def ml_evaluate(alpha: float, b: float, z, tol: float = ML_TOL):
    """Vectorized E_{alpha,b}(z). Returns (values, est_errors, methods)."""
    _check_ml_args(alpha, b)
    zarr = np.atleast_1d(np.asarray(z, dtype=complex))
    shape = zarr.shape
    zf = zarr.ravel()
    if np.any(np.abs(zf) > 1e8):
        raise ValueError("|z| must not exceed 1e8")
    value = np.full(zf.shape, np.nan, dtype=complex)
    err = np.full(zf.shape, np.inf)
    method = np.full(zf.shape, "", dtype=object)

    if alpha == 1 and b in (1.0, 2.0):
        v, e = _alpha_one(b, zf)
        done = np.isfinite(v) & (e <= _tolerance(tol, v))
        value[done], err[done], method[done] = v[done], e[done], "series"
    todo = ~np.isfinite(value)
    if np.any(todo):
        v, e = _series(alpha, b, zf[todo], tol=0.01 * tol)
        idx = np.flatnonzero(todo)
        good = np.isfinite(v) & (e <= 0.01 * _tolerance(tol, v))
        value[idx[good]], err[idx[good]], method[idx[good]] = v[good], e[good], "series"
    todo = ~np.isfinite(value)
    if np.any(todo):
        v, e = _asymptotic(alpha, b, zf[todo], tol=0.01 * tol)
        idx = np.flatnonzero(todo)
        good = np.isfinite(v) & (e <= 0.01 * _tolerance(tol, v))
        value[idx[good]], err[idx[good]], method[idx[good]] = v[good], e[good], "asymptotic"
    todo = ~np.isfinite(value)
    if np.any(todo):
        idx = np.flatnonzero(todo)
        v, e = _integral(alpha, b, zf[idx], tol)
        good = np.isfinite(v) & (e <= _tolerance(tol, v))
        value[idx[good]], err[idx[good]], method[idx[good]] = v[good], e[good], "integral"
        if not np.all(good):
            worst = zf[idx[~good]][0]
            reason = f"could not be evaluated to tolerance {tol}"
            if (worst ** (1 / alpha)).real > 700 and abs(np.angle(worst)) < min(np.pi, alpha * np.pi):
                reason = "overflows double precision"
            raise MLConvergenceError(f"E_{{{alpha},{b}}}({worst}) {reason}")
    return value.reshape(shape), err.reshape(shape), method.reshape(shape)


def ml_values(alpha: float, b: float, z, tol: float = ML_TOL) -> np.ndarray:
    values, _, _ = ml_evaluate(alpha, b, z, tol)
    return values


def ml(alpha: float, b: float, z: complex, tol: float = ML_TOL) -> MLEvaluation:
    """Two-parameter Mittag-Leffler function E_{alpha,b}(z) = sum z^k / Gamma(alpha k + b)."""
    values, errs, methods = ml_evaluate(alpha, b, [z], tol)
    return MLEvaluation(alpha, b, complex(values[0]), str(methods[0]), float(errs[0]))


# --- matrix functions ---------------------------------------------------------


@dataclass(frozen=True)
class Eigensystem:
    values: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    condition: float


def eigensystem(A: np.ndarray, max_condition: float = 1e8) -> Eigensystem:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    lam, P = np.linalg.eig(A)
    cond = float(np.linalg.cond(P))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedEigenbasisError(cond, max_condition)
    return Eigensystem(lam, P, np.linalg.inv(P), cond)


def ml_matrix(alpha: float, b: float, A: np.ndarray, max_condition: float = 1e8) -> np.ndarray:
    """E_{alpha,b}(A) = P diag(E_{alpha,b}(lambda)) P^-1."""
    es = eigensystem(A, max_condition)
    return (es.vectors * ml_values(alpha, b, es.values)) @ es.inverse


# --- fractional integral / derivative on a uniform grid -----------------------


def _check_samples(samples: np.ndarray, grid: TimeGrid) -> np.ndarray:
    phi = np.asarray(samples)
    if phi.shape[0] != grid.n + 1:
        raise ValueError(f"expected {grid.n + 1} samples, got {phi.shape[0]}")
    return phi


def product_trapezoid_weights(alpha: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Weights so that I^alpha phi(t_j) = dt^alpha/Gamma(alpha+2) sum_i w phi_i.

    Returns (interior, first) where interior[l] weighs phi_{j-l} for 0 < l < j
    (interior[0] = 1 is the endpoint weight) and first[j] weighs phi_0.
    """
    l = np.arange(n + 1, dtype=float)
    p = alpha + 1
    interior = np.empty(n + 1)
    interior[0] = 1.0
    lm = l[1:]
    interior[1:] = (lm + 1) ** p - 2 * lm**p + (lm - 1) ** p
    first = np.zeros(n + 1)
    j = l[1:]
    first[1:] = (j - 1) ** p - (j - alpha - 1) * j**alpha
    return interior, first


def frac_integral(alpha: float, samples, grid: TimeGrid) -> np.ndarray:
    """Riemann-Liouville integral with phi piecewise linear between nodes.

    Samples may carry trailing axes (e.g. one column per Fourier mode).
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    phi = _check_samples(samples, grid)
    n = grid.n
    interior, first = product_trapezoid_weights(alpha, n)
    flat = phi.reshape(n + 1, -1)
    out = np.zeros(flat.shape, dtype=np.result_type(flat, float))
    for j in range(1, n + 1):
        w = interior[j - 1 : 0 : -1] if j > 1 else np.empty(0)
        acc = first[j] * flat[0] + flat[j]
        if j > 1:
            acc = acc + w @ flat[1:j]
        out[j] = acc
    out *= grid.dt**alpha / math.gamma(alpha + 2)
    return out.reshape(phi.shape)


def caputo_l1(alpha: float, samples, grid: TimeGrid) -> np.ndarray:
    """L1 Caputo derivative at t_1..t_n (returns n values; exact for linear phi)."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    phi = _check_samples(samples, grid)
    n = grid.n
    flat = phi.reshape(n + 1, -1)
    jumps = np.diff(flat, axis=0)
    l = np.arange(n, dtype=float)
    w = (l + 1) ** (1 - alpha) - l ** (1 - alpha)
    out = np.empty((n, flat.shape[1]), dtype=np.result_type(flat, float))
    for j in range(1, n + 1):
        # sum_{i<j} w[j-1-i] (phi_{i+1} - phi_i)
        out[j - 1] = w[j - 1 :: -1] @ jumps[:j]
    out *= grid.dt ** (-alpha) / math.gamma(2 - alpha)
    return out.reshape((n,) + phi.shape[1:])


# --- linear fractional ODE stepper --------------------------------------------


MatrixFn = Callable[[float], np.ndarray]
VectorFn = Callable[[float], np.ndarray]


def _as_fn(x) -> Callable[[float], np.ndarray]:
    if callable(x):
        return x
    arr = np.asarray(x)
    return lambda t: arr


def solve_linear_fode(
    alpha: float,
    A: MatrixFn | np.ndarray,
    g: VectorFn | np.ndarray | None,
    y0,
    grid: TimeGrid,
    implicit: bool = False,
) -> np.ndarray:
    """Adams-Bashforth-Moulton predictor-corrector for D^alpha y = A(t) y + g(t).

    One corrector sweep per step (PECE). With ``implicit=True`` the corrector
    equation is solved exactly instead, which removes the step-size restriction
    for stiff spectra at the cost of a linear solve per step.
    Returns an array of shape (n+1, dim).
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    A_fn = _as_fn(A)
    g_fn = _as_fn(np.zeros(np.shape(y0)) if g is None else g)
    y0 = np.asarray(y0, dtype=complex)
    n, h = grid.n, grid.dt
    t = grid.t
    dim = y0.shape[0]

    ca = h**alpha / math.gamma(alpha + 2)
    cb = h**alpha / math.gamma(alpha + 1)
    interior, _ = product_trapezoid_weights(alpha, n)
    jj = np.arange(n + 2, dtype=float)
    # predictor: b_l = (l+1)^a - l^a weighs F_{n-l}
    bw = (jj[1:] ** alpha) - (jj[:-1] ** alpha)

    y = np.empty((n + 1, dim), dtype=complex)
    F = np.empty((n + 1, dim), dtype=complex)
    y[0] = y0
    A_cur = np.asarray(A_fn(t[0]))
    F[0] = A_cur @ y0 + g_fn(t[0])
    eye = np.eye(dim)
    cached = None
    for k in range(n):
        # predictor
        hist_b = bw[k::-1] @ F[: k + 1]
        # corrector history: first weight on F_0, interior on F_1..F_k
        nn = k + 1
        a0 = (nn - 1) ** (alpha + 1) - (nn - 1 - alpha) * nn**alpha
        hist_a = a0 * F[0]
        if k >= 1:
            hist_a = hist_a + interior[k:0:-1] @ F[1 : k + 1]
        A_next = np.asarray(A_fn(t[k + 1]))
        g_next = g_fn(t[k + 1])
        if implicit:
            if cached is None or cached[0] is not A_next:
                cached = (A_next, np.linalg.inv(eye - ca * A_next))
            y[k + 1] = cached[1] @ (y0 + ca * (hist_a + g_next))
        else:
            yp = y0 + cb * hist_b
            y[k + 1] = y0 + ca * (A_next @ yp + g_next + hist_a)
        F[k + 1] = A_next @ y[k + 1] + g_next
    return y
