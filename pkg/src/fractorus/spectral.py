"""Fourier machinery on the periodic box T^d = [0, 2*pi)^d.

The orthonormal basis is w_k(x) = (2*pi)^(-d/2) exp(i k.x) and a field is stored
as its coefficients u_hat(k) = <u, w_k> on the truncated lattice |k|_inf <= m.
Coefficients live in a flat complex vector ordered lexicographically in
(k_1, ..., k_d), each coordinate running from -m to m.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import convolve

MAX_LATTICE_SIZE = 10**7


class LatticeError(ValueError):
    pass


class UndersampledGridError(ValueError):
    pass


@dataclass(frozen=True)
class Lattice:
    """Truncated frequency set {k in Z^d : |k|_inf <= m}."""

    d: int
    m: int
    ks: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.d < 1:
            raise LatticeError(f"dimension must be >= 1, got {self.d}")
        if self.m < 0:
            raise LatticeError(f"truncation radius must be >= 0, got {self.m}")
        if (2 * self.m + 1) ** self.d > MAX_LATTICE_SIZE:
            raise LatticeError(
                f"lattice with d={self.d}, m={self.m} has {(2 * self.m + 1) ** self.d} "
                f"modes (limit {MAX_LATTICE_SIZE})"
            )
        axis = np.arange(-self.m, self.m + 1)
        grids = np.meshgrid(*([axis] * self.d), indexing="ij")
        ks = np.stack([g.ravel() for g in grids], axis=-1)
        ks.setflags(write=False)
        object.__setattr__(self, "ks", ks)

    @property
    def side(self) -> int:
        return 2 * self.m + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.d

    @property
    def size(self) -> int:
        return self.side**self.d

    def __len__(self) -> int:
        return self.size

    def contains(self, k: Sequence[int]) -> bool:
        return len(k) == self.d and all(abs(int(c)) <= self.m for c in k)

    def index_of(self, k: Sequence[int]) -> int:
        if not self.contains(k):
            raise KeyError(f"{tuple(k)} is not in the lattice (d={self.d}, m={self.m})")
        return int(np.ravel_multi_index(tuple(int(c) + self.m for c in k), self.shape))

    def k_of(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise IndexError(index)
        return tuple(int(c) for c in self.ks[index])

    @property
    def norms(self) -> np.ndarray:
        """Euclidean |k| for every lattice point."""
        return np.sqrt(np.sum(self.ks.astype(float) ** 2, axis=1))

    @property
    def zero_index(self) -> int:
        return (self.size - 1) // 2

    @property
    def reflection(self) -> np.ndarray:
        """Permutation p with ks[p[i]] == -ks[i]; lexicographic order makes it a reversal."""
        return np.arange(self.size)[::-1]


def lattice_new(d: int, m: int) -> Lattice:
    return Lattice(d, m)


@dataclass(frozen=True)
class SpectralField:
    lattice: Lattice
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.lattice.size,):
            raise ValueError(
                f"expected {self.lattice.size} coefficients, got shape {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)

    def __add__(self, other: SpectralField) -> SpectralField:
        _check_same(self, other)
        return SpectralField(self.lattice, self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        _check_same(self, other)
        return SpectralField(self.lattice, self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> SpectralField:
        return SpectralField(self.lattice, scalar * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> SpectralField:
        return SpectralField(self.lattice, -self.coeffs)

    def __getitem__(self, k: Sequence[int]) -> complex:
        return complex(self.coeffs[self.lattice.index_of(k)])

    def grid(self) -> np.ndarray:
        """Coefficients reshaped to a (2m+1)^d array indexed by k + m."""
        return self.coeffs.reshape(self.lattice.shape)

    def is_real(self, tol: float = 1e-12) -> bool:
        c = self.coeffs
        return bool(np.max(np.abs(c[self.lattice.reflection] - np.conj(c)), initial=0.0) <= tol)

    def resample(self, lattice: Lattice) -> SpectralField:
        """Zero-pad or truncate onto another lattice of the same dimension."""
        if lattice.d != self.lattice.d:
            raise LatticeError("cannot resample across dimensions")
        src = self.grid()
        out = np.zeros(lattice.shape, dtype=complex)
        r = min(self.lattice.m, lattice.m)
        src_sl = tuple(slice(self.lattice.m - r, self.lattice.m + r + 1) for _ in range(lattice.d))
        dst_sl = tuple(slice(lattice.m - r, lattice.m + r + 1) for _ in range(lattice.d))
        out[dst_sl] = src[src_sl]
        return SpectralField(lattice, out.ravel())


def _check_same(a: SpectralField, b: SpectralField) -> None:
    if a.lattice != b.lattice:
        raise LatticeError(
            f"lattice mismatch: (d={a.lattice.d}, m={a.lattice.m}) vs "
            f"(d={b.lattice.d}, m={b.lattice.m})"
        )


def zeros(lattice: Lattice) -> SpectralField:
    return SpectralField(lattice, np.zeros(lattice.size, dtype=complex))


def basis(lattice: Lattice, k: Sequence[int]) -> SpectralField:
    """The basis function w_k as a field."""
    c = np.zeros(lattice.size, dtype=complex)
    c[lattice.index_of(k)] = 1.0
    return SpectralField(lattice, c)


def grid_points(d: int, n: int) -> list[np.ndarray]:
    """Coordinate arrays (indexing='ij') of the uniform grid x_j = 2*pi*j/n per axis."""
    x = 2 * np.pi * np.arange(n) / n
    return list(np.meshgrid(*([x] * d), indexing="ij"))


def analyze(samples: np.ndarray, lattice: Lattice) -> SpectralField:
    """Fourier coefficients from samples on the uniform grid.

    `samples` has shape (N,)*d. The equal-weight rule is exact for trigonometric
    polynomials of degree <= N - m - 1.
    """
    samples = np.asarray(samples)
    d = lattice.d
    if samples.ndim != d or len(set(samples.shape)) != 1:
        raise ValueError(f"expected a cubic {d}-d sample array, got shape {samples.shape}")
    n = samples.shape[0]
    if n < 2 * lattice.m + 2:
        raise UndersampledGridError(
            f"{n} samples per axis cannot resolve m={lattice.m}; need >= {2 * lattice.m + 2}"
        )
    spectrum = np.fft.fftn(samples)
    idx = np.ix_(*([np.arange(-lattice.m, lattice.m + 1) % n] * d))
    coeffs = spectrum[idx].ravel() * (2 * np.pi) ** (d / 2) / n**d
    return SpectralField(lattice, coeffs)


def project(func, lattice: Lattice, n: int | None = None) -> SpectralField:
    """Sample a closed form ``func(*coords)`` and analyze it.

    The default grid oversamples well beyond the minimum to keep aliasing from
    non-polynomial inputs at round-off level.
    """
    if n is None:
        n = max(4 * (lattice.m + 1), 64)
    coords = grid_points(lattice.d, n)
    values = np.broadcast_to(np.asarray(func(*coords)), coords[0].shape)
    return analyze(values, lattice)


def synthesize(f: SpectralField, points: np.ndarray) -> np.ndarray:
    """Evaluate the truncated series at points of shape (npts, d) (or (npts,) for d=1)."""
    pts = np.asarray(points, dtype=float)
    d = f.lattice.d
    if pts.ndim == 1 and d == 1:
        pts = pts[:, None]
    pts = np.atleast_2d(pts)
    if pts.shape[1] != d:
        raise ValueError(f"points must have {d} columns, got shape {pts.shape}")
    phase = np.exp(1j * pts @ f.lattice.ks.T.astype(float))
    return phase @ f.coeffs / (2 * np.pi) ** (d / 2)


def to_grid(f: SpectralField, n: int) -> np.ndarray:
    """Values of the truncated series on the uniform n^d grid (inverse FFT)."""
    lat = f.lattice
    if n < lat.side:
        raise UndersampledGridError(f"grid of {n} points cannot hold m={lat.m}")
    spectrum = np.zeros((n,) * lat.d, dtype=complex)
    idx = np.ix_(*([np.arange(-lat.m, lat.m + 1) % n] * lat.d))
    spectrum[idx] = f.grid()
    return np.fft.ifftn(spectrum) * n**lat.d / (2 * np.pi) ** (lat.d / 2)


def multiplier(f: SpectralField, weights: np.ndarray) -> SpectralField:
    return SpectralField(f.lattice, weights * f.coeffs)


def frac_laplacian(f: SpectralField, s: float) -> SpectralField:
    """(-Delta)^s, i.e. multiplication by |k|^(2s)."""
    if s <= 0:
        raise ValueError(f"order must be positive, got {s}")
    return multiplier(f, _power(f.lattice.norms, 2 * s))


def _power(norms: np.ndarray, p: float) -> np.ndarray:
    out = np.zeros_like(norms)
    nz = norms > 0
    out[nz] = norms[nz] ** p
    return out


def gradient(f: SpectralField) -> list[SpectralField]:
    ks = f.lattice.ks
    return [SpectralField(f.lattice, 1j * ks[:, j] * f.coeffs) for j in range(f.lattice.d)]


def divergence(components: Sequence[SpectralField]) -> SpectralField:
    lat = components[0].lattice
    total = np.zeros(lat.size, dtype=complex)
    for j, c in enumerate(components):
        _check_same(components[0], c)
        total += 1j * lat.ks[:, j] * c.coeffs
    return SpectralField(lat, total)


def convolve_product(a: SpectralField, b: SpectralField) -> SpectralField:
    """Coefficients of the pointwise product a*b, truncated to the lattice."""
    _check_same(a, b)
    lat = a.lattice
    full = convolve(a.grid(), b.grid(), mode="same")
    return SpectralField(lat, full.ravel() / (2 * np.pi) ** (lat.d / 2))


def inner(a: SpectralField, b: SpectralField) -> complex:
    """L^2 inner product <a, b> = sum a_hat conj(b_hat)."""
    _check_same(a, b)
    return complex(np.vdot(b.coeffs, a.coeffs))


def seminorm(f: SpectralField, s: float) -> float:
    """||(-Delta)^(s/2) u||, i.e. sqrt(sum |k|^(2s) |u_hat|^2)."""
    if s < 0:
        raise ValueError(f"order must be non-negative, got {s}")
    if s == 0:
        return l2_norm(f)
    w = _power(f.lattice.norms, 2 * s)
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def sobolev_norm(f: SpectralField, s: float) -> float:
    """||u||_{H^s} = (||(-Delta)^(s/2) u||^2 + ||u||^2)^(1/2)."""
    if s == 0:
        return l2_norm(f)
    return float(np.hypot(seminorm(f, s), l2_norm(f)))


def l2_norm(f: SpectralField) -> float:
    return float(np.linalg.norm(f.coeffs))


def mean(f: SpectralField) -> complex:
    """Spatial average of u over T^d."""
    return complex(f.coeffs[f.lattice.zero_index]) / (2 * np.pi) ** (f.lattice.d / 2)


def real_part(f: SpectralField) -> SpectralField:
    """Coefficients of Re(u): (u_hat(k) + conj(u_hat(-k))) / 2."""
    c = f.coeffs
    return SpectralField(f.lattice, 0.5 * (c + np.conj(c[f.lattice.reflection])))
