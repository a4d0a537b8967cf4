from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractorus.spectral import (
    Lattice,
    LatticeError,
    SpectralField,
    UndersampledGridError,
    analyze,
    basis,
    convolve_product,
    divergence,
    frac_laplacian,
    gradient,
    grid_points,
    inner,
    l2_norm,
    mean,
    project,
    seminorm,
    sobolev_norm,
    synthesize,
    to_grid,
)

from conftest import random_field

SQRT_PI_2 = math.sqrt(math.pi / 2)
SQRT_2PI = math.sqrt(2 * math.pi)


def cos_field(m: int) -> SpectralField:
    return analyze(np.cos(grid_points(1, 4 * (m + 1))[0]), Lattice(1, m))


class TestLattice:
    def test_ordering(self):
        lat = Lattice(1, 2)
        assert [lat.k_of(i) for i in range(lat.size)] == [(-2,), (-1,), (0,), (1,), (2,)]

    def test_sizes(self):
        assert Lattice(2, 1).size == 9
        assert Lattice(1, 0).size == 1
        assert Lattice(1, 0).k_of(0) == (0,)

    def test_errors(self):
        with pytest.raises(LatticeError):
            Lattice(0, 3)
        with pytest.raises(LatticeError):
            Lattice(8, 20)

    def test_reflection(self):
        lat = Lattice(2, 2)
        assert np.array_equal(lat.ks[lat.reflection], -lat.ks)

    def test_index_roundtrip(self):
        lat = Lattice(3, 2)
        for i in range(lat.size):
            assert lat.index_of(lat.k_of(i)) == i


class TestTransforms:
    def test_cos_coefficients(self):
        f = analyze(np.cos(grid_points(1, 16)[0]), Lattice(1, 2))
        expected = np.array([0, SQRT_PI_2, 0, SQRT_PI_2, 0])
        assert np.max(np.abs(f.coeffs - expected)) < 1e-12

    def test_constant(self):
        f = analyze(np.ones(8), Lattice(1, 2))
        assert abs(f[(0,)] - SQRT_2PI) < 1e-12
        assert abs(mean(f) - 1) < 1e-12

    def test_undersampled(self):
        with pytest.raises(UndersampledGridError):
            analyze(np.ones(5), Lattice(1, 2))

    def test_roundtrip(self, rng):
        for d, m in [(1, 5), (2, 3)]:
            lat = Lattice(d, m)
            f = random_field(lat, rng)
            g = analyze(to_grid(f, 2 * m + 2), lat)
            assert np.max(np.abs(g.coeffs - f.coeffs)) < 1e-12

    def test_synthesize(self, rng):
        lat = Lattice(1, 3)
        one = SpectralField(lat, np.where(np.arange(lat.size) == lat.zero_index, SQRT_2PI, 0))
        assert np.allclose(synthesize(one, np.array([[0.1], [2.0]])), 1.0, atol=1e-12)
        assert abs(synthesize(cos_field(3), np.array([[0.0]]))[0] - 1.0) < 1e-12
        real = random_field(Lattice(2, 3), rng, real=True)
        pts = rng.uniform(0, 2 * np.pi, size=(50, 2))
        assert np.max(np.abs(synthesize(real, pts).imag)) < 1e-12

    def test_project(self):
        f = project(lambda x: np.cos(x), Lattice(1, 3))
        assert abs(f[(1,)] - SQRT_PI_2) < 1e-12


class TestOperators:
    def test_frac_laplacian_eigen(self):
        lat = Lattice(2, 4)
        assert abs(frac_laplacian(basis(lat, (1, 0)), 0.37)[(1, 0)] - 1) < 1e-14
        assert np.all(frac_laplacian(basis(lat, (0, 0)), 0.5).coeffs == 0)
        assert abs(frac_laplacian(basis(lat, (3, 4)), 0.5)[(3, 4)] - 5.0) < 1e-12

    def test_gradient_of_cos(self):
        (g,) = gradient(cos_field(3))
        assert abs(g[(1,)] - 1j * SQRT_PI_2) < 1e-12
        assert abs(g[(-1,)] + 1j * SQRT_PI_2) < 1e-12
        assert np.all(gradient(basis(Lattice(1, 3), (0,)))[0].coeffs == 0)

    def test_laplacian_is_minus_div_grad(self, rng):
        f = random_field(Lattice(2, 4), rng)
        lhs = frac_laplacian(f, 1.0)
        rhs = -divergence(gradient(f))
        assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) < 1e-12

    def test_gradient_energy(self, rng):
        f = random_field(Lattice(2, 3), rng)
        total = sum(l2_norm(g) ** 2 for g in gradient(f))
        assert abs(total - seminorm(f, 1.0) ** 2) < 1e-9 * total

    def test_convolution_identity(self, rng):
        lat = Lattice(1, 4)
        one = SpectralField(lat, np.where(np.arange(lat.size) == lat.zero_index, SQRT_2PI, 0))
        b = random_field(lat, rng)
        assert np.max(np.abs(convolve_product(one, b).coeffs - b.coeffs)) < 1e-12

    def test_cos_squared(self):
        c = cos_field(2)
        expected = analyze(0.5 * (1 + np.cos(2 * grid_points(1, 16)[0])), Lattice(1, 2))
        assert np.max(np.abs(convolve_product(c, c).coeffs - expected.coeffs)) < 1e-12

    def test_product_pointwise(self, rng):
        lat = Lattice(1, 6)
        a = SpectralField(lat, np.where(lat.norms <= 3, random_field(lat, rng).coeffs, 0))
        b = SpectralField(lat, np.where(lat.norms <= 3, random_field(lat, rng).coeffs, 0))
        pts = np.linspace(0, 2 * np.pi, 37)[:, None]
        lhs = synthesize(convolve_product(a, b), pts)
        rhs = synthesize(a, pts) * synthesize(b, pts)
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1, np.max(np.abs(rhs)))

    def test_lattice_mismatch(self):
        with pytest.raises(LatticeError):
            convolve_product(basis(Lattice(1, 2), (0,)), basis(Lattice(1, 3), (0,)))


class TestNorms:
    def test_unit_mode(self):
        w1 = basis(Lattice(1, 3), (1,))
        assert abs(l2_norm(w1) - 1) < 1e-15
        for s in (0.1, 0.5, 1.0, 2.5):
            assert abs(seminorm(w1, s) - 1) < 1e-15
        w0 = basis(Lattice(1, 3), (0,))
        assert seminorm(w0, 0.3) == 0

    def test_sobolev(self, rng):
        f = random_field(Lattice(1, 5), rng)
        assert abs(sobolev_norm(f, 0.7) ** 2 - seminorm(f, 0.7) ** 2 - l2_norm(f) ** 2) < 1e-10

    def test_parseval_on_grid(self, rng):
        lat = Lattice(2, 4)
        f = random_field(lat, rng)
        n = 2 * lat.m + 2
        vals = to_grid(f, n)
        quad = math.sqrt(np.sum(np.abs(vals) ** 2) * (2 * np.pi / n) ** 2)
        assert abs(quad - l2_norm(f)) < 1e-12 * l2_norm(f)

    def test_mean(self):
        assert abs(mean(cos_field(2))) < 1e-15


@st.composite
def fields(draw, zero_mean=False):
    d = draw(st.sampled_from([1, 2]))
    m = draw(st.integers(1, 6))
    seed = draw(st.integers(0, 2**31 - 1))
    return random_field(Lattice(d, m), np.random.default_rng(seed), zero_mean=zero_mean)


@settings(max_examples=60, deadline=None)
@given(fields(), st.floats(0.05, 2.0), st.floats(0.05, 2.0))
def test_fractional_divergence_theorem(f, s, t):
    g = SpectralField(f.lattice, np.roll(f.coeffs, 1))
    lhs = inner(frac_laplacian(f, s), frac_laplacian(g, t))
    rhs = inner(f, frac_laplacian(g, s + t))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@settings(max_examples=60, deadline=None)
@given(fields(zero_mean=True), st.floats(0.01, 1.0), st.floats(0.0, 1.0))
def test_poincare(f, s, frac):
    assert l2_norm(f) <= seminorm(f, s) * (1 + 1e-12)
    g = s * frac
    assert seminorm(f, g) <= seminorm(f, s) * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(fields(), fields())
def test_convolution_commutes(a, b):
    if a.lattice != b.lattice:
        b = b.resample(a.lattice) if a.lattice.d == b.lattice.d else a
    ab, ba = convolve_product(a, b), convolve_product(b, a)
    assert np.max(np.abs(ab.coeffs - ba.coeffs)) < 1e-10 * max(1.0, np.max(np.abs(ab.coeffs)))
