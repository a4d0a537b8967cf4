from __future__ import annotations

import sys

import numpy as np
import pytest

from fractorus.spectral import Lattice, SpectralField


def random_field(lat: Lattice, rng: np.random.Generator, zero_mean: bool = False, real: bool = False) -> SpectralField:
    c = rng.normal(size=lat.size) + 1j * rng.normal(size=lat.size)
    if real:
        c = 0.5 * (c + np.conj(c[lat.reflection]))
    if zero_mean:
        c[lat.zero_index] = 0
    return SpectralField(lat, c)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number].line())
