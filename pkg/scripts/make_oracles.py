"""Regenerate the high-precision reference values frozen into the test suite.

Mittag-Leffler values come from the defining power series summed in mpmath
with enough guard digits to absorb the cancellation; stable densities for
2*beta < 1 come from their convergent inverse-power series. Neither path shares
code with the package.

    python scripts/make_oracles.py
"""

from __future__ import annotations

import math

import mpmath as mp


def ml_series(alpha: float, b: float, z: complex) -> complex:
    az = abs(z)
    terms = int(3 * max(az, 1) ** (1 / alpha) / alpha + 150)
    digits = int(40 + max(az, 1) ** (1 / alpha) / math.log(10))
    with mp.workdps(digits):
        zz = mp.mpc(z)
        a, bb = mp.mpf(alpha), mp.mpf(b)
        s = mp.mpf(0)
        for k in range(terms):
            s += zz**k * mp.rgamma(a * k + bb)
        return complex(s)


def stable_series(beta: float, x: float) -> float:
    """p(x) = (1/pi) sum_k (-1)^(k+1) Gamma(2 beta k + 1)/k! sin(pi beta k) x^(-2 beta k - 1)."""
    p = mp.mpf(2 * beta)
    with mp.workdps(30):
        s = mp.nsum(
            lambda k: (-1) ** (k + 1) * mp.gamma(p * k + 1) / mp.factorial(k) * mp.sin(mp.pi * beta * k) * mp.mpf(x) ** (-p * k - 1),
            [1, mp.inf],
        )
        return float(s / mp.pi)


ML_CASES = [
    (0.5, 1.0, -1.0),
    (0.5, 1.0, -10.0),
    (0.8, 1.0, -3.0),
    (0.8, 1.0, -40.0),
    (0.8, 1.8, -40.0),
    (0.6, 1.0, -7.5),
    (0.3, 1.0, -2.0),
    (0.9, 0.9, -15.0),
    (0.7, 1.7, 4 + 3j),
    (0.8, 1.0, -5 + 5j),
    (0.8, 0.8, 8j),
    (0.95, 1.0, -12 - 2j),
    (0.4, 1.4, -30.0),
    (1.0, 1.5, -6.0),
    (0.75, 1.0, 2.5),
]

DENSITY_CASES = [(0.3, 0.5), (0.3, 3.0), (0.3, 20.0), (0.1, 0.5), (0.1, 3.0), (0.25, 1.0)]

if __name__ == "__main__":
    print("ML_ORACLE = [")
    for a, b, z in ML_CASES:
        print(f"    ({a!r}, {b!r}, {complex(z)!r}, {ml_series(a, b, complex(z))!r}),")
    print("]")
    print("DENSITY_ORACLE = [")
    for beta, x in DENSITY_CASES:
        print(f"    ({beta!r}, {x!r}, {stable_series(beta, x)!r}),")
    print("]")
