"""Run configuration: `key = value` text files and the built-in field library."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import erf

from .galerkin import FieldInput, ProblemSpec
from .spectral import Lattice, SpectralField

log = logging.getLogger(__name__)

SOLVERS = ("ml", "stepping", "auto")
EXPERIMENTS = ("solve", "sweep", "convergence", "diagnose")
SWEEPABLE = ("d", "m", "alpha", "beta", "K", "T", "n_steps")
LONG_RUNNING_T = 1000.0
DEFAULT_BUMP_SIGMA = 0.1

# double well: minima at pi/2 (V = -0.5) and 3 pi/2 (V = -1.5, the deeper one)
DOUBLE_WELL_A = 1.0  # weight of cos 2x
DOUBLE_WELL_B = 0.5  # weight of sin x


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    d: int = 1
    m: int = 16
    alpha: float = 1.0
    beta: float = 1.0
    K: float = 1.0
    T: float = 1.0
    n_steps: int = 1000
    solver: str = "auto"
    experiment: str = "solve"
    potential: str = "zero"
    initial: str = "mode:1"
    source: str = "zero"
    snapshots: tuple[float, ...] = ()  # empty means (T,)
    sweep_key: str | None = None
    sweep_values: tuple[float, ...] = ()
    out_dir: str = "out"
    base_dir: str = "."  # where relative fourier: paths resolve; not a config key
    declared: frozenset = frozenset()  # keys set explicitly in the parsed text

    def __post_init__(self) -> None:
        _validate(self)

    @property
    def snapshot_times(self) -> tuple[float, ...]:
        return self.snapshots if self.snapshots else (self.T,)

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)

    def lattice(self) -> Lattice:
        return Lattice(self.d, self.m)

    def problem(self) -> ProblemSpec:
        base = Path(self.base_dir)
        V, v_td = field_spec(self.potential, self.d, base, "potential")
        f, f_td = field_spec(self.source, self.d, base, "source")
        h, h_td = field_spec(self.initial, self.d, base, "initial")
        if h_td:
            raise ConfigError("initial data cannot be time-dependent", key="initial")
        return ProblemSpec(
            alpha=self.alpha,
            beta=self.beta,
            K=self.K,
            T=self.T,
            d=self.d,
            potential=V,
            source=f,
            initial=h,
            potential_time_dependent=v_td,
            source_time_dependent=f_td,
        )


_INT_KEYS = {"d", "m", "n_steps"}
_FLOAT_KEYS = {"alpha", "beta", "K", "T"}
_STR_KEYS = {"solver", "experiment", "potential", "initial", "source", "sweep_key", "out_dir"}
_LIST_KEYS = {"snapshots", "sweep_values"}
KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _LIST_KEYS


def _validate(c: RunConfig) -> None:
    def bad(key, msg):
        raise ConfigError(f"{key} {msg}", key=key)

    if c.d < 1:
        bad("d", f"must be >= 1, got {c.d}")
    if c.m < 0:
        bad("m", f"must be >= 0, got {c.m}")
    if (2 * c.m + 1) ** c.d > 10**7:
        bad("m", f"gives {(2 * c.m + 1) ** c.d} modes in d={c.d} (limit 10^7)")
    if not 0 < c.alpha <= 1:
        bad("alpha", f"must lie in (0, 1], got {c.alpha}")
    if not (c.beta > 0 and math.isfinite(c.beta)):
        bad("beta", f"must be positive, got {c.beta}")
    if not (c.K > 0 and math.isfinite(c.K)):
        bad("K", f"must be positive, got {c.K}")
    if not (c.T > 0 and math.isfinite(c.T)):
        bad("T", f"must be positive, got {c.T}")
    if c.n_steps < 1:
        bad("n_steps", f"must be >= 1, got {c.n_steps}")
    if c.solver not in SOLVERS:
        bad("solver", f"must be one of {', '.join(SOLVERS)}, got {c.solver!r}")
    if c.experiment not in EXPERIMENTS:
        bad("experiment", f"must be one of {', '.join(EXPERIMENTS)}, got {c.experiment!r}")
    for t in c.snapshots:
        if not 0 <= t <= c.T:
            bad("snapshots", f"times must lie in [0, T={c.T}], got {t}")
    if c.sweep_key is not None and c.sweep_key not in SWEEPABLE:
        bad("sweep_key", f"must be one of {', '.join(SWEEPABLE)}, got {c.sweep_key!r}")
    if c.experiment == "sweep" and (c.sweep_key is None or not c.sweep_values):
        bad("sweep_values", "and sweep_key are required for a sweep")
    if c.T > LONG_RUNNING_T:
        log.warning("T=%g exceeds %g: expect a long run", c.T, LONG_RUNNING_T)


def _parse_value(key: str, raw: str, line: int):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _LIST_KEYS:
            return tuple(float(v) for v in raw.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"cannot parse {key} = {raw!r}", line=line, key=key) from None
    return raw


def parse_config(text: str, base_dir: str | Path = ".") -> RunConfig:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", line=no)
        key, val = (s.strip() for s in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", line=no, key=key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", line=no, key=key)
        if not val:
            raise ConfigError(f"empty value for {key!r}", line=no, key=key)
        values[key] = _parse_value(key, val, no)
        lines[key] = no
    try:
        cfg = RunConfig(**values, base_dir=str(base_dir), declared=frozenset(values))
    except ConfigError as exc:
        raise ConfigError(str(exc), line=lines.get(exc.key), key=exc.key) from None
    for role in ("potential", "source", "initial"):
        try:
            field_spec(getattr(cfg, role), cfg.d, Path(base_dir), role)
        except ConfigError as exc:
            raise ConfigError(str(exc), line=lines.get(role), key=role) from None
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent)


# --- built-in fields ----------------------------------------------------------------


def double_well(*coords):
    return sum(DOUBLE_WELL_A * np.cos(2 * x) + DOUBLE_WELL_B * np.sin(x) for x in coords)


def cosine(*coords):
    return sum(np.cos(x) for x in coords)


def wrapped_distance(x, center: float):
    return np.angle(np.exp(1j * (np.asarray(x) - center)))


def bump(center: float, width: float, sigma: float = DEFAULT_BUMP_SIGMA) -> Callable:
    """Indicator of [center - width/2, center + width/2] convolved with a Gaussian of std sigma.

    In d > 1 the bump is the product of the one-dimensional profiles.
    """

    def f(*coords):
        out = 1.0
        s = math.sqrt(2) * sigma
        for x in coords:
            r = wrapped_distance(x, center)
            out = out * 0.5 * (erf((r + width / 2) / s) - erf((r - width / 2) / s))
        return out

    return f


def mode(k: tuple[int, ...], d: int) -> Callable:
    """The real field w_k + w_{-k} (just w_0 when k = 0)."""
    if len(k) != d:
        raise ConfigError(f"mode index {k} must have {d} components", key="initial")
    kv = np.array(k, dtype=float)

    def f(*coords):
        phase = sum(kk * x for kk, x in zip(kv, coords))
        scale = (2 * np.pi) ** (-d / 2)
        return scale * (2 * np.cos(phase) if np.any(kv) else np.ones_like(phase))

    return f


def read_fourier(path: Path, d: int) -> SpectralField:
    """Coefficient file: one `k_1 ... k_d re im` line per mode, `#` comments."""
    rows = []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read coefficient file {path}: {exc}") from None
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].split()
        if not body:
            continue
        if len(body) != d + 2:
            raise ConfigError(f"{path}:{no}: expected {d + 2} columns, got {len(body)}")
        try:
            k = tuple(int(v) for v in body[:d])
            rows.append((k, complex(float(body[d]), float(body[d + 1]))))
        except ValueError:
            raise ConfigError(f"{path}:{no}: cannot parse {raw.strip()!r}") from None
    if not rows:
        raise ConfigError(f"{path}: no coefficients")
    m = max(max(abs(c) for c in k) for k, _ in rows)
    lat = Lattice(d, m)
    coeffs = np.zeros(lat.size, dtype=complex)
    for k, v in rows:
        coeffs[lat.index_of(k)] += v
    return SpectralField(lat, coeffs)


def _floats(parts: list[str], spec: str) -> list[float]:
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad numbers in field spec {spec!r}") from None


def field_spec(spec: str, d: int, base: Path, role: str) -> tuple[FieldInput, bool]:
    """Resolve a field spec string to (field input, time_dependent).

    Forms: zero | cosine | double_well | constant:<c> | mode:<k1,...,kd> |
    bump:<center>:<width>[:<sigma>] | fourier:<file>, optionally followed by
    `@cos:<omega>` to multiply the field by cos(omega t).
    """
    spec = spec.strip()
    omega = None
    if "@" in spec:
        spec, mod = (s.strip() for s in spec.split("@", 1))
        kind, _, arg = mod.partition(":")
        if kind != "cos" or not arg:
            raise ConfigError(f"unknown time modulation {mod!r} for {role}", key=role)
        omega = _floats([arg], mod)[0]
    kind, _, rest = spec.partition(":")
    parts = rest.split(":") if rest else []
    base_field: FieldInput
    if kind == "zero" and not parts:
        base_field = None
    elif kind == "cosine" and not parts:
        base_field = cosine
    elif kind == "double_well" and not parts:
        base_field = double_well
    elif kind == "constant" and len(parts) == 1:
        c = _floats(parts, spec)[0]
        base_field = lambda *coords, c=c: np.full(np.shape(coords[0]), c)  # noqa: E731
    elif kind == "mode" and len(parts) == 1:
        try:
            k = tuple(int(v) for v in parts[0].split(","))
        except ValueError:
            raise ConfigError(f"bad mode index in {spec!r}", key=role) from None
        base_field = mode(k, d)
    elif kind == "bump" and len(parts) in (2, 3):
        nums = _floats(parts, spec)
        if nums[1] <= 0 or (len(nums) == 3 and nums[2] <= 0):
            raise ConfigError(f"bump width and sigma must be positive in {spec!r}", key=role)
        base_field = bump(*nums)
    elif kind == "fourier" and rest:
        path = Path(rest)
        base_field = read_fourier(path if path.is_absolute() else base / path, d)
    else:
        raise ConfigError(f"unknown {role} spec {spec!r}", key=role)
    if omega is None:
        return base_field, False
    if base_field is None:
        return None, False
    return _modulated(base_field, omega), True


def _modulated(f: FieldInput, omega: float) -> Callable:
    if isinstance(f, SpectralField):
        return lambda t, *coords: f * math.cos(omega * t)
    return lambda t, *coords: f(*coords) * math.cos(omega * t)
