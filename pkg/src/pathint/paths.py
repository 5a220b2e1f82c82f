"""Sample paths of the driving processes and their basic diagnostics.

A :class:`SampledPath` is the discrete representation every other module
consumes: a strictly increasing time grid starting at 0 together with finite
values.  :func:`generate` turns a :class:`ProcessSpec` into a path; all
randomness comes from a counter-based Philox stream keyed by the spec seed,
so the same spec always yields the same path.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy import integrate, linalg

from .errors import AssumptionViolated, GenerationError, NumericError, ValidationError

__all__ = [
    "SampledPath",
    "ProcessSpec",
    "VarianceFunction",
    "generate",
    "generate_components",
    "compound_poisson_jumps",
    "fgn_circulant",
    "check_density_assumption",
    "holder_estimate",
    "uniform_grid",
    "read_csv",
    "write_csv",
]

SEED_MASK = (1 << 64) - 1
# Cholesky fallback is O(n^3); refuse beyond this many increments.
CHOLESKY_MAX = 1 << 12
EIGEN_TOL = 1e-10


def uniform_grid(T: float, n: int) -> np.ndarray:
    """``n`` equally spaced points on ``[0, T]`` with exact endpoints."""
    if n < 2:
        raise ValidationError(f"grid needs at least 2 points, got {n}")
    t = np.linspace(0.0, T, n)
    t[-1] = T
    return t


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Values of a trajectory on a time grid ``0 = t_0 < ... < t_{n-1} = T``."""

    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        t = np.ascontiguousarray(self.times, dtype=float)
        v = np.ascontiguousarray(self.values, dtype=float)
        if t.ndim != 1 or v.ndim != 1:
            raise ValidationError("times and values must be one-dimensional")
        if t.size != v.size:
            raise ValidationError(f"length mismatch: {t.size} times vs {v.size} values")
        if t.size < 2:
            raise ValidationError("a path needs at least two grid points")
        if t[0] != 0.0:
            raise ValidationError(f"grid must start at 0, got {t[0]!r}")
        if not np.all(np.diff(t) > 0):
            raise ValidationError("times must be strictly increasing")
        if not np.all(np.isfinite(v)) or not np.all(np.isfinite(t)):
            raise ValidationError("path contains non-finite entries")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(
        cls, f: Callable[[np.ndarray], np.ndarray], T: float = 1.0, n: int = 1025, label: str = ""
    ) -> "SampledPath":
        t = uniform_grid(T, n)
        return cls(t, np.broadcast_to(np.asarray(f(t), dtype=float), t.shape).copy(), label)

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def n(self) -> int:
        return int(self.times.size)

    def __len__(self) -> int:
        return self.n

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        dt = np.diff(self.times)
        return bool(np.all(np.abs(dt - dt.mean()) <= rtol * dt.mean()))

    def index_of(self, t: float, rtol: float = 1e-12) -> int:
        """Grid index of time ``t``; raises if ``t`` is not a grid point."""
        k = int(np.searchsorted(self.times, t))
        tol = rtol * max(1.0, self.T)
        for j in (k - 1, k):
            if 0 <= j < self.n and abs(self.times[j] - t) <= tol:
                return j
        raise ValidationError(f"t={t!r} is not a grid point")

    def truncate(self, index: int) -> "SampledPath":
        """Restriction to ``[0, times[index]]``."""
        if index < 1:
            raise ValidationError("truncation needs at least one interval")
        return SampledPath(self.times[: index + 1], self.values[: index + 1], self.label)

    def subsample(self, step: int) -> "SampledPath":
        """Every ``step``-th grid point; ``step`` must divide ``n - 1``."""
        if step < 1 or (self.n - 1) % step:
            raise ValidationError(f"step {step} does not divide {self.n - 1} intervals")
        return SampledPath(self.times[::step], self.values[::step], self.label)

    def map(self, fn: Callable[[np.ndarray], np.ndarray], label: str = "") -> "SampledPath":
        return SampledPath(self.times, np.asarray(fn(self.values), dtype=float), label or self.label)

    def __add__(self, other: "SampledPath") -> "SampledPath":
        if not np.array_equal(self.times, other.times):
            raise ValidationError("paths live on different grids")
        return SampledPath(self.times, self.values + other.values, self.label)


# --------------------------------------------------------------------------
# process specifications


@dataclass(frozen=True)
class ProcessSpec:
    """What to simulate.

    ``kind`` is one of ``fbm``, ``brownian``, ``compound_poisson``,
    ``drifted`` or ``mixed``.  Use the classmethod constructors rather than
    filling the fields by hand.  ``drift`` is either a callable of ``t`` or a
    tuple of polynomial coefficients (constant term first); only the latter
    survives a JSON round trip.
    """

    kind: str
    T: float = 1.0
    n: int = 1025
    seed: int = 0
    hurst: float | None = None
    rate: float | None = None
    jump_dist: dict[str, Any] = field(default_factory=lambda: {"kind": "normal", "mean": 0.0, "std": 1.0})
    base: "ProcessSpec | None" = None
    drift: Any = None
    components: tuple["ProcessSpec", ...] = ()

    def __post_init__(self) -> None:
        self.validate()

    # constructors -----------------------------------------------------
    @classmethod
    def fbm(cls, hurst: float, T: float = 1.0, n: int = 1025, seed: int = 0) -> "ProcessSpec":
        return cls("fbm", T=T, n=n, seed=seed, hurst=hurst)

    @classmethod
    def brownian(cls, T: float = 1.0, n: int = 1025, seed: int = 0) -> "ProcessSpec":
        return cls("brownian", T=T, n=n, seed=seed)

    @classmethod
    def compound_poisson(
        cls, rate: float, jump_dist: dict[str, Any] | None = None, T: float = 1.0, n: int = 1025, seed: int = 0
    ) -> "ProcessSpec":
        kw: dict[str, Any] = {}
        if jump_dist is not None:
            kw["jump_dist"] = dict(jump_dist)
        return cls("compound_poisson", T=T, n=n, seed=seed, rate=rate, **kw)

    @classmethod
    def drifted(cls, base: "ProcessSpec", drift: Any) -> "ProcessSpec":
        if not callable(drift):
            drift = tuple(float(c) for c in drift)
        return cls("drifted", T=base.T, n=base.n, seed=base.seed, base=base, drift=drift)

    @classmethod
    def mixed(cls, components: Sequence["ProcessSpec"], seed: int = 0) -> "ProcessSpec":
        comps = tuple(components)
        if not comps:
            raise ValidationError("mixed process needs components")
        return cls("mixed", T=comps[0].T, n=comps[0].n, seed=seed, components=comps)

    def with_grid(self, n: int | None = None, seed: int | None = None) -> "ProcessSpec":
        """Same process on another grid size and/or seed (recursively)."""
        n = self.n if n is None else n
        seed = self.seed if seed is None else seed
        base = self.base.with_grid(n) if self.base is not None else None
        comps = tuple(c.with_grid(n) for c in self.components)
        return replace(self, n=n, seed=seed, base=base, components=comps)

    # validation --------------------------------------------------------
    def validate(self) -> None:
        if self.kind not in {"fbm", "brownian", "compound_poisson", "drifted", "mixed"}:
            raise ValidationError(f"unknown process kind {self.kind!r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValidationError(f"horizon must be positive, got {self.T}")
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"grid size must be an integer >= 2, got {self.n}")
        if self.kind == "fbm":
            if self.hurst is None or not 0.0 < self.hurst < 1.0:
                raise ValidationError(f"hurst must lie in (0, 1), got {self.hurst}")
        elif self.kind == "compound_poisson":
            if self.rate is None or not self.rate > 0:
                raise ValidationError(f"rate must be positive, got {self.rate}")
            _jump_sampler(self.jump_dist)
        elif self.kind == "drifted":
            if self.base is None or self.drift is None:
                raise ValidationError("drifted process needs base and drift")
            if self.base.T != self.T or self.base.n != self.n:
                raise ValidationError("drifted base must share T and n")
        elif self.kind == "mixed":
            if len(self.components) < 2:
                raise ValidationError("mixed process needs at least two components")
            for c in self.components:
                if c.T != self.T or c.n != self.n:
                    raise ValidationError("mixed components must share T and n")

    # JSON ---------------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind, "T": self.T, "n": self.n, "seed": self.seed}
        if self.kind == "fbm":
            d["hurst"] = self.hurst
        elif self.kind == "compound_poisson":
            d["rate"] = self.rate
            d["jump_dist"] = dict(self.jump_dist)
        elif self.kind == "drifted":
            if callable(self.drift):
                raise ValidationError("callable drift cannot be serialised; use coefficients")
            d["base"] = self.base.to_dict()  # type: ignore[union-attr]
            d["drift"] = {"poly": list(self.drift)}
        elif self.kind == "mixed":
            d["components"] = [c.to_dict() for c in self.components]
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ProcessSpec":
        kind = d["kind"]
        T = float(d.get("T", 1.0))
        n = int(d.get("n", 1025))
        seed = int(d.get("seed", 0))
        if kind == "fbm":
            return cls.fbm(float(d["hurst"]), T, n, seed)
        if kind == "brownian":
            return cls.brownian(T, n, seed)
        if kind == "compound_poisson":
            return cls.compound_poisson(float(d["rate"]), d.get("jump_dist"), T, n, seed)
        if kind == "drifted":
            drift = d["drift"]
            coeffs = drift["poly"] if isinstance(drift, dict) else drift
            return cls.drifted(cls.from_dict(d["base"]), coeffs)
        if kind == "mixed":
            return cls.mixed([cls.from_dict(c) for c in d["components"]], seed=seed)
        raise ValidationError(f"unknown process kind {kind!r}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProcessSpec":
        return cls.from_dict(json.loads(text))


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & SEED_MASK))


def _jump_sampler(dist: dict[str, Any]) -> Callable[[np.random.Generator, int], np.ndarray]:
    kind = dist.get("kind", "normal")
    if kind == "normal":
        mean, std = float(dist.get("mean", 0.0)), float(dist.get("std", 1.0))
        return lambda rng, k: rng.normal(mean, std, k)
    if kind == "constant":
        value = float(dist["value"])
        return lambda rng, k: np.full(k, value)
    if kind == "exponential":
        scale = float(dist.get("scale", 1.0))
        return lambda rng, k: rng.exponential(scale, k)
    raise ValidationError(f"unknown jump distribution {kind!r}")


# --------------------------------------------------------------------------
# fractional Gaussian noise


def _fgn_autocov(hurst: float, m: int) -> np.ndarray:
    k = np.arange(m + 1, dtype=float)
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2 * k**h2 + np.abs(k - 1) ** h2)


def fgn_circulant(hurst: float, m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` unit-step fractional Gaussian noise samples.

    Davies-Harte circulant embedding of size ``2m``; if the embedding has an
    eigenvalue below ``-1e-10`` the exact Cholesky factor of the Toeplitz
    covariance is used instead.
    """
    r = _fgn_autocov(hurst, m)
    row = np.concatenate([r[: m + 1], r[m - 1 : 0 : -1]])
    lam = np.fft.fft(row).real
    if lam.min() < -EIGEN_TOL:
        if m > CHOLESKY_MAX:
            raise GenerationError(f"circulant embedding not PSD and m={m} too large for Cholesky")
        chol = linalg.cholesky(linalg.toeplitz(r[:m]), lower=True)
        return chol @ rng.standard_normal(m)
    lam = np.clip(lam, 0.0, None)
    size = row.size
    xi = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    y = np.fft.fft(np.sqrt(lam / size) * xi)
    return y.real[:m]


def compound_poisson_jumps(spec: ProcessSpec) -> tuple[np.ndarray, np.ndarray]:
    """Jump times (sorted) and sizes of a compound Poisson spec."""
    if spec.kind != "compound_poisson":
        raise ValidationError("not a compound Poisson spec")
    rng = _rng(spec.seed)
    count = rng.poisson(spec.rate * spec.T)
    times = np.sort(rng.uniform(0.0, spec.T, count))
    sizes = _jump_sampler(spec.jump_dist)(rng, count)
    return times, sizes


def _eval_drift(drift: Any, t: np.ndarray) -> np.ndarray:
    if callable(drift):
        return np.broadcast_to(np.asarray(drift(t), dtype=float), t.shape)
    return np.polynomial.polynomial.polyval(t, np.asarray(drift, dtype=float))


def _values(spec: ProcessSpec, t: np.ndarray) -> np.ndarray:
    m = spec.n - 1
    if spec.kind in ("fbm", "brownian"):
        hurst = 0.5 if spec.kind == "brownian" else float(spec.hurst)  # type: ignore[arg-type]
        noise = fgn_circulant(hurst, m, _rng(spec.seed))
        dt = spec.T / m
        return np.concatenate([[0.0], np.cumsum(noise)]) * dt**hurst
    if spec.kind == "compound_poisson":
        jt, js = compound_poisson_jumps(spec)
        # value at a grid point is the left limit: only jumps strictly before t count
        idx = np.searchsorted(jt, t, side="left")
        return np.concatenate([[0.0], np.cumsum(js)])[idx]
    if spec.kind == "drifted":
        base = spec.base.with_grid(seed=spec.seed) if spec.base is not None else None
        return _values(base, t) + _eval_drift(spec.drift, t)  # type: ignore[arg-type]
    if spec.kind == "mixed":
        return np.sum([c for c in _component_values(spec, t)], axis=0)
    raise ValidationError(f"unknown process kind {spec.kind!r}")


def _component_values(spec: ProcessSpec, t: np.ndarray) -> list[np.ndarray]:
    return [_values(c.with_grid(seed=spec.seed ^ i), t) for i, c in enumerate(spec.components)]


def generate(spec: ProcessSpec) -> SampledPath:
    """Simulate ``spec`` on a uniform grid of ``spec.n`` points.

    Mixed processes are the pointwise sum of components simulated with seeds
    ``seed ^ index``; a drifted process reuses its own seed for the base.
    """
    spec.validate()
    t = uniform_grid(spec.T, spec.n)
    with np.errstate(all="ignore"):
        v = _values(spec, t)
    if not np.all(np.isfinite(v)):
        raise GenerationError(f"non-finite values simulating {spec.kind}")
    return SampledPath(t, v, label=spec.kind)


def generate_components(spec: ProcessSpec) -> list[SampledPath]:
    """The individual summands of a mixed spec, as used by :func:`generate`."""
    if spec.kind != "mixed":
        raise ValidationError("components are only defined for mixed specs")
    t = uniform_grid(spec.T, spec.n)
    return [
        SampledPath(t, v, label=c.kind) for c, v in zip(spec.components, _component_values(spec, t))
    ]


# --------------------------------------------------------------------------
# density assumption and Hoelder exponent


@dataclass(frozen=True)
class VarianceFunction:
    """Variance ``V(t)`` of a centred Gaussian process with ``V(t) >= c t^(2b)``."""

    V: Callable[[float], float]
    lower_exponent: float
    lower_constant: float = 1.0

    def __post_init__(self) -> None:
        if not self.lower_constant > 0:
            raise ValidationError("lower_constant must be positive")


def check_density_assumption(vf: VarianceFunction, T: float = 1.0, grid: int = 257) -> float:
    """L1 norm over ``[0, T]`` of the sup-density bound ``(2 pi V(t))^(-1/2)``.

    A finite return value certifies that a centred Gaussian process with
    variance ``V`` has densities dominated by an integrable function of time.
    """
    if vf.lower_exponent >= 1.0:
        raise AssumptionViolated(
            f"lower exponent {vf.lower_exponent} >= 1: sup-density bound is not integrable at 0"
        )
    ts = np.linspace(0.0, T, grid)[1:]
    vs = np.array([vf.V(float(s)) for s in ts])
    lower = vf.lower_constant * ts ** (2 * vf.lower_exponent)
    if np.any(vs < lower * (1 - 1e-12)):
        bad = float(ts[np.argmax(vs < lower * (1 - 1e-12))])
        raise AssumptionViolated(f"V(t) < c t^(2b) at t={bad}")

    def integrand(s: float) -> float:
        return 1.0 / math.sqrt(2.0 * math.pi * vf.V(s))

    value, err = integrate.quad(integrand, 0.0, T, limit=500, epsabs=1e-13, epsrel=1e-11)
    if not math.isfinite(value) or err > 1e-8 * max(1.0, abs(value)):
        raise NumericError(f"density bound quadrature did not converge (value={value}, err={err})")
    return value


def holder_estimate(path: SampledPath) -> tuple[float, float]:
    """Empirical Hoelder exponent and constant of a path.

    Fits ``log max|X(t+d) - X(t)|`` against ``log d`` over dyadic lags up to
    1/64 of the path length (at least two lags); longer lags are dominated
    by the few blocks that fit and bias the slope downwards.  Returns ``(1.0, 0.0)`` for constant paths.
    """
    if path.n < 16:
        raise ValidationError("holder_estimate needs at least 16 points")
    v = path.values
    h = path.T / (path.n - 1)
    lags, incs = [], []
    k = 1
    while k <= max((path.n - 1) // 64, 2):
        incs.append(float(np.max(np.abs(v[k:] - v[:-k]))))
        lags.append(k * h)
        k *= 2
    incs_a = np.asarray(incs)
    if np.all(incs_a == 0.0):
        return 1.0, 0.0
    keep = incs_a > 0
    if keep.sum() < 2:
        return 1.0, 0.0
    slope, intercept = np.polyfit(np.log(np.asarray(lags)[keep]), np.log(incs_a[keep]), 1)
    return float(np.clip(slope, 0.0, 1.0)), float(math.exp(intercept))


# --------------------------------------------------------------------------
# CSV I/O


def write_csv(path: SampledPath, dest: str | Path | io.TextIOBase) -> None:
    """Write ``t,value`` rows with round-trip precision."""
    lines = ["t,value"]
    lines.extend(f"{t:.17g},{v:.17g}" for t, v in zip(path.times, path.values))
    text = "\n".join(lines) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    else:
        dest.write(text)


def read_csv(src: str | Path, label: str = "") -> SampledPath:
    with open(src, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["t", "value"]:
            raise ValidationError(f"{src}: expected header 't,value'")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    if not rows:
        raise ValidationError(f"{src}: no data rows")
    arr = np.asarray(rows)
    return SampledPath(arr[:, 0], arr[:, 1], label or Path(src).stem)
