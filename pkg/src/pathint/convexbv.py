"""Convex functions through their second-derivative measures, and BV functions as differences.

A left derivative ``f'_-`` of a convex function is stored as a constant plus
a positive measure ``mu = f''`` made of atoms and a piecewise-constant
density; its value is ``C + 1/2 int sgn(x - a) mu(da)`` with ``sgn(0) = -1``,
which makes it left-continuous.  A :class:`BVFunction` is the difference of
two such non-decreasing parts.  Singular-continuous measures are not
representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable

import numpy as np
from scipy import integrate

from .errors import ValidationError

__all__ = [
    "RadonMeasure",
    "MonotonePart",
    "BVFunction",
    "Mollifier",
    "MollifiedFunction",
    "LiminfReport",
    "evaluate_left_derivative",
    "truncate_to_compact",
    "truncate_2d",
    "mollify",
    "liminf_measure_bound_check",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _as_array(x: Any) -> np.ndarray:
    return np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class RadonMeasure:
    """Positive measure on ``[-K, K]``: weighted atoms plus a step density."""

    atom_locs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    atom_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    breaks: np.ndarray = field(default_factory=lambda: np.zeros(0))
    levels: np.ndarray = field(default_factory=lambda: np.zeros(0))
    support: float = 1.0

    def __post_init__(self) -> None:
        locs = _as_array(self.atom_locs).ravel()
        w = _as_array(self.atom_weights).ravel()
        br = _as_array(self.breaks).ravel()
        lv = _as_array(self.levels).ravel()
        if locs.size != w.size:
            raise ValidationError("atom locations and weights differ in length")
        if np.any(w <= 0):
            raise ValidationError("atom weights must be positive")
        if lv.size and br.size != lv.size + 1:
            raise ValidationError("density needs len(breaks) == len(levels) + 1")
        if lv.size == 0 and br.size not in (0,):
            br = np.zeros(0)
        if np.any(lv < 0):
            raise ValidationError("density levels must be nonnegative")
        if br.size and np.any(np.diff(br) <= 0):
            raise ValidationError("density breaks must be increasing")
        K = float(self.support)
        if not K > 0:
            raise ValidationError("support half-width must be positive")
        if np.any(np.abs(locs) > K) or (br.size and (br[0] < -K or br[-1] > K)):
            raise ValidationError("measure mass outside its support [-K, K]")
        order = np.argsort(locs, kind="stable")
        object.__setattr__(self, "atom_locs", locs[order])
        object.__setattr__(self, "atom_weights", w[order])
        object.__setattr__(self, "breaks", br)
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "support", K)

    # constructors ------------------------------------------------------
    @classmethod
    def zero(cls, support: float = 1.0) -> "RadonMeasure":
        return cls(support=support)

    @classmethod
    def atom(cls, a: float, w: float = 1.0, support: float | None = None) -> "RadonMeasure":
        return cls([a], [w], support=support if support is not None else max(1.0, abs(a)))

    @classmethod
    def uniform(cls, lo: float, hi: float, level: float = 1.0, support: float | None = None) -> "RadonMeasure":
        K = support if support is not None else max(abs(lo), abs(hi))
        return cls(breaks=[lo, hi], levels=[level], support=K)

    # basic quantities --------------------------------------------------
    @cached_property
    def _cum_density(self) -> np.ndarray:
        if self.levels.size == 0:
            return np.zeros(1)
        return np.concatenate([[0.0], np.cumsum(self.levels * np.diff(self.breaks))])

    @property
    def total_mass(self) -> float:
        return float(self.atom_weights.sum() + self._cum_density[-1])

    def density_cdf(self, x: Any) -> np.ndarray:
        """Density mass on ``(-inf, x]`` (continuous in ``x``)."""
        x = _as_array(x)
        if self.levels.size == 0:
            return np.zeros_like(x)
        return np.interp(x, self.breaks, self._cum_density)

    def density(self, x: Any) -> np.ndarray:
        x = _as_array(x)
        if self.levels.size == 0:
            return np.zeros_like(x)
        idx = np.searchsorted(self.breaks, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.levels.size)
        return np.where(inside, self.levels[np.clip(idx, 0, self.levels.size - 1)], 0.0)

    def mass_below(self, x: Any) -> np.ndarray:
        """``mu((-inf, x))``; atoms at ``x`` are excluded."""
        x = _as_array(x)
        cw = np.concatenate([[0.0], np.cumsum(self.atom_weights)])
        k = np.searchsorted(self.atom_locs, x, side="left")
        return cw[k] + self.density_cdf(x)

    def mass_open(self, lo: float, hi: float) -> float:
        """``mu((lo, hi))``."""
        if hi <= lo:
            return 0.0
        inside = (self.atom_locs > lo) & (self.atom_locs < hi)
        dens = float(self.density_cdf(hi) - self.density_cdf(lo))
        return float(self.atom_weights[inside].sum()) + dens

    def integrate(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        """``int g d mu``; density pieces by 16-point Gauss-Legendre."""
        total = float(np.sum(self.atom_weights * _as_array(g(self.atom_locs)))) if self.atom_locs.size else 0.0
        for lo, hi, lev in zip(self.breaks[:-1], self.breaks[1:], self.levels):
            if lev == 0:
                continue
            x = 0.5 * (hi - lo) * (_GL_X + 1) + lo
            total += lev * 0.5 * (hi - lo) * float(np.dot(_GL_W, _as_array(g(x))))
        return total

    def restrict(self, lo: float, hi: float) -> "RadonMeasure":
        """Restriction to the closed interval ``[lo, hi]``."""
        keep = (self.atom_locs >= lo) & (self.atom_locs <= hi)
        br, lv = self.breaks, self.levels
        if lv.size:
            nb = np.clip(br, lo, hi)
            widths = np.diff(nb)
            mask = widths > 0
            if mask.any():
                starts = nb[:-1][mask]
                ends = nb[1:][mask]
                # clipping only empties end pieces, so the rest stay contiguous
                br = np.concatenate([starts, ends[-1:]])
                lv = lv[mask]
            else:
                br, lv = np.zeros(0), np.zeros(0)
        K = min(self.support, max(abs(lo), abs(hi)))
        return RadonMeasure(self.atom_locs[keep], self.atom_weights[keep], br, lv, support=K)

    # JSON ------------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {
            "atoms": [{"a": float(a), "w": float(w)} for a, w in zip(self.atom_locs, self.atom_weights)],
            "density": {"breaks": self.breaks.tolist(), "levels": self.levels.tolist()},
            "support": [-self.support, self.support],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RadonMeasure":
        atoms = d.get("atoms", [])
        dens = d.get("density", {}) or {}
        sup = d.get("support", [-1.0, 1.0])
        K = float(max(abs(sup[0]), abs(sup[1]))) if isinstance(sup, (list, tuple)) else float(sup)
        return cls(
            [a["a"] for a in atoms],
            [a["w"] for a in atoms],
            dens.get("breaks", []),
            dens.get("levels", []),
            support=K,
        )


@dataclass(frozen=True)
class MonotonePart:
    """``x -> C + 1/2 int sgn(x - a) mu(da)``, a non-decreasing left-continuous function."""

    constant: float
    measure: RadonMeasure

    def __call__(self, x: Any) -> np.ndarray:
        return self.constant + self.measure.mass_below(x) - 0.5 * self.measure.total_mass

    def antiderivative(self, x: Any) -> np.ndarray:
        """``int_0^x`` of this part, exact."""
        x = _as_array(x)
        mu = self.measure
        out = self.constant * x
        if mu.atom_locs.size:
            a = mu.atom_locs
            out = out + 0.5 * np.sum(
                mu.atom_weights * (np.abs(x[..., None] - a) - np.abs(a)), axis=-1
            )
        for lo, hi, lev in zip(mu.breaks[:-1], mu.breaks[1:], mu.levels):
            if lev == 0:
                continue
            dx_lo, dx_hi = x - lo, x - hi
            abs_x = 0.5 * (dx_lo * np.abs(dx_lo) - dx_hi * np.abs(dx_hi))
            abs_0 = 0.5 * (-lo * abs(lo) + hi * abs(hi))
            out = out + 0.5 * lev * (abs_x - abs_0)
        return out

    def to_dict(self) -> dict[str, Any]:
        d = self.measure.to_dict()
        d["constant"] = float(self.constant)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MonotonePart":
        return cls(float(d.get("constant", 0.0)), RadonMeasure.from_dict(d))


@dataclass(frozen=True)
class BVFunction:
    """Locally BV function ``positive - negative`` of two non-decreasing parts.

    For a convex ``f`` with compactly supported ``f''``, ``BVFunction.convex(mu, C)``
    represents ``f'_-``; :meth:`antiderivative` then returns
    ``f(x) = int_0^x f'_-``.
    """

    positive: MonotonePart
    negative: MonotonePart = field(default_factory=lambda: MonotonePart(0.0, RadonMeasure.zero()))

    @classmethod
    def convex(cls, measure: RadonMeasure, constant: float = 0.0) -> "BVFunction":
        return cls(MonotonePart(constant, measure))

    @classmethod
    def indicator(cls, a: float = 0.0) -> "BVFunction":
        """``1_{x > a}``, the left derivative of ``(x - a)^+``."""
        return cls.convex(RadonMeasure.atom(a), 0.5)

    @classmethod
    def constant_fn(cls, c: float) -> "BVFunction":
        return cls.convex(RadonMeasure.zero(), c)

    def __call__(self, x: Any) -> np.ndarray:
        return self.positive(x) - self.negative(x)

    def antiderivative(self, x: Any) -> np.ndarray:
        return self.positive.antiderivative(x) - self.negative.antiderivative(x)

    @property
    def support(self) -> float:
        return max(self.positive.measure.support, self.negative.measure.support)

    def signed_integrate(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        """``int g d(mu+ - mu-)``."""
        return self.positive.measure.integrate(g) - self.negative.measure.integrate(g)

    def to_dict(self) -> dict[str, Any]:
        return {"positive": self.positive.to_dict(), "negative": self.negative.to_dict()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BVFunction":
        if "positive" not in d:
            return cls(MonotonePart.from_dict(d))
        return cls(MonotonePart.from_dict(d["positive"]), MonotonePart.from_dict(d["negative"]))


def evaluate_left_derivative(f: BVFunction, x: Any) -> np.ndarray:
    """``C + 1/2 int sgn(x - a) mu(da)`` per part; atoms at ``x`` count with sign -1."""
    return f(x)


def _truncate_part(part: MonotonePart, n: float) -> MonotonePart:
    mu = part.measure
    below = float(mu.mass_below(-n))
    above = mu.total_mass - float(mu.mass_below(n)) - float(mu.atom_weights[mu.atom_locs == n].sum())
    if below == 0.0 and above == 0.0 and mu.support <= n:
        return part
    return MonotonePart(part.constant + 0.5 * below - 0.5 * above, mu.restrict(-n, n))


def truncate_to_compact(f: BVFunction, n: float) -> BVFunction:
    """Restrict both measures to ``[-n, n]`` keeping ``f`` unchanged on ``(-n, n]``."""
    if not n > 0:
        raise ValidationError("truncation level must be positive")
    return BVFunction(_truncate_part(f.positive, n), _truncate_part(f.negative, n))


def truncate_2d(f: Callable[[Any, Any], Any], n: float) -> Callable[[Any, Any], Any]:
    """Two-variable truncation: freeze each argument at ``+-n`` outside ``[-n, n]``."""
    if not n > 0:
        raise ValidationError("truncation level must be positive")

    def fn(x: Any, y: Any) -> Any:
        return f(np.clip(x, -n, n), np.clip(y, -n, n))

    return fn


# ---------------------------------------------------------------------------
# mollification


def _bump(z: np.ndarray) -> np.ndarray:
    y = 2.0 * np.asarray(z, dtype=float) + 1.0
    out = np.zeros_like(y)
    inside = np.abs(y) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - y[inside] ** 2))
    return out


@dataclass(frozen=True)
class Mollifier:
    """Smooth unit-mass bump on ``[-1, 0]`` applied at scale ``n``."""

    n: int = 1
    nodes: int = 513

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError("mollifier scale must be a positive integer")
        if self.nodes < 256:
            raise ValidationError("mollifier quadrature needs at least 256 nodes")

    @cached_property
    def _norm(self) -> float:
        val, _ = integrate.quad(lambda z: float(_bump(np.array([z]))[0]), -1.0, 0.0,
                                epsabs=1e-15, epsrel=1e-13, limit=200)
        return val

    def profile(self, z: Any) -> np.ndarray:
        return _bump(np.asarray(z, dtype=float)) / self._norm

    @cached_property
    def _cdf_table(self) -> tuple[np.ndarray, np.ndarray]:
        z = np.linspace(-1.0, 0.0, 1 << 16 | 1)
        c = integrate.cumulative_trapezoid(self.profile(z), z, initial=0.0)
        return z, c / c[-1]

    def cdf(self, z: Any) -> np.ndarray:
        zt, ct = self._cdf_table
        return np.interp(np.asarray(z, dtype=float), zt, ct, left=0.0, right=1.0)

    @cached_property
    def _cdf_integral_table(self) -> np.ndarray:
        zt, ct = self._cdf_table
        return integrate.cumulative_trapezoid(ct, zt, initial=0.0)

    def sign_integral(self, z: Any) -> np.ndarray:
        """``int_{-1}^z (1 - 2 Phi(u)) du`` for ``z`` in ``[-1, 0]``, ``Phi`` the CDF."""
        z = np.clip(np.asarray(z, dtype=float), -1.0, 0.0)
        zt, _ = self._cdf_table
        return (z + 1.0) - 2.0 * np.interp(z, zt, self._cdf_integral_table)

    @cached_property
    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Trapezoid nodes on ``[-1, 0]`` and weights ``w_k * phi(z_k)`` summing to 1."""
        z = np.linspace(-1.0, 0.0, self.nodes)
        w = np.full(self.nodes, 1.0 / (self.nodes - 1))
        w[0] = w[-1] = 0.5 / (self.nodes - 1)
        pw = w * self.profile(z)
        return z, pw / pw.sum()

    def at_scale(self, n: int) -> "Mollifier":
        return Mollifier(n, self.nodes)


@dataclass(frozen=True)
class MollifiedFunction:
    """``f_n(x) = n int_{-inf}^0 f(x+y) phi(n y) dy`` with derivatives, ``f = int f'_-``."""

    f: BVFunction
    mollifier: Mollifier

    @property
    def n(self) -> int:
        return self.mollifier.n

    def __call__(self, x: Any) -> np.ndarray:
        z, pw = self.mollifier.quadrature
        x = _as_array(x)
        return np.tensordot(self.f.antiderivative(x[..., None] + z / self.n), pw, axes=([-1], [0]))

    def _d1_part(self, part: MonotonePart, x: np.ndarray) -> np.ndarray:
        mu = part.measure
        n = self.n
        out = np.full(x.shape, part.constant)
        if mu.atom_locs.size:
            sg = 1.0 - 2.0 * self.mollifier.cdf(n * (mu.atom_locs - x[..., None]))
            out = out + 0.5 * np.sum(mu.atom_weights * sg, axis=-1)
        if mu.levels.size:
            # density strictly left of the window counts +1, right of x counts -1
            left = mu.density_cdf(x - 1.0 / n)
            right = mu.total_mass - mu.atom_weights.sum() - mu.density_cdf(x)
            # the density is piecewise constant, so the window integral is exact per piece
            xe = x[..., None]
            lo = np.clip(mu.breaks[:-1], xe - 1.0 / n, xe)
            hi = np.clip(mu.breaks[1:], xe - 1.0 / n, xe)
            ms = self.mollifier
            window = mu.levels * (ms.sign_integral(n * (hi - xe)) - ms.sign_integral(n * (lo - xe)))
            out = out + 0.5 * (left - right + np.sum(window, axis=-1) / n)
        return out

    def d1(self, x: Any) -> np.ndarray:
        """``f'_n(x)``; for convex ``f`` non-decreasing in ``n`` and ``<= f'_-(x)``."""
        x = _as_array(x)
        return self._d1_part(self.f.positive, x) - self._d1_part(self.f.negative, x)

    def _d2_part(self, part: MonotonePart, x: np.ndarray) -> np.ndarray:
        mu = part.measure
        n = self.n
        out = np.zeros(x.shape)
        if mu.atom_locs.size:
            out = out + n * np.sum(mu.atom_weights * self.mollifier.profile(n * (mu.atom_locs - x[..., None])), axis=-1)
        if mu.levels.size:
            z, pw = self.mollifier.quadrature
            out = out + np.tensordot(mu.density(x[..., None] + z / n), pw, axes=([-1], [0]))
        return out

    def d2(self, x: Any) -> np.ndarray:
        """``f''_n(x) = n int phi(n (a - x)) mu(da)``."""
        x = _as_array(x)
        return self._d2_part(self.f.positive, x) - self._d2_part(self.f.negative, x)

    def pair_with(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        """``int g(x) f''_n(x) dx``, computed as ``int E[g(a - Z/n)] mu(da)``."""
        z, pw = self.mollifier.quadrature

        def smoothed(a: np.ndarray) -> np.ndarray:
            a = _as_array(a)
            return np.tensordot(_as_array(g(a[..., None] - z / self.n)), pw, axes=([-1], [0]))

        return self.f.signed_integrate(smoothed)


def mollify(f: BVFunction, m: Mollifier) -> MollifiedFunction:
    """Smooth approximation of ``f = int_0^x f'_-`` at scale ``m.n``."""
    if not math.isfinite(f.support):
        raise ValidationError("mollification needs a compactly supported measure; truncate first")
    return MollifiedFunction(f, m)


@dataclass(frozen=True)
class LiminfReport:
    measure_side: float
    smooth_side: list[float]
    scales: list[int]
    liminf_proxy: float
    holds: bool


def liminf_measure_bound_check(measure: RadonMeasure, m: Mollifier, s_val: float, t_val: float,
                               n_list: list[int]) -> LiminfReport:
    """Compare ``mu((s, t))`` with ``int_s^t f''_n`` along the scales ``n_list``.

    ``int_s^t f''_n = f'_n(t) - f'_n(s)`` exactly.  The liminf proxy is the
    minimum over the second half of the scales; it must dominate the
    measure side up to ``1e-3`` times the total mass.
    """
    if not s_val < t_val:
        raise ValidationError("need s_val < t_val")
    if not n_list:
        raise ValidationError("need at least one scale")
    f = BVFunction.convex(measure)
    lhs = measure.mass_open(s_val, t_val)
    smooth = []
    for n in n_list:
        mf = mollify(f, m.at_scale(int(n)))
        d = mf.d1(np.array([s_val, t_val]))
        smooth.append(float(d[1] - d[0]))
    tail = smooth[len(smooth) // 2:]
    proxy = min(tail)
    holds = proxy >= lhs - 1e-3 * measure.total_mass
    return LiminfReport(lhs, smooth, [int(n) for n in n_list], proxy, bool(holds))
