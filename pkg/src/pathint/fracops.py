"""Fractional integrals, Weyl derivatives and fractional Besov norms of sampled functions.

All operators act on a reconstruction of the samples (piecewise linear, or
piecewise constant taking the left-endpoint value on each cell) and
integrate it against the singular kernel exactly on every segment.

Conventions
-----------
* ``frac_deriv_left`` at ``t_0 = 0`` copies the value at ``t_1``.
* With the constant reconstruction, ``frac_deriv_left`` at ``t_k`` is the
  left limit, so a jump located exactly at ``t_k`` is not seen there.
* ``frac_deriv_right(g, beta, t)`` returns the order ``1 - beta`` operator
  applied to ``g(.) - g(t-)``, with the sign fixed so that
  ``int_0^t D^beta_{0+} f * D^{1-beta}_{t-} g_{t-} ds`` reproduces the
  Riemann-Stieltjes integral for smooth pairs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels as K
from .errors import NumericError, ValidationError
from .paths import SampledPath

__all__ = [
    "FracOrder",
    "Reconstruction",
    "NORM_CAP",
    "frac_integral_left",
    "frac_deriv_left",
    "frac_deriv_right",
    "left_derivative_atoms",
    "besov_norm_w1",
    "besov_norm_w2",
    "grr_check",
]

# Norms beyond this are reported as +inf.
NORM_CAP = 1e12


@dataclass(frozen=True)
class FracOrder:
    beta: float

    def __post_init__(self) -> None:
        if not 0.0 < float(self.beta) < 1.0:
            raise ValidationError(f"fractional order must lie in (0, 1), got {self.beta}")

    def __float__(self) -> float:
        return float(self.beta)


class Reconstruction(str, enum.Enum):
    PIECEWISE_LINEAR = "piecewise_linear"
    PIECEWISE_CONSTANT_LEFT = "piecewise_constant_left"

    @classmethod
    def parse(cls, value: "Reconstruction | str") -> "Reconstruction":
        if isinstance(value, cls):
            return value
        aliases = {"linear": cls.PIECEWISE_LINEAR, "const": cls.PIECEWISE_CONSTANT_LEFT,
                   "constant": cls.PIECEWISE_CONSTANT_LEFT}
        if value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError:
            raise ValidationError(f"unknown reconstruction {value!r}") from None

    @property
    def linear(self) -> bool:
        return self is Reconstruction.PIECEWISE_LINEAR


OrderLike = Union[FracOrder, float]
ReconLike = Union[Reconstruction, str]

LINEAR = Reconstruction.PIECEWISE_LINEAR
CONSTANT = Reconstruction.PIECEWISE_CONSTANT_LEFT


def _beta(order: OrderLike) -> float:
    return float(order if isinstance(order, FracOrder) else FracOrder(float(order)))


def _capped(value: float) -> float:
    if math.isnan(value):
        raise NumericError("norm evaluation produced NaN")
    return math.inf if value > NORM_CAP else value


def frac_integral_left(f: SampledPath, order: OrderLike, recon: ReconLike = LINEAR) -> SampledPath:
    """Left Riemann-Liouville integral ``I^beta_{0+} f`` on the grid of ``f``."""
    beta = _beta(order)
    out = K.rl_integral_left(f.times, f.values, beta, Reconstruction.parse(recon).linear)
    return SampledPath(f.times, out, f"I^{beta:g} {f.label}".strip())


def frac_deriv_left(f: SampledPath, order: OrderLike, recon: ReconLike = LINEAR) -> SampledPath:
    """Weyl-form left derivative ``D^beta_{0+} f`` on the grid of ``f``."""
    beta = _beta(order)
    out = K.weyl_left(f.times, f.values, beta, Reconstruction.parse(recon).linear)
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite left fractional derivative")
    return SampledPath(f.times, out, f"D^{beta:g} {f.label}".strip())


def frac_deriv_right(g: SampledPath, beta: OrderLike, t: float | None = None,
                     recon: ReconLike = LINEAR) -> SampledPath:
    """``(D^{1-beta}_{t-} g_{t-})(s)`` for grid points ``s <= t``; zero at ``s = t``."""
    b = _beta(beta)
    k = g.n - 1 if t is None else g.index_of(t)
    if k < 1:
        raise ValidationError("right derivative needs t > 0")
    out = K.weyl_right(g.times, g.values, k, b, Reconstruction.parse(recon).linear)
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite right fractional derivative")
    return SampledPath(g.times[: k + 1], out, f"D^{1 - b:g}_t- {g.label}".strip())


def left_derivative_atoms(f: SampledPath, beta: OrderLike, recon: ReconLike = LINEAR):
    """Decompose ``D^beta_{0+}`` of the reconstruction into power-law atoms.

    Returns ``[(coef, exponent), ...]`` pairs where ``coef`` is an array over
    grid cells ``j`` and the derivative equals
    ``sum_j coef[j] * (s - t_j)_+^exponent``.  A step reconstruction is a
    sum of Heaviside functions and a linear one a constant plus ramps;
    their derivatives are the atoms.
    """
    b = _beta(beta)
    v = f.values
    m = f.n - 1
    if Reconstruction.parse(recon).linear:
        jumps = np.zeros(m)
        jumps[0] = v[0] / math.gamma(1.0 - b)
        slopes = np.diff(v) / np.diff(f.times)
        kinks = np.diff(np.concatenate([[0.0], slopes])) / math.gamma(2.0 - b)
        return [(jumps, -b), (kinks, 1.0 - b)]
    steps = np.diff(np.concatenate([[0.0], v[:m]])) / math.gamma(1.0 - b)
    return [(steps, -b)]


def besov_norm_w1(f: SampledPath, beta: OrderLike, recon: ReconLike = LINEAR) -> float:
    """Discrete ``||f||_{1,beta}``: sup over grid pairs of quotient plus tail integral."""
    b = _beta(beta)
    return _capped(K.besov_w1(f.times, f.values, b, Reconstruction.parse(recon).linear))


def besov_w2_terms(f: SampledPath, beta: OrderLike, recon: ReconLike = LINEAR) -> tuple[float, float]:
    """The two summands of ``||f||_{2,beta}``: weighted L1 part and double-integral part."""
    b = _beta(beta)
    rec = Reconstruction.parse(recon)
    t, v = f.times, f.values
    first = K.weighted_abs_integral(t, v, b, rec.linear)
    uniform = f.is_uniform()
    h = f.T / (f.n - 1)
    if rec.linear:
        table = (K.uniform_kernel_table(f.n, h, -1.0 - b, K.GL4_X) if uniform
                 else np.zeros((1, 1, 1)))
        second = K.linear_pair_sum(t, v, 1.0, -1.0 - b, K.GL4_X, K.GL4_W, K.GL8_X, K.GL8_W,
                                   table, uniform)
    else:
        kern = K.uniform_cell_kernel(f.n, h, b) if uniform else np.zeros(1)
        second = K.const_pair_sum(t, v, b, kern, uniform)
    return float(first), float(second)


def besov_norm_w2(f: SampledPath, beta: OrderLike, recon: ReconLike = LINEAR) -> float:
    """Discrete ``||f||_{2,beta}`` by segment-exact double quadrature."""
    first, second = besov_w2_terms(f, beta, recon)
    return _capped(first + second)


def grr_check(f: SampledPath, p: float, alpha: float) -> tuple[float, float]:
    """Both sides of the Garsia-Rodemich-Rumsey inequality on the linear reconstruction.

    Returns ``(lhs_max_ratio, rhs_integral)`` where the first is
    ``max |f(t)-f(s)|^p / (T^(alpha p - 1) |t-s|^(alpha p - 1))`` over grid
    pairs and the second is the full-square double integral
    ``int int |f(x)-f(y)|^p / |x-y|^(alpha p + 1)``.  Their ratio is an
    empirical lower bound for the inequality's constant.
    """
    if p < 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    if alpha * p <= 1:
        raise ValidationError(f"need alpha * p > 1, got alpha={alpha}, p={p}")
    expo = alpha * p - 1.0
    lhs = K.max_difference_ratio(f.times, f.values, float(p), expo) / f.T**expo
    kexp = -(alpha * p + 1.0)
    uniform = f.is_uniform()
    h = f.T / (f.n - 1)
    table = K.uniform_kernel_table(f.n, h, kexp, K.GL4_X) if uniform else np.zeros((1, 1, 1))
    half = K.linear_pair_sum(f.times, f.values, float(p), kexp, K.GL4_X, K.GL4_W, K.GL8_X, K.GL8_W,
                             table, uniform)
    rhs = 2.0 * half
    if rhs == 0.0 and lhs > 0.0:
        raise NumericError("GRR integral vanishes for a non-constant path")
    return float(lhs), float(rhs)
