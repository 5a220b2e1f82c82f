"""Pathwise integrals: the fractional-calculus (gLS) integral and Riemann-Stieltjes sums.

The gLS value is ``int_0^t D^beta_{0+} f(s) * D^{1-beta}_{t-} g_{t-}(s) ds``.
The left derivative of the reconstructed integrand is an exact sum of
power-law atoms ``c_j (s - t_j)_+^e``.  Each atom is integrated exactly
against the piecewise-linear interpolant of the right derivative
(product integration), which stays accurate when the integrand jumps.
On uniform grids the atom sums are correlations and are evaluated by FFT.
The constant part ``f(0)`` of the integrand is taken out and integrated
exactly, so constant integrands telescope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from . import _kernels as K
from .convexbv import BVFunction
from .errors import ConfigError, NumericError, RegimeError, ValidationError
from .fracops import (LINEAR, CONSTANT, Reconstruction, ReconLike, FracOrder, besov_norm_w2,
                      left_derivative_atoms)
from .paths import ProcessSpec, SampledPath, generate_components, holder_estimate
from .variation import TaggedPartition

__all__ = [
    "GlsConfig",
    "IntegralResult",
    "gls_integral",
    "right_derivative_values",
    "rs_sum",
    "integration_by_parts_residual",
    "compose_integrand",
    "multidim_rs_sum",
    "jump_decay_exponent",
    "mixed_integral",
]


@dataclass(frozen=True)
class GlsConfig:
    """Order and reconstructions for :func:`gls_integral`.

    ``holder_integrand`` is the Hölder estimate of the path driving the
    integrand and ``holder_integrator`` that of the integrator.  With both
    present, ``beta`` must lie strictly between ``1 - holder_integrator``
    and ``holder_integrand``; if ``beta`` is omitted it defaults to the
    midpoint of that window.
    """

    beta: float | None = None
    integrand_recon: Reconstruction = LINEAR
    integrator_recon: Reconstruction = LINEAR
    holder_integrand: float | None = None
    holder_integrator: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "integrand_recon", Reconstruction.parse(self.integrand_recon))
        object.__setattr__(self, "integrator_recon", Reconstruction.parse(self.integrator_recon))
        if self.beta is not None:
            FracOrder(float(self.beta))
        self.window()

    def window(self) -> tuple[float, float] | None:
        a, g = self.holder_integrand, self.holder_integrator
        if a is None or g is None:
            return None
        lo, hi = 1.0 - float(g), float(a)
        if not lo < hi:
            raise ConfigError(f"empty admissible window ({lo:.4g}, {hi:.4g}): "
                              "Hölder exponents must sum to more than 1")
        if self.beta is not None and not lo < float(self.beta) < hi:
            raise ConfigError(f"beta={self.beta} outside admissible window ({lo:.4g}, {hi:.4g})")
        return lo, hi

    @property
    def beta_used(self) -> float:
        if self.beta is not None:
            return float(self.beta)
        w = self.window()
        if w is None:
            raise ConfigError("beta is required when Hölder estimates are not supplied")
        return 0.5 * (w[0] + w[1])

    def with_estimates(self, integrand: float, integrator: float) -> "GlsConfig":
        return replace(self, holder_integrand=integrand, holder_integrator=integrator)


@dataclass(frozen=True)
class IntegralResult:
    value: float
    beta_used: float
    apriori_bound: float
    diagnostics: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": self.value, "beta_used": self.beta_used,
                "apriori_bound": self.apriori_bound, "diagnostics": dict(self.diagnostics)}


# ---------------------------------------------------------------------------
# uniform-grid fast paths


def _dpow(a: np.ndarray, h: float, q: float) -> np.ndarray:
    """Vectorised ``(a + h)^q - a^q`` for ``a >= 0``."""
    a = np.asarray(a, dtype=float)
    out = np.full(a.shape, h**q)
    pos = a > 0
    ap = a[pos]
    out[pos] = ap**q * np.expm1(q * np.log1p(h / ap))
    return out


def _corr(x: np.ndarray, ker: np.ndarray) -> np.ndarray:
    """``out[d] = sum_j ker[j] * x[j + d]`` for ``d = 0..len(x)-1`` (zero beyond the end)."""
    L = ker.size
    return fftconvolve(x, ker[::-1])[L - 1: L - 1 + x.size]


def _uniform_cell_weights(K_: int, e: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit-spacing weights ``P_d, Q_d`` for ``int_d^{d+1} x^e L(x) dx``."""
    d = np.arange(K_, dtype=float)
    s1 = _dpow(d, 1.0, e + 1.0) / (e + 1.0)
    q = np.empty(K_)
    near = d < 4
    s2 = _dpow(d[near], 1.0, e + 2.0) / (e + 2.0)
    q[near] = s2 - d[near] * s1[near]
    far = d[~near]
    if far.size:
        q[~near] = ((far[:, None] + K.GL8_X) ** e * K.GL8_X) @ K.GL8_W
    return s1 - q, q


def _weyl_right_uniform(g: np.ndarray, K_: int, h: float, beta: float, linear: bool) -> np.ndarray:
    """FFT evaluation of the right derivative on a uniform grid; same sums as the direct kernel."""
    gv = g[: K_ + 1]
    d = np.arange(K_, dtype=float)
    A = np.zeros(K_)
    A[1:] = -_dpow(d[1:] * h, h, beta - 1.0)
    gt = gv[K_] if linear else gv[K_ - 1]
    k = np.arange(K_)
    head = (gt - gv[:K_]) * ((K_ - k) * h) ** (beta - 1.0)
    csA = np.cumsum(A)
    acc = _corr(gv[:K_], A) - gv[:K_] * csA[K_ - 1 - k]
    if linear:
        m = np.diff(gv) / h
        B = (1.0 - beta) * _dpow(d * h, h, beta) / beta
        acc += _corr(m, B - d * h * A)
    out = np.zeros(K_ + 1)
    out[:K_] = (head + acc) / math.gamma(beta)
    return out


def right_derivative_values(g: SampledPath, beta: float, K_: int, recon: ReconLike = LINEAR,
                            method: str = "auto") -> np.ndarray:
    """Values of ``D^{1-beta}_{t-} g_{t-}`` at ``t_0..t_K`` (uniform grids use FFT)."""
    lin = Reconstruction.parse(recon).linear
    if _use_fft(g, method):
        return _weyl_right_uniform(g.values, K_, g.times[1] - g.times[0], beta, lin)
    return K.weyl_right(g.times, g.values, K_, beta, lin)


def _use_fft(path: SampledPath, method: str) -> bool:
    if method not in ("auto", "fft", "direct"):
        raise ValidationError(f"unknown method {method!r}")
    if method == "fft" and not path.is_uniform():
        raise ValidationError("the FFT method needs a uniform grid")
    return method == "fft" or (method == "auto" and path.is_uniform())


def _atoms_against(t: np.ndarray, R: np.ndarray, K_: int, atoms, uniform: bool) -> float:
    total = 0.0
    for coef, e in atoms:
        c = coef[:K_]
        nz = np.flatnonzero(c)
        if nz.size == 0:
            continue
        if uniform and nz.size > 8:
            h = t[1] - t[0]
            P, Q = _uniform_cell_weights(K_, e)
            SP = _corr(R[:K_], c)
            SQ = _corr(R[1: K_ + 1], c)
            total += h ** (e + 1.0) * float(P @ SP + Q @ SQ)
        else:
            total += K.atom_product(t, R, K_, np.ascontiguousarray(c), e, K.GL8_X, K.GL8_W)
    return total


def _check_shared(f: SampledPath, g: SampledPath) -> None:
    if f.n != g.n or not np.array_equal(f.times, g.times):
        raise ValidationError("integrand and integrator must share the same grid")


def gls_integral(f: SampledPath, g: SampledPath, cfg: GlsConfig, t: float | None = None,
                 bound: bool = True, method: str = "auto") -> IntegralResult:
    """``int_0^t f dg`` in the generalized Lebesgue-Stieltjes sense.

    ``bound=False`` skips the a-priori bound (its Besov norm is the costly
    part); ``method`` forces the FFT or the direct quadrature.
    """
    _check_shared(f, g)
    beta = cfg.beta_used
    FracOrder(beta)
    K_ = g.n - 1 if t is None else g.index_of(t)
    if K_ < 1:
        raise ValidationError("integration needs t > 0")
    fft = _use_fft(g, method)
    R = right_derivative_values(g, beta, K_, cfg.integrator_recon, "fft" if fft else "direct")
    if not np.all(np.isfinite(R)):
        raise NumericError("non-finite right fractional derivative")
    fk = f.truncate(K_)
    atoms = left_derivative_atoms(fk, beta, cfg.integrand_recon)
    # The constant part f(0) integrates to f(0) (g(t) - g(0)) exactly; only the
    # remainder goes through the quadrature.
    coef0, _ = atoms[0]
    coef0 = coef0.copy()
    coef0[0] = 0.0
    atoms[0] = (coef0, atoms[0][1])
    g_end = g.values[K_] if cfg.integrator_recon.linear else g.values[K_ - 1]
    value = fk.values[0] * (g_end - g.values[0]) + _atoms_against(g.times, R, K_, atoms, fft)
    if not math.isfinite(value):
        raise NumericError("non-finite gLS integral")
    sup_r = float(np.max(np.abs(R)))
    diagnostics = {"sup_right_derivative": sup_r, "n": float(K_ + 1)}
    apriori = math.inf
    if bound:
        w2 = besov_norm_w2(fk, beta, cfg.integrand_recon)
        diagnostics["besov_w2_integrand"] = w2
        apriori = sup_r * w2 if math.isfinite(w2) else math.inf
    return IntegralResult(float(value), beta, float(apriori), diagnostics)


# ---------------------------------------------------------------------------
# Riemann-Stieltjes sums


def rs_sum(f: SampledPath, g: SampledPath, part: TaggedPartition) -> float:
    """``sum_i f(tag_i) (g(t_i) - g(t_{i-1}))``."""
    _check_shared(f, g)
    part.check_grid(g)
    dg = np.diff(g.values[part.point_idx])
    return float(np.dot(f.values[part.tag_idx], dg))


def integration_by_parts_residual(x: SampledPath, y: SampledPath) -> float:
    """``|int X dY + int Y dX - (X_T Y_T - X_0 Y_0)|`` with forward sums on the full grid."""
    _check_shared(x, y)
    part = TaggedPartition.full(x)
    lhs = rs_sum(x, y, part) + rs_sum(y, x, part)
    rhs = x.values[-1] * y.values[-1] - x.values[0] * y.values[0]
    return float(abs(lhs - rhs))


def compose_integrand(fn: Callable[..., np.ndarray], paths: Sequence[SampledPath],
                      label: str = "") -> SampledPath:
    """Materialise ``fn(X^1_s, ..., X^k_s)`` on the shared grid."""
    if not paths:
        raise ValidationError("need at least one path")
    for p in paths[1:]:
        _check_shared(paths[0], p)
    vals = np.asarray(fn(*(p.values for p in paths)), dtype=float)
    vals = np.broadcast_to(vals, paths[0].times.shape).copy()
    return SampledPath(paths[0].times, vals, label)


def multidim_rs_sum(fn: Callable[..., np.ndarray], paths: Sequence[SampledPath], g: SampledPath,
                    part: TaggedPartition) -> float:
    """RS sum of ``fn(X^1, ..., X^k)`` against ``g``; ``fn`` must accept arrays."""
    return rs_sum(compose_integrand(fn, paths), g, part)


# ---------------------------------------------------------------------------
# mixed processes


def jump_decay_exponent(J: SampledPath, max_lag_fraction: float = 0.125) -> float:
    """Log-log slope of ``P(J_s != J_{s+lag})`` against the lag, over dyadic lags.

    Returns ``inf`` for a path without jumps.  Lags where the fraction
    exceeds one half are dropped because the fraction saturates there.
    """
    v = J.values
    h = J.T / (J.n - 1)
    lags, fracs = [], []
    k = 1
    while k <= max(1, int(max_lag_fraction * (J.n - 1))):
        fr = float(np.mean(v[k:] != v[:-k]))
        if 0.0 < fr <= 0.5:
            lags.append(k * h)
            fracs.append(fr)
        k *= 2
    if not fracs:
        return math.inf
    if len(fracs) == 1:
        return 1.0 if fracs[0] > 0 else math.inf
    slope, _ = np.polyfit(np.log(lags), np.log(fracs), 1)
    return float(slope)


def mixed_integral(f: BVFunction | Callable[[np.ndarray], np.ndarray], spec_mix: ProcessSpec,
                   cfg: GlsConfig, step: int = 1, bound: bool = True) -> IntegralResult:
    """``int_0^T f(Y) dX`` for ``Y = X + M + J``, integrated against the Hölder component ``X``.

    ``X`` is the non-jump component with the largest Hölder estimate, which
    must exceed one half.  Paths are generated at ``spec_mix.n`` and then
    subsampled by ``step``, so different steps see the same realisation.
    """
    if spec_mix.kind != "mixed":
        raise ValidationError("mixed_integral needs a mixed process spec")
    comps = [c.subsample(step) for c in generate_components(spec_mix)]
    kinds = [c.kind for c in spec_mix.components]
    cont = [i for i, k in enumerate(kinds) if k != "compound_poisson"]
    if not cont:
        raise RegimeError("mixed process has no continuous component")
    est = {i: holder_estimate(comps[i])[0] for i in cont}
    ix = max(cont, key=lambda i: est[i])
    alpha = est[ix]
    if alpha <= 0.5:
        raise RegimeError(f"no Hölder component with exponent above 1/2 (best {alpha:.3f})")
    X = comps[ix]
    Y = comps[0]
    for c in comps[1:]:
        Y = Y + c
    Z = Y.map(lambda y: f(y), label="f(Y)")
    if cfg.beta is None and cfg.window() is None:
        cfg = cfg.with_estimates(alpha, alpha)
    cfg = replace(cfg, integrand_recon=CONSTANT)
    res = gls_integral(Z, X, cfg, bound=bound)
    jumps = [comps[i] for i, k in enumerate(kinds) if k == "compound_poisson"]
    a2 = math.inf
    if jumps:
        J = jumps[0]
        for c in jumps[1:]:
            J = J + c
        a2 = jump_decay_exponent(J)
    diag = dict(res.diagnostics)
    diag.update({"holder_X": alpha, "jump_decay_alpha2": a2,
                 "jump_decay_ok": float(a2 > 1.0 - alpha)})
    return IntegralResult(res.value, res.beta_used, res.apriori_bound, diag)
