"""Verification experiments for the Itô-type formulas, the Besov embedding and RS convergence.

Each experiment simulates its driving path once per seed on the finest
dyadic grid and subsamples it for coarser grids, so that rows at
different scales describe the same realisation.  Grids are given as
dyadic levels: level ``L`` means ``2**L`` cells.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import stats

from .convexbv import BVFunction, Mollifier, RadonMeasure, mollify
from .errors import RegimeError, ValidationError
from .fracops import CONSTANT, LINEAR, besov_norm_w2
from .glsint import GlsConfig, gls_integral, rs_sum
from .paths import ProcessSpec, SampledPath, generate, holder_estimate
from .variation import TaggedPartition

__all__ = [
    "SCHEMA_VERSION",
    "dumps_strict",
    "ExperimentReport",
    "LocalTimeEstimate",
    "spearman_trend",
    "local_time",
    "qv_density_for",
    "ito_smooth_residual",
    "ito_convex_residual",
    "ito_tanaka_residual",
    "besov_embedding_experiment",
    "rs_convergence_study",
]

SCHEMA_VERSION = "1.0"
TREND_TOL = 0.2
DEFAULT_LEVELS = (8, 10, 12, 14)


def spearman_trend(scales: Sequence[float], values: Sequence[float]) -> float:
    """Spearman rank correlation; 0 when either series is constant or too short."""
    if len(scales) < 2 or np.ptp(values) == 0 or np.ptp(scales) == 0:
        return 0.0
    rho = stats.spearmanr(scales, values).statistic
    return 0.0 if math.isnan(rho) else float(rho)


_STATS: dict[str, Callable[[np.ndarray], float]] = {
    "p95": lambda a: float(np.percentile(a, 95)),
    "mean": lambda a: float(np.mean(a)),
    "max": lambda a: float(np.max(a)),
}


@dataclass(frozen=True)
class ExperimentReport:
    """Rows of ``(seed, n, residual, reference, ...)`` with a verdict derived from them.

    At the finest grid the chosen statistic of ``residual`` must not exceed
    ``tolerance * (1 + statistic of reference)``, and when several grids are
    present the Spearman trend of per-grid medians must be at most
    :data:`TREND_TOL`.
    """

    name: str
    parameters: dict[str, Any]
    rows: list[dict[str, float]]
    tolerance: float
    statistic: str = "p95"
    require_trend: bool = True
    extras: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.statistic not in _STATS:
            raise ValidationError(f"unknown statistic {self.statistic!r}")

    def grids(self) -> list[int]:
        return sorted({int(r["n"]) for r in self.rows})

    def column(self, key: str, n: int | None = None) -> np.ndarray:
        return np.array([r[key] for r in self.rows if n is None or int(r["n"]) == n], dtype=float)

    @property
    def summary(self) -> dict[str, Any]:
        grids = self.grids()
        med = [float(np.median(self.column("residual", n))) for n in grids]
        fin = grids[-1]
        stat = _STATS[self.statistic]
        res = self.column("residual", fin)
        ref = self.column("reference", fin) if all("reference" in r for r in self.rows) else np.zeros(1)
        return {
            "grids": grids,
            "median_residual": med,
            "trend": spearman_trend(grids, med),
            "final_statistic": stat(res),
            "final_p95": float(np.percentile(res, 95)),
            "allowed": self.tolerance * (1.0 + stat(np.abs(ref))),
        }

    @property
    def trend_ok(self) -> bool:
        s = self.summary
        return len(s["grids"]) < 2 or s["trend"] <= TREND_TOL

    @property
    def verdict(self) -> bool:
        s = self.summary
        ok = bool(np.isfinite(s["final_statistic"])) and s["final_statistic"] <= s["allowed"]
        return ok and (self.trend_ok or not self.require_trend)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "parameters": self.parameters,
            "tolerance": self.tolerance,
            "statistic": self.statistic,
            "rows": self.rows,
            "summary": self.summary,
            "extras": self.extras,
            "verdict": "pass" if self.verdict else "fail",
        }

    def to_json(self) -> str:
        return dumps_strict(self.to_dict())


def _strict(obj: Any) -> Any:
    """Replace non-finite floats by ``None`` so the output is standard JSON."""
    if isinstance(obj, dict):
        return {str(k): _strict(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_strict(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _strict(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps_strict(obj: Any) -> str:
    """JSON text with sorted keys in which ``inf``/``nan`` appear as ``null``."""
    return json.dumps(_strict(obj), indent=2, sort_keys=True, allow_nan=False, default=_json_default)


def _json_default(obj: Any) -> Any:
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


# ---------------------------------------------------------------------------
# shared plumbing


def _levels(levels: Sequence[int]) -> list[int]:
    lv = sorted({int(x) for x in levels})
    if not lv or lv[0] < 1:
        raise ValidationError("grid levels must be positive integers")
    return lv


def _paths_by_level(spec: ProcessSpec, seed: int, levels: list[int]) -> dict[int, SampledPath]:
    top = levels[-1]
    fine = generate(spec.with_grid(n=(1 << top) + 1, seed=seed))
    return {lv: fine.subsample(1 << (top - lv)) for lv in levels}


def _require_regular(path: SampledPath) -> float:
    alpha = holder_estimate(path)[0]
    if alpha <= 0.5:
        raise RegimeError(f"driving path Hölder estimate {alpha:.3f} is not above 1/2")
    return alpha


def _config(cfg: GlsConfig | None, alpha: float, recon=LINEAR) -> GlsConfig:
    cfg = cfg if cfg is not None else GlsConfig()
    if cfg.beta is None and cfg.window() is None:
        cfg = cfg.with_estimates(alpha, alpha)
    return GlsConfig(cfg.beta, recon, cfg.integrator_recon, cfg.holder_integrand, cfg.holder_integrator)


def _params(spec: ProcessSpec, levels: list[int], seeds: Sequence[int], **extra: Any) -> dict[str, Any]:
    d = {"spec": spec.to_dict(), "levels": levels, "seeds": [int(s) for s in seeds]}
    d.update(extra)
    return d


def qv_density_for(spec: ProcessSpec, path: SampledPath) -> np.ndarray:
    """Quadratic-variation increment per cell implied by the spec.

    Each Brownian summand contributes ``dt``; fBm with ``H > 1/2``,
    drifts and pure-jump parts contribute nothing continuous.
    """
    dt = np.diff(path.times)

    def count(s: ProcessSpec) -> float:
        if s.kind == "brownian":
            return 1.0
        if s.kind == "fbm":
            return 1.0 if s.hurst == 0.5 else 0.0
        if s.kind == "drifted":
            return count(s.base)  # type: ignore[arg-type]
        if s.kind == "mixed":
            return float(sum(count(c) for c in s.components))
        return 0.0

    return count(spec) * dt


# ---------------------------------------------------------------------------
# Itô formula for smooth f


def ito_smooth_residual(f: Callable[[np.ndarray], np.ndarray], fprime: Callable[[np.ndarray], np.ndarray],
                        spec: ProcessSpec, cfg: GlsConfig | None = None,
                        levels: Sequence[int] = DEFAULT_LEVELS, seeds: Sequence[int] = (0,),
                        tolerance: float = 1e-2, allow_rough: bool = False,
                        cross_check: bool = True) -> ExperimentReport:
    """``|f(X_T) - f(X_0) - int f'(X) dX|`` with forward RS sums, cross-checked by gLS.

    ``allow_rough`` skips the zero-quadratic-variation precondition; the
    residual then approximates the Itô correction term instead of zero.
    """
    lv = _levels(levels)
    rows = []
    for seed in seeds:
        paths = _paths_by_level(spec, seed, lv)
        alpha = holder_estimate(paths[lv[-1]])[0]
        if not allow_rough and alpha <= 0.5:
            raise RegimeError(f"driving path Hölder estimate {alpha:.3f} is not above 1/2")
        for level in lv:
            X = paths[level]
            integrand = X.map(fprime)
            rs = rs_sum(integrand, X, TaggedPartition.full(X))
            fx = np.asarray(f(np.array([X.values[0], X.values[-1]])), dtype=float)
            delta = float(fx[1] - fx[0])
            row = {"seed": int(seed), "n": X.n, "residual": abs(delta - rs),
                   "reference": abs(float(fx[1])), "rs": rs, "alpha_hat": alpha}
            if cross_check and alpha > 0.5:
                g = gls_integral(integrand, X, _config(cfg, alpha), bound=False)
                row["gls"] = g.value
                row["cross_check_rel"] = abs(g.value - rs) / max(abs(rs), 1e-12)
            rows.append(row)
    return ExperimentReport("ito_smooth", _params(spec, lv, seeds, allow_rough=allow_rough),
                            rows, tolerance)


# ---------------------------------------------------------------------------
# Itô formula for convex f


def ito_convex_residual(fprime: BVFunction, spec: ProcessSpec, cfg: GlsConfig | None = None,
                        mollifier_scales: Sequence[int] = (4, 16, 64, 256),
                        levels: Sequence[int] = DEFAULT_LEVELS, seeds: Sequence[int] = (0,),
                        tolerance: float = 5e-2, statistic: str = "p95",
                        gap_seeds: int = 1) -> ExperimentReport:
    """``|f(X_T) - f(X_0) - int f'_-(X) dX|`` with the integral in the gLS sense.

    ``f`` is the exact antiderivative of ``fprime``.  For the first
    ``gap_seeds`` seeds the extras also record, on the finest grid, the gap
    between the gLS integrals of ``f'_n(X)`` and ``f'_-(X)`` along the
    mollifier scales.
    """
    lv = _levels(levels)
    rows = []
    gaps: dict[str, list[float]] = {}
    for k, seed in enumerate(seeds):
        paths = _paths_by_level(spec, seed, lv)
        alpha = _require_regular(paths[lv[-1]])
        cfg_c = _config(cfg, alpha, CONSTANT)
        for level in lv:
            X = paths[level]
            integrand = X.map(fprime)
            val = gls_integral(integrand, X, cfg_c, bound=False).value
            fx = fprime.antiderivative(np.array([X.values[0], X.values[-1]]))
            rows.append({"seed": int(seed), "n": X.n, "residual": abs(float(fx[1] - fx[0]) - val),
                         "reference": abs(float(X.values[-1])), "gls": val, "alpha_hat": alpha})
        if k < gap_seeds and mollifier_scales:
            X = paths[lv[-1]]
            base = gls_integral(X.map(fprime), X, cfg_c, bound=False).value
            cfg_l = _config(cfg, alpha, LINEAR)
            series = []
            for n in mollifier_scales:
                mf = mollify(fprime, Mollifier(int(n)))
                series.append(abs(gls_integral(X.map(mf.d1), X, cfg_l, bound=False).value - base))
            gaps[str(seed)] = series
    extras = {"mollifier_scales": [int(n) for n in mollifier_scales], "mollified_gaps": gaps,
              "mollified_trend": {s: spearman_trend(list(mollifier_scales), g) for s, g in gaps.items()}}
    return ExperimentReport("ito_convex", _params(spec, lv, seeds), rows, tolerance,
                            statistic=statistic, extras=extras)


# ---------------------------------------------------------------------------
# local time and the Itô-Tanaka formula


@dataclass(frozen=True)
class LocalTimeEstimate:
    levels: np.ndarray
    values: np.ndarray
    eps: float

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValidationError("bandwidth must be positive")
        if np.any(self.values < 0):
            raise ValidationError("local time estimates must be nonnegative")

    def occupation_mass(self) -> float:
        """``sum_a L_a * da`` over the level grid (trapezoid-free Riemann sum)."""
        if self.levels.size < 2:
            return float(self.values.sum() * self.eps)
        da = np.gradient(self.levels)
        return float(np.dot(self.values, da))


def _kernel_local_time(y_left: np.ndarray, qv: np.ndarray, a: np.ndarray, eps: float) -> np.ndarray:
    order = np.argsort(y_left, kind="stable")
    ys = y_left[order]
    cq = np.concatenate([[0.0], np.cumsum(qv[order])])
    a = np.asarray(a, dtype=float)
    lo = np.searchsorted(ys, a - eps / 2, side="right")
    hi = np.searchsorted(ys, a + eps / 2, side="left")
    return np.maximum(cq[hi] - cq[lo], 0.0) / eps


def local_time(path: SampledPath, qv_density: np.ndarray, levels: Sequence[float] | np.ndarray,
               eps: float | None = None) -> LocalTimeEstimate:
    """Kernel occupation density ``L_a = (1/eps) sum_{|Y_{i-1} - a| < eps/2} qv_i``.

    ``qv_density[i]`` is the quadratic-variation increment of cell ``i``;
    the default bandwidth is one fiftieth of the path range.
    """
    qv = np.asarray(qv_density, dtype=float)
    if qv.shape != (path.n - 1,):
        raise ValidationError("qv_density needs one entry per grid cell")
    if np.any(qv < 0):
        raise ValidationError("qv_density must be nonnegative")
    if eps is None:
        rng = float(np.ptp(path.values))
        eps = rng / 50 if rng > 0 else 1.0
    lv = np.asarray(levels, dtype=float)
    return LocalTimeEstimate(lv, _kernel_local_time(path.values[:-1], qv, lv, float(eps)), float(eps))


def _local_time_term(Y: SampledPath, qv: np.ndarray, mu: RadonMeasure, eps: float) -> float:
    """``1/2 int L_a mu(da)``."""
    return 0.5 * mu.integrate(lambda a: _kernel_local_time(Y.values[:-1], qv, a, eps))


def ito_tanaka_residual(fprime: BVFunction, mu: RadonMeasure, spec: ProcessSpec,
                        levels: Sequence[int] = DEFAULT_LEVELS, seeds: Sequence[int] = (0,),
                        tolerance: float = 1e-1, eps: float | None = None,
                        statistic: str = "mean") -> ExperimentReport:
    """``|f(Y_T) - f(Y_0) - int f'_-(Y) dY - 1/2 int L_a mu(da)|`` for ``Y = X + M``.

    The integral is a forward RS (Föllmer) sum and ``L`` the kernel local
    time with bandwidth ``eps`` (default: range/50 per path).  Extras hold
    the finest-grid mean residual at half and double bandwidth.
    """
    lv = _levels(levels)
    rows = []
    sens: dict[str, list[float]] = {"eps/2": [], "2eps": []}
    for seed in seeds:
        paths = _paths_by_level(spec, seed, lv)
        for level in lv:
            Y = paths[level]
            qv = qv_density_for(spec, Y)
            rs = rs_sum(Y.map(fprime), Y, TaggedPartition.full(Y))
            fy = fprime.antiderivative(np.array([Y.values[0], Y.values[-1]]))
            delta = float(fy[1] - fy[0])
            e = eps if eps is not None else (float(np.ptp(Y.values)) / 50 or 1.0)
            lt = _local_time_term(Y, qv, mu, e)
            rows.append({"seed": int(seed), "n": Y.n, "residual": abs(delta - rs - lt),
                         "reference": 0.0, "rs": rs, "local_time_term": lt, "eps": e})
            if level == lv[-1]:
                sens["eps/2"].append(abs(delta - rs - _local_time_term(Y, qv, mu, e / 2)))
                sens["2eps"].append(abs(delta - rs - _local_time_term(Y, qv, mu, 2 * e)))
    extras = {"bandwidth_sensitivity": {k: float(np.mean(v)) for k, v in sens.items()}}
    return ExperimentReport("ito_tanaka", _params(spec, lv, seeds), rows, tolerance,
                            statistic=statistic, extras=extras)


# ---------------------------------------------------------------------------
# Besov embedding


def _moment_diagnostic(spec: ProcessSpec, seeds: Sequence[int], level: int, alphas: Sequence[float],
                       shift: float) -> dict[str, dict[str, float]]:
    """Sample mean of ``int_0^T |X_t - shift|^-alpha dt`` over seeds, with its standard error."""
    out: dict[str, dict[str, float]] = {}
    vals = {a: [] for a in alphas}
    for seed in seeds:
        X = generate(spec.with_grid(n=(1 << level) + 1, seed=seed))
        dist = np.abs(X.values - shift)
        dt = np.diff(X.times)
        mid = 0.5 * (dist[:-1] + dist[1:])
        for a in alphas:
            vals[a].append(float(np.sum(dt * np.maximum(mid, 1e-300) ** (-a))))
    for a in alphas:
        v = np.array(vals[a])
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
        out[f"{a:g}"] = {"mean": float(v.mean()), "stderr": se,
                         "heavy_tailed": float(v.size > 1 and v.max() > 10 * np.median(v))}
    return out


def besov_embedding_experiment(fprime: BVFunction, spec: ProcessSpec, beta: float, epsilon: float,
                               levels: Sequence[int] = (10, 12, 14), seeds: Sequence[int] = (0,),
                               moment_alphas: Sequence[float] = (0.3, 0.6, 0.9),
                               moment_seeds: Sequence[int] = tuple(range(20)),
                               moment_level: int = 12, moment_shift: float = 0.05) -> ExperimentReport:
    """``||f'_-(X)||_{2,beta}`` across refinements; passes if finite with successive ratios in [0.5, 2].

    ``epsilon`` is the Hölder margin the spec is assumed to carry; it is
    recorded, not used.  The extras include the negative-moment diagnostic.
    """
    lv = _levels(levels)
    rows = []
    for seed in seeds:
        paths = _paths_by_level(spec, seed, lv)
        for level in lv:
            X = paths[level]
            norm = besov_norm_w2(X.map(fprime), beta, CONSTANT)
            rows.append({"seed": int(seed), "n": X.n, "residual": norm, "reference": 0.0})
    ratios = []
    for seed in seeds:
        series = [r["residual"] for r in rows if r["seed"] == seed]
        ratios += [b / a if a > 0 else (1.0 if b == 0 else math.inf) for a, b in zip(series, series[1:])]
    stable = all(math.isfinite(r["residual"]) for r in rows) and all(0.5 <= q <= 2.0 for q in ratios)
    extras = {
        "ratios": ratios,
        "stable": bool(stable),
        "moment_diagnostic": _moment_diagnostic(spec, moment_seeds, moment_level, moment_alphas,
                                                moment_shift) if moment_alphas else {},
    }
    tol = math.inf if stable else -1.0
    return ExperimentReport("besov_embedding",
                            _params(spec, lv, seeds, beta=float(beta), epsilon=float(epsilon)),
                            rows, tol, statistic="max", require_trend=False, extras=extras)


# ---------------------------------------------------------------------------
# RS convergence


def rs_convergence_study(fprime: BVFunction | Callable[[np.ndarray], np.ndarray], spec: ProcessSpec,
                         cfg: GlsConfig | None = None, levels: Sequence[int] = DEFAULT_LEVELS,
                         seed: int = 0, tags: str = "forward", tolerance: float = 5e-2,
                         integrand_recon=CONSTANT) -> ExperimentReport:
    """RS sums of ``f(X) dX`` along dyadic sub-partitions versus the finest-grid gLS value.

    ``residual`` is ``|rs_L - gls_finest|``; ``gap_same_grid`` compares the
    RS sum with the gLS value computed on the subsampled grid itself.
    """
    lv = _levels(levels)
    paths = _paths_by_level(spec, seed, lv)
    fine = paths[lv[-1]]
    alpha = _require_regular(fine)
    cfg_c = _config(cfg, alpha, integrand_recon)
    ref = gls_integral(fine.map(fprime), fine, cfg_c, bound=False).value
    rows = []
    for level in lv:
        X = paths[level]
        integrand = X.map(fprime)
        rs = rs_sum(integrand, X, TaggedPartition.full(X, tags))
        same = gls_integral(integrand, X, cfg_c, bound=False).value
        rows.append({"seed": int(seed), "n": X.n, "residual": abs(rs - ref), "reference": abs(ref),
                     "rs": rs, "gls_same_grid": same, "gap_same_grid": abs(rs - same)})
    return ExperimentReport("rs_convergence", _params(spec, lv, [seed], tags=tags), rows, tolerance,
                            statistic="max", extras={"gls_reference": ref, "alpha_hat": alpha})
