"""p-variation along partitions, its supremum over grid sub-partitions, and quadratic variation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .errors import SizeError, ValidationError
from .paths import SampledPath

__all__ = [
    "TaggedPartition",
    "VariationReport",
    "p_variation",
    "sup_p_variation",
    "quadratic_variation",
    "dyadic_partitions",
    "DP_CAP",
]

DP_CAP = 1 << 15

_TAG_RULES = ("forward", "backward", "midpoint")


def _tags_for(idx: np.ndarray, rule: str) -> np.ndarray:
    if rule == "forward":
        return idx[:-1].copy()
    if rule == "backward":
        return idx[1:].copy()
    if rule == "midpoint":
        return (idx[:-1] + idx[1:]) // 2
    raise ValidationError(f"unknown tag rule {rule!r}; expected one of {_TAG_RULES}")


@dataclass(frozen=True, eq=False)
class TaggedPartition:
    """Partition ``0 = t_0 < ... < t_k = T`` of a path grid with one tag per interval.

    Points and tags are stored as grid indices so that sums read the
    samples directly; ``points`` and ``tags`` give the times.
    """

    point_idx: np.ndarray
    tag_idx: np.ndarray
    times: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        pi = np.asarray(self.point_idx, dtype=np.int64).ravel()
        ti = np.asarray(self.tag_idx, dtype=np.int64).ravel()
        t = np.asarray(self.times, dtype=float)
        if pi.size < 2:
            raise ValidationError("a partition needs at least two points")
        if pi[0] != 0 or pi[-1] != t.size - 1:
            raise ValidationError("partition endpoints must be the first and last grid points")
        if np.any(np.diff(pi) <= 0):
            raise ValidationError("partition points must be strictly increasing")
        if ti.size != pi.size - 1:
            raise ValidationError("need exactly one tag per partition interval")
        if np.any(ti < pi[:-1]) or np.any(ti > pi[1:]):
            raise ValidationError("each tag must lie in its interval")
        for name, arr in (("point_idx", pi), ("tag_idx", ti)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def points(self) -> np.ndarray:
        return self.times[self.point_idx]

    @property
    def tags(self) -> np.ndarray:
        return self.times[self.tag_idx]

    @property
    def size(self) -> int:
        """Number of intervals."""
        return int(self.point_idx.size - 1)

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.points)))

    def check_grid(self, path: SampledPath) -> None:
        if path.n != self.times.size or not np.array_equal(path.times, self.times):
            raise ValidationError("partition does not live on this path's grid")

    # constructors ------------------------------------------------------
    @classmethod
    def full(cls, path: SampledPath, tags: str = "forward") -> "TaggedPartition":
        idx = np.arange(path.n)
        return cls(idx, _tags_for(idx, tags), path.times)

    @classmethod
    def uniform(cls, path: SampledPath, intervals: int, tags: str = "forward") -> "TaggedPartition":
        """``intervals`` equal index steps; requires them to divide ``n - 1``."""
        if intervals < 1 or (path.n - 1) % intervals:
            raise ValidationError(
                f"{intervals} intervals do not divide the {path.n - 1} grid cells evenly")
        idx = np.arange(0, path.n, (path.n - 1) // intervals)
        return cls(idx, _tags_for(idx, tags), path.times)

    @classmethod
    def dyadic(cls, path: SampledPath, level: int, tags: str = "forward") -> "TaggedPartition":
        return cls.uniform(path, 1 << int(level), tags)

    @classmethod
    def from_times(cls, path: SampledPath, points: Sequence[float],
                   tags: Sequence[float] | str = "forward") -> "TaggedPartition":
        idx = np.array([path.index_of(float(p)) for p in points], dtype=np.int64)
        if isinstance(tags, str):
            tag_idx = _tags_for(idx, tags)
        else:
            tag_idx = np.array([path.index_of(float(s)) for s in tags], dtype=np.int64)
        return cls(idx, tag_idx, path.times)


@dataclass(frozen=True)
class VariationReport:
    p: float
    along_partition: float
    supremum: float
    maximizing_subset: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"p": self.p, "along_partition": self.along_partition,
                "supremum": self.supremum, "maximizing_subset": list(self.maximizing_subset)}


def _check_p(p: float) -> float:
    p = float(p)
    if not p >= 1.0:
        raise ValidationError(f"p must be >= 1, got {p}")
    return p


def p_variation(path: SampledPath, part: TaggedPartition, p: float) -> float:
    """``sum |f(t_k) - f(t_{k-1})|^p`` over the partition points."""
    p = _check_p(p)
    part.check_grid(path)
    inc = np.diff(path.values[part.point_idx])
    # left-to-right summation, the same order as the supremum DP
    return float(np.cumsum(np.abs(inc) ** p)[-1])


@njit(cache=True)
def _pvar_dp(v, p):
    n = v.size
    best = np.zeros(n)
    prev = np.full(n, -1, dtype=np.int64)
    for j in range(1, n):
        bj = -1.0
        arg = 0
        vj = v[j]
        for i in range(j):
            cand = best[i] + abs(vj - v[i]) ** p
            if cand > bj:
                bj = cand
                arg = i
        best[j] = bj
        prev[j] = arg
    return best, prev


def _turning_points(v: np.ndarray) -> np.ndarray:
    """Endpoints plus strict local extrema after collapsing flat runs."""
    keep = np.concatenate([[True], np.diff(v) != 0])
    idx = np.flatnonzero(keep)
    if idx[-1] != v.size - 1:
        idx = np.append(idx, v.size - 1)
    w = v[idx]
    if w.size <= 2:
        return idx
    d = np.diff(w)
    turn = np.concatenate([[True], d[1:] * d[:-1] < 0, [True]])
    return idx[turn]


def sup_p_variation(path: SampledPath, p: float, part: TaggedPartition | None = None,
                    cap: int = DP_CAP, preselect: bool = False) -> VariationReport:
    """Supremum of the p-variation over all grid sub-partitions keeping both endpoints.

    The O(n^2) dynamic program refuses paths longer than ``cap`` unless
    ``preselect`` is set.  Preselection keeps only endpoints and turning
    points; for ``p >= 1`` a monotone run is never worth splitting, so the
    supremum is unchanged, while the DP then runs on the reduced sequence.
    """
    p = _check_p(p)
    v = path.values
    idx = np.arange(path.n)
    if preselect:
        idx = _turning_points(v)
    if idx.size > cap:
        raise SizeError(f"{idx.size} points exceed the p-variation DP cap {cap}; "
                        "pass preselect=True or raise the cap")
    best, prev = _pvar_dp(np.ascontiguousarray(v[idx]), p)
    chain = [idx.size - 1]
    while chain[-1] != 0:
        chain.append(int(prev[chain[-1]]))
    subset = tuple(int(idx[k]) for k in reversed(chain))
    part = part if part is not None else TaggedPartition.full(path)
    along = p_variation(path, part, p)
    sup = float(best[-1])
    if along > sup:
        # the given partition is itself a candidate
        sup, subset = along, tuple(int(i) for i in part.point_idx)
    return VariationReport(p, along, sup, subset)


def dyadic_partitions(path: SampledPath, levels: Sequence[int], tags: str = "forward") -> list[TaggedPartition]:
    return [TaggedPartition.dyadic(path, lv, tags) for lv in levels]


def quadratic_variation(path: SampledPath, parts: Sequence[TaggedPartition]) -> list[float]:
    """Sums of squared increments along each partition, in the order given."""
    return [p_variation(path, part, 2.0) for part in parts]
