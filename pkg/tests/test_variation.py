from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pathint.errors import SizeError, ValidationError
from pathint.paths import ProcessSpec, SampledPath, generate, uniform_grid
from pathint.variation import (TaggedPartition, dyadic_partitions, p_variation, quadratic_variation,
                               sup_p_variation)


def _path(values):
    v = np.asarray(values, dtype=float)
    return SampledPath(uniform_grid(1.0, v.size), v)


def brute_force(v, p):
    """Maximum over all subsets containing both endpoints, summed left to right."""
    n = len(v)
    best = -1.0
    for k in range(n - 1):
        for inner in itertools.combinations(range(1, n - 1), k):
            idx = (0,) + inner + (n - 1,)
            acc = 0.0
            for a, b in zip(idx[:-1], idx[1:]):
                acc = acc + abs(v[b] - v[a]) ** p
            best = max(best, acc)
    return best


def test_partition_validation():
    p = _path(np.zeros(9))
    with pytest.raises(ValidationError):
        TaggedPartition(np.array([0, 4]), np.array([0]), p.times)
    with pytest.raises(ValidationError):
        TaggedPartition(np.array([0, 4, 4, 8]), np.array([0, 4, 4]), p.times)
    with pytest.raises(ValidationError):
        TaggedPartition(np.array([0, 4, 8]), np.array([0, 2]), p.times)
    with pytest.raises(ValidationError):
        TaggedPartition.uniform(p, 3)
    with pytest.raises(ValidationError):
        TaggedPartition.full(p, "random")
    part = TaggedPartition.uniform(p, 4, "midpoint")
    np.testing.assert_array_equal(part.point_idx, [0, 2, 4, 6, 8])
    np.testing.assert_array_equal(part.tag_idx, [1, 3, 5, 7])
    assert part.mesh == pytest.approx(0.25)
    assert TaggedPartition.from_times(p, [0.0, 0.5, 1.0], "backward").tags.tolist() == [0.5, 1.0]


def test_trivial_examples():
    lin = _path(uniform_grid(1.0, 17))
    assert p_variation(lin, TaggedPartition.full(lin), 2) == pytest.approx(1 / 16)
    assert p_variation(lin, TaggedPartition.uniform(lin, 4), 1) == pytest.approx(1.0, abs=1e-15)
    zz = _path([0, 1, 0, 1])
    assert p_variation(zz, TaggedPartition.full(zz), 1) == 3.0
    rep = sup_p_variation(zz, 1)
    assert rep.supremum == 3.0 and rep.maximizing_subset == (0, 1, 2, 3)
    with pytest.raises(ValidationError):
        p_variation(zz, TaggedPartition.full(zz), 0.5)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_monotone_sup(p):
    v = np.cumsum(np.random.default_rng(1).uniform(0, 1, 50))
    rep = sup_p_variation(_path(v), p)
    if p == 1.0:
        assert rep.supremum == pytest.approx(v[-1] - v[0], rel=1e-14)
    else:
        assert rep.supremum == pytest.approx((v[-1] - v[0]) ** p, rel=1e-14)
        assert rep.maximizing_subset == (0, 49)


def test_dp_matches_brute_force_exactly():
    rng = np.random.default_rng(2024)
    for _ in range(300):
        n = int(rng.integers(2, 11))
        v = rng.normal(size=n)
        p = float(rng.choice([1.0, 1.3, 2.0, 2.7]))
        assert sup_p_variation(_path(v), p).supremum == brute_force(v, p)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=9), st.floats(1.0, 4.0))
def test_dp_brute_force_property(v, p):
    rep = sup_p_variation(_path(v), p)
    assert rep.supremum == brute_force(v, p)
    sub = rep.maximizing_subset
    acc = 0.0
    for a, b in zip(sub[:-1], sub[1:]):
        acc = acc + abs(v[b] - v[a]) ** p
    assert acc == rep.supremum


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=40), st.floats(1.0, 3.0))
def test_sup_dominates_and_preselect_agrees(v, p):
    path = _path(v)
    rep = sup_p_variation(path, p)
    assert rep.supremum >= rep.along_partition >= 0
    pre = sup_p_variation(path, p, preselect=True)
    assert pre.supremum == pytest.approx(rep.supremum, rel=1e-12, abs=1e-12)


@given(st.lists(st.floats(-0.1, 0.1), min_size=3, max_size=30))
def test_monotone_in_p_for_small_increments(v):
    path = _path(v)
    part = TaggedPartition.full(path)
    vals = [p_variation(path, part, p) for p in (1.0, 1.5, 2.0, 3.0)]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


@given(st.lists(st.floats(-5, 5), min_size=17, max_size=17))
def test_refinement_increases_v1(v):
    path = _path(v)
    coarse = p_variation(path, TaggedPartition.uniform(path, 4), 1)
    fine = p_variation(path, TaggedPartition.uniform(path, 8), 1)
    assert fine >= coarse - 1e-12


def test_size_cap():
    path = _path(np.random.default_rng(0).normal(size=200))
    with pytest.raises(SizeError):
        sup_p_variation(path, 2, cap=100)
    mono = _path(np.arange(200.0))
    assert sup_p_variation(mono, 2, cap=100, preselect=True).supremum == 199.0**2


def test_quadratic_variation_smooth_and_brownian():
    lin = _path(uniform_grid(1.0, (1 << 12) + 1))
    qv = quadratic_variation(lin, dyadic_partitions(lin, range(4, 13)))
    np.testing.assert_allclose(qv, [2.0**-k for k in range(4, 13)], rtol=1e-9)
    finals = []
    for seed in range(50):
        B = generate(ProcessSpec.brownian(n=(1 << 12) + 1, seed=seed))
        finals.append(quadratic_variation(B, dyadic_partitions(B, [6, 12]))[-1])
    assert abs(np.mean(finals) - 1.0) <= 0.1


def test_quadratic_variation_fbm_vanishes():
    # E v_2 at level L is 2^L * 2^(-2HL) = 2^(-L/2) for H = 3/4
    ratios, levels = [], list(range(6, 13))
    for seed in range(50):
        X = generate(ProcessSpec.fbm(0.75, n=(1 << 12) + 1, seed=seed))
        qv = quadratic_variation(X, dyadic_partitions(X, levels))
        assert all(a > b for a, b in zip(qv[::2], qv[2::2]))
        ratios.append(qv[-1] / qv[0])
    assert np.mean(ratios) == pytest.approx(2.0**-3, rel=0.15)
