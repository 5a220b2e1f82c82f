from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pathint.convexbv import BVFunction
from pathint.errors import ConfigError, RegimeError, ValidationError
from pathint.fracops import CONSTANT, LINEAR
from pathint.glsint import (GlsConfig, compose_integrand, gls_integral, integration_by_parts_residual,
                            jump_decay_exponent, mixed_integral, multidim_rs_sum,
                            right_derivative_values, rs_sum)
from pathint.paths import ProcessSpec, SampledPath, generate, generate_components, uniform_grid
from pathint.variation import TaggedPartition

N12 = (1 << 12) + 1


def test_config_window():
    with pytest.raises(ConfigError):
        GlsConfig(0.2, holder_integrand=0.7, holder_integrator=0.7)
    with pytest.raises(ConfigError):
        GlsConfig(holder_integrand=0.4, holder_integrator=0.5)
    with pytest.raises(ConfigError):
        GlsConfig().beta_used
    with pytest.raises(ValidationError):
        GlsConfig(1.2)
    cfg = GlsConfig(holder_integrand=0.8, holder_integrator=0.6)
    assert cfg.beta_used == pytest.approx((0.8 + 1 - 0.6) / 2)
    assert GlsConfig(0.55, holder_integrand=0.8, holder_integrator=0.6).beta_used == 0.55
    assert GlsConfig(0.5, "const").integrand_recon is CONSTANT


def test_constant_integrand_telescopes(grid_path):
    g = grid_path(lambda t: np.exp(t) * np.sin(2 * t), N12)
    one = grid_path(lambda t: np.ones_like(t), N12)
    val = gls_integral(one, g, GlsConfig(0.5), bound=False).value
    assert val == pytest.approx(g.values[-1] - g.values[0], rel=1e-3)


def test_smooth_pair_beta_independent(grid_path):
    f, g = grid_path(lambda t: t, N12), grid_path(lambda t: t**2, N12)
    vals = [gls_integral(f, g, GlsConfig(b), bound=False).value for b in (0.3, 0.5, 0.7)]
    for v in vals:
        assert v == pytest.approx(2 / 3, rel=1e-3)
    for a in vals:
        for b in vals:
            assert abs(a - b) <= 1e-2 * abs(b)


def test_upper_limit(grid_path):
    f, g = grid_path(lambda t: t, N12), grid_path(lambda t: t**2, N12)
    # int_0^{1/2} s d(s^2) = 2/3 * 1/8
    assert gls_integral(f, g, GlsConfig(0.4), t=0.5, bound=False).value == pytest.approx(1 / 12, rel=1e-3)
    with pytest.raises(ValidationError):
        gls_integral(f, g, GlsConfig(0.4), t=0.0)


@pytest.mark.parametrize("recon_f", [LINEAR, CONSTANT])
@pytest.mark.parametrize("recon_g", [LINEAR, CONSTANT])
def test_fft_matches_direct(recon_f, recon_g):
    rng = np.random.default_rng(7)
    t = uniform_grid(1.0, 301)
    f = SampledPath(t, np.cumsum(rng.normal(size=301)) * 0.05)
    g = SampledPath(t, np.cumsum(rng.normal(size=301)) * 0.05)
    cfg = GlsConfig(0.45, recon_f, recon_g)
    a = gls_integral(f, g, cfg, bound=False, method="fft").value
    b = gls_integral(f, g, cfg, bound=False, method="direct").value
    assert a == pytest.approx(b, rel=1e-10, abs=1e-12)
    ra = right_derivative_values(g, 0.45, 300, recon_g, "fft")
    rb = right_derivative_values(g, 0.45, 300, recon_g, "direct")
    np.testing.assert_allclose(ra, rb, rtol=1e-10, atol=1e-11)


def test_nonuniform_grid():
    rng = np.random.default_rng(3)
    t = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, 1500)]))
    f, g = SampledPath(t, t.copy()), SampledPath(t, t**2)
    assert gls_integral(f, g, GlsConfig(0.5), bound=False).value == pytest.approx(2 / 3, rel=1e-3)
    with pytest.raises(ValidationError):
        gls_integral(f, g, GlsConfig(0.5), method="fft")


def test_indicator_integrand_exact_jump(grid_path):
    g = grid_path(lambda t: t**2, 2049)
    ind = grid_path(lambda t: (t > 0.3).astype(float), 2049)
    # left-constant reconstruction jumps at the first node beyond 0.3
    c = g.times[np.argmax(ind.values > 0)]
    val = gls_integral(ind, g, GlsConfig(0.5, CONSTANT), bound=False).value
    assert val == pytest.approx(1 - c * c, rel=1e-4)


def test_apriori_bound_small_sample(grid_path):
    rng = np.random.default_rng(11)
    for _ in range(5):
        a, b, c = rng.normal(size=3)
        f = grid_path(lambda t: a * np.sin(3 * t) + b * t, 257)
        g = grid_path(lambda t: c * t**2 + np.cos(t), 257)
        r = gls_integral(f, g, GlsConfig(float(rng.uniform(0.2, 0.8))))
        assert abs(r.value) <= r.apriori_bound * (1 + 1e-6)
        assert r.diagnostics["besov_w2_integrand"] > 0


def test_rs_sum_examples(grid_path):
    g = grid_path(np.sin, 513)
    c = grid_path(lambda t: 2.5 + 0 * t, 513)
    assert rs_sum(c, g, TaggedPartition.uniform(g, 8)) == pytest.approx(2.5 * math.sin(1.0), rel=1e-14)
    f, g2 = grid_path(lambda t: t, 1025), grid_path(lambda t: t**2, 1025)
    assert abs(rs_sum(f, g2, TaggedPartition.full(f)) - 2 / 3) <= 2e-3


@given(st.lists(st.floats(-3, 3), min_size=17, max_size=17), st.lists(st.floats(-3, 3), min_size=17, max_size=17),
       st.lists(st.floats(-3, 3), min_size=17, max_size=17), st.floats(-2, 2), st.floats(-2, 2),
       st.sampled_from(["forward", "backward", "midpoint"]))
def test_rs_bilinear(u, v, w, a, b, tags):
    t = uniform_grid(1.0, 17)
    fu, fv, g = (SampledPath(t, np.array(x)) for x in (u, v, w))
    part = TaggedPartition.uniform(g, 4, tags)
    comb = SampledPath(t, a * fu.values + b * fv.values)
    lhs = rs_sum(comb, g, part)
    rhs = a * rs_sum(fu, g, part) + b * rs_sum(fv, g, part)
    assert lhs == pytest.approx(rhs, abs=1e-11)
    g2 = SampledPath(t, a * g.values)
    assert rs_sum(fu, g2, part) == pytest.approx(a * rs_sum(fu, g, part), abs=1e-11)


@pytest.mark.parametrize("fn,gn", [(np.sin, np.cos), (lambda t: t**3, np.exp), (np.sqrt, lambda t: t**2)])
def test_young_consistency(grid_path, fn, gn):
    f, g = grid_path(fn, N12), grid_path(gn, N12)
    gls = gls_integral(f, g, GlsConfig(0.5), bound=False).value
    rs = rs_sum(f, g, TaggedPartition.full(f))
    assert abs(gls - rs) <= 1e-2 * abs(rs)


def test_tag_invariance_in_the_limit():
    X = generate(ProcessSpec.fbm(0.75, n=(1 << 14) + 1, seed=2))
    gaps = []
    for level in (8, 14):
        Y = X.subsample(1 << (14 - level))
        Z = Y.map(lambda x: (x > 0).astype(float))
        vals = [rs_sum(Z, Y, TaggedPartition.full(Y, tag)) for tag in ("forward", "backward", "midpoint")]
        gaps.append(max(vals) - min(vals))
    assert gaps[1] < gaps[0]


def test_integration_by_parts(grid_path):
    y = grid_path(np.sin, 1025)
    one = grid_path(lambda t: np.ones_like(t), 1025)
    assert integration_by_parts_residual(one, y) <= 1e-14
    x, y2 = grid_path(lambda t: t, N12), grid_path(lambda t: t**2, N12)
    assert integration_by_parts_residual(x, y2) <= 1e-3
    # the residual is exactly |sum dX dY|
    expected = abs(np.sum(np.diff(x.values) * np.diff(y2.values)))
    assert integration_by_parts_residual(x, y2) == pytest.approx(expected, rel=1e-9)


def test_multidim_reductions():
    X1 = generate(ProcessSpec.fbm(0.75, n=1025, seed=1))
    X2 = generate(ProcessSpec.fbm(0.75, n=1025, seed=2))
    part = TaggedPartition.full(X1)
    ind = lambda x: (x > 0).astype(float)
    assert multidim_rs_sum(ind, [X1], X1, part) == rs_sum(X1.map(ind), X1, part)
    assert multidim_rs_sum(lambda x, y: x, [X1, X2], X1, part) == rs_sum(X1, X1, part)
    z = compose_integrand(lambda x, y: x * y, [X1, X2])
    np.testing.assert_array_equal(z.values, X1.values * X2.values)


def test_multidim_cauchy_gaps_shrink():
    top = 14
    X1 = generate(ProcessSpec.fbm(0.75, n=(1 << top) + 1, seed=21))
    X2 = generate(ProcessSpec.fbm(0.75, n=(1 << top) + 1, seed=22))
    fn = lambda x, y: (x > 0).astype(float) * (y > 0).astype(float)
    vals = []
    for level in (6, 8, 10, 12, 14):
        s = 1 << (top - level)
        a, b = X1.subsample(s), X2.subsample(s)
        vals.append(multidim_rs_sum(fn, [a, b], a, TaggedPartition.full(a)))
    gaps = np.abs(np.diff(vals))
    assert gaps[-1] < gaps[0]


def test_jump_decay():
    for seed in range(10):
        spec = ProcessSpec.compound_poisson(5.0, n=(1 << 14) + 1, seed=seed)
        J = generate(spec)
        if np.ptp(J.values) == 0:
            assert jump_decay_exponent(J) == math.inf
        else:
            assert 0.9 <= jump_decay_exponent(J) <= 1.1
    flat = SampledPath(uniform_grid(1.0, 257), np.zeros(257))
    assert jump_decay_exponent(flat) == math.inf


def test_mixed_integral_degenerate_and_consistency():
    zero_jumps = ProcessSpec.compound_poisson(3.0, n=4097, jump_dist={"kind": "constant", "value": 0.0})
    spec = ProcessSpec.mixed([ProcessSpec.fbm(0.75, n=4097), zero_jumps], seed=5)
    f = BVFunction.indicator(0.0)
    res = mixed_integral(f, spec, GlsConfig(0.5), bound=False)
    X = generate_components(spec)[0]
    direct = gls_integral(X.map(f), X, GlsConfig(0.5, CONSTANT), bound=False).value
    assert res.value == pytest.approx(direct, rel=1e-12, abs=1e-14)
    assert res.diagnostics["jump_decay_alpha2"] == math.inf
    assert res.diagnostics["jump_decay_ok"] == 1.0


def test_mixed_integral_needs_regular_component():
    spec = ProcessSpec.mixed([ProcessSpec.brownian(n=2049), ProcessSpec.compound_poisson(2.0, n=2049)], seed=1)
    with pytest.raises(RegimeError):
        mixed_integral(BVFunction.indicator(0.0), spec, GlsConfig(0.5))
    with pytest.raises(ValidationError):
        mixed_integral(BVFunction.indicator(0.0), ProcessSpec.fbm(0.75), GlsConfig(0.5))
