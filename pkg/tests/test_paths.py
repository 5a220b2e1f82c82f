from __future__ import annotations

import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pathint.errors import AssumptionViolated, ValidationError
from pathint.paths import (ProcessSpec, SampledPath, VarianceFunction, check_density_assumption,
                           compound_poisson_jumps, generate, generate_components, holder_estimate,
                           read_csv, uniform_grid, write_csv)


def test_grid_and_path_validation():
    t = uniform_grid(2.0, 5)
    assert t[0] == 0.0 and t[-1] == 2.0 and t.size == 5
    with pytest.raises(ValidationError):
        SampledPath(np.array([0.0, 0.5, 0.5]), np.zeros(3))
    with pytest.raises(ValidationError):
        SampledPath(np.array([0.1, 0.5]), np.zeros(2))
    with pytest.raises(ValidationError):
        SampledPath(np.array([0.0, 1.0]), np.array([0.0, np.nan]))
    with pytest.raises(ValidationError):
        SampledPath(np.array([0.0, 1.0]), np.zeros(3))


def test_brownian_two_points_starts_at_zero():
    p = generate(ProcessSpec.brownian(T=1.0, n=2, seed=3))
    assert p.values[0] == 0.0
    assert p.values.size == 2 and math.isfinite(p.values[1])


def test_fbm_half_is_brownian():
    a = generate(ProcessSpec.fbm(0.5, n=513, seed=11))
    b = generate(ProcessSpec.brownian(n=513, seed=11))
    np.testing.assert_array_equal(a.values, b.values)


def test_same_seed_bit_identical():
    s = ProcessSpec.fbm(0.75, n=1025, seed=42)
    np.testing.assert_array_equal(generate(s).values, generate(s).values)
    assert not np.array_equal(generate(s).values, generate(s.with_grid(seed=43)).values)


def test_fbm_increment_variance_scaling():
    # E (B_{t+d} - B_t)^2 = d^{2H}
    H, n = 0.75, 1 << 12
    d = 1.0 / (n - 1)
    ratios = []
    for seed in range(100):
        v = generate(ProcessSpec.fbm(H, n=n, seed=seed)).values
        ratios.append(np.mean(np.diff(v) ** 2) / d ** (2 * H))
    assert abs(np.mean(ratios) - 1.0) <= 0.15


def test_fbm_covariance_monte_carlo():
    H, n = 0.75, 65
    t = uniform_grid(1.0, n)
    i, j = 16, 48
    s_, t_ = t[i], t[j]
    samples = np.array([generate(ProcessSpec.fbm(H, n=n, seed=k)).values[[i, j]] for k in range(10_000)])
    cov = np.mean(samples[:, 0] * samples[:, 1])
    exact = 0.5 * (t_ ** (2 * H) + s_ ** (2 * H) - abs(t_ - s_) ** (2 * H))
    assert abs(cov - exact) <= 0.05 * t_ ** (2 * H)


def test_compound_poisson_count_mean():
    rate, T = 3.0, 2.0
    counts = [compound_poisson_jumps(ProcessSpec.compound_poisson(rate, T=T, n=3, seed=s))[0].size
              for s in range(10_000)]
    assert abs(np.mean(counts) - rate * T) <= 0.05 * rate * T


def test_compound_poisson_left_limits():
    spec = ProcessSpec.compound_poisson(4.0, n=257, seed=5)
    times, sizes = compound_poisson_jumps(spec)
    p = generate(spec)
    for k in (0, 100, 256):
        expected = sizes[times < p.times[k]].sum()
        assert p.values[k] == pytest.approx(expected, abs=1e-12)


def test_mixed_is_sum_of_components():
    spec = ProcessSpec.mixed([ProcessSpec.fbm(0.75, n=257), ProcessSpec.brownian(n=257),
                              ProcessSpec.compound_poisson(5.0, n=257)], seed=9)
    total = generate(spec)
    comps = generate_components(spec)
    np.testing.assert_allclose(total.values, sum(c.values for c in comps), rtol=0, atol=1e-14)
    # component seed is seed XOR index
    np.testing.assert_array_equal(comps[1].values, generate(ProcessSpec.brownian(n=257, seed=9 ^ 1)).values)


def test_spec_validation_and_json_roundtrip():
    with pytest.raises(ValidationError):
        generate(ProcessSpec.fbm(1.2))
    with pytest.raises(ValidationError):
        generate(ProcessSpec.compound_poisson(-1.0))
    with pytest.raises(ValidationError):
        ProcessSpec.mixed([ProcessSpec.fbm(0.7, n=9)]).validate()
    spec = ProcessSpec.mixed([ProcessSpec.fbm(0.7, n=129),
                              ProcessSpec.drifted(ProcessSpec.brownian(n=129), [0.0, 1.0, 0.5])], seed=4)
    back = ProcessSpec.from_json(spec.to_json())
    np.testing.assert_array_equal(generate(spec).values, generate(back).values)


def test_density_assumption_oracles():
    H = 0.75
    val = check_density_assumption(VarianceFunction(lambda t: t ** (2 * H), H), 1.0)
    assert val == pytest.approx(1.0 / (math.sqrt(2 * math.pi) * (1 - H)), abs=1e-6)
    assert check_density_assumption(VarianceFunction(lambda t: 1.0, 0.0), 1.0) == pytest.approx(
        1.0 / math.sqrt(2 * math.pi), abs=1e-9)
    with pytest.raises(AssumptionViolated):
        check_density_assumption(VarianceFunction(lambda t: t**2, 1.0), 1.0)
    with pytest.raises(AssumptionViolated):
        check_density_assumption(VarianceFunction(lambda t: t**2, 0.25), 1.0)


def test_holder_estimate_cases():
    t = uniform_grid(1.0, 1 << 10)
    assert holder_estimate(SampledPath(t, t.copy()))[0] >= 0.95
    assert holder_estimate(SampledPath(t, np.full_like(t, 2.0))) == (1.0, 0.0)
    est = [holder_estimate(generate(ProcessSpec.fbm(0.75, n=1 << 14, seed=s)))[0] for s in range(20)]
    assert 0.65 <= np.mean(est) <= 0.8
    with pytest.raises(ValidationError):
        holder_estimate(SampledPath(uniform_grid(1.0, 8), np.zeros(8)))


def test_csv_roundtrip_exact(tmp_path):
    p = generate(ProcessSpec.fbm(0.6, n=333, seed=1))
    f = tmp_path / "p.csv"
    write_csv(p, f)
    q = read_csv(f)
    np.testing.assert_array_equal(p.times, q.times)
    np.testing.assert_array_equal(p.values, q.values)
    buf = io.StringIO()
    write_csv(p, buf)
    assert buf.getvalue().splitlines()[0] == "t,value"


@given(st.lists(st.floats(-1e6, 1e6), min_size=6, max_size=40), st.integers(1, 5))
def test_subsample_keeps_endpoints(values, step):
    n = len(values)
    n = 1 + ((n - 1) // step) * step
    p = SampledPath(uniform_grid(1.0, n), np.array(values[:n]))
    q = p.subsample(step)
    assert q.times[-1] == p.times[-1] and q.values[0] == p.values[0]
