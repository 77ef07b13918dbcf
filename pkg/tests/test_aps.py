"""Per-difference and total density engines, tower, coordinates."""

import numpy as np
import pytest

from popdiff.aps import (
    ap_profile,
    from_coords,
    per_diff_density,
    perdiff_table_dense,
    to_coords,
    total_3ap_density,
    tower,
    tower_height,
)
from popdiff.domains import OVER_N, OVER_WINDOW, DensityFn, cyclic, interval
from popdiff.errors import DomainError
from popdiff.modelfn import build_model_fn


def brute_total(values):
    n = len(values)
    tot = 0.0
    for d in range(n):
        for x in range(n):
            tot += values[x] * values[(x + d) % n] * values[(x + 2 * d) % n]
    return tot / n**2


def test_constant_total():
    f = DensityFn(cyclic(9), np.full(9, 0.4))
    assert abs(total_3ap_density(f) - 0.4**3) < 1e-12


def test_point_mass_total():
    v = np.zeros(7)
    v[0] = 1.0
    f = DensityFn(cyclic(7), v)
    assert abs(total_3ap_density(f) - 1 / 49) < 1e-12


def test_model_total_exact():
    m = build_model_fn(0.25, 101)
    assert abs(total_3ap_density(m.fn) - 31 / 2048) < 1e-9


def test_spectral_vs_direct_total():
    rng = np.random.default_rng(0)
    for n in (15, 101, 255):
        f = DensityFn(cyclic(n), rng.uniform(0, 1, n))
        assert abs(total_3ap_density(f, "spectral") - total_3ap_density(f, "direct")) < 1e-9
        assert abs(total_3ap_density(f, "spectral") - brute_total(f.values)) < 1e-9


def test_per_diff_boost_profile():
    # one zero and four boosted points: nonzero differences leave 2 of 5 fibers
    alpha = 0.25
    v = np.full(5, alpha * (1 + 1 / 4))
    v[0] = 0.0
    f = DensityFn(cyclic(5), v)
    expect = alpha**3 * 50 / 64
    for d in range(1, 5):
        assert abs(per_diff_density(f, d) - expect) < 1e-12


def test_constant_per_diff():
    f = DensityFn(cyclic(5), np.full(5, 0.5))
    assert abs(per_diff_density(f, 3) - 1 / 8) < 1e-12


def test_model_per_diff_cross_check():
    m = build_model_fn(0.25, 101)
    dens = [per_diff_density(m.fn, d) for d in range(101)]
    # mean over nonzero d recovers the total minus the d=0 slot
    total = total_3ap_density(m.fn)
    assert abs(np.mean(dens) - total) < 1e-9
    cube = float((m.values**3).mean())
    assert abs(np.mean(dens[1:]) - (101 * total - cube) / 100) < 1e-9


def test_interval_normalizations():
    rng = np.random.default_rng(1)
    n = 31
    f = DensityFn(interval(n), rng.uniform(0, 1, n))
    for d in range(0, (n - 1) // 2 + 1):
        over_n = per_diff_density(f, d, OVER_N)
        over_w = per_diff_density(f, d, OVER_WINDOW)
        assert over_w >= over_n - 1e-15
        s = sum(f.values[x] * f.values[x + d] * f.values[x + 2 * d] for x in range(n - 2 * d))
        assert abs(over_n - s / n) < 1e-12
        assert abs(over_w - s / (n - 2 * d)) < 1e-12
    with pytest.raises(DomainError):
        per_diff_density(f, n // 2 + 1, OVER_N)
    with pytest.raises(DomainError):
        per_diff_density(f, 3)


def test_interval_zero_tail_profile():
    n = 20
    v = np.zeros(n)
    v[:10] = 0.7  # support in [1,10]
    f = DensityFn(interval(n), v)
    prof = ap_profile(f, OVER_N)
    for d in range(5, len(prof.densities)):
        assert prof.densities[d] == 0.0


def test_profile_mean_consistency():
    rng = np.random.default_rng(2)
    f = DensityFn(cyclic(101), rng.uniform(0, 1, 101))
    prof = ap_profile(f, path="dense")
    assert abs(prof.densities.mean() - total_3ap_density(f)) < 1e-9


def test_profile_sparse_matches_dense():
    placements = [(0.25, 101), (0.1, 1009)]
    for alpha, n in placements:
        m = build_model_fn(alpha, n)
        sparse = ap_profile(m.fn, path="sparse").densities
        dense = ap_profile(m.fn, path="dense").densities
        assert np.abs(sparse - dense).max() < 1e-8


def test_profile_constant():
    f = DensityFn(cyclic(7), np.full(7, 0.3))
    prof = ap_profile(f)
    assert np.abs(prof.densities - 0.3**3).max() < 1e-12


def test_dense_threads_deterministic():
    rng = np.random.default_rng(3)
    v = rng.uniform(0, 1, 5001)
    one = perdiff_table_dense(v, threads=1)
    four = perdiff_table_dense(v, threads=4)
    assert np.array_equal(one, four)


def test_tower():
    assert tower(0) == 1
    assert tower(3) == 16
    assert tower(4) == 65536
    assert tower_height(10**6) == 5
    assert tower_height(1) == 0
    assert tower_height(65536) == 4


def test_coords_roundtrip():
    assert to_coords(7, (3, 5)) == (1, 2)
    assert from_coords((0, 0), (3, 5)) == 0
    factors = (5, 15629)
    n = 5 * 15629
    rng = np.random.default_rng(4)
    xs = rng.integers(0, n, size=1000)
    ys = rng.integers(0, n, size=1000)
    for x, y in zip(xs, ys):
        x, y = int(x), int(y)
        assert from_coords(to_coords(x, factors), factors) == x
        cx, cy = to_coords(x, factors), to_coords(y, factors)
        summed = tuple((a + b) % m for a, b, m in zip(cx, cy, factors))
        assert from_coords(summed, factors) == (x + y) % n


def test_coords_noncoprime():
    with pytest.raises(ValueError):
        from_coords((1, 1), (4, 6))
