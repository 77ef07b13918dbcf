"""Product-group construction: levels, verification, certificates."""

import numpy as np
import pytest

from popdiff.aps import perdiff_table_dense
from popdiff.errors import InfeasibleError, RetriesExhausted
from popdiff.modelfn import CUBE_MOMENT_FACTOR, TRIPLE_DENSITY_FACTOR, build_model_fn
from popdiff.product import (
    ProductParams,
    build_level1,
    construct_product,
    feasibility,
    random_modify_level,
    verify_level,
    _model_lambda_table,
)

ALPHA = 0.25


def test_feasibility_examples():
    rep = feasibility(ProductParams(alpha=ALPHA, epsilon=8e-3, factors=(5,)))
    m1 = [c for c in rep.checks if c.name == "m1-window"][0]
    assert m1.status == "pass"  # eps^-1/3 = 5 exactly

    rep = feasibility(
        ProductParams(alpha=ALPHA, epsilon=20.0**-9, factors=(5,), mode="strict")
    )
    m1 = [c for c in rep.checks if c.name == "m1-window"][0]
    assert m1.status == "fail"

    rep = feasibility(ProductParams(alpha=ALPHA, epsilon=1e-3, factors=(5, 15)))
    assert rep.fatal  # 15 is not prime


def test_feasibility_desk_waives():
    rep = feasibility(ProductParams(alpha=ALPHA, epsilon=1e-3, factors=(5, 15629)))
    assert not rep.fatal
    statuses = {c.name: c.status for c in rep.checks}
    assert statuses["epsilon-window"] == "waived"  # eps far above the strict max


def test_level1_exact():
    st = build_level1(ALPHA, 5)
    assert np.allclose(st.values, [0, 5 / 16, 5 / 16, 5 / 16, 5 / 16])
    assert abs(st.values.mean() - ALPHA) < 1e-12
    expect = ALPHA**3 * 50 / 64
    assert np.abs(st.density_table[1:] - expect).max() < 1e-12
    # closed form equals alpha^3 (1 - (3 m - 1)/(m-1)^3)
    assert abs(expect - ALPHA**3 * (1 - 14 / 64)) < 1e-15
    cube = float((st.values**3).mean())
    assert abs(cube - 25 / 1024) < 1e-12
    assert cube < ALPHA**3 * (1 + 3 / 5)


def test_level1_m3_kills_everything():
    st = build_level1(0.25, 3)
    assert np.abs(st.density_table[1:]).max() < 1e-12


def test_level1_range_error():
    with pytest.raises(InfeasibleError):
        build_level1(0.9, 5)  # 0.9 * 1.25 > 1


def test_modify_structure_and_mean():
    st = build_level1(ALPHA, 5)
    rng = np.random.default_rng(0)
    st2 = random_modify_level(st, 31, rng, mu_next=0.5)
    n_prev, m = 5, 31
    g = build_model_fn(st.alpha_prime, m)
    for w in range(n_prev):
        fiber = st2.values[np.arange(st2.n) % n_prev == w]
        # fiber order follows the canonical labelling; reindex by coordinate
        xs = np.flatnonzero(np.arange(st2.n) % n_prev == w)
        ys = xs % m
        fiber = fiber[np.argsort(ys)]
        if st2.modified[w]:
            a, b = int(st2.coset_a[w]), int(st2.coset_b[w])
            expect = g.values[(a * np.arange(m) + b) % m]
            assert np.abs(fiber - expect).max() < 1e-12
            assert abs(fiber.mean() - st.alpha_prime) < 1e-12
        else:
            assert np.abs(fiber - st.values[w]).max() < 1e-12
    assert abs(st2.values.mean() - ALPHA) < 1e-12


def test_modify_identity_reparametrization():
    # (a,b)=(1,0) lays the profile down verbatim
    st = build_level1(ALPHA, 5)
    rng = np.random.default_rng(3)
    st2 = random_modify_level(st, 31, rng, mu_next=0.3)
    w = int(np.flatnonzero(st2.modified)[0])
    st2.coset_a[w], st2.coset_b[w] = 1, 0
    g = build_model_fn(st.alpha_prime, 31)
    xs = np.flatnonzero(np.arange(st2.n) % 5 == w)
    vals = st2.values.copy()
    vals[xs] = g.values[xs % 31]
    assert abs(vals[xs].mean() - st.alpha_prime) < 1e-12


def test_fiber_mean_invariant_under_all_maps():
    g = build_model_fn(0.3125, 31)
    y = np.arange(31)
    for a in (1, 2, 17, 30):
        for b in (0, 5, 30):
            assert abs(g.values[(a * y + b) % 31].mean() - 0.3125) < 1e-12


def test_verify_level_table_matches_bruteforce():
    st = build_level1(ALPHA, 5)
    for m, seed in ((31, 0), (7, 1), (101, 2)):
        if m == 7:
            base = build_level1(0.2, 5)
        else:
            base = st
        rng = np.random.default_rng(seed)
        st2 = random_modify_level(base, m, rng, mu_next=0.7)
        brute = perdiff_table_dense(st2.values)
        assert np.abs(brute - st2.density_table).max() < 1e-10


def test_three_level_table_matches_bruteforce():
    st = build_level1(0.2, 5)
    rng = np.random.default_rng(8)
    st2 = random_modify_level(st, 7, rng, mu_next=0.7)
    st3 = random_modify_level(st2, 11, rng, mu_next=0.4)
    assert st3.n == 385
    assert abs(st3.values.mean() - 0.2) < 1e-12
    brute = perdiff_table_dense(st3.values)
    assert np.abs(brute - st3.density_table).max() < 1e-10


def test_lift_invariance_under_smoothness():
    # differences sharing a smooth base d' have identical densities across lifts
    st = build_level1(ALPHA, 5)
    rng = np.random.default_rng(11)
    st2 = random_modify_level(st, 31, rng, mu_next=0.7)
    n_prev, m = 5, 31
    table = st2.density_table
    from popdiff.modelfn import model_support, smooth_tuple_ok

    supp = model_support(m)
    for dprime in range(1, n_prev):
        lifts = [d for d in range(st2.n) if d % n_prev == dprime]
        vals = table[lifts]
        # check smoothness of every coset triple along this base difference
        all_smooth = True
        for w in range(n_prev):
            legs = [(w + j * dprime) % n_prev for j in (0, 1, 2)]
            a = [int(st2.coset_a[l]) for l in legs if st2.modified[l]]
            if len(a) >= 2 and not smooth_tuple_ok(supp, a, m).ok:
                all_smooth = False
        if all_smooth:
            assert vals.max() - vals.min() < 1e-12
            assert abs(vals[0] - st.density_table[dprime]) < 1e-12


def test_table_sampled_check_at_acceptance_size():
    # the structural table must agree with direct per-difference computation
    # at the full desk size; 300 sampled differences incl. the worst one
    st = build_level1(ALPHA, 5)
    rng = np.random.default_rng(42)
    st2 = random_modify_level(st, 15629, rng, mu_next=0.8)
    v = st2.values
    n = st2.n
    picks = set(int(x) for x in np.random.default_rng(1).integers(1, n, 300))
    picks.add(int(st2.density_table[1:].argmax()) + 1)
    picks.update(k * 5 for k in range(1, 6))  # a few diagonal differences
    for d in picks:
        direct = float(np.mean(v * np.roll(v, -d) * np.roll(v, -2 * d)))
        assert abs(direct - st2.density_table[d]) < 1e-10, d


def test_verify_level_pass_and_fail():
    st = build_level1(ALPHA, 5)
    verdict = verify_level(st, 8e-3)
    assert verdict.passed  # 50/64 <= 1 - eps

    flat = build_level1(ALPHA, 5)
    flat.values = np.full(5, ALPHA)
    flat.density_table = perdiff_table_dense(flat.values)
    verdict = verify_level(flat, 1e-3)
    assert not verdict.passed
    assert len(verdict.violations) == 4  # every nonzero difference fails


def test_mean_and_cube_invariants_across_levels():
    st = build_level1(ALPHA, 5)
    ap = st.alpha_prime
    rng = np.random.default_rng(5)
    st2 = random_modify_level(st, 101, rng, mu_next=0.4)
    assert abs(st2.values.mean() - ALPHA) < 1e-12
    cube = float((st2.values**3).mean())
    assert cube <= ap**3 * (1 + 2 * max(st2.mu_effective, 1 / 5)) + 1e-12
    # exact accounting: each modified fiber adds (53/32 - 1) alpha'^3
    expect = float((st.values**3).mean()) + st2.mu_effective * (CUBE_MOMENT_FACTOR - 1) * ap**3
    assert abs(cube - expect) < 1e-10


def test_fiber_average_law():
    # the rng-average of a modified fiber's density at any fixed nonzero
    # difference is the mean of the profile's off-zero densities, which sits
    # below (31/32) alpha'^3
    ap = 0.3125
    m = 101
    lam = _model_lambda_table(ap, m)
    exact_mean = lam[1:].mean()
    assert exact_mean <= TRIPLE_DENSITY_FACTOR * ap**3 + 1e-12
    rng = np.random.default_rng(9)
    g = build_model_fn(ap, m)
    d = 17
    draws = rng.integers(1, m, size=10**4)
    mc = lam[(draws * d) % m].mean()
    sigma = lam[1:].std() / np.sqrt(10**4)
    assert abs(mc - exact_mean) <= 4 * sigma


def test_construct_s1_deterministic():
    params = ProductParams(alpha=ALPHA, epsilon=8e-3, factors=(5,))
    f1, cert1 = construct_product(params, seed=42)
    f2, cert2 = construct_product(params, seed=42)
    assert np.array_equal(f1.values, f2.values)
    assert cert1.to_dict() == cert2.to_dict()
    assert cert1.conclusions["max_offdiag_le_target"]
    assert abs(cert1.max_offdiag_density - ALPHA**3 * 50 / 64) < 1e-12
    # the boost profile's cube moment genuinely exceeds (3/2) alpha^3 at m1=5
    assert not cert1.conclusions["mean_cube_le_3_2_alpha3"]


def test_construct_two_level_reports_failure():
    # no choice of modification passes the target at these desk factors; the
    # retry loop must exhaust and surface the best measured attempt
    params = ProductParams(alpha=ALPHA, epsilon=1e-3, factors=(5, 101))
    with pytest.raises(RetriesExhausted) as info:
        construct_product(params, seed=1, max_retries_per_level=4)
    log = info.value.log
    assert log["level"] == 2
    assert log["best_verdict"].max_offdiag > ALPHA**3
    assert log["retries"][-1]["attempts"] == 4


def test_construct_infeasible_factors():
    with pytest.raises(InfeasibleError):
        construct_product(
            ProductParams(alpha=ALPHA, epsilon=1e-3, factors=(5, 15)), seed=0
        )


def test_strict_mode_insufficient_points():
    # strict mode refuses to clamp the coset budget
    st = build_level1(ALPHA, 5)
    with pytest.raises(InfeasibleError):
        random_modify_level(st, 31, np.random.default_rng(0), mu_next=2.0, clamp=False)
