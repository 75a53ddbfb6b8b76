import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hnlslab import oracles as o

# frozen closed-form values
BAND_4_1 = 2 * (math.sqrt(5) - math.sqrt(3))          # 1.0080343...
B_N_ORIGIN = 2 + 4 * math.sqrt(2) + 4 * (math.sqrt(5) - math.sqrt(3))
HYPERBOLIC_N4 = 4 * sum(1 / (2 * i + 1) for i in range(8))


def test_frozen_band_value():
    assert BAND_4_1 == pytest.approx(1.0080343, abs=1e-7)
    assert o.xi_square_band_measure(4.0, 1.0) == pytest.approx(BAND_4_1, rel=1e-14)


def test_band_measure_edge_cases():
    assert o.xi_square_band_measure(-2.0, 1.0) == 0.0
    assert o.xi_square_band_measure(0.0, 1.0) == pytest.approx(2.0)
    assert o.xi_square_band_measure(0.5, 1.0) == pytest.approx(2 * math.sqrt(1.5))
    assert o.xi_square_band_measure(4.0, 1.0, clip=(0.0, 10.0)) == pytest.approx(BAND_4_1 / 2)
    with pytest.raises(ValueError):
        o.xi_square_band_measure(1.0, 0.0)


@given(st.floats(1e3, 1e12), st.floats(0.1, 10))
def test_band_measure_no_cancellation_for_large_levels(a, c):
    # 2 (sqrt(a+c) - sqrt(a-c)) ~ 2c / sqrt(a) to leading order
    v = o.xi_square_band_measure(a, c)
    assert v == pytest.approx(2 * c / math.sqrt(a), rel=1e-6 + (c / a) ** 2 * 10)


def test_frozen_B_N_at_origin():
    r = o.mes_B_N(0.0, 0, 1.0, 1)
    assert r.exact == pytest.approx(B_N_ORIGIN, rel=1e-14)
    assert r.consistent and r.precise


def test_frozen_hyperbolic_value():
    r = o.mes_A_N_hyperbolic(0.0, 0.0, 1, 1.0, 4)
    assert r.exact == pytest.approx(HYPERBOLIC_N4, rel=1e-14)
    assert r.extra["resonant"] == 0.0
    assert r.consistent


def test_hyperbolic_resonant_slice_reported():
    r = o.mes_A_N_hyperbolic(0.5, 1.0, 0, 1.0, 1, mc=False)
    assert r.extra["resonant"] == pytest.approx(3.0)  # xi1 in [-1, 2]
    assert o.mes_A_N_hyperbolic(5.0, 1.0, 0, 1.0, 1, mc=False).extra["resonant"] == 0.0


@pytest.mark.parametrize("n, tau, L, N, expected", [
    (0, 0.0, 1.0, 1, 2),
    (0, -1.0, 1.0, 1, 3),
    (3, 0.0, 4.0, 2, 1),
    (0, 100.0, 1.0, 1, 0),
])
def test_count_hyperbola_band(n, tau, L, N, expected):
    assert o.count_hyperbola_band(n, tau, L, N) == expected


def test_count_hyperbola_band_rejects_small_L():
    with pytest.raises(ValueError):
        o.count_hyperbola_band(0, 0.0, 0.5, 1)


@settings(max_examples=200)
@given(st.integers(0, 6), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.25, 4))
def test_parabolic_routes_agree(logN, u, v, w, c):
    N = 2 ** logN
    tau = u * (4 * N) ** 2
    xi = v * 2 * N
    n = int(round(w * 4 * N))
    a = o.parabolic_reduced(tau, xi, n, c, N)
    b = o.parabolic_direct(tau, xi, n, c, N)
    assert abs(a - b) <= 1e-12 * max(a, 1.0)


def test_parabolic_monte_carlo():
    r = o.mes_A_N_parabolic(-3.0, 0.7, 2, 1.0, 2, seed=3)
    assert r.exact == pytest.approx(r.extra["direct"], rel=1e-12)
    assert r.consistent and r.precise


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2), st.floats(-1, 1), st.integers(-1, 1), st.integers(0, 2 ** 32))
def test_B_N_monte_carlo_consistent(logN, u, w, seed):
    N = 2 ** logN
    r = o.mes_B_N(u * (2 * N) ** 2, w * N, 1.0, N, seed=seed)
    assert r.z_score <= 5.0


def test_level_shell_against_brute_force():
    spec = o.ShellSpec(2, (0.3, -0.2), 1.5, 1)
    r = o.mes_level_shell(spec, seed=11)
    h = 2e-5
    eta = np.arange(-8.5, 8.5, h) + h / 2
    total = 0.0
    for k in range(-8, 9):
        xi = eta + 0.3
        phi = np.abs((xi - 0.3) ** 2 - (k + 0.2) ** 2 - 1.5)
        inside = (phi >= 2) & (phi < 3) & (np.abs(xi) + abs(k) <= 8)
        total += inside.sum() * h
    assert r.exact == pytest.approx(total, abs=2e-3)
    assert r.consistent


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 12), st.floats(-5, 5))
def test_level_shells_tile_the_sublevel_set(j, r_off):
    spec = [o.ShellSpec(i, (0.0, 0.5), r_off, 1) for i in range(j + 1)]
    total = sum(o.mes_level_shell(s, mc=False).exact for s in spec)
    k, a, clo, chi = o._shell_strata(spec[0])
    direct = float(np.sum(o._band_measure(a, j + 1.0, clo, chi)))
    assert total == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_shell_spec_validation():
    with pytest.raises(ValueError):
        o.ShellSpec(-1, (0, 0), 0.0, 1)
    with pytest.raises(ValueError):
        o.ShellSpec(0, (0, 0), 0.0, 3)


def test_coarea():
    assert o.coarea_delta_mass(2.0) == math.pi
    assert o.coarea_delta_mass(-2.0) == 0.0
    assert o.coarea_thickened(1e6, 1e-9) == math.pi
    assert o.coarea_thickened(-0.5, 1.0) == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError):
        o.coarea_thickened(1.0, 0.0)


@given(st.floats(0, 1e8), st.floats(1e-12, 1e3))
def test_coarea_thickened_is_exactly_pi(a, eps):
    assert o.coarea_thickened(a, eps) == math.pi


def test_schur_sum_matches_pair_values_and_monte_carlo():
    inst = o.SchurInstance(3.0, 0.5, -0.5, 0.0, 0.5, 1)
    s = o.schur_shell_sum(inst)
    pairs = sum(o.schur_pair_value(inst, k, kp) for k in range(-8, 9) for kp in range(-8, 9))
    assert s == pytest.approx(pairs, rel=1e-12)
    est, se = o.schur_shell_mc(inst, n_per_pair=20000, seed=1)
    assert abs(est - s) <= 4 * se + 1e-3 * s


def test_schur_instance_validation():
    with pytest.raises(ValueError):
        o.SchurInstance(1.0, 0.0, 0.0, 0.25, 0.0, 1)


def test_hls_ratio():
    assert o.hls_ratio([1.0], [0.0, 1.0], 0.5, 4 / 3, 4 / 3) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        o.hls_ratio([1.0], [1.0], 0.5, 2.0, 2.0)
    with pytest.raises(ValueError):
        o.hls_ratio([-1.0], [1.0], 0.5, 4 / 3, 4 / 3)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.one_of(st.just(0.0), st.floats(1e-3, 10)), min_size=2, max_size=60), st.integers(0, 2 ** 32))
def test_hls_ratio_matches_direct_sum(a, seed):
    a = np.asarray(a)
    if a.max() == 0:
        a[0] = 1.0
    b = np.random.default_rng(seed).random(a.size) + 0.01
    alpha, p = 0.5, 4 / 3
    j = np.arange(a.size)
    d = np.abs(j[:, None] - j[None, :]).astype(float)
    ker = np.where(d > 0, np.where(d > 0, d, 1.0) ** -alpha, 0.0)
    direct = a @ ker @ b / (np.sum(a ** p) ** (1 / p) * np.sum(b ** p) ** (1 / p))
    assert o.hls_ratio(a, b, alpha, p, p) == pytest.approx(direct, rel=1e-10)


def test_make_rng_is_deterministic():
    a = o.make_rng(5, 1, 2).random(3)
    b = o.make_rng(5, 1, 2).random(3)
    c = o.make_rng(5, 1, 3).random(3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


@settings(max_examples=40)
@given(st.floats(-3, 3), st.floats(-2, 2), st.integers(-3, 3), st.floats(-0.5, 0.5))
def test_hyperbolic_measure_shift_invariance(tau, xi, n, delta):
    # xi1 -> xi1 + delta/2 maps the set for (tau, xi) onto the one for (tau - n delta/2, xi + delta)
    N = 64  # clip windows do not bind
    a = o.mes_A_N_hyperbolic(tau, xi, n, 1.0, N, mc=False).exact
    b = o.mes_A_N_hyperbolic(tau - 0.5 * n * delta, xi + delta, n, 1.0, N, mc=False).exact
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)
