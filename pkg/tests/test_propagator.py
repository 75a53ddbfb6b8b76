import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hnlslab.lattice import DomainSpec, SpectralField, l2_norm
from hnlslab.propagator import (PDE_TIME_SCALE, QuadratureError, SymbolKind, dispersive_bound_scan,
                                dispersive_stability, duhamel, evolve, kernel, kernel_ni,
                                kernel_ni_profile, kernel_ns, multiplier)

times = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=25, deadline=None)
@given(times, st.sampled_from(list(SymbolKind)))
def test_evolve_is_unitary(random_field, t, kind):
    assert l2_norm(evolve(random_field, t, kind)) == pytest.approx(l2_norm(random_field), rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(times, times, st.sampled_from(list(SymbolKind)))
def test_group_law(random_field, t, s, kind):
    a = evolve(evolve(random_field, t, kind), s, kind)
    b = evolve(random_field, t + s, kind)
    np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-9)


def test_multiplier_phases(small_domain):
    d = small_domain
    m = multiplier(d, 0.25)
    xi, k = d.xi(), d.k_index()
    assert m[1, 0] == pytest.approx(np.exp(-2j * np.pi * 0.25 * xi[1] ** 2))
    assert m[0, 1] == pytest.approx(np.exp(2j * np.pi * 0.25 * k[1] ** 2))
    mixed = multiplier(d, 0.25, SymbolKind.MIXED)
    assert mixed[1, 1] == pytest.approx(np.exp(-2j * np.pi * 0.25 * xi[1] * k[1]))
    assert PDE_TIME_SCALE == pytest.approx(2 * math.pi)


def test_evolve_at_zero_time_is_identity(random_field):
    assert evolve(random_field, 0.0) is random_field


@pytest.mark.parametrize("N", [1, 2, 4, 8])
def test_kernel_at_origin(N):
    assert kernel_ni(0.0, 0.0, N) == pytest.approx(3 * N, rel=1e-10)
    # sum_k phi(k/N): 2N+1 unit terms plus the symmetric bridge pairs, which sum to 1 each
    assert kernel_ns(0.0, 0.0, N).real == pytest.approx(3 * N, rel=1e-12)


def test_kernel_ns_period_one_in_t_and_y():
    a = kernel_ns(0.3, 0.2, 4)
    assert kernel_ns(1.3, 0.2, 4) == pytest.approx(a, abs=1e-10)
    assert kernel_ns(0.3, 1.2, 4) == pytest.approx(a, abs=1e-10)


def test_kernel_ni_against_fresnel_limit():
    # for a bump of scale N and |x| well inside the cone, |K_NI| ~ (2 |t|)^{-1/2}
    N, t = 16, 0.05
    val = kernel_ni(t, 0.0, N)
    assert abs(val) == pytest.approx(1 / math.sqrt(2 * t), rel=0.05)


def test_kernel_ni_profile_matches_pointwise():
    x, v = kernel_ni_profile(0.01, 4)
    idx = np.linspace(0, x.size - 1, 7).astype(int)
    direct = kernel_ni(0.01, x[idx], 4)
    np.testing.assert_allclose(v[idx], direct, atol=1e-8 * 12)


def test_kernel_ni_reports_error():
    val, err = kernel_ni(0.1, 0.5, 2, return_error=True)
    assert err <= 1e-8
    with pytest.raises(QuadratureError):
        kernel_ni(0.1, 0.5, 2, rtol=1e-30, max_halvings=1)


def test_kernel_sample_bounds():
    ks = kernel(0.25, 0.0, 0.0, 4)
    assert ks.bound_allt == pytest.approx(8.0)
    assert ks.bound_short == pytest.approx(4.0)
    assert ks.ratio_allt == pytest.approx(abs(ks.value) / 8.0)


def test_dispersive_scan_structure():
    rep = dispersive_bound_scan(4, [0.01, 0.1, 0.5, 1.0])
    assert len(rep["rows"]) == 4
    assert rep["C1"] == max(r["ratio1"] for r in rep["rows"])
    assert rep["C2"] == max(r["ratio2"] for r in rep["rows"] if r["t"] <= 0.25)
    with pytest.raises(ValueError):
        dispersive_bound_scan(4, [0.0, 0.5])
    stab = dispersive_stability([rep, rep])
    assert stab["stable"] and stab["C1_spread"] == 1.0


def test_duhamel_constant_source_exact():
    d = DomainSpec(4.0, 16, 4, 1)
    c = np.zeros((16, 4), complex)
    c[1, 1] = 1.0
    c[2, 0] = 0.5j
    G = SpectralField(d, c)
    dtau, t = 1e-3, 0.4
    src = [G] * 401
    out, err = duhamel(src, dtau, t, return_error=True)
    a = 2 * np.pi * (d.k_index()[None, :] ** 2 - d.xi()[:, None] ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(a == 0, t, (np.exp(1j * a * t) - 1) / (1j * np.where(a == 0, 1, a)))
    exact = c * factor
    assert l2_norm(out - G.with_coeffs(exact)) < 2e-6
    assert err < 1e-5


def test_duhamel_rejects_off_grid_time(small_domain):
    src = [SpectralField.zeros(small_domain)] * 3
    with pytest.raises(ValueError):
        duhamel(src, 0.1, 0.15)
    with pytest.raises(ValueError):
        duhamel(src, 0.1, 0.5)
    assert not np.any(duhamel(src, 0.1, 0.0).coeffs)


@pytest.mark.parametrize("kind", list(SymbolKind))
def test_evolve_commutes_with_projection(random_field, kind):
    from hnlslab.lattice import project_leq
    a = evolve(project_leq(random_field, 1), 0.37, kind)
    b = project_leq(evolve(random_field, 0.37, kind), 1)
    np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-14)


def test_y_only_data_is_time_periodic():
    d = DomainSpec(4.0, 32, 8, 1)
    c = np.zeros((32, 8), complex)
    c[0, [1, 2, 7]] = [1.0, 0.5j, -0.25]
    F = SpectralField(d, c)
    np.testing.assert_allclose(evolve(F, 1.0).coeffs, c, atol=1e-12)


def test_kernel_matches_propagated_grid_delta():
    from hnlslab.lattice import inverse_transform, project_leq
    N, t = 2, 0.1
    d = DomainSpec(64.0, 512, 16, N)
    delta = SpectralField(d, np.ones((d.n_x, d.n_y), complex))
    u = inverse_transform(evolve(project_leq(delta, N), t)).values
    for i, j in [(256, 0), (260, 3), (250, 11), (300, 5)]:
        x, y = d.x_grid()[i], d.y_grid()[j]
        ref = kernel_ni(t, x, N) * kernel_ns(t, y, N)
        assert abs(u[i, j] - ref) < 1e-6 * abs(kernel_ni(0.0, 0.0, N) * kernel_ns(0.0, 0.0, N))
