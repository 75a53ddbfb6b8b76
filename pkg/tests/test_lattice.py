import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from hnlslab.lattice import (BandOverflowError, DomainSpec, PhysicalField, SpectralField, bump_phi,
                             check_dyadic, critical_index, cube_predicate, field_from_bytes,
                             field_from_json, field_to_bytes, field_to_json, forward_transform,
                             inverse_transform, l2_norm, mixed_l4n_l2xi_norm, project_dyadic,
                             project_leq, project_set, sobolev_norm, spatial_lp_norm)


def test_domain_rejects_bad_sizes():
    with pytest.raises(ValueError):
        DomainSpec(8.0, 48, 8, 1)
    with pytest.raises(ValueError):
        DomainSpec(-1.0, 64, 8, 1)
    with pytest.raises(ValueError):
        DomainSpec(8.0, 64, 8, 3)


def test_domain_band_overflow_names_the_fix():
    with pytest.raises(BandOverflowError, match="n_x >= 128"):
        DomainSpec(8.0, 64, 16, 4)
    with pytest.raises(BandOverflowError, match="n_y"):
        DomainSpec(8.0, 64, 4, 2)


def test_for_band_is_valid():
    d = DomainSpec.for_band(4, t_max=1.0)
    assert d.x_period >= 8 * 4 + 8
    assert d.x_band >= 8 and d.y_band >= 8


def test_grid_spacings(small_domain):
    d = small_domain
    assert d.dxi == pytest.approx(1 / d.x_period)
    assert d.dx * d.n_x == pytest.approx(d.x_period)
    assert d.x_grid()[0] == -d.x_period / 2
    assert d.xi()[1] == pytest.approx(d.dxi)
    assert d.k_index()[-1] == -1


def test_check_dyadic_and_critical_index():
    assert check_dyadic(8) == 8
    for bad in (0, 3, 2.5, -4):
        with pytest.raises(ValueError):
            check_dyadic(bad)
    assert critical_index(1) == 0.0
    assert critical_index(2) == 0.5
    with pytest.raises(ValueError):
        critical_index(0)


def test_bump_values():
    assert bump_phi(0.0) == 1.0
    assert bump_phi(1.0) == 1.0
    assert bump_phi(1.5) == pytest.approx(0.5, abs=1e-15)
    assert bump_phi(2.0) == 0.0
    assert bump_phi(-3.0) == 0.0
    total, _ = integrate.quad(bump_phi, -2, 2, points=[-1, 1], epsabs=1e-13)
    assert total == pytest.approx(3.0, abs=1e-10)


@given(st.floats(-3, 3))
def test_bump_even_monotone_in_unit_interval(x):
    v = bump_phi(x)
    assert 0.0 <= v <= 1.0
    assert v == bump_phi(-x)
    assert bump_phi(abs(x) + 0.01) <= v + 1e-15


@given(st.floats(1.0, 2.0))
def test_bump_symmetric_about_midpoint(x):
    assert bump_phi(x) + bump_phi(3.0 - x) == pytest.approx(1.0, abs=1e-14)


def test_transform_round_trip_and_plancherel(random_field):
    f = inverse_transform(random_field)
    back = forward_transform(f)
    np.testing.assert_allclose(back.coeffs, random_field.coeffs, atol=1e-12)
    assert spatial_lp_norm(f, 2) == pytest.approx(l2_norm(random_field), rel=1e-12)


def test_transform_of_gaussian_matches_continuum():
    d = DomainSpec(16.0, 256, 4, 1)
    x = d.x_grid()[:, None]
    f = PhysicalField(d, np.broadcast_to(np.exp(-np.pi * x ** 2), (d.n_x, d.n_y)).astype(complex))
    F = forward_transform(f)
    xi = d.xi()
    np.testing.assert_allclose(F.coeffs[:, 0].real, np.exp(-np.pi * xi ** 2), atol=1e-12)
    np.testing.assert_allclose(F.coeffs[:, 1:], 0.0, atol=1e-12)


def test_projectors(random_field):
    P = project_leq(random_field, 1)
    PP = project_leq(P, 1)
    assert not np.allclose(P.coeffs, PP.coeffs)  # smooth cutoff is not idempotent
    pieces = project_dyadic(random_field, 1).coeffs + project_dyadic(random_field, 2).coeffs
    np.testing.assert_allclose(pieces, project_leq(random_field, 2).coeffs, atol=1e-14)
    S = cube_predicate((0.0, 0.0), 1.0)
    Q = project_set(random_field, S)
    np.testing.assert_array_equal(project_set(Q, S).coeffs, Q.coeffs)
    nz = np.argwhere(Q.coeffs != 0)
    assert set(random_field.domain.k_index()[nz[:, 1]]) == {0}


def test_projector_band_check(random_field):
    with pytest.raises(BandOverflowError):
        project_leq(random_field, 4)


def test_norms(small_domain):
    d = small_domain
    c = np.zeros((d.n_x, d.n_y), complex)
    c[0, 1] = 2.0
    c[0, 2] = 1.0
    F = SpectralField(d, c)
    assert l2_norm(F) == pytest.approx(math.sqrt(5 * d.dxi))
    assert sobolev_norm(F, 0.0) == pytest.approx(l2_norm(F))
    assert sobolev_norm(F, 1.0) == pytest.approx(math.sqrt((4 * 2 + 1 * 5) * d.dxi))
    assert mixed_l4n_l2xi_norm(F) == pytest.approx(((4 * d.dxi) ** 2 + d.dxi ** 2) ** 0.25)


def test_field_arithmetic(random_field):
    z = SpectralField.zeros(random_field.domain)
    np.testing.assert_array_equal((random_field + z).coeffs, random_field.coeffs)
    np.testing.assert_array_equal((random_field - random_field).coeffs, z.coeffs)
    np.testing.assert_allclose(random_field.scale(2).coeffs, 2 * random_field.coeffs)
    with pytest.raises(ValueError):
        random_field.coeffs[0, 0] = 1.0


def test_shape_mismatch_rejected(small_domain):
    with pytest.raises(ValueError):
        SpectralField(small_domain, np.zeros((4, 4)))


def test_byte_container_round_trip(random_field):
    buf = field_to_bytes(random_field)
    assert buf[:4] == b"HNLF"
    assert len(buf) == 28 + 16 * random_field.coeffs.size
    G = field_from_bytes(buf)
    assert G.domain == random_field.domain
    np.testing.assert_array_equal(G.coeffs, random_field.coeffs)
    with pytest.raises(ValueError):
        field_from_bytes(b"XXXX" + buf[4:])


def test_json_round_trip(random_field):
    G = field_from_json(field_to_json(random_field))
    assert G.domain == random_field.domain
    np.testing.assert_array_equal(G.coeffs, random_field.coeffs)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sobolev_norm_monotone_in_s(seed):
    d = DomainSpec(4.0, 32, 8, 2)
    rng = np.random.default_rng(seed)
    F = SpectralField(d, rng.standard_normal((32, 8)) + 0j)
    assert sobolev_norm(F, 0.0) <= sobolev_norm(F, 0.5) <= sobolev_norm(F, 1.0)
