import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hnlslab import solver
from hnlslab.lattice import (DomainSpec, PhysicalField, SpectralField, forward_transform,
                             inverse_transform, l2_norm)
from hnlslab.propagator import PDE_TIME_SCALE, evolve

DOM = DomainSpec(8.0, 64, 8, 1)


def bump_data(amp=0.2, dom=DOM):
    x = dom.x_grid()[:, None]
    y = dom.y_grid()[None, :]
    u = amp * np.exp(-x ** 2) * (1 + 0.3 * np.cos(2 * np.pi * y)) * np.exp(0.5j * x)
    return forward_transform(PhysicalField(dom, u))


def test_config_validation():
    with pytest.raises(ValueError):
        solver.SolveConfig(0, 1, 1e-3, 1.0, DOM)
    with pytest.raises(ValueError):
        solver.SolveConfig(1, 2, 1e-3, 1.0, DOM)
    with pytest.raises(ValueError):
        solver.SolveConfig(1, 1, 0.0, 1.0, DOM)
    with pytest.raises(ValueError):
        solver.SolveConfig(1, 1, 1e-3, -1.0, DOM)
    with pytest.raises(ValueError):
        solver.SolveConfig(2, 1, 1e-3, 1.0, DOM, dealias_pad=2)
    cfg = solver.SolveConfig(2, -1, 1e-3, 0.5, DOM)
    assert cfg.dealias_pad == 3 and cfg.n_steps == 500
    assert cfg.to_dict()["domain"] == DOM.to_dict()


def test_coarse_step_warns():
    with pytest.warns(UserWarning, match="coarse"):
        solver.SolveConfig(1, 1, 0.1, 1.0, DOM)


def test_zero_data_stays_zero():
    cfg = solver.SolveConfig(1, 1, 1e-2, 0.1, DOM)
    tr = solver.integrate(SpectralField.zeros(DOM), cfg)
    assert all(not np.any(F.coeffs) for F in tr.states)
    assert tr.drifts()["mass_drift"] == 0.0


def test_linear_only_equals_evolve():
    u0 = bump_data()
    cfg = solver.SolveConfig(1, 1, 1e-2, 0.2, DOM, nonlinear=False)
    tr = solver.integrate(u0, cfg, stride=20)
    np.testing.assert_allclose(tr.states[-1].coeffs, evolve(u0, PDE_TIME_SCALE * 0.2).coeffs, atol=1e-12)


@pytest.mark.parametrize("k, sign", [(1, 1), (1, -1), (2, 1)])
def test_mass_and_energy_conserved(k, sign):
    u0 = bump_data(0.3)
    cfg = solver.SolveConfig(k, sign, 1e-3, 0.2, DOM)
    tr = solver.integrate(u0, cfg, stride=50)
    dr = tr.drifts()
    assert dr["mass_drift"] < 1e-12
    assert dr["hamiltonian_drift"] < 1e-5
    assert len(tr.times) == 5


def test_time_reversal():
    u0 = bump_data(0.3)
    fwd = solver.integrate(u0, solver.SolveConfig(1, 1, 1e-3, 0.1, DOM), stride=1000, monitors=False)
    back = solver.integrate(fwd.states[-1], solver.SolveConfig(1, 1, -1e-3, -0.1, DOM),
                            stride=1000, monitors=False)
    assert l2_norm(back.states[-1] - u0) < 1e-11


def test_second_order_convergence():
    u0 = bump_data(0.5)

    def run(dt):
        cfg = solver.SolveConfig(1, 1, dt, 0.2, DOM)
        return solver.integrate(u0, cfg, stride=10 ** 9, monitors=False).states[-1]

    ref = run(1.25e-4)
    ratio = l2_norm(run(2e-3) - ref) / l2_norm(run(1e-3) - ref)
    assert 3.2 < ratio < 4.8


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.integers(1, 3), st.sampled_from([1, -1]))
def test_phase_step_preserves_modulus(dt, k, sign):
    f = inverse_transform(bump_data(0.7))
    g = solver.nonlinear_phase_step(f, dt, k, sign)
    np.testing.assert_allclose(np.abs(g.values), np.abs(f.values), atol=1e-14)


def test_phase_step_solves_the_ode():
    f = PhysicalField(DOM, np.full((DOM.n_x, DOM.n_y), 0.5 + 0j))
    g = solver.nonlinear_phase_step(f, 0.2, 1, 1)
    assert g.values[0, 0] == pytest.approx(0.5 * np.exp(-1j * 0.2 * 0.25))


def test_nonlinearity_matches_pointwise_for_band_limited_product():
    # |u|^2 u of a single mode is the same mode: no aliasing to worry about
    c = np.zeros((DOM.n_x, DOM.n_y), complex)
    c[2, 1] = 1.0
    F = SpectralField(DOM, c)
    u = inverse_transform(F).values
    G = solver.nonlinearity(F, 1)
    expected = forward_transform(PhysicalField(DOM, np.abs(u) ** 2 * u))
    np.testing.assert_allclose(G.coeffs, expected.coeffs, atol=1e-12)


def test_picard_converges_for_small_data():
    u0 = bump_data(0.05)
    cfg = solver.SolveConfig(1, 1, 1e-2, 1.0, DOM)
    pt = solver.picard_iterate(u0, 0.5, 4, cfg)
    assert not pt.diverged
    assert pt.residuals[-1] < pt.residuals[0]
    assert len(pt.iterates) == 5


def test_picard_argument_checks():
    cfg = solver.SolveConfig(1, 1, 1e-2, 1.0, DOM)
    with pytest.raises(ValueError):
        solver.picard_iterate(bump_data(), 2.0, 4, cfg)
    with pytest.raises(ValueError):
        solver.picard_iterate(bump_data(), 0.5, 1, cfg)
    with pytest.raises(ValueError):
        solver.picard_lipschitz(bump_data(), bump_data(), 0.5, cfg)


def test_lipschitz_quotient_scales_with_size():
    # for the cubic map the quotient is quadratic in the data size
    cfg = solver.SolveConfig(1, 1, 1e-2, 1.0, DOM)
    u = bump_data(0.05)
    q1 = solver.picard_lipschitz(u, u.scale(1.01), 0.5, cfg)
    q2 = solver.picard_lipschitz(u.scale(2.0), u.scale(2.02), 0.5, cfg)
    assert q2 / q1 == pytest.approx(4.0, rel=0.02)


def test_scattering_trace_is_symmetric():
    u0 = bump_data(0.1)
    cfg = solver.SolveConfig(1, 1, 1e-2, 0.5, DOM)
    tr = solver.integrate(u0, cfg, stride=10)
    sc = solver.scattering_profile(tr, 0.0)
    assert np.allclose(sc.pullback_norm_diffs, sc.pullback_norm_diffs.T)
    assert np.all(np.diag(sc.pullback_norm_diffs) == 0)
    assert sc.sup_diff(0.2, 0.5) <= sc.sup_diff()
    with pytest.raises(ValueError):
        solver.scattering_profile(tr, 0.0, times=[0.15])


def test_linear_scattering_profile_is_constant():
    u0 = bump_data(0.1)
    cfg = solver.SolveConfig(1, 1, 1e-2, 0.5, DOM, nonlinear=False)
    tr = solver.integrate(u0, cfg, stride=10)
    assert solver.scattering_profile(tr, 0.0).sup_diff() < 1e-13


def test_domain_mismatch_rejected():
    cfg = solver.SolveConfig(1, 1, 1e-2, 0.1, DOM)
    with pytest.raises(ValueError):
        solver.integrate(SpectralField.zeros(DomainSpec(8.0, 128, 8, 1)), cfg)
