import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqedfeedback.core import (AmplitudeState, ContinuousModeGrid, DiscreteModeSet, derive_params,
                               initial_state, symmetrize_check, total_norm)

finite_pos = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


def test_kappa_from_fig2_coupling():
    p = derive_params(gamma=1.0, g0=0.5, c=1.0)
    assert p.kappa == pytest.approx(0.3926990817, abs=1e-10)
    assert p.kappa == math.pi / 8


def test_fig3_caption_fixes_unit_speed():
    p = derive_params(gamma=1.0, g0=0.5, c=1.0, delta0=50.0, L=0.0314)
    assert p.tau == pytest.approx(0.0628)
    assert p.phase == pytest.approx(3.14)
    assert abs(p.phase - math.pi) < 2e-3


def test_decoupled_waveguide_has_zero_kappa():
    assert derive_params(gamma=1.0, g0=0.0).kappa == 0.0


def test_gamma_rate_needs_cavity_length():
    p = derive_params(gamma=1.0, g0=0.1, l=0.01, r=0.999)
    assert p.Gamma == pytest.approx(1.0 * 0.001 / 0.02)
    assert derive_params(gamma=1.0, g0=0.1).Gamma == 0.0


@pytest.mark.parametrize("bad", [
    dict(gamma=0.0), dict(gamma=-1.0), dict(c=0.0), dict(delta0=-5.0), dict(L=0.0),
    dict(r=1.5), dict(r=-0.1), dict(g0=-0.1), dict(gamma=float("nan")), dict(L=float("inf")),
])
def test_derive_params_rejects_invalid(bad):
    kw = dict(gamma=1.0, g0=0.5)
    kw.update(bad)
    with pytest.raises(ValueError):
        derive_params(**kw)


@given(gamma=finite_pos, g0=finite_pos, c=finite_pos, L=finite_pos)
def test_derived_fields_exact_and_pure(gamma, g0, c, L):
    a = derive_params(gamma=gamma, g0=g0, c=c, L=L)
    b = derive_params(gamma=gamma, g0=g0, c=c, L=L)
    assert a == b
    assert a.kappa == math.pi * g0 ** 2 / (2.0 * c)
    assert a.tau == 2.0 * L / c


def test_params_are_immutable():
    p = derive_params(gamma=1.0, g0=0.5)
    with pytest.raises(AttributeError):
        p.kappa = 1.0  # type: ignore[misc]


@given(k_min=st.floats(0, 50), width=st.floats(1e-2, 200), n=st.integers(2, 2000))
def test_trapezoid_weights_sum_to_width(k_min, width, n):
    g = ContinuousModeGrid(k_min, k_min + width, n)
    assert g.weights.sum() == pytest.approx(width, rel=1e-12)
    assert np.all(np.diff(g.values) > 0)
    assert np.allclose(np.diff(g.values), g.dk)


def test_grid_validation_and_delay_resolution():
    with pytest.raises(ValueError):
        ContinuousModeGrid(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        ContinuousModeGrid(-1.0, 1.0, 10)
    with pytest.raises(ValueError):
        ContinuousModeGrid(2.0, 1.0, 10)
    p = derive_params(gamma=1.0, g0=0.5, L=0.005)
    g = ContinuousModeGrid.default(p)
    assert (g.k_min, g.k_max, g.n_k) == (0.0, 100.0, 512)
    assert g.resolves_delay(p)
    assert not ContinuousModeGrid(0, 100, 16).resolves_delay(p.with_changes(L=5.0))
    with pytest.raises(ValueError):
        g.values[0] = 1.0


@given(q_min=st.integers(0, 50), span=st.integers(0, 80), L=st.floats(1e-2, 10))
def test_discrete_comb_spacing_and_antinodes(q_min, span, L):
    m = DiscreteModeSet(q_min, q_min + span, L)
    if span:
        assert np.allclose(np.diff(m.values), math.pi / L, rtol=1e-12)
    assert np.allclose(np.sin(m.values * L) ** 2, 1.0, atol=1e-12)
    assert np.allclose(np.sin(m.values * L), m.parity, atol=1e-9)


def test_norm_of_trivial_states():
    grid = ContinuousModeGrid(0, 10, 32)
    assert total_norm(initial_state(32), grid) == 1.0
    z = initial_state(32).replace(c_e=0j)
    assert total_norm(z, grid) == 0.0
    with pytest.raises(ValueError):
        total_norm(initial_state(31), grid)


def test_norm_weights_double_sum_with_product_measure():
    grid = ContinuousModeGrid(0, 1, 5)
    w = grid.weights
    M = np.ones((5, 5), dtype=complex)
    s = AmplitudeState(0.0, 0j, 0j, np.zeros(5, complex), np.zeros(5, complex), M)
    assert total_norm(s, grid) == pytest.approx(w.sum() ** 2)
    assert total_norm(s, DiscreteModeSet(0, 4, 1.0)) == pytest.approx(25.0)


def test_symmetrize_check_examples():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    s = a + a.T
    assert symmetrize_check(s) == 0.0
    s[1, 4] += 1e-6
    assert symmetrize_check(s) == pytest.approx(1e-6, rel=1e-6)
    with pytest.raises(ValueError):
        symmetrize_check(np.zeros((2, 3)))


def test_state_shape_check_and_populations():
    s = initial_state(4, with_aux=True)
    s.check_shape(4)
    with pytest.raises(ValueError):
        s.check_shape(5)
    pops = s.populations()
    assert pops["pop_e"] == 1.0 and sum(pops.values()) == 1.0
