import warnings

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from cavitrap.coupling import DiscParams
from cavitrap.errors import DomainError, NumericalError
from cavitrap.kernels import stack_matrices
from cavitrap.mode_basis import C_LIGHT, CavityGeometry, ModeIndex, beam_params
from cavitrap.spectrum import ModeManifold, scan_branch
from cavitrap.tm1d import (Slab, SlabStack, cm_spring_oracle, find_resonance, resonance_shift,
                           stack_response, transmission_map, transmission_spectrum)
from cavitrap.trap import single_mode_springs

LAM = 1.55e-6


def _peak(stack, centre, span):
    res = minimize_scalar(lambda d: -transmission_spectrum(stack, [d])[0],
                          bounds=(centre - span, centre + span), method="bounded",
                          options={"xatol": 1e-6 * span})
    return res.x


def test_empty_cavity_peak_spacing():
    st = SlabStack.around(1e-3, LAM)
    span = 0.05 * st.fsr
    p0, p1 = _peak(st, 0.0, span), _peak(st, st.fsr, span)
    assert (p1 - p0) == pytest.approx(np.pi * C_LIGHT / st.L, rel=1e-6)
    assert transmission_spectrum(st, [0.0])[0] == pytest.approx(1.0, abs=1e-12)
    assert transmission_spectrum(st, [st.fsr / 2])[0] < 0.01


def test_energy_conservation():
    st = SlabStack.around(1e-3, LAM, [Slab(3.48, 110e-9, 1.3e-7)])
    w = st.omega_ref + np.linspace(-st.fsr, st.fsr, 301)
    t, r = stack_response(st, w)
    np.testing.assert_allclose(np.abs(t) ** 2 + np.abs(r) ** 2, 1.0, atol=1e-12)


def test_reciprocity_left_right():
    # incidence from the right equals incidence from the left on the mirrored stack
    slabs = [Slab(3.48, 110e-9, 1.3e-7), Slab(2.0, 50e-9, -2.1e-5)]
    st = SlabStack.around(1e-3, LAM, slabs)
    mirrored = SlabStack.around(1e-3, LAM, [Slab(s.n, s.t, -s.x0) for s in slabs])
    det = np.linspace(-st.fsr, st.fsr, 201)
    t1, _ = stack_response(st, st.omega_ref + det)
    t2, _ = stack_response(mirrored, st.omega_ref + det)
    np.testing.assert_allclose(np.abs(t1) ** 2, np.abs(t2) ** 2, atol=1e-12)


def test_transfer_matrix_unit_determinant():
    st = SlabStack.around(1e-3, LAM, [Slab(3.48, 110e-9, 1.3e-7)])
    k = (st.omega_ref + np.linspace(-st.fsr, st.fsr, 51)) / C_LIGHT
    M = stack_matrices(k, *st.layers(True))
    np.testing.assert_allclose(np.abs(np.linalg.det(M)), 1.0, atol=1e-12)


def test_silicon_slab_is_quarter_wave():
    assert 3.48 * 110e-9 == pytest.approx(LAM / 4, rel=0.02)

    def reflectivity(t):
        st = SlabStack(1e-3, (Slab(3.48, t, 0.0),), mirror_t=1.0)
        _, r = stack_response(st, [2 * np.pi * C_LIGHT / LAM])
        return abs(r[0]) ** 2

    thick = np.linspace(20e-9, 200e-9, 181)
    best = max(reflectivity(t) for t in thick)
    n2 = 3.48 ** 2
    assert best == pytest.approx(((n2 - 1) / (n2 + 1)) ** 2, rel=1e-3)
    assert reflectivity(110e-9) > 0.99 * best


def test_zero_slope_at_node_and_antinode():
    st = SlabStack.around(1e-3, LAM, [Slab(2.0, 50e-9, 0.0)])
    lam = 2 * st.L / st.eta_ref
    h = lam / 4000
    xs = np.linspace(0, lam / 2, 41)
    curve = resonance_shift(st, xs)
    max_slope = np.max(np.abs(np.gradient(curve, xs)))
    for x in (0.0, lam / 4):
        s = resonance_shift(st, [x - h, x, x + h])
        assert abs(s[2] - s[0]) / (2 * h) < 1e-4 * max_slope


def _thin_slab_curves(t, n=2.0):
    g = CavityGeometry(0.049, 0.025, 0.025)
    b = beam_params(g)
    eta = g.nearest_eta()
    xs = np.linspace(0, LAM / 2, 41)
    man = ModeManifold.from_modes(g, [ModeIndex(eta)])
    pt = scan_branch(g, b, DiscParams(n, t, 10 * b.sigma), man, "x0", xs).omegas[:, 0]
    tm = resonance_shift(SlabStack(g.L, (Slab(n, t, 0.0),), 0.3, eta), xs)
    return g, pt - pt.mean(), tm - tm.mean()


def test_thin_weak_slab_matches_perturbation_theory():
    g, pt, tm = _thin_slab_curves(10e-9)
    # alpha omega is below 0.05 of the free spectral range here
    assert np.ptp(tm) / g.fsr < 0.05
    assert np.max(np.abs(pt - tm)) < 0.02 * np.ptp(tm)


def test_fifty_nm_slab_within_few_percent():
    g, pt, tm = _thin_slab_curves(50e-9)
    assert np.max(np.abs(pt - tm)) < 0.05 * np.ptp(tm)


@pytest.mark.parametrize("t", [10e-9, 50e-9])
def test_spring_oracle_matches_single_mode_formula(t):
    g = CavityGeometry(0.049, 0.025, 0.025)
    b = beam_params(g)
    st = SlabStack(g.L, (Slab(2.0, t, 0.0),), 0.3, g.nearest_eta())
    K = cm_spring_oracle(st, 1.0)
    assert K.stable
    k_cm, _ = single_mode_springs(1.0, g, b, DiscParams(2.0, t, 10 * b.sigma))
    assert K.K == pytest.approx(k_cm, rel=0.05)


def test_spring_oracle_trivial_cases():
    st = SlabStack.around(1e-3, LAM, [Slab(2.0, 50e-9, 0.0)])
    assert cm_spring_oracle(st.moved(0.0), 2.0).K == pytest.approx(
        2 * cm_spring_oracle(st, 1.0).K, rel=1e-12)
    empty = SlabStack.around(1e-3, LAM, [Slab(1.0, 50e-9, 0.0)])
    assert abs(cm_spring_oracle(empty, 1.0).K) < 1e-6 * cm_spring_oracle(st, 1.0).K
    with pytest.raises(DomainError):
        cm_spring_oracle(st, -1.0)


def test_unstable_point_warns():
    st = SlabStack.around(1e-3, LAM, [Slab(2.0, 50e-9, LAM / 4)])
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        K = cm_spring_oracle(st, 1.0)
    assert not K.stable and K.K < 0
    assert any("stable trap point" in str(w.message) for w in rec)


def test_stack_validation():
    with pytest.raises(DomainError):
        SlabStack(-1.0)
    with pytest.raises(DomainError):
        SlabStack(1e-3, mirror_t=0.0)
    with pytest.raises(DomainError):
        SlabStack(1e-3, (Slab(2.0, 1e-6, 0.0), Slab(2.0, 1e-6, 0.5e-6)))
    with pytest.raises(DomainError):
        SlabStack(1e-3, (Slab(2.0, 1e-6, 0.5e-3),))


def test_missing_resonance_reported():
    st = SlabStack.around(1e-3, LAM)
    with pytest.raises(NumericalError):
        find_resonance(st, st.omega_ref + st.fsr / 2, span=1e-3 * st.fsr)


def test_transmission_map_shape_and_threads():
    st = SlabStack.around(1e-3, LAM, [Slab(3.48, 110e-9, 0.0)])
    xs = np.linspace(0, LAM / 2, 5)
    det = np.linspace(-st.fsr, st.fsr, 11)
    a = transmission_map(st, xs, det)
    assert a.shape == (5, 11)
    assert np.array_equal(a, transmission_map(st, xs, det, threads=2))
    assert np.all((a >= 0) & (a <= 1 + 1e-12))
