import numpy as np
import pytest
from scipy import integrate
from scipy.special import eval_hermite, factorial

from cavitrap.errors import DomainError
from cavitrap.mode_basis import (C_LIGHT, BeamParams, CavityGeometry, ModeIndex, beam_params,
                                 mode_field, mode_frequencies, normalized_hermite,
                                 unperturbed_frequency, waist_radius)


def test_hermite_zero_order_constant():
    for chi in (-2.0, 0.0, 0.7, 5.0):
        assert normalized_hermite(0, chi) == pytest.approx(np.pi ** -0.25, rel=1e-15)
    assert np.pi ** -0.25 == pytest.approx(0.7511, abs=5e-5)


def test_hermite_first_order_odd():
    assert normalized_hermite(1, 0.0) == 0.0


def test_hermite_matches_physicists_polynomials():
    chi = np.linspace(-4, 4, 33)
    for n in range(15):
        ref = eval_hermite(n, chi) / np.sqrt(2.0 ** n * factorial(n) * np.sqrt(np.pi))
        np.testing.assert_allclose(normalized_hermite(n, chi), ref, rtol=1e-11, atol=1e-13)


def test_hermite_norm_by_quadrature(gh_rule):
    x, w = gh_rule
    assert np.sum(w * normalized_hermite(3, x) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_hermite_orthonormal_up_to_12(gh_rule):
    x, w = gh_rule
    H = np.array([normalized_hermite(n, x) for n in range(13)])
    gram = (H * w) @ H.T
    np.testing.assert_allclose(gram, np.eye(13), atol=1e-10)


def test_hermite_large_order_stays_finite():
    v = normalized_hermite(300, np.linspace(-20, 20, 11))
    assert np.all(np.isfinite(v))


def test_hermite_rejects_negative_order():
    with pytest.raises(ValueError):
        normalized_hermite(-1, 0.0)


def test_mode_index_validation():
    with pytest.raises(ValueError):
        ModeIndex(0)
    with pytest.raises(ValueError):
        ModeIndex(5, -1, 0)
    assert ModeIndex(8, 1, 0).label == "TEM10_8"


def test_free_spectral_range_exact():
    g = CavityGeometry(0.035, 0.025, 0.025)
    for mu, nu in ((0, 0), (1, 0), (2, 3)):
        d = unperturbed_frequency(g, ModeIndex(101, mu, nu)) - unperturbed_frequency(
            g, ModeIndex(100, mu, nu))
        assert d == pytest.approx(np.pi * C_LIGHT / g.L, rel=1e-12)


def test_transverse_offset_is_congruent_with_gouy_formula():
    # g = -0.4: the physical branch arccos(-0.4) differs from arccos(0.4) by a
    # whole number of FSRs only after the family offset, so compare modulo FSR
    g = CavityGeometry(0.035, 0.025, 0.025)
    off = (unperturbed_frequency(g, ModeIndex(100, 1, 0))
           - unperturbed_frequency(g, ModeIndex(100, 0, 0))) / g.fsr
    assert off == pytest.approx(np.arccos(-0.4) / np.pi, rel=1e-12)
    assert (off + np.arccos(0.4) / np.pi) % 1.0 == pytest.approx(0.0, abs=1e-12)


def test_planar_limit_has_no_transverse_offset():
    g = CavityGeometry(0.035, np.inf, np.inf)
    a = unperturbed_frequency(g, ModeIndex(100, 0, 0))
    b = unperturbed_frequency(g, ModeIndex(100, 2, 1))
    assert a == b


def test_unstable_geometry_rejected():
    g = CavityGeometry(0.06, 0.025, 0.025)
    with pytest.raises(DomainError):
        unperturbed_frequency(g, ModeIndex(10))
    with pytest.raises(DomainError):
        waist_radius(g)


def test_mode_frequencies_vectorized():
    g = CavityGeometry(0.035, 0.025, 0.025)
    modes = [ModeIndex(40), ModeIndex(39, 1, 0), ModeIndex(41, 0, 2)]
    np.testing.assert_allclose(mode_frequencies(g, modes),
                               [unperturbed_frequency(g, m) for m in modes], rtol=1e-15)


def _symmetric_waist(L, R, lam):
    return np.sqrt(lam / (2 * np.pi) * np.sqrt(L * (2 * R - L)))


@pytest.mark.parametrize("L, expect", [(0.035, 75e-6), (0.049, 42e-6)])
def test_waist_examples(L, expect):
    g = CavityGeometry(L, 0.025, 0.025, 1.55e-6)
    w = waist_radius(g)
    assert w == pytest.approx(_symmetric_waist(L, 0.025, 1.55e-6), rel=1e-12)
    assert w == pytest.approx(expect, rel=0.02)


def test_confocal_waist():
    lam, L = 1.064e-6, 0.1
    g = CavityGeometry(L, L, L, lam)
    assert waist_radius(g) ** 2 == pytest.approx(lam * L / (2 * np.pi), rel=1e-12)


def test_asymmetric_waist_from_q_parameter():
    # independent oracle: self-consistent Gaussian beam of a half-symmetric cavity
    lam, L, R = 1.55e-6, 0.02, 0.05
    g = CavityGeometry(L, np.inf, R, lam)
    zr = np.sqrt(L * (R - L))
    assert waist_radius(g) == pytest.approx(np.sqrt(lam * zr / np.pi), rel=1e-12)


def test_node_of_standing_wave():
    g = CavityGeometry(0.035, 0.025, 0.025)
    m = ModeIndex(g.nearest_eta())
    b = beam_params(g)
    x = (np.pi / 2 - np.pi * m.eta / 2) / b.k
    assert mode_field(g, m, x, 0.0, 0.0, b) == pytest.approx(0.0, abs=1e-9 * mode_field(
        g, m, 0.0, 0.0, 0.0, b))


@pytest.mark.parametrize("mu, nu", [(0, 0), (1, 0), (2, 1)])
def test_mode_field_normalized(mu, nu):
    L = 0.01
    g = CavityGeometry(L, 0.025, 0.025, 1.55e-6)
    eta = 40
    beam = BeamParams(waist_radius(g), eta * np.pi / L)
    m = ModeIndex(eta, mu, nu)
    s = beam.sigma
    lim = 8 * s
    transverse, _ = integrate.dblquad(
        lambda z, y: mode_field(g, m, 0.0, y, z, beam) ** 2 / np.cos(np.pi * eta / 2) ** 2,
        -lim, lim, -lim, lim, epsabs=1e-14, epsrel=1e-12)
    # longitudinal factor: integral of cos^2 over the cavity is L/2 for k L = eta pi
    xs = np.linspace(-L / 2, L / 2, 200001)
    longi = integrate.simpson(np.cos(beam.k * xs + np.pi * eta / 2) ** 2, x=xs)
    assert transverse * longi == pytest.approx(1.0, abs=1e-8)


def test_mode_field_parity():
    g = CavityGeometry(0.035, 0.025, 0.025)
    b = beam_params(g)
    rng = np.random.default_rng(3)
    x, y, z = rng.normal(size=3) * np.array([1e-7, 3e-5, 3e-5])
    for mu, nu in ((1, 0), (0, 1), (2, 1), (3, 3)):
        m = ModeIndex(100, mu, nu)
        f = mode_field(g, m, x, y, z, b)
        assert mode_field(g, m, x, -y, z, b) == pytest.approx((-1) ** mu * f, rel=1e-13)
        assert mode_field(g, m, x, y, -z, b) == pytest.approx((-1) ** nu * f, rel=1e-13)


def test_per_mode_beam_parameters():
    g = CavityGeometry(0.035, 0.025, 0.025)
    m = ModeIndex(g.nearest_eta() + 50)
    b = beam_params(g, m, per_mode=True)
    assert b.k == pytest.approx(unperturbed_frequency(g, m) / C_LIGHT)
    assert b.sigma == pytest.approx(waist_radius(g, wavelength=2 * np.pi / b.k))
