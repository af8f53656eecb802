import numpy as np
import pytest

from cavitrap.coupling import perturbation_matrix
from cavitrap.errors import DomainError, NumericalError
from cavitrap.mode_basis import ModeIndex, unperturbed_frequency
from cavitrap.spectrum import (ManifoldSolver, ModeManifold, SpectrumBranch, _solve,
                               characterize_crossing, crossing_scan, follow_nearest,
                               longitudinal_manifold, multimode_convergence, scan_branch,
                               solve_manifold, two_mode_closed_form, two_mode_manifold)
from cavitrap.trap import family_crossing


def test_single_mode_shift(membrane_cavity):
    g, b, d = membrane_cavity
    m = ModeIndex(g.nearest_eta())
    man = ModeManifold.from_modes(g, [m])
    om, vec = solve_manifold(g, b, d, man)
    V = perturbation_matrix(g, b, d, [m]).V[0, 0]
    w = man.omegas[0]
    assert om[0] == pytest.approx(w * (1 - V / 2), rel=1e-10)
    assert abs(vec[0, 0]) == pytest.approx(1.0)


def test_decoupled_degenerate_pair():
    om, _ = _solve(np.diag([1e-6, 1e-6]), np.array([1e15, 1e15]), "generalized")
    assert om[0] == om[1]
    om, _ = _solve(np.diag([1e-6, 1e-6]), np.array([1e15, 1e15]), "linear")
    assert om[0] == om[1]


def test_two_mode_solver_matches_closed_form(membrane_cavity):
    g, b, d = membrane_cavity
    man = two_mode_manifold(g)
    for x0 in np.linspace(0.12e-6, 0.145e-6, 11):
        disc = d.with_(x0=x0, theta_z=2e-4)
        om, _ = solve_manifold(g, b, disc, man)
        lo, hi = two_mode_closed_form(g, b, disc, man)
        assert om[0] == pytest.approx(lo, rel=1e-8)
        assert om[1] == pytest.approx(hi, rel=1e-8)


def test_linear_solver_first_order_agreement(membrane_cavity):
    g, b, d = membrane_cavity
    man = two_mode_manifold(g)
    disc = d.with_(x0=0.13e-6, theta_z=2e-4)
    a, _ = solve_manifold(g, b, disc, man, "generalized")
    c, _ = solve_manifold(g, b, disc, man, "linear")
    # second-order terms are of size omega V**2
    np.testing.assert_allclose(a, c, rtol=1e-9)


def test_unknown_method(membrane_cavity):
    g, b, d = membrane_cavity
    with pytest.raises(DomainError):
        solve_manifold(g, b, d, two_mode_manifold(g), method="cubic")


def test_indefinite_metric_reported():
    V = np.array([[-1.0, 0.0], [0.0, 0.2]])
    with pytest.raises(NumericalError, match="condition"):
        _solve(V, np.array([1.0, 1.1]), "generalized")


def test_manifold_validation(membrane_cavity):
    g, _, _ = membrane_cavity
    with pytest.raises(DomainError):
        ModeManifold.from_modes(g, [ModeIndex(10), ModeIndex(10)])
    with pytest.raises(DomainError):
        ModeManifold.from_modes(g, [])
    with pytest.raises(DomainError, match="window"):
        ModeManifold.from_modes(g, [ModeIndex(10), ModeIndex(12)], window=g.fsr)
    man = longitudinal_manifold(g, ModeIndex(100), 2, ((0, 0), (1, 0)))
    assert len(man) == 10
    assert man.modes[5] == ModeIndex(97, 1, 0)


def test_branches_periodic_in_half_wavelength(membrane_cavity):
    g, b, d = membrane_cavity
    lam = 2 * np.pi / b.k
    man = two_mode_manifold(g)
    xs = np.linspace(-0.2e-6, 0.2e-6, 9)
    a = scan_branch(g, b, d, man, "x0", xs)
    c = scan_branch(g, b, d, man, "x0", xs + lam / 2)
    np.testing.assert_allclose(np.sort(a.omegas, 1), np.sort(c.omegas, 1), rtol=1e-14)


def test_transparent_disc_gives_bare_frequencies(membrane_cavity):
    g, b, d = membrane_cavity
    man = two_mode_manifold(g)
    br = scan_branch(g, b, d.with_(n_index=1.0), man, "theta_y", np.linspace(0, 5e-3, 5))
    for p in range(5):
        np.testing.assert_allclose(np.sort(br.omegas[p]), np.sort(man.omegas), rtol=1e-15)


def test_grid_must_be_monotone(membrane_cavity):
    g, b, d = membrane_cavity
    with pytest.raises(DomainError):
        scan_branch(g, b, d, two_mode_manifold(g), "x0", [0.0, 1e-7, 0.5e-7])


def test_tracking_overlaps_high_away_from_crossing(membrane_cavity):
    g, b, d = membrane_cavity
    br = scan_branch(g, b, d.with_(theta_z=2e-4), two_mode_manifold(g), "x0",
                     np.linspace(-0.05e-6, 0.06e-6, 23))
    assert np.all(br.overlaps > 0.9)


@pytest.mark.parametrize("coord, grid", [("x0", np.linspace(0, 1.55e-6 / 4, 61)),
                                         ("theta_y", np.linspace(0, 10e-3, 61))])
def test_symmetry_forced_degeneracy(membrane_cavity, coord, grid):
    g, b, d = membrane_cavity
    man = two_mode_manifold(g)
    solver = ManifoldSolver(g, b, d, man, coord)
    loc, _ = family_crossing(solver, grid, man.modes[0], man.modes[1])
    om, _ = solver(loc)
    assert (om[1] - om[0]) / g.fsr < 1e-10


def _synthetic(G1, G2, gamma, xc=0.3, w0=10.0, n=81, span=2.0, centre=None):
    centre = xc if centre is None else centre
    xi = np.linspace(centre - span, centre + span, n)
    gp, gm = (G1 + G2) / 2, (G1 - G2) / 2
    root = np.sqrt(gm ** 2 * (xi - xc) ** 2 + gamma ** 2)
    om = np.stack([w0 + gp * (xi - xc) - root, w0 + gp * (xi - xc) + root], axis=1)
    return SpectrumBranch("x0", xi, om, np.zeros((n, 2, 0)), None)


def test_fit_recovers_symmetric_crossing():
    br = _synthetic(1.5, -1.5, 0.05)
    rep = characterize_crossing(br, (0, 1))
    assert rep.G_plus == pytest.approx(0.0, abs=1e-9)
    assert rep.Gamma == pytest.approx(0.05, rel=1e-6)
    assert rep.G_minus == pytest.approx(1.5, rel=1e-6)
    assert rep.location == pytest.approx(0.3, abs=1e-9)
    assert rep.curvature == pytest.approx(1.5 ** 2 / 0.05, rel=1e-5)


def test_fit_recovers_asymmetric_crossing():
    br = _synthetic(2.0, -0.5, 0.1)
    rep = characterize_crossing(br, (0, 1))
    assert rep.G_plus == pytest.approx(0.75, rel=1e-6)
    assert sorted([rep.G1, rep.G2]) == pytest.approx([-0.5, 2.0], rel=1e-6)


def test_fit_rejects_boundary_minimum():
    br = _synthetic(1.0, -1.0, 0.1, xc=-3.0, centre=0.0)
    with pytest.raises(NumericalError):
        characterize_crossing(br, (0, 1))


def test_gap_law_and_curvature(membrane_cavity):
    g, b, d = membrane_cavity
    man = two_mode_manifold(g)
    disc = d.with_(theta_z=2e-4)
    solver = ManifoldSolver(g, b, disc, man, "x0")
    rep = crossing_scan(solver, np.linspace(0.125e-6, 0.142e-6, 9))
    V = perturbation_matrix(g, b, disc.with_(x0=rep.location), man.modes).V
    assert rep.gap == pytest.approx(man.omegas[0] * abs(V[0, 1]), rel=0.01)
    # finite-difference second derivative of the upper branch as oracle
    h = 0.2 * rep.Gamma / rep.G_minus
    up = [solver(rep.location + s * h)[0][1] for s in (-1, 0, 1)]
    fd = (up[0] - 2 * up[1] + up[2]) / h ** 2
    assert rep.curvature == pytest.approx(fd, rel=0.02)


def test_gap_linear_in_tilt(membrane_cavity):
    g, b, d = membrane_cavity
    man = two_mode_manifold(g)
    tilts = np.array([1e-4, 2e-4, 3e-4])
    gaps = []
    for thz in tilts:
        solver = ManifoldSolver(g, b, d.with_(theta_z=thz), man, "theta_y")
        gaps.append(crossing_scan(solver, np.linspace(6.8e-3, 7.8e-3, 9)).gap)
    gaps = np.array(gaps)
    slope = tilts @ gaps / (tilts @ tilts)
    r2 = 1 - np.sum((gaps - slope * tilts) ** 2) / np.sum((gaps - gaps.mean()) ** 2)
    assert r2 > 0.999


def test_follow_nearest():
    vals = [[0.0, 1.0], [0.1, 0.9], [0.8, 0.2]]
    np.testing.assert_allclose(follow_nearest(vals, 0.95), [1.0, 0.9, 0.8])


def test_weak_disc_ladder_converged(membrane_cavity):
    # central resonance branch of the 50-nm SiN disc, +-2 against +-100 modes
    g, b, d = membrane_cavity
    xs = np.linspace(0, 1.55e-6 / 2, 9)
    res = multimode_convergence(g, b, d, ModeIndex(g.nearest_eta()), [2, 100], xs,
                                window=(-0.5, 0.5))
    assert res.max_shift_fsr[0] < 1e-3


def test_ladder_truncation_shrinks_with_thickness(membrane_cavity):
    g, b, d = membrane_cavity
    xs = np.linspace(0, 1.55e-6 / 2, 9)
    shifts = [multimode_convergence(g, b, d.with_(t=t), ModeIndex(g.nearest_eta()),
                                    [2, 100], xs, window=(-0.5, 0.5)).max_shift_fsr[0]
              for t in (10e-9, 20e-9)]
    assert shifts[0] < 1e-4
    # second order in the coupling: doubling the thickness roughly quadruples it
    assert 3.0 < shifts[1] / shifts[0] < 12.0



def test_convergence_rejects_unsorted_sizes(membrane_cavity):
    g, b, d = membrane_cavity
    with pytest.raises(DomainError):
        multimode_convergence(g, b, d, ModeIndex(g.nearest_eta()), [5, 2], [0.0, 1e-7])


def test_threads_do_not_change_results(membrane_cavity):
    g, b, d = membrane_cavity
    man = two_mode_manifold(g)
    xs = np.linspace(0, 2e-7, 7)
    a = scan_branch(g, b, d.with_(theta_z=1e-4), man, "x0", xs)
    c = scan_branch(g, b, d.with_(theta_z=1e-4), man, "x0", xs, threads=3)
    assert np.array_equal(a.omegas, c.omegas)


def test_reference_frequency_default(membrane_cavity):
    g, b, d = membrane_cavity
    s = ManifoldSolver(g, None, d, two_mode_manifold(g), "x0")
    assert s.beam.sigma == pytest.approx(b.sigma)
    with pytest.raises(DomainError):
        ManifoldSolver(g, b, d, two_mode_manifold(g), "phi")
    assert unperturbed_frequency(g, ModeIndex(g.nearest_eta())) > 0
