"""Optical trap stiffness, trapped-oscillator response and coupling diagnostics."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.constants import c as C_LIGHT, hbar as HBAR
from scipy.optimize import brentq

from .coupling import DiscParams, derive
from .errors import DomainError, NumericalError
from .mode_basis import BeamParams, CavityGeometry, ModeIndex, beam_params, unperturbed_frequency
from .spectrum import (CrossingReport, ManifoldSolver, ModeManifold, crossing_scan,
                       longitudinal_manifold, two_mode_manifold)

__all__ = [
    "OscillatorParams",
    "TrapReport",
    "QuarticReport",
    "single_mode_springs",
    "enhancement_ratios",
    "ultimate_traps",
    "per_photon_bounds",
    "anti_damping_rate",
    "trapped_oscillator",
    "photon_number",
    "disc_mass",
    "trap_frequencies",
    "quartic_scan",
    "trap_report",
    "family_crossing",
    "multimode_trap_ratio",
    "MultimodeRatio",
    "RHO_SI",
]

RHO_SI = 2330.0  # kg/m^3


@dataclass(frozen=True)
class OscillatorParams:
    """Mechanical oscillator: mass (kg), intrinsic angular frequency and Q.

    ``I`` defaults to ``m r**2 / 4`` (thin disc about a diameter) when a radius
    is given.
    """

    m: float
    omega_mat: float
    Q_mat: float
    I: float | None = None
    r: float | None = None

    def __post_init__(self):
        if not (self.m > 0 and self.omega_mat > 0 and self.Q_mat > 0):
            raise DomainError("mass, frequency and Q must be positive")

    @property
    def K_mat(self) -> float:
        return self.m * self.omega_mat ** 2

    @property
    def inertia(self) -> float:
        if self.I is not None:
            return self.I
        if self.r is None:
            raise DomainError("moment of inertia needs I or r")
        return self.m * self.r ** 2 / 4.0


@dataclass
class TrapReport:
    """Summary of trap quantities for one operating point (SI units)."""

    P: float
    K_cm1: float
    K_tm1: float
    ratio_cm2: float
    ratio_tm2: float
    K_ultimate_gamma: float
    K_ultimate_F: float
    G_max: float
    omega_cm: float
    omega_tm: float
    anti_damping: float
    mass: float
    Gamma: float
    warnings: list = field(default_factory=list)

    UNITS = {
        "P": "W", "K_cm1": "N/m", "K_tm1": "N*m/rad", "ratio_cm2": "1", "ratio_tm2": "1",
        "K_ultimate_gamma": "N/m", "K_ultimate_F": "N/m", "G_max": "rad/s/m",
        "omega_cm": "rad/s", "omega_tm": "rad/s", "anti_damping": "1/s", "mass": "kg",
        "Gamma": "rad/s",
    }

    def as_lines(self) -> list:
        out = []
        for key, val in asdict(self).items():
            if key == "warnings":
                continue
            out.append(f"{key} = {val:.6g} {self.UNITS[key]}")
            if key in ("omega_cm", "omega_tm"):
                out.append(f"{key.replace('omega', 'f')}_Hz = {val / (2 * np.pi):.6g} Hz")
        out.extend(f"warning: {w}" for w in self.warnings)
        return out


def single_mode_springs(P: float, geometry: CavityGeometry, beam: BeamParams | None,
                        disc: DiscParams):
    """TEM00 translational (N/m) and torsional (N m/rad) spring constants."""
    if P < 0:
        raise DomainError("power must be non-negative")
    beam = beam_params(geometry) if beam is None else beam
    d = derive(disc, beam, geometry.L)
    k_cm = 4.0 * geometry.L * P * d.alpha * d.tau * beam.k ** 2 / C_LIGHT
    k_tm = geometry.L * P * d.alpha * d.tau * beam.k ** 2 * beam.sigma ** 2 / C_LIGHT
    return k_cm, k_tm


def enhancement_ratios(geometry: CavityGeometry, disc: DiscParams, Gamma: float,
                       beam: BeamParams | None = None):
    """Two-mode over single-mode stiffness for translation and torsion."""
    if not Gamma > 0:
        raise DomainError("Gamma must be positive; a closed gap invalidates the adiabatic model")
    beam = beam_params(geometry) if beam is None else beam
    d = derive(disc, beam, geometry.L)
    lam = 2.0 * np.pi / beam.k
    cm = geometry.fsr / Gamma * (disc.n_index ** 2 - 1.0) * d.tau * d.t_theta / lam
    return cm, cm / np.e


def ultimate_traps(P: float, lam: float, L: float, Gamma: float, F: float):
    """Gap- and finesse-limited stiffness bounds (N/m) and maximal slope ``G_max``."""
    if min(lam, L, Gamma, F) <= 0 or P < 0:
        raise DomainError("inputs must be positive")
    k_gamma = 16.0 * np.pi * P / (lam * L * Gamma)
    k_f = 32.0 * P * F / (lam * C_LIGHT)
    g_max = 4.0 * np.pi * C_LIGHT / (lam * L)
    return k_gamma, k_f, g_max


def per_photon_bounds(G_minus: float, omega_m: float, omega_0: float, Q_gamma: float):
    """Adiabatic and finesse limits on stiffness per intracavity photon (N/m)."""
    adiabatic = HBAR * G_minus ** 2 / omega_m
    finesse = 2.0 * HBAR * G_minus ** 2 * Q_gamma / omega_0
    return adiabatic, finesse


def anti_damping_rate(omega_m: float, t_d: float) -> float:
    """Retardation-induced anti-damping ``omega_m**2 t_d / 2`` (1/s)."""
    if t_d < 0:
        raise DomainError("delay must be non-negative")
    return omega_m ** 2 * t_d / 2.0


def trapped_oscillator(osc: OscillatorParams, K_opt: float):
    """Frequency and quality factor with an added lossless optical spring."""
    if K_opt < 0:
        raise DomainError("optical spring must be non-negative")
    omega = np.sqrt(osc.omega_mat ** 2 + K_opt / osc.m)
    Q = osc.Q_mat * (osc.K_mat + K_opt) / osc.K_mat
    return omega, Q


def photon_number(P: float, L: float, omega_0: float) -> float:
    """Intracavity photons for circulating power ``P``: ``2 P L / (hbar omega_0 c)``."""
    return 2.0 * P * L / (HBAR * omega_0 * C_LIGHT)


def disc_mass(t: float, r: float, rho: float = RHO_SI) -> float:
    return rho * np.pi * r ** 2 * t


def trap_frequencies(K_cm: float, K_tm: float, m: float, I: float):
    """Rigid-body translational and torsional trap frequencies (rad/s)."""
    return np.sqrt(K_cm / m), np.sqrt(K_tm / I)


# --- quartic coupling ----------------------------------------------------------

@dataclass
class QuarticReport:
    """Even-polynomial fits of the upper branch near the symmetric point.

    ``c2`` and ``c4`` are in rad/s per unit**2 and per unit**4 of the scan
    coordinate; ``c1`` is the odd slope (should vanish).  ``quartic_point`` is
    the tilt where ``c2`` changes sign, or ``None``.
    """

    coordinate: str
    theta_z: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c4: np.ndarray
    labels: list
    quartic_point: float | None
    half_window: float


def _classify(c2, c4, w):
    if abs(c2) < 1e-3 * abs(c4) * w ** 2:
        return "quartic"
    return "double-well" if c2 < 0 else "quadratic"


def _upper_fit(solver, half_window, n=41):
    xs = np.linspace(-half_window, half_window, n)
    up = np.array([solver(x)[0][-1] for x in xs])
    up = up - up[n // 2]
    u = xs / half_window
    A = np.vstack([np.ones_like(u), u, u ** 2, u ** 3, u ** 4]).T
    coef, *_ = np.linalg.lstsq(A, up, rcond=None)
    return coef[1] / half_window, coef[2] / half_window ** 2, coef[4] / half_window ** 4


def default_half_window(geometry: CavityGeometry, beam: BeamParams, coordinate: str) -> float:
    if coordinate == "x0":
        return geometry.lambda_ref / 40.0
    # angle giving the same phase excursion across the beam
    return 1.0 / (4.0 * np.sqrt(2.0) * beam.k * beam.sigma)


def quartic_scan(geometry: CavityGeometry, beam: BeamParams | None, disc_template: DiscParams,
                 theta_z_grid, coordinate: str = "x0", manifold: ModeManifold | None = None,
                 half_window: float | None = None, threads: int = 1) -> QuarticReport:
    """Classify the upper branch around the symmetric point for each ``theta_z``."""
    if coordinate not in ("x0", "theta_y"):
        raise DomainError("quartic scan runs along x0 or theta_y")
    beam = beam_params(geometry) if beam is None else beam
    manifold = two_mode_manifold(geometry) if manifold is None else manifold
    w = default_half_window(geometry, beam, coordinate) if half_window is None else half_window
    grid = np.asarray(theta_z_grid, dtype=float)

    def fit_at(thz):
        disc = disc_template.with_(theta_z=float(thz), **{coordinate: 0.0})
        return _upper_fit(ManifoldSolver(geometry, beam, disc, manifold, coordinate), w)

    from .spectrum import _map
    fits = np.array(_map(fit_at, grid, threads))
    c1, c2, c4 = fits.T
    labels = [_classify(a, b, w) for a, b in zip(c2, c4)]
    point = None
    s = np.sign(c2)
    for p in range(grid.size - 1):
        if s[p] == 0:
            point = float(grid[p])
            break
        if s[p] * s[p + 1] < 0:
            point = float(brentq(lambda t: fit_at(t)[1], grid[p], grid[p + 1], xtol=1e-9))
            break
    return QuarticReport(coordinate, grid, c1, c2, c4, labels, point, w)


def trap_report(P: float, geometry: CavityGeometry, disc: DiscParams, Gamma: float,
                finesse: float | None = None, beam: BeamParams | None = None,
                mass: float | None = None, omega_mech: float | None = None) -> TrapReport:
    """Collect single-mode, two-mode and ultimate trap figures for one operating point."""
    beam = beam_params(geometry) if beam is None else beam
    k_cm, k_tm = single_mode_springs(P, geometry, beam, disc)
    r_cm, r_tm = enhancement_ratios(geometry, disc, Gamma, beam)
    lam = 2.0 * np.pi / beam.k
    F = finesse if finesse is not None else (geometry.finesse or geometry.fsr / Gamma)
    kg, kf, gmax = ultimate_traps(P, lam, geometry.L, Gamma, F)
    m = disc_mass(disc.t, disc.r) if mass is None else mass
    I = m * disc.r ** 2 / 4.0
    w_cm, w_tm = trap_frequencies(kg, kg * beam.sigma ** 2 / 4.0, m, I)
    wm = w_cm if omega_mech is None else omega_mech
    ad = anti_damping_rate(wm, 2.0 * geometry.L / C_LIGHT)
    warnings = []
    if P > 0 and w_cm > Gamma / 3.0:
        warnings.append("trap frequency exceeds Gamma/3: adiabatic two-mode model is marginal")
    return TrapReport(P, k_cm, k_tm, r_cm, r_tm, kg, kf, gmax, w_cm, w_tm, ad, m, Gamma, warnings)


# --- many-mode trap-frequency ratio ----------------------------------------------

def family_crossing(solver: ManifoldSolver, grid, mode_a: ModeIndex, mode_b: ModeIndex):
    """First crossing of the branches carrying ``mode_a`` and ``mode_b`` at the grid start.

    Branches are continued by eigenvector overlap, so this is meant for
    couplings where the two branches do not interact (e.g. ``theta_z = 0``
    for TEM00 and TEM10).  Returns ``(location, omega)``.
    """
    modes = list(solver.manifold.modes)
    ia, ib = modes.index(mode_a), modes.index(mode_b)
    grid = np.asarray(grid, dtype=float)

    def pick(x, va, vb):
        om, vec = solver(x)
        a = int(np.argmax(np.abs(va @ vec)))
        b = int(np.argmax(np.abs(vb @ vec)))
        return om[a], om[b], vec[:, a], vec[:, b]

    om, vec = solver(grid[0])
    a = int(np.argmax(np.abs(vec[ia])))
    b = int(np.argmax(np.abs(vec[ib])))
    va, vb = vec[:, a], vec[:, b]
    diff_prev = om[a] - om[b]
    for x_prev, x in zip(grid[:-1], grid[1:]):
        wa, wb, na, nb = pick(x, va, vb)
        if np.sign(wa - wb) != np.sign(diff_prev):
            ref_a, ref_b = va, vb
            root = brentq(lambda u: np.subtract(*pick(u, ref_a, ref_b)[:2]), x_prev, x,
                          xtol=1e-12 * max(abs(x), 1e-300), rtol=1e-14)
            wa, wb, *_ = pick(root, ref_a, ref_b)
            return float(root), float(0.5 * (wa + wb))
        va, vb, diff_prev = na, nb, wa - wb
    raise NumericalError(f"branches of {mode_a.label} and {mode_b.label} do not cross on the grid")


@dataclass
class MultimodeRatio:
    """Torsional-to-translational trap-frequency ratio from two avoided crossings."""

    ratio: float
    translation: CrossingReport
    rotation: CrossingReport
    theta_z: float
    n_modes: int


def multimode_trap_ratio(geometry: CavityGeometry, disc: DiscParams, half_width: int = 100,
                         theta_z: float = 1e-4, beam: BeamParams | None = None,
                         x0_grid=None, theta_grid=None, threads: int = 1) -> MultimodeRatio:
    """``omega_TM / omega_CM`` from crossing curvatures in a TEM00 + TEM10 ladder.

    At ``theta_z = 0`` the branch of TEM00(eta0) crosses that of TEM10(eta0 - 1)
    once along ``x0`` and once along ``theta_y``.  A small ``theta_z`` opens
    both gaps; the curvature of the upper branch at each gap gives the
    stiffness per photon, and ``I = m r**2 / 4`` converts the ratio of
    stiffnesses into ``(2 / r) sqrt(c_theta / c_x)``.
    """
    beam = beam_params(geometry) if beam is None else beam
    eta0 = geometry.nearest_eta()
    centre = ModeIndex(eta0)
    manifold = longitudinal_manifold(geometry, centre, half_width, ((0, 0), (1, 0)))
    omega_ref = unperturbed_frequency(geometry, centre)
    lam = 2.0 * np.pi / beam.k
    x0_grid = np.linspace(0.0, lam / 4.0, 101) if x0_grid is None else np.asarray(x0_grid)
    theta_grid = np.linspace(0.0, 12e-3, 121) if theta_grid is None else np.asarray(theta_grid)
    other = ModeIndex(eta0 - 1, 1, 0)
    base = disc.with_(x0=0.0, theta_y=0.0, theta_z=0.0)
    reports = []
    for coord, grid in (("x0", x0_grid), ("theta_y", theta_grid)):
        flat = ManifoldSolver(geometry, beam, base, manifold, coord, "linear", True, False,
                              omega_ref)
        loc, omega_c = family_crossing(flat, grid, centre, other)
        tilted = ManifoldSolver(geometry, beam, base.with_(theta_z=theta_z), manifold, coord,
                                "linear", True, False, omega_ref)
        w = default_half_window(geometry, beam, coord) / 2.0

        def nearest_two(om, target=omega_c):
            i = np.argsort(np.abs(om - target))[:2]
            return om[i[0]], om[i[1]]

        reports.append(crossing_scan(tilted, loc + np.linspace(-w, w, 9), nearest_two,
                                     threads=threads))
    rx, rt = reports
    ratio = 2.0 / disc.r * np.sqrt(rt.curvature / rx.curvature)
    return MultimodeRatio(float(ratio), rx, rt, theta_z, len(manifold))
