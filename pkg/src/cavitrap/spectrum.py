"""Hybridized cavity spectra and avoided-crossing analysis.

A manifold of nearly degenerate modes is coupled by the disc matrix ``V``.
The exact problem ``Omega**2 a = omega**2 (1 + V) a`` is a symmetric
generalized eigenproblem in ``omega**2``.  It is solved in the detuning
variable ``eps = omega**2 / omega_ref**2 - 1`` for conditioning.

A first-order variant replaces it with the Hermitian matrix
``diag(omega_i (1 - V_ii / 2)) - omega_ref V_offdiag / 2``.  It is exact to
first order in ``V`` and stays well behaved when hundreds of longitudinal
orders are included.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .coupling import DiscParams, perturbation_matrix
from .errors import DomainError, NumericalError
from .mode_basis import BeamParams, CavityGeometry, ModeIndex, beam_params, mode_frequencies

__all__ = [
    "ModeManifold",
    "SpectrumBranch",
    "CrossingReport",
    "ManifoldSolver",
    "two_mode_manifold",
    "longitudinal_manifold",
    "solve_manifold",
    "two_mode_closed_form",
    "scan_branch",
    "characterize_crossing",
    "crossing_scan",
    "multimode_convergence",
    "follow_nearest",
    "COORDINATES",
]

COORDINATES = ("x0", "theta_y", "theta_z")


@dataclass
class ModeManifold:
    """Ordered modes with their bare angular frequencies (rad/s)."""

    modes: list
    omegas: np.ndarray

    @classmethod
    def from_modes(cls, geometry: CavityGeometry, modes,
                   window: float | None = None) -> "ModeManifold":
        """Build from mode labels; ``window`` (rad/s) bounds the spread of bare frequencies."""
        modes = list(modes)
        if len(set(modes)) != len(modes):
            raise DomainError("manifold modes must be distinct")
        if not modes:
            raise DomainError("manifold is empty")
        omegas = mode_frequencies(geometry, modes)
        if window is not None and np.ptp(omegas) > window:
            raise DomainError(f"bare frequencies spread {np.ptp(omegas):.4g} rad/s, "
                              f"beyond the degeneracy window {window:.4g} rad/s")
        return cls(modes, omegas)

    def __len__(self):
        return len(self.modes)

    def labels(self):
        return [m.label for m in self.modes]


def two_mode_manifold(geometry: CavityGeometry, eta: int | None = None) -> ModeManifold:
    """TEM00 at ``eta`` and TEM10 one order below (``eta`` defaults to a multiple of 4)."""
    eta = geometry.nearest_eta() if eta is None else eta
    return ModeManifold.from_modes(geometry, [ModeIndex(eta, 0, 0), ModeIndex(eta - 1, 1, 0)])


def longitudinal_manifold(geometry: CavityGeometry, center: ModeIndex, half_width: int,
                          families: Sequence[tuple] = ((0, 0),),
                          offsets: Sequence[int] | None = None) -> ModeManifold:
    """Ladders of ``2 * half_width + 1`` longitudinal orders for each transverse family.

    ``offsets`` shifts the central ``eta`` of each family (default 0 for the
    first family and -1 for the others, pairing TEM00 with TEM10 one order
    below).
    """
    if offsets is None:
        offsets = [0] + [-(mu + nu) for mu, nu in families[1:]]
    modes = []
    for (mu, nu), off in zip(families, offsets):
        for d in range(-half_width, half_width + 1):
            modes.append(ModeIndex(center.eta + off + d, mu, nu))
    return ModeManifold.from_modes(geometry, modes)


def solve_manifold(geometry: CavityGeometry, beam: BeamParams | None, disc: DiscParams,
                   manifold: ModeManifold, method: str = "generalized",
                   per_mode_k: bool = False, per_mode_sigma: bool = False,
                   omega_ref: float | None = None):
    """Eigenfrequencies (ascending, rad/s) and unit-norm eigenvectors (columns)."""
    V = perturbation_matrix(geometry, beam, disc, manifold.modes, per_mode_k=per_mode_k,
                            per_mode_sigma=per_mode_sigma).V
    return _solve(V, manifold.omegas, method, omega_ref)


def _solve(V, omegas, method, omega_ref=None):
    if omega_ref is None:
        omega_ref = float(np.median(omegas))
    if method == "generalized":
        B = np.eye(len(omegas)) + V
        bmin = np.linalg.eigvalsh(B)[0]
        if bmin <= 1e-12:
            cond = np.inf if bmin <= 0 else np.linalg.eigvalsh(B)[-1] / bmin
            raise NumericalError(f"1 + V is not positive definite (condition {cond:.3g})")
        D = np.diag((omegas / omega_ref) ** 2 - 1.0)
        eps, vec = sla.eigh(D - V, B)
        if np.any(eps <= -1.0):
            raise NumericalError("negative omega**2 eigenvalue")
        om = omega_ref * np.sqrt(1.0 + eps)
    elif method == "linear":
        off = V - np.diag(np.diag(V))
        H = np.diag(omegas * (1.0 - np.diag(V) / 2.0)) - 0.5 * omega_ref * off
        om, vec = np.linalg.eigh(H)
    else:
        raise DomainError(f"unknown solver method {method!r}")
    vec = vec / np.linalg.norm(vec, axis=0)
    return om, vec


def two_mode_closed_form(geometry: CavityGeometry, beam: BeamParams | None, disc: DiscParams,
                         manifold: ModeManifold):
    """Small-perturbation two-mode frequencies ``(omega_minus, omega_plus)``."""
    if len(manifold) != 2:
        raise DomainError("closed form needs exactly two modes")
    V = perturbation_matrix(geometry, beam, disc, manifold.modes).V
    w1, w2 = manifold.omegas
    p1 = w1 * (1.0 - V[0, 0] / 2.0)
    p2 = w2 * (1.0 - V[1, 1] / 2.0)
    gamma = w1 * abs(V[0, 1]) / 2.0
    root = np.sqrt(((p1 - p2) / 2.0) ** 2 + gamma ** 2)
    mid = (p1 + p2) / 2.0
    return mid - root, mid + root


@dataclass
class ManifoldSolver:
    """Callable evaluating the spectrum at one value of a scan coordinate."""

    geometry: CavityGeometry
    beam: BeamParams | None
    disc: DiscParams
    manifold: ModeManifold
    coordinate: str
    method: str = "generalized"
    per_mode_k: bool = False
    per_mode_sigma: bool = False
    omega_ref: float | None = None

    def __post_init__(self):
        if self.coordinate not in COORDINATES:
            raise DomainError(f"unknown scan coordinate {self.coordinate!r}")
        if self.beam is None:
            self.beam = beam_params(self.geometry)

    def __call__(self, xi: float):
        disc = self.disc.with_(**{self.coordinate: float(xi)})
        return solve_manifold(self.geometry, self.beam, disc, self.manifold, self.method,
                              self.per_mode_k, self.per_mode_sigma, self.omega_ref)


@dataclass
class SpectrumBranch:
    """Eigenfrequency branches versus one scan coordinate.

    ``omegas[p, b]`` is branch ``b`` at grid point ``p``; ``weights[p, b, i]``
    the amplitude of manifold mode ``i``.  ``overlaps[p, b]`` is the eigenvector
    overlap used to continue branch ``b`` from point ``p - 1`` (1 at ``p = 0``).
    """

    coordinate: str
    grid: np.ndarray
    omegas: np.ndarray
    weights: np.ndarray
    manifold: ModeManifold
    overlaps: np.ndarray = field(default=None)

    @property
    def n_branches(self) -> int:
        return self.omegas.shape[1]


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def scan_branch(geometry: CavityGeometry, beam: BeamParams | None, disc_template: DiscParams,
                manifold: ModeManifold, coordinate: str, grid, method: str = "generalized",
                per_mode_k: bool = False, per_mode_sigma: bool = False,
                omega_ref: float | None = None, keep: int | None = None,
                threads: int = 1) -> SpectrumBranch:
    """Solve the manifold on each grid point and connect branches by eigenvector overlap.

    ``keep`` limits tracking to the ``keep`` eigenvalues nearest ``omega_ref``
    (default: the median bare frequency) at the first grid point.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise DomainError("grid must be a non-empty 1-D array")
    d = np.diff(grid)
    if grid.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise DomainError("grid must be strictly monotone")
    solver = ManifoldSolver(geometry, beam, disc_template, manifold, coordinate, method,
                            per_mode_k, per_mode_sigma, omega_ref)
    results = _map(solver, grid, threads)
    return _track(coordinate, grid, results, manifold, keep, solver.omega_ref)


def _track(coordinate, grid, results, manifold, keep=None, omega_ref=None):
    om0, vec0 = results[0]
    n = om0.size
    if keep is None or keep >= n:
        idx = np.arange(n)
    else:
        ref = float(np.median(manifold.omegas)) if omega_ref is None else omega_ref
        idx = np.sort(np.argsort(np.abs(om0 - ref))[:keep])
    nb = idx.size
    omegas = np.empty((grid.size, nb))
    weights = np.empty((grid.size, nb, n))
    overlaps = np.ones((grid.size, nb))
    omegas[0] = om0[idx]
    weights[0] = vec0[:, idx].T
    prev = weights[0]
    for p in range(1, grid.size):
        om, vec = results[p]
        ov = np.abs(prev @ vec)
        rows, cols = linear_sum_assignment(-ov)
        order = cols[np.argsort(rows)]
        omegas[p] = om[order]
        cur = vec[:, order].T
        # keep a consistent sign for readable weights
        sgn = np.sign(np.sum(cur * prev, axis=1))
        sgn[sgn == 0] = 1.0
        cur = cur * sgn[:, None]
        weights[p] = cur
        overlaps[p] = ov[np.arange(nb), order]
        prev = cur
    return SpectrumBranch(coordinate, grid, omegas, weights, manifold, overlaps)


@dataclass
class CrossingReport:
    """Fitted avoided crossing ``omega = omega0 + G+ xi +- sqrt(G-**2 xi**2 + Gamma**2)``.

    ``location`` is the crossing centre in scan units, ``gap = 2 Gamma`` (rad/s),
    slopes are in rad/s per scan unit and ``curvature = G-**2 / Gamma`` is the
    second derivative of either branch at the centre.
    """

    location: float
    gap: float
    G1: float
    G2: float
    G_plus: float
    G_minus: float
    curvature: float
    omega_center: float
    branches: tuple = (0, 1)
    residual: float = 0.0

    @property
    def Gamma(self) -> float:
        return self.gap / 2.0


def _fit_crossing(xi, lo, hi):
    # half-gap**2 = Gamma**2 + G-**2 (xi - xc)**2 at the centre; a quartic absorbs
    # the curvature of the diabats across the window without biasing either
    xi = np.asarray(xi, dtype=float)
    mean = (lo + hi) / 2.0
    half2 = ((hi - lo) / 2.0) ** 2
    x_c = xi.mean()
    x_s = max(np.ptp(xi), 1e-300)
    u = (xi - x_c) / x_s
    deg = 4 if xi.size >= 8 else 2
    P = np.polynomial.Polynomial.fit(u, half2, deg, domain=[-1, 1], window=[-1, 1])
    u0 = u[np.argmin(half2)]
    roots = P.deriv().roots()
    roots = roots[np.abs(roots.imag) < 1e-9].real
    if roots.size == 0:
        raise NumericalError("no gap minimum in the fit window")
    u_c = roots[np.argmin(np.abs(roots - u0))]
    a2 = P.deriv(2)(u_c) / 2.0
    if a2 <= 0:
        raise NumericalError("no avoided-crossing curvature in the fit window")
    gamma = np.sqrt(max(P(u_c), 0.0))
    resid = float(np.sqrt(np.mean((P(u) - half2) ** 2)) / max(half2.max(), 1e-300))
    centre = x_c + u_c * x_s
    gm = np.sqrt(a2) / x_s
    M = np.polynomial.Polynomial.fit(xi - centre, mean, 2 if xi.size >= 5 else 1)
    return centre, gamma, gm, M.deriv()(0.0), M(0.0), resid


def characterize_crossing(branch: SpectrumBranch, pair: tuple | None = None,
                          refine: Callable | None = None, width: float = 5.0,
                          n_fit: int = 41, max_residual: float = 1e-3) -> CrossingReport:
    """Fit the two-branch avoided-crossing form around the minimum gap.

    Parameters
    ----------
    branch : SpectrumBranch
    pair : tuple of int, optional
        Branch indices; by default the pair with the smallest gap anywhere.
    refine : callable, optional
        ``refine(xi) -> (omega_low, omega_high)``.  When given, the gap minimum
        is polished by golden-section search and the fit is done on ``n_fit``
        fresh samples spanning ``width`` gap-widths on either side.
    """
    grid = branch.grid
    om = branch.omegas
    if pair is None:
        best = None
        for a in range(om.shape[1]):
            for b in range(a + 1, om.shape[1]):
                g = np.min(np.abs(om[:, a] - om[:, b]))
                if best is None or g < best[0]:
                    best = (g, a, b)
        if best is None:
            raise DomainError("need at least two branches")
        pair = best[1:]
    a, b = pair
    lo = np.minimum(om[:, a], om[:, b])
    hi = np.maximum(om[:, a], om[:, b])
    gap = hi - lo
    p = int(np.argmin(gap))
    if p in (0, grid.size - 1) and refine is None:
        raise NumericalError("gap minimum lies on the scan boundary")

    if refine is None:
        xi, l_w, h_w = grid, lo, hi
        # first pass on the neighbourhood, then restrict to the window
        sel = slice(max(p - 3, 0), min(p + 4, grid.size))
        c0, g0, gm0, *_ = _fit_crossing(xi[sel], l_w[sel], h_w[sel])
        step = abs(grid[1] - grid[0])
        half_w = float(np.clip(width * g0 / gm0, 0.5 * step, np.ptp(grid)))
        m = np.abs(xi - c0) <= half_w
        if m.sum() < 5:
            order = np.argsort(np.abs(xi - c0))[:7]
            m = np.zeros_like(m)
            m[order] = True
        centre, gamma, gm, gp, om0, resid = _fit_crossing(xi[m], l_w[m], h_w[m])
    else:
        def gap_at(x):
            w = refine(x)
            return w[1] - w[0]
        left = grid[max(p - 1, 0)]
        right = grid[min(p + 1, grid.size - 1)]
        res = minimize_scalar(gap_at, bounds=(min(left, right), max(left, right)),
                              method="bounded",
                              options={"xatol": 1e-9 * max(abs(right - left), 1e-300)})
        x_min = float(res.x)
        # local slope scale from the neighbouring grid points
        span = abs(right - left) / 2.0
        xs = np.linspace(x_min - span, x_min + span, 9)
        W = np.array([refine(x) for x in xs])
        c0, g0, gm0, *_ = _fit_crossing(xs, W[:, 0], W[:, 1])
        half_w = float(np.clip(width * g0 / gm0, 1e-3 * span, 4 * span))
        xs = np.linspace(c0 - half_w, c0 + half_w, n_fit)
        W = np.array([refine(x) for x in xs])
        centre, gamma, gm, gp, om0, resid = _fit_crossing(xs, W[:, 0], W[:, 1])

    if resid > max_residual:
        raise NumericalError(f"crossing fit residual {resid:.3g} exceeds {max_residual}")
    g1, g2 = _diabatic_slopes(branch, pair, p, gp, gm)
    curv = gm ** 2 / gamma if gamma > 0 else np.inf
    return CrossingReport(float(centre), float(2 * gamma), g1, g2, float(gp), float(gm),
                          float(curv), float(om0), tuple(pair), resid)


def _diabatic_slopes(branch, pair, p, gp, gm):
    # the diabat carried by branch ``a`` before the crossing continues on the
    # other side; its slope is G+ - G- if it runs downward
    a, b = pair
    om = branch.omegas
    i0 = max(p - 2, 0)
    i1 = min(p + 2, branch.grid.size - 1)
    slope_a = (om[i1, a] - om[i0, a]) / (branch.grid[i1] - branch.grid[i0]) if i1 > i0 else gp
    if slope_a >= gp:
        return float(gp + gm), float(gp - gm)
    return float(gp - gm), float(gp + gm)


def crossing_scan(solver: ManifoldSolver, grid, pair_selector: Callable | None = None,
                  width: float = 5.0, n_fit: int = 41, threads: int = 1) -> CrossingReport:
    """Scan, locate and fit an avoided crossing of a two-mode (or chosen) pair.

    ``pair_selector(omegas) -> (lo, hi)`` picks the two frequencies of interest
    from the full spectrum; the default uses the two lowest.
    """
    if pair_selector is None:
        def pair_selector(om):
            return om[0], om[1]

    def refine(x):
        om, _ = solver(x)
        lo, hi = pair_selector(om)
        return (min(lo, hi), max(lo, hi))

    grid = np.asarray(grid, dtype=float)
    pairs = np.array(_map(refine, grid, threads))
    br = SpectrumBranch(solver.coordinate, grid, pairs, np.zeros((grid.size, 2, 0)),
                        solver.manifold)
    return characterize_crossing(br, (0, 1), refine=refine, width=width, n_fit=n_fit)


def follow_nearest(values_per_point, seed: float) -> np.ndarray:
    """Continue a single branch by nearest value from a seed."""
    out = np.empty(len(values_per_point))
    cur = seed
    for p, vals in enumerate(values_per_point):
        vals = np.asarray(vals)
        cur = float(vals[np.argmin(np.abs(vals - cur))])
        out[p] = cur
    return out


@dataclass
class ConvergenceResult:
    """Spectra for growing manifolds and the largest shift between successive sizes."""

    half_widths: list
    branches: list
    max_shift_fsr: list


def multimode_convergence(geometry: CavityGeometry, beam: BeamParams | None, disc: DiscParams,
                          center_mode: ModeIndex, half_widths, grid,
                          coordinate: str = "x0", families=((0, 0),),
                          window: tuple = (-1.0, 1.0), method: str = "linear",
                          per_mode_k: bool = True, per_mode_sigma: bool = False,
                          threads: int = 1) -> ConvergenceResult:
    """Repeat a scan with longitudinal ladders of increasing half-width.

    Branches are kept if they start within ``window`` (in units of the free
    spectral range) of the centre mode's bare frequency.  The shift metric
    matches each retained eigenvalue of one size to the nearest eigenvalue
    of the next size, maximised over the grid, in FSR units.
    """
    half_widths = list(half_widths)
    if any(b <= a for a, b in zip(half_widths, half_widths[1:])):
        raise DomainError("half_widths must be ascending")
    from .mode_basis import unperturbed_frequency
    omega_ref = unperturbed_frequency(geometry, center_mode)
    fsr = geometry.fsr
    grid = np.asarray(grid, dtype=float)
    branches, spectra = [], []
    for hw in half_widths:
        man = longitudinal_manifold(geometry, center_mode, hw, families)
        solver = ManifoldSolver(geometry, beam, disc, man, coordinate, method,
                                per_mode_k, per_mode_sigma, omega_ref)
        results = _map(solver, grid, threads)
        spectra.append([r[0] for r in results])
        det0 = (results[0][0] - omega_ref) / fsr
        keep = int(np.sum((det0 > window[0]) & (det0 <= window[1])))
        branches.append(_track(coordinate, grid, results, man, max(keep, 1), omega_ref))
    shifts = []
    for a in range(len(half_widths) - 1):
        worst = 0.0
        for p in range(grid.size):
            small = branches[a].omegas[p]
            big = spectra[a + 1][p]
            d = np.min(np.abs(small[:, None] - big[None, :]), axis=1)
            worst = max(worst, float(d.max()) / fsr)
        shifts.append(worst)
    return ConvergenceResult(half_widths, branches, shifts)
