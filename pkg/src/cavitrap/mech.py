"""Reduced-order out-of-plane mechanics of a doubly tethered disc.

The disc (radius ``r``, thickness ``t``) lies in the y-z plane and is held by
two tethers along the y axis (length ``l``, width ``d``) clamped at their
outer ends.  Only displacement ``w`` along the cavity axis x is modelled.

* Disc: Kirchhoff plate, global Ritz basis ``P_p(y/r) P_q(z/r)`` with
  ``p + q <= degree`` (Legendre polynomials), integrated on a polar grid.
* Tethers: Euler-Bernoulli bending elements (Hermite cubics) plus
  Saint-Venant torsion elements, dofs ``(w, dw/dy, dw/dz)`` per node.
* Junctions: the first tether node follows the disc's ``(w, w_y, w_z)`` at
  ``(+-r, 0)``.

The optical trap adds a stiffness density ``S exp(-(y**2 + z**2) / 2 sigma**2)``
on the disc and on the illuminated part of the tethers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import legendre

from .errors import DomainError, NumericalError

__all__ = [
    "Material",
    "MechGeometry",
    "MechModel",
    "ModalResult",
    "ModalSweep",
    "SILICON",
    "build_model",
    "optical_stiffness",
    "normalize_trap_strength",
    "strength_for_frequency",
    "rigid_response",
    "modal_sweep",
    "enhancement_ceiling",
    "SYMMETRY_CLASSES",
    "classify",
    "twist_fraction",
    "tether_torsion_frequency",
    "hybridization_onset",
    "q_law_deviation",
]

# parity under (y -> -y, z -> -z)
SYMMETRY_CLASSES = {(1, 1): "s", (-1, 1): "a", (1, -1): "t", (-1, -1): "o"}


@dataclass(frozen=True)
class Material:
    """Isotropic elastic solid: density (kg/m^3), Young's modulus (Pa), Poisson ratio."""

    density: float
    youngs: float
    poisson: float


SILICON = Material(2330.0, 170e9, 0.28)


@dataclass(frozen=True)
class MechGeometry:
    """Disc thickness ``t``, radius ``r``, tether length ``l`` and width ``d`` (m)."""

    t: float = 110e-9
    r: float = 5e-6
    l: float = 45e-6
    d: float = 100e-9
    material: Material = SILICON

    def __post_init__(self):
        if min(self.t, self.r, self.l, self.d) <= 0:
            raise DomainError("all dimensions must be positive")
        if self.d >= self.r:
            raise DomainError("tether width must be small compared with the disc radius")

    @property
    def disc_mass(self) -> float:
        return self.material.density * self.t * np.pi * self.r ** 2


@dataclass
class MechModel:
    """Assembled reduced matrices and the data needed for trap stiffness.

    ``M`` and ``K_mat`` act on the reduced coordinates ``q``; ``T`` maps them
    to the full (disc coefficients + tether nodal) coordinates.  ``parity_y``
    and ``parity_z`` are the mirror operators in reduced coordinates.
    """

    geometry: MechGeometry
    degree: int
    n_elements: int
    clamped: bool
    M: np.ndarray
    K_mat: np.ndarray
    T: np.ndarray
    parity_y: np.ndarray
    parity_z: np.ndarray
    _disc_basis: np.ndarray = field(repr=False, default=None)
    _disc_points: tuple = field(repr=False, default=None)
    _tether_nodes: list = field(repr=False, default=None)
    _n_disc: int = 0
    _kopt_cache: dict = field(repr=False, default_factory=dict)

    @property
    def n_dof(self) -> int:
        return self.M.shape[0]

    def unit_optical(self, sigma: float) -> np.ndarray:
        """Reduced stiffness of the unit-strength Gaussian density of width ``sigma``."""
        if not sigma > 0:
            raise DomainError("sigma must be positive")
        key = float(sigma)
        if key not in self._kopt_cache:
            self._kopt_cache[key] = _assemble_optical(self, sigma)
        return self._kopt_cache[key]


@dataclass
class ModalResult:
    """One mode at one trap strength."""

    omega: float
    energy_ratio: float
    symmetry: str
    mode_id: str
    shape: np.ndarray = field(repr=False, default=None)
    overlap_prev: float = 1.0

    @property
    def q_enhancement(self) -> float:
        return 1.0 + self.energy_ratio


def _leg(n, x, der=0):
    c = np.zeros(n + 1)
    c[n] = 1.0
    if der:
        c = legendre.legder(c, der)
    return legendre.legval(x, c)


def _disc_basis(pq, r, y, z):
    # rows: w, w_y, w_z, w_yy, w_zz, w_yz
    u, v = y / r, z / r
    out = np.zeros((6, len(pq), np.size(y)))
    for k, (p, q) in enumerate(pq):
        P0, P1, P2 = _leg(p, u), _leg(p, u, 1) / r, _leg(p, u, 2) / r ** 2
        Q0, Q1, Q2 = _leg(q, v), _leg(q, v, 1) / r, _leg(q, v, 2) / r ** 2
        out[:, k] = [P0 * Q0, P1 * Q0, P0 * Q1, P2 * Q0, P0 * Q2, P1 * Q1]
    return out


def _beam_matrices(h, EI, GJ, mA, Ip):
    kb = EI / h ** 3 * np.array([[12, 6 * h, -12, 6 * h], [6 * h, 4 * h * h, -6 * h, 2 * h * h],
                                 [-12, -6 * h, 12, -6 * h], [6 * h, 2 * h * h, -6 * h, 4 * h * h]])
    mb = _hermite_mass(h) * mA
    kt = GJ / h * np.array([[1.0, -1.0], [-1.0, 1.0]])
    mt = Ip * h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    K = np.zeros((6, 6))
    M = np.zeros((6, 6))
    bi, ti = [0, 1, 3, 4], [2, 5]
    K[np.ix_(bi, bi)] = kb
    M[np.ix_(bi, bi)] = mb
    K[np.ix_(ti, ti)] = kt
    M[np.ix_(ti, ti)] = mt
    return K, M


def _hermite_mass(h):
    return h / 420.0 * np.array([[156, 22 * h, 54, -13 * h], [22 * h, 4 * h * h, 13 * h, -3 * h * h],
                                 [54, 13 * h, 156, -22 * h], [-13 * h, -3 * h * h, -22 * h, 4 * h * h]])


def build_model(geom: MechGeometry = MechGeometry(), mesh_resolution: int = 1,
                clamped: bool = True, degree: int | None = None,
                n_elements: int | None = None) -> MechModel:
    """Assemble mass and material stiffness in reduced coordinates.

    ``mesh_resolution`` scales both discretizations: disc polynomial degree
    ``8 + 4 * mesh_resolution`` and ``10 * mesh_resolution`` elements per
    tether, unless ``degree`` or ``n_elements`` are given explicitly.
    """
    if mesh_resolution < 1:
        raise DomainError("mesh_resolution must be a positive integer")
    deg = 8 + 4 * mesh_resolution if degree is None else int(degree)
    nel = 10 * mesh_resolution if n_elements is None else int(n_elements)
    if deg < 2 or nel < 1:
        raise DomainError("degenerate mesh")
    mat = geom.material
    E, nu, rho = mat.youngs, mat.poisson, mat.density
    t, r, l, d = geom.t, geom.r, geom.l, geom.d
    D = E * t ** 3 / (12.0 * (1.0 - nu ** 2))
    G = E / (2.0 * (1.0 + nu))

    pq = [(p, q) for p in range(deg + 1) for q in range(deg + 1 - p)]
    nb = len(pq)
    nr, nphi = deg + 20, 2 * deg + 40
    xg, wg = legendre.leggauss(nr)
    rad = (xg + 1.0) / 2.0 * r
    wrad = wg * r / 2.0
    ang = np.arange(nphi) * 2.0 * np.pi / nphi
    RR, PP = np.meshgrid(rad, ang, indexing="ij")
    Y = (RR * np.cos(PP)).ravel()
    Z = (RR * np.sin(PP)).ravel()
    W = (wrad[:, None] * RR * 2.0 * np.pi / nphi).ravel()
    B = _disc_basis(pq, r, Y, Z)
    w0, wy, wz, wyy, wzz, wyz = B
    Md = rho * t * (w0 * W) @ w0.T
    Kd = D * ((wyy * W) @ wyy.T + (wzz * W) @ wzz.T
              + nu * ((wyy * W) @ wzz.T + (wzz * W) @ wyy.T)
              + 2.0 * (1.0 - nu) * (wyz * W) @ wyz.T)

    # tether section: bending about the thin direction, rectangular torsion constant
    EI = E * d * t ** 3 / 12.0
    a_, b_ = max(d, t), min(d, t)
    J = a_ * b_ ** 3 * (1.0 / 3.0 - 0.21 * b_ / a_ * (1.0 - b_ ** 4 / (12.0 * a_ ** 4)))
    GJ = G * J
    mA = rho * d * t
    Ip = rho * (d * t ** 3 + t * d ** 3) / 12.0

    nt = 3 * (nel + 1)
    nf = nb + 2 * nt
    Kf = np.zeros((nf, nf))
    Mf = np.zeros((nf, nf))
    Kf[:nb, :nb] = Kd
    Mf[:nb, :nb] = Md
    n_free_nodes = nel if clamped else nel + 1
    nred = nb + 2 * 3 * (n_free_nodes - 1) + (0 if clamped else 0)
    nred = nb + 2 * 3 * (nel - 1 if clamped else nel)
    T = np.zeros((nf, nred))
    T[:nb, :nb] = np.eye(nb)
    col = nb
    tethers = []
    for side, off in ((1, nb), (-1, nb + nt)):
        ys = side * (r + np.linspace(0.0, l, nel + 1))
        tethers.append((ys, off))
        for e in range(nel):
            h = abs(ys[e + 1] - ys[e])
            Ke, Me = _beam_matrices(h, EI, GJ, mA, Ip)
            # element dofs ordered from lower to higher global y
            i, j = (e, e + 1) if side > 0 else (e + 1, e)
            idx = [off + 3 * i, off + 3 * i + 1, off + 3 * i + 2,
                   off + 3 * j, off + 3 * j + 1, off + 3 * j + 2]
            Kf[np.ix_(idx, idx)] += Ke
            Mf[np.ix_(idx, idx)] += Me
        Bj = _disc_basis(pq, r, np.array([side * r]), np.array([0.0]))
        T[off + 0, :nb] = Bj[0, :, 0]
        T[off + 1, :nb] = Bj[1, :, 0]
        T[off + 2, :nb] = Bj[2, :, 0]
        last = nt - 3 if clamped else nt
        for qd in range(3, last):
            T[off + qd, col] = 1.0
            col += 1

    K = T.T @ Kf @ T
    M = T.T @ Mf @ T
    Py, Pz = _parity_operators(pq, nb, nred)
    return MechModel(geom, deg, nel, clamped, 0.5 * (M + M.T), 0.5 * (K + K.T), T, Py, Pz,
                     _disc_basis=w0, _disc_points=(Y, Z, W), _tether_nodes=tethers,
                     _n_disc=nb)


def _parity_operators(pq, nb, nred):
    Py = np.zeros((nred, nred))
    Pz = np.zeros((nred, nred))
    for k, (p, q) in enumerate(pq):
        Py[k, k] = (-1.0) ** p
        Pz[k, k] = (-1.0) ** q
    half = (nred - nb) // 2
    ya = np.array([1.0, -1.0, 1.0])  # w, dw/dy, dw/dz under y -> -y
    za = np.array([1.0, 1.0, -1.0])  # under z -> -z
    for m in range(half):
        a, b = nb + m, nb + half + m
        comp = m % 3
        Py[a, b] = Py[b, a] = ya[comp]
        Pz[a, a] = Pz[b, b] = za[comp]
    return Py, Pz


def _assemble_optical(model: MechModel, sigma: float) -> np.ndarray:
    Y, Z, W = model._disc_points
    w0 = model._disc_basis
    nb = model._n_disc
    nf = model.T.shape[0]
    Kf = np.zeros((nf, nf))
    g = np.exp(-(Y ** 2 + Z ** 2) / (2.0 * sigma ** 2))
    Kf[:nb, :nb] = (w0 * W * g) @ w0.T
    d = model.geometry.d
    xg, wg = legendre.leggauss(6)
    for ys, off in model._tether_nodes:
        for e in range(len(ys) - 1):
            y_a, y_b = ys[e], ys[e + 1]
            h = abs(y_b - y_a)
            s = (xg + 1.0) / 2.0
            yq = y_a + s * (y_b - y_a)
            dens = d * np.exp(-yq ** 2 / (2.0 * sigma ** 2))
            # Hermite shape functions in the element's local orientation
            N = np.array([1 - 3 * s ** 2 + 2 * s ** 3, h * (s - 2 * s ** 2 + s ** 3),
                          3 * s ** 2 - 2 * s ** 3, h * (-s ** 2 + s ** 3)])
            ke = (N * dens * wg * h / 2.0) @ N.T
            if y_b > y_a:
                i, j = e, e + 1
                sign = 1.0
            else:
                i, j = e, e + 1
                sign = -1.0  # local axis runs towards -y
            idx = [off + 3 * i, off + 3 * i + 1, off + 3 * j, off + 3 * j + 1]
            flip = np.diag([1.0, sign, 1.0, sign])
            Kf[np.ix_(idx, idx)] += flip @ ke @ flip
    K = model.T.T @ Kf @ model.T
    return 0.5 * (K + K.T)


def optical_stiffness(model: MechModel, sigma: float, strength: float) -> np.ndarray:
    """Trap stiffness for density ``strength * exp(-rho**2 / 2 sigma**2)`` (N/m^3)."""
    if strength < 0:
        raise DomainError("strength must be non-negative")
    return strength * model.unit_optical(sigma)


def rigid_response(geom: MechGeometry, sigma: float):
    """``omega**2`` per unit strength of a free rigid disc in translation and twist.

    Returns ``(translation, twist)`` in (rad/s)^2 per (N/m^3).
    """
    r = geom.r
    a = r ** 2 / (2.0 * sigma ** 2)
    k_cm = 2.0 * np.pi * sigma ** 2 * (1.0 - np.exp(-a))
    # integral of z**2 exp(-rho**2/2sigma**2) over the disc
    k_tm = np.pi * sigma ** 4 * (1.0 - np.exp(-a) * (1.0 + a)) * 2.0
    m = geom.disc_mass
    inertia = geom.material.density * geom.t * np.pi * r ** 4 / 4.0
    return k_cm / m, k_tm / inertia


def normalize_trap_strength(model: MechModel | MechGeometry, strength, sigma: float):
    """Angular frequency a rigid, free disc of the same mass acquires in the trap."""
    geom = model.geometry if isinstance(model, MechModel) else model
    per_unit, _ = rigid_response(geom, sigma)
    return np.sqrt(np.asarray(strength, dtype=float) * per_unit)


def strength_for_frequency(model: MechModel | MechGeometry, omega_norm, sigma: float):
    """Inverse of :func:`normalize_trap_strength`."""
    geom = model.geometry if isinstance(model, MechModel) else model
    per_unit, _ = rigid_response(geom, sigma)
    return np.asarray(omega_norm, dtype=float) ** 2 / per_unit


@dataclass
class ModalSweep:
    """Modes versus trap strength, labelled by symmetry class and rank within it.

    ``omega[s, i]``, ``energy_ratio[s, i]`` and ``overlap[s, i]`` refer to the
    mode called ``mode_ids[i]`` (e.g. ``"s1"``, the lowest symmetric mode) at
    strength index ``s``.  ``overlap`` is the mass-weighted shape overlap with
    the same-labelled mode at the previous strength.
    """

    sigma: float
    strengths: np.ndarray
    strength_norm: np.ndarray
    mode_ids: list
    symmetry: list
    omega: np.ndarray
    energy_ratio: np.ndarray
    overlap: np.ndarray
    shapes: np.ndarray = field(repr=False, default=None)

    def index(self, mode_id: str) -> int:
        return self.mode_ids.index(mode_id)

    def results(self, s: int) -> list:
        """``ModalResult`` list at strength index ``s``."""
        out = []
        for i, mid in enumerate(self.mode_ids):
            shape = None if self.shapes is None else self.shapes[s, i]
            out.append(ModalResult(self.omega[s, i], self.energy_ratio[s, i],
                                   self.symmetry[i], mid, shape, self.overlap[s, i]))
        return out

    @property
    def q_enhancement(self) -> np.ndarray:
        return 1.0 + self.energy_ratio

    def low_overlap(self, threshold: float = 0.8) -> list:
        """``(strength index, mode_id)`` pairs whose shape overlap drops below ``threshold``.

        These mark hybridizing crossings or a tracking ambiguity.
        """
        s_idx, m_idx = np.nonzero(self.overlap < threshold)
        return [(int(s), self.mode_ids[m]) for s, m in zip(s_idx, m_idx)]

    def to_rows(self):
        """Rows ``(strength_norm, mode_id, symmetry, freq_Hz, Uopt_over_Umat)``."""
        for s in range(self.strengths.size):
            for i, mid in enumerate(self.mode_ids):
                yield (self.strength_norm[s], mid, self.symmetry[i],
                       self.omega[s, i] / (2.0 * np.pi), self.energy_ratio[s, i])


def classify(model: MechModel, q: np.ndarray) -> str:
    """Symmetry label of a mode shape from its mirror parities."""
    Mq = model.M @ q
    norm = q @ Mq
    py = (q @ model.parity_y.T @ Mq) / norm
    pz = (q @ model.parity_z.T @ Mq) / norm
    return SYMMETRY_CLASSES[(1 if py >= 0 else -1, 1 if pz >= 0 else -1)]


def _lowest_modes(K, M, n):
    # the mass matrix spans many decades (tiny rotary inertia), so the lowest
    # modes are resolved as the largest eigenvalues of the inverse pencil
    try:
        mu, vec = sla.eigh(M, K, subset_by_index=[K.shape[0] - n, K.shape[0] - 1])
    except np.linalg.LinAlgError:
        return sla.eigh(K, M, subset_by_index=[0, n - 1])
    return 1.0 / mu[::-1], vec[:, ::-1]


def modal_sweep(model: MechModel, sigma: float, strength_grid, per_class: int = 3,
                keep_shapes: bool = False, threads: int = 1) -> ModalSweep:
    """Eigenmodes of ``K_mat + S K_opt`` for each strength ``S`` in ``strength_grid``.

    Within each symmetry class modes are ranked by frequency, so ``"s1"`` is
    always the lowest symmetric mode (the adiabatic continuation of the
    centre-of-mass mode).  ``U_opt/U_mat`` is ``S q.K_opt.q / q.K_mat.q``.
    """
    grid = np.asarray(strength_grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise DomainError("strength grid must be strictly ascending")
    if np.any(grid < 0):
        raise DomainError("strengths must be non-negative")
    Ku = model.unit_optical(sigma)
    # parity bases are strength independent; precompute once
    bases = {}
    for (sy, sz), label in SYMMETRY_CLASSES.items():
        P = 0.25 * (np.eye(model.n_dof) + sy * model.parity_y) @ (np.eye(model.n_dof) + sz * model.parity_z)
        U, s, _ = np.linalg.svd(P)
        basis = U[:, s > 0.5]
        if basis.shape[1]:
            bases[label] = (basis, basis.T @ model.K_mat @ basis, basis.T @ Ku @ basis,
                            basis.T @ model.M @ basis)
    labels = [c for c in ("s", "a", "t", "o") if c in bases]
    mode_ids, symmetry = [], []
    for c in labels:
        n = min(per_class, bases[c][0].shape[1])
        mode_ids += [f"{c}{i + 1}" for i in range(n)]
        symmetry += [c] * n

    def solve_one(S):
        om, er, shp = [], [], []
        for c in labels:
            basis, Kc, Kuc, Mc = bases[c]
            n = min(per_class, basis.shape[1])
            w2, vec = _lowest_modes(Kc + S * Kuc, Mc, n)
            for i in range(n):
                v = vec[:, i]
                umat = v @ Kc @ v
                uopt = S * (v @ Kuc @ v)
                if umat <= 0:
                    raise NumericalError("non-positive material energy in a trapped mode")
                om.append(np.sqrt(max(w2[i], 0.0)))
                er.append(uopt / umat)
                shp.append(basis @ v)
        return np.array(om), np.array(er), np.array(shp)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            res = list(pool.map(solve_one, grid))
    else:
        res = [solve_one(S) for S in grid]
    omega = np.array([r[0] for r in res])
    ratio = np.array([r[1] for r in res])
    shapes = np.array([r[2] for r in res])
    overlap = np.ones_like(omega)
    M = model.M
    for s in range(1, grid.size):
        a, b = shapes[s - 1], shapes[s]
        num = np.abs(np.einsum("ij,jk,ik->i", a, M, b))
        den = np.sqrt(np.einsum("ij,jk,ik->i", a, M, a) * np.einsum("ij,jk,ik->i", b, M, b))
        overlap[s] = num / den
    return ModalSweep(float(sigma), grid, normalize_trap_strength(model, grid, sigma),
                      mode_ids, symmetry, omega, ratio, overlap,
                      shapes if keep_shapes else None)


def enhancement_ceiling(sweep: ModalSweep, mode_id: str):
    """Largest ``U_opt/U_mat`` of a mode over the sweep.

    Returns ``(ceiling, omega_at_ceiling, strength_norm_at_ceiling)``.
    """
    i = sweep.index(mode_id)
    s = int(np.argmax(sweep.energy_ratio[:, i]))
    return (float(sweep.energy_ratio[s, i]), float(sweep.omega[s, i]),
            float(sweep.strength_norm[s]))


def twist_fraction(model: MechModel, q: np.ndarray) -> float:
    """Share of the kinetic energy carried by tether twist degrees of freedom."""
    nb = model._n_disc
    half = (model.n_dof - nb) // 2
    mask = np.zeros(model.n_dof, dtype=bool)
    for m in range(half):
        if m % 3 == 2:
            mask[nb + m] = mask[nb + half + m] = True
    qt = np.where(mask, q, 0.0)
    return float(qt @ model.M @ qt / (q @ model.M @ q))


def tether_torsion_frequency(model: MechModel, n_modes: int = 40):
    """Lowest untrapped mode dominated by tether twist; returns ``(omega, twist_fraction)``."""
    n = min(n_modes, model.n_dof)
    w2, vec = _lowest_modes(model.K_mat, model.M, n)
    for i in range(n):
        f = twist_fraction(model, vec[:, i])
        if f > 0.5:
            return float(np.sqrt(max(w2[i], 0.0))), f
    raise NumericalError(f"no twist-dominated mode among the lowest {n}")


def hybridization_onset(sweep: ModalSweep, mode_id: str) -> float:
    """Mode frequency (rad/s) where its enhancement peaks before hybridizing."""
    return enhancement_ceiling(sweep, mode_id)[1]


def q_law_deviation(sweep: ModalSweep, mode_id: str = "s1", max_ratio: float = 10.0) -> float:
    """Largest relative departure of ``1 + U_opt/U_mat`` from ``(omega/omega_mat)**2``.

    Only points with ``U_opt/U_mat <= max_ratio`` before the enhancement
    ceiling are used, i.e. the regime before the first hybridization.
    """
    i = sweep.index(mode_id)
    if sweep.strengths[0] != 0.0:
        raise DomainError("the sweep must start at zero strength")
    peak = int(np.argmax(sweep.energy_ratio[:, i]))
    E = sweep.energy_ratio[: peak + 1, i]
    w = sweep.omega[: peak + 1, i]
    sel = E <= max_ratio
    if sel.sum() < 2:
        raise DomainError("no points in the pre-hybridization window")
    dev = (1.0 + E[sel]) / (w[sel] / w[0]) ** 2 - 1.0
    return float(np.max(np.abs(dev)))
