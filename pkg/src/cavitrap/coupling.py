"""Matrix elements of a thin tilted dielectric disc between cavity modes.

The disc is a slab of index ``n`` and thickness ``t`` centred at ``x0`` on
the cavity axis, tilted by ``theta_y`` (about y) and ``theta_z`` (about z).
Its dielectric contrast ``n**2 - 1`` scatters light between modes with
dimensionless strength ``V_ij = integral (n**2 - 1) phi_i phi_j dV``.

Two evaluation paths are provided:

* a closed form that integrates the transverse profiles to infinity and
  expands the longitudinal integral to second order in ``k t``;
* direct quadrature over the slab volume, truncated at the disc edge.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .errors import DomainError, NumericalError
from .kernels import gh_overlap
from .mode_basis import (
    C_LIGHT,
    BeamParams,
    CavityGeometry,
    ModeIndex,
    beam_params,
    mode_field,
    mode_frequencies,
    waist_radius,
)

__all__ = [
    "DiscParams",
    "DiscDerived",
    "PerturbationMatrix",
    "QuadratureOptions",
    "derive",
    "overlap_CS",
    "overlap_leading",
    "overlap_polynomials",
    "vij_analytic",
    "vij_quadrature",
    "perturbation_matrix",
]

MAX_TILT = 0.3  # rad


@dataclass(frozen=True)
class DiscParams:
    """Dielectric disc: index, thickness (m), radius (m), centre (m), tilts (rad)."""

    n_index: float
    t: float
    r: float
    x0: float = 0.0
    theta_y: float = 0.0
    theta_z: float = 0.0

    def __post_init__(self):
        if self.n_index < 1.0:
            raise DomainError("refractive index must be >= 1")
        if not self.t > 0 or not self.r > 0:
            raise DomainError("thickness and radius must be positive")
        if abs(self.theta_y) >= MAX_TILT or abs(self.theta_z) >= MAX_TILT:
            raise DomainError(f"tilt must satisfy |theta| < {MAX_TILT} rad")

    def with_(self, **changes) -> "DiscParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DiscDerived:
    """Derived disc quantities for a given beam and cavity length."""

    alpha: float
    tau: float
    t_theta: float
    Theta_y: float
    Theta_z: float
    beta: float


def derive(disc: DiscParams, beam: BeamParams, L: float) -> DiscDerived:
    t_theta = disc.t / (np.cos(disc.theta_y) * np.cos(disc.theta_z))
    k, s = beam.k, beam.sigma
    return DiscDerived(
        alpha=(disc.n_index ** 2 - 1.0) * t_theta / L,
        tau=1.0 - (k * t_theta) ** 2 / 6.0,
        t_theta=t_theta,
        Theta_y=np.sqrt(2.0) * k * s * disc.theta_y,
        Theta_z=np.sqrt(2.0) * k * s * disc.theta_z,
        beta=1.0 - (k * s * disc.theta_z) ** 2,
    )


@dataclass
class PerturbationMatrix:
    """Symmetric matrix of ``V_ij`` over an ordered list of modes."""

    manifold: list
    V: np.ndarray

    def __post_init__(self):
        self.V = 0.5 * (self.V + self.V.T)


# --- transverse overlaps --------------------------------------------------

@lru_cache(maxsize=None)
def _hermite_int_coeffs(n: int) -> tuple:
    # physicists' Hermite polynomial, ascending integer coefficients
    prev, cur = [1], [0, 2]
    if n == 0:
        return tuple(prev)
    for j in range(1, n):
        nxt = [0] * (j + 2)
        for p, a in enumerate(cur):
            nxt[p + 1] += 2 * a
        for p, a in enumerate(prev):
            nxt[p] -= 2 * j * a
        prev, cur = cur, nxt
    return tuple(cur)


def _double_factorial(p: int) -> int:
    out = 1
    while p > 1:
        out *= p
        p -= 2
    return out


@lru_cache(maxsize=None)
def overlap_polynomials(n: int, m: int) -> tuple:
    """Exact rational coefficients of the envelope-free overlap polynomials.

    Returns ``(c, s, norm2)`` where ``c`` and ``s`` are tuples of Fractions in
    ascending powers of ``Theta`` and ``norm2 = 2**(n+m) n! m!``, so that
    ``C_nm = exp(-Theta**2/4) * sum(c_q Theta**q) / sqrt(norm2)`` and likewise
    for ``S_nm``.
    """
    if n < 0 or m < 0:
        raise DomainError("Hermite orders must be non-negative")
    hn, hm = _hermite_int_coeffs(n), _hermite_int_coeffs(m)
    prod = [0] * (n + m + 1)
    for a, ca in enumerate(hn):
        for b, cb in enumerate(hm):
            prod[a + b] += ca * cb
    # moments of (s + i Theta/2)^j under exp(-s^2)/sqrt(pi), collected by power of Theta
    re = [Fraction(0)] * (n + m + 1)
    im = [Fraction(0)] * (n + m + 1)
    for j, a in enumerate(prod):
        if a == 0:
            continue
        for p in range(0, j + 1, 2):
            q = j - p
            val = Fraction(a * comb(j, p) * _double_factorial(p - 1), 2 ** (p // 2) * 2 ** q)
            # multiply by i**q
            phase = q % 4
            if phase == 0:
                re[q] += val
            elif phase == 1:
                im[q] += val
            elif phase == 2:
                re[q] -= val
            else:
                im[q] -= val
    norm2 = 2 ** (n + m) * factorial(n) * factorial(m)
    return tuple(re), tuple(im), norm2


@lru_cache(maxsize=None)
def _float_poly(n: int, m: int):
    re, im, norm2 = overlap_polynomials(n, m)
    scale = 1.0 / np.sqrt(float(norm2))
    # numpy polyval wants descending order
    return (np.array([float(v) for v in re[::-1]]) * scale,
            np.array([float(v) for v in im[::-1]]) * scale)


def overlap_CS(n: int, m: int, Theta):
    """Transverse overlaps ``C_nm(Theta)`` and ``S_nm(Theta)``.

    ``C + i S = integral Hn(x) Hm(x) exp(-x**2) exp(i Theta x) dx`` with
    normalized Hermite polynomials.  ``S`` vanishes identically for even
    ``n - m`` and ``C`` for odd ``n - m``.
    """
    if n < 0 or m < 0:
        raise DomainError("Hermite orders must be non-negative")
    Theta = np.asarray(Theta, dtype=float)
    cpoly, spoly = _float_poly(n, m)
    env = np.exp(-Theta ** 2 / 4.0)
    C = env * np.polyval(cpoly, Theta)
    S = env * np.polyval(spoly, Theta)
    if (n - m) % 2:
        C = np.zeros_like(C)
    else:
        S = np.zeros_like(S)
    if Theta.ndim == 0:
        return float(C), float(S)
    return C, S


def overlap_leading(n: int, m: int, Theta):
    """Lowest-order term of the nonvanishing overlap between orders ``n`` and ``m``.

    For ``q = |m - n|`` this is ``(-1)**(q // 2) sqrt(M!/(2**q N!)) Theta**q / q!``
    with ``N = min(n, m)``, ``M = max(n, m)``: the first Taylor term of
    ``C_nm`` (even ``q``) or ``S_nm`` (odd ``q``).
    """
    lo, hi = min(n, m), max(n, m)
    if lo < 0:
        raise DomainError("Hermite orders must be non-negative")
    q = hi - lo
    coeff = np.sqrt(factorial(hi) / (2.0 ** q * factorial(lo))) / factorial(q)
    sign = -1.0 if (q // 2) % 2 else 1.0
    return sign * coeff * np.asarray(Theta, dtype=float) ** q


# --- closed form ----------------------------------------------------------

def vij_analytic(geometry: CavityGeometry, beam: BeamParams, disc: DiscParams,
                 i: ModeIndex, j: ModeIndex) -> float:
    """Closed-form ``V_ij`` for a disc near the waist with infinite transverse extent."""
    d = derive(disc, beam, geometry.L)
    phase = 2.0 * beam.k * disc.x0 + np.pi * (i.eta + j.eta) / 2.0
    Cy, Sy = overlap_CS(i.mu, j.mu, d.Theta_z)
    Cz, Sz = overlap_CS(i.nu, j.nu, d.Theta_y)
    same = float(i.mu == j.mu and i.nu == j.nu)
    return d.alpha * (
        np.cos(np.pi * (i.eta - j.eta) / 2.0) * same
        + d.tau * np.cos(phase) * (Cy * Cz - Sy * Sz)
        - d.tau * np.sin(phase) * (Sy * Cz + Cy * Sz)
    )


def _overlap_grid(mu_a, mu_b, Theta):
    # vectorized C + iS over arrays of order pairs
    out = np.zeros(np.broadcast(mu_a, mu_b, Theta).shape, dtype=complex)
    mu_a, mu_b, Theta = np.broadcast_arrays(mu_a, mu_b, Theta)
    for a in np.unique(mu_a):
        for b in np.unique(mu_b):
            sel = (mu_a == a) & (mu_b == b)
            if sel.any():
                C, S = overlap_CS(int(a), int(b), Theta[sel])
                out[sel] = C + 1j * S
    return out


def perturbation_matrix(geometry: CavityGeometry, beam: BeamParams | None,
                        disc: DiscParams, modes, per_mode_k: bool = False,
                        per_mode_sigma: bool = False, gh_order: int = 48) -> PerturbationMatrix:
    """``V`` over a manifold of modes.

    With both flags off this is the closed form evaluated pairwise.  With
    ``per_mode_k`` each mode carries its own wavenumber ``omega_i / c``, so the
    sum and difference terms acquire ``sinc`` factors; ``per_mode_sigma``
    additionally gives each mode the waist of its own wavelength and the
    transverse overlaps are computed by Gauss-Hermite quadrature.
    """
    modes = list(modes)
    if beam is None:
        beam = beam_params(geometry)
    eta = np.array([m.eta for m in modes], dtype=float)
    mu = np.array([m.mu for m in modes])
    nu = np.array([m.nu for m in modes])
    t_theta = disc.t / (np.cos(disc.theta_y) * np.cos(disc.theta_z))
    alpha = (disc.n_index ** 2 - 1.0) * t_theta / geometry.L

    if per_mode_k or per_mode_sigma:
        k = mode_frequencies(geometry, modes) / C_LIGHT
    else:
        k = np.full(len(modes), beam.k)
    if per_mode_sigma:
        sig = np.array([waist_radius(geometry, wavelength=2 * np.pi / kk) for kk in k])
    else:
        sig = np.full(len(modes), beam.sigma)

    V = np.zeros((len(modes), len(modes)))
    for sgn in (1.0, -1.0):
        K = k[:, None] + sgn * k[None, :]
        Phi = np.pi * (eta[:, None] + sgn * eta[None, :]) / 2.0
        if per_mode_k or per_mode_sigma:
            weight = np.sinc(K * t_theta / (2.0 * np.pi))
        else:
            weight = (1.0 - (K * t_theta) ** 2 / 24.0) if sgn > 0 else np.ones_like(K)
        if per_mode_sigma:
            nodes, wts = np.polynomial.hermite.hermgauss(gh_order)
            Ty = gh_overlap(mu[:, None], mu[None, :], sig[:, None], sig[None, :],
                            K * disc.theta_z, nodes, wts)
            Tz = gh_overlap(nu[:, None], nu[None, :], sig[:, None], sig[None, :],
                            K * disc.theta_y, nodes, wts)
        else:
            Ty = _overlap_grid(mu[:, None], mu[None, :], K * sig[:, None] * disc.theta_z / np.sqrt(2.0))
            Tz = _overlap_grid(nu[:, None], nu[None, :], K * sig[:, None] * disc.theta_y / np.sqrt(2.0))
        V += weight * np.real(np.exp(1j * (K * disc.x0 + Phi)) * Ty * Tz)
    return PerturbationMatrix(modes, alpha * V)


# --- quadrature -------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureOptions:
    """Node counts for the slab-volume quadrature and its refinement check.

    ``n_x`` Gauss-Legendre nodes across the slab, ``n_rho`` per radial panel,
    ``n_phi`` trapezoid nodes in angle.  The estimate is repeated with doubled
    counts and must agree to ``rtol`` relative to ``max(|V|, alpha)``, where
    ``alpha = (n**2 - 1) t / L`` sets the natural scale of every element.
    """

    n_x: int = 6
    n_rho: int = 32
    n_phi: int = 48
    rtol: float = 1e-9
    per_mode: bool = False


def _slab_integral(geometry, beam_i, beam_j, disc, i, j, n_x, n_rho, n_phi):
    # disc edge projected onto the transverse plane is an ellipse
    cy, cz = np.cos(disc.theta_z), np.cos(disc.theta_y)
    sig = max(beam_i.sigma, beam_j.sigma)
    breaks = [0.0] + [b for b in (3.0 * sig, 6.0 * sig) if b < disc.r] + [disc.r]
    xg, wg = np.polynomial.legendre.leggauss(n_rho)
    rho, wrho = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        rho.append(a + (xg + 1.0) * (b - a) / 2.0)
        wrho.append(wg * (b - a) / 2.0)
    rho, wrho = np.concatenate(rho), np.concatenate(wrho)
    phi = np.arange(n_phi) * 2.0 * np.pi / n_phi
    R, P = np.meshgrid(rho, phi, indexing="ij")
    y = R * np.cos(P) * cy
    z = R * np.sin(P) * cz
    wt = (wrho[:, None] * R) * (2.0 * np.pi / n_phi) * cy * cz

    t_theta = disc.t / (cz * cy)
    centre = disc.x0 + disc.theta_z * y + disc.theta_y * z
    xs, ws = np.polynomial.legendre.leggauss(n_x)
    total = 0.0
    for xn, wn in zip(xs, ws):
        x = centre + xn * t_theta / 2.0
        f = mode_field(geometry, i, x, y, z, beam_i) * mode_field(geometry, j, x, y, z, beam_j)
        total += wn * t_theta / 2.0 * np.sum(wt * f)
    return (disc.n_index ** 2 - 1.0) * total


def vij_quadrature(geometry: CavityGeometry, beam: BeamParams | None, disc: DiscParams,
                   i: ModeIndex, j: ModeIndex,
                   opts: QuadratureOptions = QuadratureOptions()) -> float:
    """``V_ij`` by direct quadrature over the tilted slab, truncated at the disc edge."""
    if opts.per_mode:
        beam_i = beam_params(geometry, i, per_mode=True)
        beam_j = beam_params(geometry, j, per_mode=True)
    else:
        beam_i = beam_j = beam if beam is not None else beam_params(geometry)
    coarse = _slab_integral(geometry, beam_i, beam_j, disc, i, j,
                            opts.n_x, opts.n_rho, opts.n_phi)
    fine = _slab_integral(geometry, beam_i, beam_j, disc, i, j,
                          2 * opts.n_x, 2 * opts.n_rho, 2 * opts.n_phi)
    alpha = (disc.n_index ** 2 - 1.0) * disc.t / geometry.L
    scale = max(abs(fine), alpha)
    if abs(fine - coarse) > opts.rtol * scale:
        raise NumericalError(
            f"quadrature not converged: {coarse!r} vs refined {fine!r}")
    return float(fine)
