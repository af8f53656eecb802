"""Hermite-Gaussian cavity modes of a two-mirror resonator.

Modes are labelled by a longitudinal index ``eta`` and transverse indices
``mu`` (nodes along y) and ``nu`` (nodes along z).  The cavity axis is x,
the mirrors sit at ``x = -L/2`` and ``x = +L/2`` and the waist is at the
origin.  Longitudinal profiles are ``cos(k x + pi eta / 2)``, which have an
antinode at each mirror.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, isfinite

import numpy as np
from scipy.constants import c as C_LIGHT

from .errors import DomainError
from .kernels import hermite_table

__all__ = [
    "C_LIGHT",
    "ModeIndex",
    "CavityGeometry",
    "BeamParams",
    "normalized_hermite",
    "unperturbed_frequency",
    "mode_frequencies",
    "waist_radius",
    "beam_params",
    "mode_field",
]


@dataclass(frozen=True, order=True)
class ModeIndex:
    """Mode label: longitudinal ``eta`` and transverse ``mu``, ``nu``."""

    eta: int
    mu: int = 0
    nu: int = 0

    def __post_init__(self):
        if self.eta < 1 or self.mu < 0 or self.nu < 0:
            raise ValueError(f"invalid mode index {self}")

    @property
    def label(self) -> str:
        return f"TEM{self.mu}{self.nu}_{self.eta}"


@dataclass(frozen=True)
class CavityGeometry:
    """Two-mirror resonator.

    Attributes
    ----------
    L : float
        Mirror separation (m).
    R1, R2 : float
        Mirror radii of curvature (m); ``inf`` for a flat mirror.
    lambda_ref : float
        Reference wavelength (m).
    finesse : float, optional
    kappa : float, optional
        Energy decay rate (rad/s).  Derived from the finesse when omitted.
    """

    L: float
    R1: float
    R2: float
    lambda_ref: float = 1.55e-6
    finesse: float | None = None
    kappa: float | None = None

    def __post_init__(self):
        if not self.L > 0 or not self.lambda_ref > 0:
            raise ValueError("L and lambda_ref must be positive")

    @property
    def g1(self) -> float:
        return 1.0 - self.L / self.R1 if isfinite(self.R1) else 1.0

    @property
    def g2(self) -> float:
        return 1.0 - self.L / self.R2 if isfinite(self.R2) else 1.0

    @property
    def fsr(self) -> float:
        """Free spectral range ``pi c / L`` (rad/s)."""
        return np.pi * C_LIGHT / self.L

    @property
    def k_ref(self) -> float:
        return 2.0 * np.pi / self.lambda_ref

    @property
    def omega_ref(self) -> float:
        return C_LIGHT * self.k_ref

    @property
    def decay_rate(self) -> float | None:
        if self.kappa is not None:
            return self.kappa
        if self.finesse is not None:
            return self.fsr / self.finesse
        return None

    def check_stable(self) -> None:
        prod = self.g1 * self.g2
        if not 0.0 <= prod <= 1.0:
            raise DomainError(f"unstable resonator: g1*g2 = {prod:.6g}")

    @property
    def gouy_phase(self) -> float:
        """One-way Gouy phase (rad), on the branch set by the sign of g1."""
        self.check_stable()
        root = np.sqrt(self.g1 * self.g2)
        return float(np.arccos(np.copysign(root, self.g1)))

    def nearest_eta(self, multiple: int = 4) -> int:
        """Longitudinal index closest to ``lambda_ref``, rounded to ``multiple``."""
        eta = 2.0 * self.L / self.lambda_ref
        return max(multiple, int(round(eta / multiple)) * multiple)


@dataclass(frozen=True)
class BeamParams:
    """Mode radius ``sigma`` (field 1/e, m) and wavenumber ``k`` (1/m) at the disc."""

    sigma: float
    k: float
    waist_position: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0 or not self.k > 0:
            raise ValueError("sigma and k must be positive")


def normalized_hermite(n, chi):
    """Normalized Hermite polynomial ``H_n(chi) / sqrt(2**n n! sqrt(pi))``.

    Uses the three-term recursion on the normalized functions, so large
    orders never form factorials.
    """
    n = int(n)
    if n < 0:
        raise ValueError("Hermite order must be non-negative")
    chi_arr = np.asarray(chi, dtype=float)
    vals = hermite_table(n, chi_arr.ravel())[n]
    return vals.reshape(chi_arr.shape) if chi_arr.ndim else float(vals[0])


def unperturbed_frequency(geometry: CavityGeometry, mode: ModeIndex) -> float:
    """Bare angular frequency of mode ``(eta, mu, nu)`` (rad/s)."""
    order = 1 + mode.mu + mode.nu
    return geometry.fsr * (mode.eta + order * geometry.gouy_phase / np.pi)


def mode_frequencies(geometry: CavityGeometry, modes) -> np.ndarray:
    eta = np.array([m.eta for m in modes], dtype=float)
    order = np.array([1 + m.mu + m.nu for m in modes], dtype=float)
    return geometry.fsr * (eta + order * geometry.gouy_phase / np.pi)


def waist_radius(geometry: CavityGeometry, mode: ModeIndex | None = None,
                 wavelength: float | None = None) -> float:
    """TEM00 field radius at the waist (m).

    Higher-order modes share the same radius; ``mode`` is accepted for
    interface symmetry only.
    """
    geometry.check_stable()
    g1, g2 = geometry.g1, geometry.g2
    lam = geometry.lambda_ref if wavelength is None else wavelength
    R1, R2, L = geometry.R1, geometry.R2, geometry.L
    if R1 == R2 and isfinite(R1):
        # symmetric closed form, regular at the confocal point g = 0
        return float(np.sqrt(lam / (2.0 * np.pi) * np.sqrt(L * (2.0 * R1 - L))))
    denom = (g1 + g2 - 2.0 * g1 * g2) ** 2
    if denom == 0.0:
        raise DomainError("waist undefined for a planar or degenerate cavity")
    w2 = lam * geometry.L / np.pi * np.sqrt(g1 * g2 * (1.0 - g1 * g2) / denom)
    return float(np.sqrt(w2))


def beam_params(geometry: CavityGeometry, mode: ModeIndex | None = None,
                per_mode: bool = False) -> BeamParams:
    """Beam radius and wavenumber at the waist.

    With ``per_mode`` the wavenumber is ``omega / c`` of ``mode`` and the
    radius follows from the corresponding wavelength.
    """
    if per_mode and mode is not None:
        k = unperturbed_frequency(geometry, mode) / C_LIGHT
        return BeamParams(waist_radius(geometry, wavelength=2.0 * np.pi / k), k)
    return BeamParams(waist_radius(geometry), geometry.k_ref)


def mode_field(geometry: CavityGeometry, mode: ModeIndex, x, y, z,
               beam: BeamParams | None = None):
    """Flat-wavefront mode profile normalized over the cavity volume (1/m^1.5)."""
    if beam is None:
        beam = beam_params(geometry)
    s = beam.sigma
    Y = np.sqrt(2.0) * np.asarray(y, dtype=float) / s
    Z = np.sqrt(2.0) * np.asarray(z, dtype=float) / s
    x = np.asarray(x, dtype=float)
    # normalized Hermite functions absorb sqrt(2^n n! sqrt(pi)) per axis
    hy = normalized_hermite(mode.mu, Y)
    hz = normalized_hermite(mode.nu, Z)
    norm = 2.0 / (s * np.sqrt(geometry.L))
    return (norm * hy * hz * np.exp(-(Y ** 2 + Z ** 2) / 2.0)
            * np.cos(beam.k * (x - beam.waist_position) + np.pi * mode.eta / 2.0))


def hermite_poly_norm(n: int) -> float:
    """``sqrt(2**n n! sqrt(pi))``, the factor between physicists' and normalized Hermite."""
    return float(np.sqrt(2.0 ** n * factorial(n) * np.sqrt(np.pi)))
