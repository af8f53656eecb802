"""One-dimensional transfer matrices for a dielectric slab between two mirrors.

Amplitudes are power normalized (``sqrt(n) E``), so every lossless
interface matrix has unit determinant.  The mirrors are thin, symmetric and
lossless with real positive reflection seen from inside the cavity; the
closed-cavity limit then has field antinodes on both mirrors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import hbar as HBAR
from scipy.optimize import brentq

from .errors import DomainError, NumericalError
from .kernels import stack_matrices
from .mode_basis import C_LIGHT
from .trap import photon_number

__all__ = [
    "Slab",
    "SlabStack",
    "stack_response",
    "transmission_spectrum",
    "resonance_condition",
    "find_resonance",
    "resonance_shift",
    "cm_spring_oracle",
    "CMSpring",
    "transmission_map",
]


@dataclass(frozen=True)
class Slab:
    """Homogeneous layer of index ``n`` and thickness ``t`` (m) centred at ``x0`` (m)."""

    n: complex
    t: float
    x0: float = 0.0


@dataclass(frozen=True)
class SlabStack:
    """Cavity of length ``L`` with mirrors at ``-L/2`` and ``+L/2``.

    ``mirror_t`` is the amplitude transmission of each mirror.  ``eta_ref``
    selects the reference resonance ``eta_ref pi c / L`` used for detunings.
    """

    L: float
    slabs: tuple = ()
    mirror_t: float = 0.3
    eta_ref: int = 1

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError("cavity length must be positive")
        if not 0 < abs(self.mirror_t) <= 1:
            raise DomainError("mirror transmission must lie in (0, 1]")
        edges = []
        for s in self.slabs:
            edges.append((s.x0 - s.t / 2.0, s.x0 + s.t / 2.0))
        edges.sort()
        prev = -self.L / 2.0
        for a, b in edges:
            if a < prev or b > self.L / 2.0:
                raise DomainError("slabs must be disjoint and inside the cavity")
            prev = b

    @classmethod
    def around(cls, L: float, wavelength: float, slabs=(), mirror_t: float = 0.3,
               multiple: int = 4) -> "SlabStack":
        eta = max(multiple, int(round(2.0 * L / wavelength / multiple)) * multiple)
        return cls(L, tuple(slabs), mirror_t, eta)

    @property
    def fsr(self) -> float:
        return np.pi * C_LIGHT / self.L

    @property
    def omega_ref(self) -> float:
        return self.eta_ref * self.fsr

    def moved(self, x0: float, index: int = 0) -> "SlabStack":
        slabs = list(self.slabs)
        slabs[index] = replace(slabs[index], x0=x0)
        return replace(self, slabs=tuple(slabs))

    def layers(self, with_mirrors: bool = True):
        """Index, thickness and boundary-mirror arrays for the kernel."""
        n, d = [], []
        pos = -self.L / 2.0
        for s in sorted(self.slabs, key=lambda s: s.x0):
            a = s.x0 - s.t / 2.0
            n.append(1.0)
            d.append(a - pos)
            n.append(s.n)
            d.append(s.t)
            pos = a + s.t
        n.append(1.0)
        d.append(self.L / 2.0 - pos)
        n = np.array(n, dtype=complex)
        d = np.array(d, dtype=float)
        mr = np.zeros(n.size - 1, dtype=complex)
        mt = np.ones(n.size - 1, dtype=complex)
        if with_mirrors:
            t = 1j * abs(self.mirror_t)
            r = np.sqrt(1.0 - abs(self.mirror_t) ** 2)
            n = np.concatenate([[1.0], n, [1.0]])
            d = np.concatenate([[0.0], d, [0.0]])
            mr = np.concatenate([[r], mr, [r]])
            mt = np.concatenate([[t], mt, [t]])
        return n, d, mr, mt


def stack_response(stack: SlabStack, omegas):
    """Complex amplitude transmission and reflection for incidence from the left."""
    M = stack_matrices(np.asarray(omegas, dtype=float) / C_LIGHT, *stack.layers(True))
    t = 1.0 / M[:, 1, 1]
    r = -M[:, 1, 0] / M[:, 1, 1]
    return t, r


def transmission_spectrum(stack: SlabStack, detuning_grid) -> np.ndarray:
    """Intensity transmission ``|t|**2`` at ``omega_ref + detuning`` (rad/s)."""
    t, _ = stack_response(stack, stack.omega_ref + np.asarray(detuning_grid, dtype=float))
    return np.abs(t) ** 2


def resonance_condition(stack: SlabStack, omegas) -> np.ndarray:
    """Vanishes at the modes of the closed cavity with perfectly reflecting mirrors."""
    M = stack_matrices(np.atleast_1d(np.asarray(omegas, dtype=float)) / C_LIGHT,
                       *stack.layers(False))
    return np.imag(M[:, 0, 0] + M[:, 0, 1])


def _roots_in(stack, lo, hi, n=64):
    w = np.linspace(lo, hi, n + 1)
    f = resonance_condition(stack, w)
    out = []
    for a in range(n):
        if f[a] == 0.0:
            out.append(w[a])
        elif f[a] * f[a + 1] < 0:
            out.append(brentq(lambda x: resonance_condition(stack, x)[0], w[a], w[a + 1],
                              xtol=1e-3, rtol=1e-15))
    return np.array(out)


def find_resonance(stack: SlabStack, omega_guess: float, span: float | None = None) -> float:
    """Closed-cavity resonance nearest ``omega_guess`` within ``span`` (default one FSR)."""
    span = stack.fsr if span is None else span
    roots = _roots_in(stack, omega_guess - span, omega_guess + span)
    if roots.size == 0:
        raise NumericalError(f"no resonance within {span:.3g} rad/s of {omega_guess:.6g}")
    return float(roots[np.argmin(np.abs(roots - omega_guess))])


def _newton(stack, w0, span, tol):
    # damped Newton on the phase condition with a secant derivative
    w = w0
    h = 1e-7 * stack.fsr
    for _ in range(40):
        f = resonance_condition(stack, [w - h, w, w + h])
        df = (f[2] - f[0]) / (2 * h)
        if df == 0:
            return None
        step = -f[1] / df
        step = np.clip(step, -span, span)
        w += step
        if abs(step) < tol:
            return w
    return None


def resonance_shift(stack: SlabStack, x0_grid, branch: int | None = None,
                    seed_detuning: float = 0.0, slab_index: int = 0) -> np.ndarray:
    """Detuning (rad/s) of one closed-cavity resonance as the slab moves.

    The branch starts at the resonance nearest ``branch * pi c / L +
    seed_detuning`` at the first grid point (``branch`` defaults to
    ``stack.eta_ref``) and is continued by Newton iteration seeded from the
    previous point.
    """
    eta = stack.eta_ref if branch is None else branch
    ref = eta * stack.fsr
    grid = np.asarray(x0_grid, dtype=float)
    out = np.empty(grid.size)
    w = find_resonance(stack.moved(grid[0], slab_index), ref + seed_detuning)
    out[0] = w - ref
    for p in range(1, grid.size):
        st = stack.moved(grid[p], slab_index)
        guess = w + (out[p - 1] - out[p - 2] if p >= 2 else 0.0)
        nw = _newton(st, guess, 0.05 * stack.fsr, 2e-15 * w)
        if nw is None or abs(nw - w) > 0.25 * stack.fsr:
            try:
                nw = find_resonance(st, w, 0.25 * stack.fsr)
            except NumericalError as exc:
                raise NumericalError(
                    f"resonance lost at x0={grid[p]:.6g} m; last good detuning "
                    f"{out[p - 1]:.6g} rad/s at x0={grid[p - 1]:.6g} m") from exc
        w = nw
        out[p] = w - ref
    return out


@dataclass
class CMSpring:
    """Optical spring from transfer-matrix curvature; ``stable`` is False if negative."""

    K: float
    curvature: float
    photons: float
    stable: bool = field(default=True)


def cm_spring_oracle(stack: SlabStack, P: float, branch: int | None = None,
                     step: float | None = None, slab_index: int = 0) -> CMSpring:
    """Centre-of-mass spring ``N hbar d2(omega)/dx0**2`` at the slab's current position."""
    if P < 0:
        raise DomainError("power must be non-negative")
    x0 = stack.slabs[slab_index].x0
    eta = stack.eta_ref if branch is None else branch
    lam = 2.0 * stack.L / eta
    h = lam / 2000.0 if step is None else step
    det = resonance_shift(stack, [x0 - 2 * h, x0 - h, x0, x0 + h, x0 + 2 * h], eta,
                          slab_index=slab_index)
    # fourth-order central difference
    curv = (-det[0] + 16 * det[1] - 30 * det[2] + 16 * det[3] - det[4]) / (12 * h * h)
    omega = eta * stack.fsr + det[2]
    N = photon_number(P, stack.L, omega)
    K = N * HBAR * curv
    stable = bool(curv >= 0)
    if not stable:
        warnings.warn("negative optical spring: slab is not at a stable trap point")
    return CMSpring(float(K), float(curv), float(N), stable)


def transmission_map(stack: SlabStack, x0_grid, detuning_grid, slab_index: int = 0,
                     threads: int = 1) -> np.ndarray:
    """Transmission on an ``(x0, detuning)`` grid, shape ``(len(x0), len(detuning))``."""
    from .spectrum import _map
    det = np.asarray(detuning_grid, dtype=float)
    rows = _map(lambda x: transmission_spectrum(stack.moved(float(x), slab_index), det),
                np.asarray(x0_grid, dtype=float), threads)
    return np.array(rows)
