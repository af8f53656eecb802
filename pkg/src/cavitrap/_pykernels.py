"""Pure numpy implementations of the hot loops.

These mirror the compiled versions in ``_kernels.pyx`` one-for-one and are
used whenever the extension is unavailable.
"""

import numpy as np

_PI_M14 = np.pi ** -0.25


def hermite_table(nmax, x):
    """Normalized Hermite functions without the Gaussian factor.

    Parameters
    ----------
    nmax : int
        Highest order returned.
    x : array_like
        1-D evaluation points.

    Returns
    -------
    ndarray, shape (nmax + 1, len(x))
        Row ``n`` holds ``H_n(x) / sqrt(2**n n! sqrt(pi))``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    out = np.empty((nmax + 1, x.size))
    out[0] = _PI_M14
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * x * _PI_M14
    for n in range(1, nmax):
        out[n + 1] = (x * out[n] - np.sqrt(n / 2.0) * out[n - 1]) / np.sqrt((n + 1) / 2.0)
    return out


def gh_overlap(na, nb, sa, sb, q, nodes, weights):
    """Transverse 1-D overlaps of Hermite-Gaussian profiles with distinct widths.

    Computes ``integral u_na(y; sa) u_nb(y; sb) exp(i q y) dy`` for each
    pair, where ``u_n(y; s)`` is the unit-norm profile of field radius ``s``.
    Gauss-Hermite nodes/weights (weight ``exp(-x**2)``) must be supplied.

    Returns
    -------
    ndarray of complex
    """
    na = np.asarray(na, dtype=np.int64)
    nb = np.asarray(nb, dtype=np.int64)
    sa = np.asarray(sa, dtype=np.float64)
    sb = np.asarray(sb, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    na, nb, sa, sb, q = np.broadcast_arrays(na, nb, sa, sb, q)
    shape = na.shape
    na, nb, sa, sb, q = (a.ravel() for a in (na, nb, sa, sb, q))
    scale = 1.0 / np.sqrt(1.0 / sa ** 2 + 1.0 / sb ** 2)
    y = scale[:, None] * nodes[None, :]
    nmax = int(max(na.max(initial=0), nb.max(initial=0)))
    ha = _hermite_rows(nmax, np.sqrt(2.0) * y / sa[:, None], na)
    hb = _hermite_rows(nmax, np.sqrt(2.0) * y / sb[:, None], nb)
    pref = np.sqrt(2.0 / (sa * sb)) * scale
    ph = np.exp(1j * q[:, None] * y)
    out = pref * np.sum(weights[None, :] * ha * hb * ph, axis=1)
    return out.reshape(shape)


def _hermite_rows(nmax, x, orders):
    # evaluate row-wise order selection without building the whole table per row
    prev = np.zeros_like(x)
    cur = np.full_like(x, _PI_M14)
    out = np.where((orders == 0)[:, None], cur, 0.0)
    for n in range(nmax):
        nxt = (x * cur - np.sqrt(n / 2.0) * prev) / np.sqrt((n + 1) / 2.0)
        prev, cur = cur, nxt
        out = np.where((orders == n + 1)[:, None], cur, out)
    return out


def stack_matrices(k0, n, d, mirror_r, mirror_t):
    """Total transfer matrix of a layered 1-D stack on a wavenumber grid.

    Parameters
    ----------
    k0 : array_like
        Vacuum wavenumbers (1/m).
    n : array_like of complex, shape (m,)
        Layer refractive indices, left to right.
    d : array_like, shape (m,)
        Layer thicknesses (m).
    mirror_r, mirror_t : array_like of complex, shape (m - 1,)
        Thin lossless mirror at each boundary (``r = 0, t = 1`` for none).

    Returns
    -------
    ndarray, shape (len(k0), 2, 2)
        Maps power-normalized (forward, backward) amplitudes at the left edge
        of the first layer to those at the right edge of the last layer.
    """
    k0 = np.asarray(k0, dtype=np.float64).ravel()
    n = np.asarray(n, dtype=np.complex128)
    d = np.asarray(d, dtype=np.float64)
    mirror_r = np.asarray(mirror_r, dtype=np.complex128)
    mirror_t = np.asarray(mirror_t, dtype=np.complex128)
    total = np.zeros((k0.size, 2, 2), dtype=np.complex128)
    total[:, 0, 0] = 1.0
    total[:, 1, 1] = 1.0
    for j in range(n.size):
        ph = np.exp(1j * n[j] * k0 * d[j])
        total[:, 0, :] *= ph[:, None]
        total[:, 1, :] /= ph[:, None]
        if j == n.size - 1:
            break
        b = _boundary(n[j], n[j + 1], mirror_r[j], mirror_t[j])
        total = np.einsum("ij,fjk->fik", b, total)
    return total


def _boundary(n1, n2, r, t):
    s = 1.0 / (2.0 * np.sqrt(n1 * n2))
    face = s * np.array([[n2 + n1, n2 - n1], [n2 - n1, n2 + n1]], dtype=np.complex128)
    mirror = np.array([[(t * t - r * r) / t, r / t], [-r / t, 1.0 / t]], dtype=np.complex128)
    return mirror @ face
