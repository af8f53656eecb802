import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.special import eval_hermite, factorial

from cavitrap.kernels import BACKEND, compiled_backend, python_backend

needs_compiled = pytest.mark.skipif(compiled_backend is None, reason="extension not built")


def test_hermite_table_against_scipy():
    x = np.linspace(-5, 5, 101)
    tab = python_backend.hermite_table(15, x)
    for n in range(16):
        ref = eval_hermite(n, x) / np.sqrt(2.0 ** n * factorial(n) * np.sqrt(np.pi))
        # absolute tolerance scaled to the row, since values cancel near roots
        np.testing.assert_allclose(tab[n], ref, rtol=1e-11, atol=1e-13 * np.abs(ref).max())


@needs_compiled
def test_hermite_table_backends_agree():
    x = np.linspace(-8, 8, 777)
    a = python_backend.hermite_table(40, x)
    b = compiled_backend.hermite_table(40, x)
    for row_a, row_b in zip(a, b):
        np.testing.assert_allclose(row_b, row_a, rtol=1e-12, atol=1e-13 * np.abs(row_a).max())


@needs_compiled
def test_gh_overlap_backends_agree():
    nodes, weights = np.polynomial.hermite.hermgauss(80)
    na = np.array([0, 1, 2, 5, 7, 0])
    nb = np.array([0, 3, 2, 4, 7, 9])
    for q in (0.0, 0.4, 1.7):
        a = python_backend.gh_overlap(na, nb, 1.0, 1.05, q, nodes, weights)
        b = compiled_backend.gh_overlap(na, nb, 1.0, 1.05, q, nodes, weights)
        np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-14)


def test_gh_overlap_orthonormal_at_equal_widths():
    nodes, weights = np.polynomial.hermite.hermgauss(60)
    na, nb = np.meshgrid(np.arange(8), np.arange(8), indexing="ij")
    ov = python_backend.gh_overlap(na.ravel(), nb.ravel(), 1.0, 1.0, 0.0, nodes, weights)
    np.testing.assert_allclose(ov.reshape(8, 8), np.eye(8), atol=1e-12)


@needs_compiled
def test_stack_matrices_backends_agree():
    k0 = np.linspace(4.0e6, 4.1e6, 301)
    n = np.array([1.0, 1.0, 3.48, 1.0, 2.0 + 0.01j, 1.0, 1.0], dtype=complex)
    d = np.array([0.0, 1e-4, 110e-9, 2e-4, 50e-9, 1e-4, 0.0])
    mr = np.array([0.95, 0, 0, 0, 0, 0.95], dtype=complex)
    mt = np.array([np.sqrt(1 - 0.95 ** 2) * 1j, 1, 1, 1, 1, np.sqrt(1 - 0.95 ** 2) * 1j])
    a = python_backend.stack_matrices(k0, n, d, mr, mt)
    b = compiled_backend.stack_matrices(k0, n, d, mr, mt)
    np.testing.assert_allclose(b, a, rtol=1e-11, atol=1e-12)


def test_pure_python_switch():
    env = dict(os.environ, CAVITRAP_PURE_PYTHON="1")
    res = subprocess.run([sys.executable, "-c", "from cavitrap.kernels import BACKEND; print(BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert res.stdout.strip() == "python"
    assert BACKEND in ("cython", "python")
