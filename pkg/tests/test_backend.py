import os
import subprocess
import sys

import numpy as np
import pytest

from blocktoep import _backend
from blocktoep import _kernels_py as py

compiled = _backend.compiled_kernels
needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def _coef(K, s, t, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((K, s, t)) + 1j * rng.standard_normal((K, s, t))


@pytest.mark.parametrize("K,s,t,kmin,n,m", [(3, 1, 1, -1, 5, 5), (5, 2, 2, -2, 4, 7), (4, 1, 2, -1, 6, 3),
                                             (1, 2, 1, 0, 1, 1), (2, 1, 1, 3, 4, 4)])
def test_fill_reference(K, s, t, kmin, n, m):
    coef = _coef(K, s, t)
    M = py.block_toeplitz_fill(coef, kmin, n, m)
    for i in range(n):
        for j in range(m):
            k = i - j - kmin
            want = coef[k] if 0 <= k < K else 0
            assert np.array_equal(M[i * s:(i + 1) * s, j * t:(j + 1) * t], want * np.ones((s, t)))


@needs_ext
@pytest.mark.parametrize("K,s,t,kmin,n,m", [(3, 1, 1, -1, 50, 50), (5, 2, 2, -2, 13, 29), (4, 1, 2, -1, 16, 3)])
def test_fill_compiled_matches(K, s, t, kmin, n, m):
    coef = _coef(K, s, t, 1)
    assert np.array_equal(compiled.block_toeplitz_fill(coef, kmin, n, m), py.block_toeplitz_fill(coef, kmin, n, m))


@needs_ext
def test_mgs_compiled_matches():
    rng = np.random.default_rng(2)
    V, _ = np.linalg.qr(rng.standard_normal((40, 6)))
    V = np.ascontiguousarray(np.vstack([V.T, np.zeros((1, 40))]))
    w0 = rng.standard_normal(40)
    w1, w2 = w0.copy(), w0.copy()
    h1 = compiled.mgs_orthogonalize(V, w1, 5)
    h2 = py.mgs_orthogonalize(V, w2, 5)
    assert np.allclose(h1, h2, atol=1e-13) and np.allclose(w1, w2, atol=1e-13)
    assert np.allclose(V[:6] @ w1, 0, atol=1e-12)


def test_backend_flag():
    assert _backend.BACKEND in ("compiled", "python")
    import blocktoep
    assert blocktoep.BACKEND == _backend.BACKEND


def test_forced_python_fallback():
    env = dict(os.environ, BLOCKTOEP_PURE_PYTHON="1")
    code = ("import blocktoep, numpy as np; from blocktoep.structmat import toeplitz; "
            "from blocktoep.symbols import catalog; "
            "print(blocktoep.BACKEND, float(np.abs(toeplitz(catalog('fQ2'), 3).to_dense()).sum()))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()
    assert out[0] == "python"
    from blocktoep.structmat import toeplitz
    from blocktoep.symbols import catalog
    assert float(out[1]) == pytest.approx(float(np.abs(toeplitz(catalog("fQ2"), 3).to_dense()).sum()))
