"""Structured matrices: (rectangular) block Toeplitz, Hankel, block
circulant, tau and two-level Toeplitz, each with a dense realisation and a
transform-based apply.
"""
from __future__ import annotations

import struct

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator

from . import _backend
from .symbols import Adjoint, Symbol

__all__ = [
    "ToeplitzOperator", "CirculantOperator", "TauOperator", "TwoLevelToeplitz",
    "toeplitz", "toeplitz_rect", "hankel", "strang_circulant", "chan_circulant",
    "chan_from_dense", "strang_or_chan", "tau", "tau2", "two_level_toeplitz", "fast_matvec",
    "schatten_norm", "block_circulant_dense", "export_dense", "read_dense",
    "export_csv", "dst_matrix", "realify",
]


def realify(a, tol=0.0):
    """Drop an identically zero imaginary part."""
    a = np.asarray(a)
    if np.iscomplexobj(a) and np.all(np.abs(a.imag) <= tol):
        return np.ascontiguousarray(a.real)
    return a


def _next_pow2(k):
    return 1 << max(int(k) - 1, 0).bit_length()


class ToeplitzOperator(LinearOperator):
    """``T_{n,m}(f)``: ``(s n) x (t m)`` with block (i, j) equal to ``f_{i-j}``."""

    def __init__(self, symbol: Symbol, n: int, m: int | None = None):
        n = int(n)
        m = n if m is None else int(m)
        if n < 1 or m < 1:
            raise ValueError("block sizes must be positive")
        self.symbol, self.n, self.m = symbol, n, m
        self.s, self.t = symbol.s, symbol.t
        self.kmin, self.kmax = -(m - 1), n - 1
        coef = symbol.coeffs(self.kmin, self.kmax)
        self._coef = coef
        self._real = not np.any(coef.imag)
        super().__init__(dtype=np.float64 if self._real else np.complex128,
                         shape=(self.s * n, self.t * m))
        self._fft = None

    @property
    def block_diagonals(self):
        """Dict ``k -> f_k`` for the diagonals present in the matrix."""
        return {k: self._coef[k - self.kmin] for k in range(self.kmin, self.kmax + 1)}

    def coefficient(self, k):
        if self.kmin <= k <= self.kmax:
            return self._coef[k - self.kmin]
        return np.zeros((self.s, self.t), dtype=complex)

    def to_dense(self):
        return realify(_backend.block_toeplitz_fill(self._coef, self.kmin, self.n, self.m))

    def _spectrum(self):
        if self._fft is None:
            L = _next_pow2(self.n + self.m - 1)
            c = np.zeros((L, self.s, self.t), dtype=complex)
            ks = np.arange(self.kmin, self.kmax + 1)
            c[ks % L] = self._coef
            self._fft = (L, np.fft.fft(c, axis=0))
        return self._fft

    def _matmat(self, X):
        X = np.asarray(X)
        k = X.shape[1]
        L, C = self._spectrum()
        Xb = np.zeros((L, self.t, k), dtype=complex)
        Xb[: self.m] = X.reshape(self.m, self.t, k)
        Y = np.fft.ifft(np.einsum("fab,fbk->fak", C, np.fft.fft(Xb, axis=0)), axis=0)
        Y = Y[: self.n].reshape(self.s * self.n, k)
        if self._real and not np.iscomplexobj(X):
            return Y.real
        return Y

    def _matvec(self, x):
        return self._matmat(np.asarray(x).reshape(-1, 1)).ravel()

    def _adjoint(self):
        return ToeplitzOperator(Adjoint(self.symbol), self.m, self.n)

    def _rmatvec(self, x):
        return self._adjoint().matvec(x)


def toeplitz(sym, n):
    """Square block Toeplitz ``T_n(f)``."""
    return ToeplitzOperator(sym, n, n)


def toeplitz_rect(sym, n, m):
    """Rectangular block Toeplitz ``T_{n,m}(f)``."""
    return ToeplitzOperator(sym, n, m)


def hankel(sym, n):
    """Block Hankel ``H_n(f)`` with block (i, j) = ``f_{i+j-1}`` (1-based)."""
    n = int(n)
    coef = sym.coeffs(1, 2 * n - 1)
    s, t = sym.s, sym.t
    idx = np.arange(n)[:, None] + np.arange(n)[None, :]
    return realify(coef[idx].transpose(0, 2, 1, 3).reshape(s * n, t * n))


# --------------------------------------------------------------------------
# block circulants

def block_circulant_dense(col):
    """Dense block circulant from its first block column ``col`` (n, s, t)."""
    col = np.asarray(col)
    n, s, t = col.shape
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return realify(col[idx].transpose(0, 2, 1, 3).reshape(s * n, t * n))


class CirculantOperator(LinearOperator):
    """Block circulant with first block column ``col`` of shape (n, s, t).

    Diagonalised by the DFT over the block index: eigen-block ``j`` is
    ``sum_k col[k] exp(2 pi i j k / n)``, i.e. for a Strang circulant the
    symbol sampled at ``2 pi j / n``.
    """

    def __init__(self, col, kind="custom"):
        col = np.array(col, dtype=complex)
        if col.ndim == 1:
            col = col[:, None, None]
        self.col = col
        self.nb, self.s, self.t = col.shape
        self.kind = kind
        self.eig = self.nb * np.fft.ifft(col, axis=0)
        self._real = not np.any(col.imag)
        super().__init__(dtype=np.float64 if self._real else np.complex128,
                         shape=(self.s * self.nb, self.t * self.nb))

    @property
    def first_column(self):
        if self.s == self.t == 1:
            return realify(self.col[:, 0, 0])
        return realify(self.col)

    def to_dense(self):
        return block_circulant_dense(self.col)

    def _apply_blocks(self, blocks, X):
        X = np.asarray(X)
        k = X.shape[1]
        Xf = np.fft.ifft(X.reshape(self.nb, -1, k), axis=0)
        Y = np.fft.fft(np.einsum("fab,fbk->fak", blocks, Xf), axis=0).reshape(-1, k)
        if self._real and not np.iscomplexobj(X):
            return Y.real
        return Y

    def _matmat(self, X):
        return self._apply_blocks(self.eig, X)

    def _matvec(self, x):
        return self._matmat(np.asarray(x).reshape(-1, 1)).ravel()

    def _rmatvec(self, x):
        return self._apply_blocks(np.conj(np.swapaxes(self.eig, 1, 2)), np.asarray(x).reshape(-1, 1)).ravel()

    def singular_ratio(self):
        """Smallest over largest singular value across the eigen-blocks."""
        sv = np.linalg.svd(self.eig, compute_uv=False)
        top = sv.max()
        return 0.0 if top == 0 else sv.min() / top

    def solve(self, b, tol=1e-12):
        if self.s != self.t:
            raise ValueError("solve needs square blocks; use pinv_apply")
        sv = np.linalg.svd(self.eig, compute_uv=False)
        bad = np.nonzero(sv.min(axis=1) <= tol * sv.max())[0]
        if bad.size:
            raise np.linalg.LinAlgError(f"singular circulant at frequency index {int(bad[0])}")
        return self._apply_blocks(np.linalg.inv(self.eig), np.asarray(b).reshape(-1, 1)).ravel()

    def pinv_apply(self, b, rcond=1e-12):
        P = np.linalg.pinv(self.eig, rcond=rcond)
        return self._apply_blocks(P, np.asarray(b).reshape(-1, 1)).ravel()


def strang_circulant(sym, n):
    """Strang circulant of ``T_n(f)`` for a banded symbol.

    The first column copies ``f_0..f_{n//2}`` and wraps ``f_{-k}`` to
    position ``n - k``.
    """
    n = int(n)
    bw = sym.bandwidth
    if bw is None or 2 * bw >= n:
        raise ValueError("band too wide")
    col = np.zeros((n, sym.s, sym.t), dtype=complex)
    for k in range(0, bw + 1):
        col[k] += sym.coeff(k)
        if k:
            col[n - k] += sym.coeff(-k)
    return CirculantOperator(col, kind="strang")


def chan_circulant(T):
    """Frobenius-optimal block circulant of a square block Toeplitz operator.

    ``c_j = ((n - j) a_j + j a_{j-n}) / n`` with ``a_k`` the block diagonals.
    """
    if T.n != T.m:
        raise ValueError("chan_circulant needs a square Toeplitz operator")
    n = T.n
    j = np.arange(n)[:, None, None]
    a_pos = np.stack([T.coefficient(k) for k in range(n)])
    a_neg = np.stack([T.coefficient(k - n) if k else np.zeros((T.s, T.t)) for k in range(n)])
    return CirculantOperator(((n - j) * a_pos + j * a_neg) / n, kind="chan")


def chan_from_dense(M, s=1, t=1):
    """Frobenius-optimal block circulant of an arbitrary square block matrix."""
    M = np.asarray(M)
    n = M.shape[0] // s
    B = M.reshape(n, s, n, t).transpose(0, 2, 1, 3)
    i = np.arange(n)
    col = np.stack([B[(i + j) % n, i].mean(axis=0) for j in range(n)])
    return CirculantOperator(col, kind="chan")


def strang_or_chan(sym, n, threshold=1e-10):
    """Strang circulant unless it is (numerically) singular or the band is
    too wide, in which case the Frobenius-optimal one is returned."""
    try:
        C = strang_circulant(sym, n)
    except ValueError:
        return chan_circulant(toeplitz(sym, n))
    if C.singular_ratio() < threshold:
        return chan_circulant(toeplitz(sym, n))
    return C


# --------------------------------------------------------------------------
# tau algebra

def dst_matrix(n):
    """Orthogonal symmetric sine transform ``S_n[i,j] = sqrt(2/(n+1)) sin(i j pi/(n+1))``."""
    i = np.arange(1, n + 1)
    return np.sqrt(2.0 / (n + 1)) * np.sin(np.outer(i, i) * np.pi / (n + 1))


def tau_grid(n):
    return np.arange(1, n + 1) * np.pi / (n + 1)


def _sample(sym, theta):
    if hasattr(sym, "closed_form"):
        v = sym.closed_form(theta)
    else:
        v = sym.eval(theta)[..., 0, 0]
    return np.real_if_close(np.asarray(v), tol=1e6)


class TauOperator(LinearOperator):
    """``S D S`` (one level) or ``(S (x) S) D (S (x) S)`` (two levels).

    ``samples`` has shape ``(n,)`` or ``(n2, n1)``; in the two-level case the
    vector index is ``i2 * n1 + i1`` so that ``I_{n2} (x) T_{n1}`` acts on the
    fast index.
    """

    def __init__(self, samples):
        D = np.asarray(samples, dtype=float)
        if D.ndim not in (1, 2):
            raise ValueError("tau samples must be 1D or 2D")
        self.samples = D
        super().__init__(dtype=np.float64, shape=(D.size, D.size))

    @property
    def levels(self):
        return self.samples.ndim

    def _transform(self, X):
        axes = tuple(range(1, 1 + self.levels))
        return sfft.dstn(X, type=1, norm="ortho", axes=axes)

    def _apply_diag(self, d, X):
        X = np.asarray(X)
        k = X.shape[1]
        Xr = np.moveaxis(X.reshape(self.samples.shape + (k,)), -1, 0)
        Y = self._transform(d[None] * self._transform(Xr))
        return np.moveaxis(Y, 0, -1).reshape(-1, k)

    def _matmat(self, X):
        return self._apply_diag(self.samples, X)

    def _matvec(self, x):
        return self._matmat(np.asarray(x).reshape(-1, 1)).ravel()

    _rmatvec = _matvec

    def solve(self, b, tol=1e-14):
        if np.any(np.abs(self.samples) <= tol):
            raise np.linalg.LinAlgError("tau singular")
        return self._apply_diag(1.0 / self.samples, np.asarray(b).reshape(-1, 1)).ravel()

    def to_dense(self):
        if self.levels == 1:
            S = dst_matrix(self.samples.size)
        else:
            n2, n1 = self.samples.shape
            S = np.kron(dst_matrix(n2), dst_matrix(n1))
        return (S * self.samples.ravel()) @ S


def tau(sym, n):
    """One-level ``tau_n(f)`` from samples at ``j pi/(n+1)``."""
    return TauOperator(_sample(sym, tau_grid(int(n))))


def tau2(sym_a, sym_b, n1, n2=None, scale=1.0):
    """Two-level tau matrix of the separable symbol ``scale (a(t1) + b(t2))``."""
    n2 = n1 if n2 is None else n2
    a = _sample(sym_a, tau_grid(n1))
    b = _sample(sym_b, tau_grid(n2))
    return TauOperator(scale * (b[:, None] + a[None, :]))


# --------------------------------------------------------------------------
# two-level Toeplitz

class TwoLevelToeplitz(LinearOperator):
    """``scale (I_{n2} (x) T_{n1}(q_a) + T_{n2}(q_b) (x) I_{n1})``."""

    def __init__(self, q_a, q_b, n1, n2, scale=1.0):
        self.q_a, self.q_b = q_a, q_b
        self.n1, self.n2, self.scale = int(n1), int(n2), float(scale)
        self.T1 = toeplitz(q_a, self.n1).to_dense()
        self.T2 = toeplitz(q_b, self.n2).to_dense()
        N = self.n1 * self.n2
        super().__init__(dtype=np.result_type(self.T1, self.T2, float), shape=(N, N))

    def to_dense(self):
        return self.scale * (np.kron(np.eye(self.n2), self.T1) + np.kron(self.T2, np.eye(self.n1)))

    def _matmat(self, X):
        k = X.shape[1]
        Xr = X.reshape(self.n2, self.n1, k)
        Y = np.einsum("ab,jbk->jak", self.T1, Xr) + np.einsum("ij,jak->iak", self.T2, Xr)
        return self.scale * Y.reshape(-1, k)

    def _matvec(self, x):
        return self._matmat(np.asarray(x).reshape(-1, 1)).ravel()

    def _rmatvec(self, x):
        return self._matvec(np.conj(x)).conj() if np.iscomplexobj(self.T1) else self._matvec(x)


def two_level_toeplitz(q_a, q_b, n1, n2, scale=1.0):
    return TwoLevelToeplitz(q_a, q_b, n1, n2, scale)


def fast_matvec(op, x):
    """Transform-based product; shape mismatches raise ``ValueError``."""
    x = np.asarray(x)
    if x.shape[0] != op.shape[1]:
        raise ValueError(f"dimension mismatch: operator {op.shape}, vector {x.shape}")
    return op.matvec(x)


def schatten_norm(M, p):
    """Schatten p-norm (``p = np.inf`` gives the spectral norm)."""
    if p < 1:
        raise ValueError("Schatten norms need p >= 1")
    M = M.to_dense() if hasattr(M, "to_dense") else np.asarray(M)
    sv = np.linalg.svd(M, compute_uv=False)
    if np.isinf(p):
        return float(sv.max(initial=0.0))
    return float(np.sum(sv ** p) ** (1.0 / p))


# --------------------------------------------------------------------------
# export

def export_dense(M, path):
    """Binary export: int64 rows, cols (little endian) then column-major
    float64 data (complex128 when the matrix is complex)."""
    M = realify(M.to_dense() if hasattr(M, "to_dense") else np.asarray(M))
    dt = "<c16" if np.iscomplexobj(M) else "<f8"
    with open(path, "wb") as fh:
        fh.write(struct.pack("<qq", *M.shape))
        fh.write(np.asfortranarray(M, dtype=dt).tobytes(order="F"))


def read_dense(path):
    with open(path, "rb") as fh:
        rows, cols = struct.unpack("<qq", fh.read(16))
        raw = fh.read()
    itemsize = len(raw) // max(rows * cols, 1)
    dt = "<c16" if itemsize == 16 else "<f8"
    return np.frombuffer(raw, dtype=dt).reshape((rows, cols), order="F").copy()


def export_csv(M, path):
    M = realify(M.to_dense() if hasattr(M, "to_dense") else np.asarray(M))
    if np.iscomplexobj(M):
        rows = [",".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in r) for r in M]
        with open(path, "w") as fh:
            fh.write("\n".join(rows) + "\n")
    else:
        np.savetxt(path, M, delimiter=",", fmt="%.17g")
