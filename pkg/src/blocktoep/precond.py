"""Block preconditioners arranged like ``A_hat``.

Every slot ``(i, j)`` of the block grid is approximated by a structured
matrix (Strang or Frobenius-optimal circulant, tau, the Toeplitz block itself
or zero) of the copy size ``n_m``; the copies are laid out exactly as in
``A_hat``.  When all pieces have the same size and are circulant the whole
preconditioner is block circulant after a permutation, and inverses are
applied frequency by frequency.  Otherwise a dense factorisation is cached.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator

from .assembly import BlockMatrixSpec, slot_pieces, _embed
from .structmat import (
    CirculantOperator, TauOperator, ToeplitzOperator, chan_circulant, realify,
    strang_circulant,
)

__all__ = ["PrecondPlan", "PrecondOperator", "build_precond", "tau_block_precond",
           "apply_inverse", "apply_pseudoinverse", "load_plan"]

KINDS = ("strang", "chan", "tau", "zero", "exact")
_ALIASES = {"frobenius": "chan", "frobeniusoptimal": "chan", "optimal": "chan", "t_chan": "chan"}


def _kind(k):
    k = str(k).lower().replace("_", "").replace("-", "")
    k = _ALIASES.get(k, k)
    if k not in KINDS:
        raise ValueError(f"unknown approximation kind {k!r}")
    return k


@dataclass
class PrecondPlan:
    """Per-slot approximation kinds.

    ``partition="copies"`` reproduces the ``A_hat`` layout; ``"full"``
    approximates every square piece at its own size (one copy per block).
    """

    default: str = "strang"
    fallback: str | None = "chan"
    slots: dict = field(default_factory=dict)      # (i, j) 0-based -> kind
    zero_slots: tuple = ()
    partition: str = "copies"
    singular_threshold: float = 1e-10

    def __post_init__(self):
        self.default = _kind(self.default)
        if self.fallback is not None:
            self.fallback = _kind(self.fallback)
        self.slots = {tuple(k): _kind(v) for k, v in self.slots.items()}
        if self.partition not in ("copies", "full"):
            raise ValueError(f"partition must be 'copies' or 'full', got {self.partition!r}")

    def kind(self, i, j):
        if (i, j) in set(map(tuple, self.zero_slots)):
            return "zero"
        return _kind(self.slots.get((i, j), self.default))

    @classmethod
    def from_json(cls, obj):
        slots = {}
        for key, v in obj.get("slots", {}).items():
            i, j = (int(x) for x in key.strip("()").split(","))
            slots[i - 1, j - 1] = _kind(v)
        zs = tuple((int(a) - 1, int(b) - 1) for a, b in obj.get("zero_slots", []))
        fb = obj.get("fallback", "chan")
        return cls(default=_kind(obj.get("default", "strang")), fallback=None if fb is None else _kind(fb),
                   slots=slots, zero_slots=zs, partition=obj.get("partition", "copies"))

    def to_json(self):
        return {"default": self.default, "fallback": self.fallback, "partition": self.partition,
                "slots": {f"({i + 1},{j + 1})": k for (i, j), k in sorted(self.slots.items())},
                "zero_slots": [[i + 1, j + 1] for i, j in self.zero_slots]}


def load_plan(path):
    with open(path) as fh:
        return PrecondPlan.from_json(json.load(fh))


# --------------------------------------------------------------------------

class _Uniform:
    """Block-diagonalised representation: ``K`` pieces, each transformed by
    a DFT (block circulant pieces) or a sine transform (tau pieces)."""

    def __init__(self, blocks, K, s, t, transform, grid_shape):
        self.B = blocks                   # (nfreq, K s, K t)
        self.K, self.s, self.t = K, s, t
        self.transform = transform
        self.grid_shape = tuple(grid_shape)
        self.nf = int(np.prod(self.grid_shape))
        self._inv = self._pinv = self._ninv = None

    def _fwd(self, x, w):
        X = x.reshape((self.K,) + self.grid_shape + (w,))
        axes = tuple(range(1, 1 + len(self.grid_shape)))
        if self.transform == "dft":
            X = np.fft.ifftn(X, axes=axes)
        else:
            X = sfft.dstn(X, type=1, norm="ortho", axes=axes)
        X = X.reshape(self.K, self.nf, w)
        return np.transpose(X, (1, 0, 2)).reshape(self.nf, self.K * w)

    def _bwd(self, Y, w):
        Y = np.transpose(Y.reshape(self.nf, self.K, w), (1, 0, 2)).reshape((self.K,) + self.grid_shape + (w,))
        axes = tuple(range(1, 1 + len(self.grid_shape)))
        if self.transform == "dft":
            Y = np.fft.fftn(Y, axes=axes)
        else:
            Y = sfft.dstn(Y, type=1, norm="ortho", axes=axes)
        return Y.reshape(-1)

    def apply(self, M, x, w_in, w_out):
        X = self._fwd(np.asarray(x), w_in)
        return self._bwd(np.einsum("fab,fb->fa", M, X), w_out)

    def singular_values(self):
        return np.linalg.svd(self.B, compute_uv=False)

    def inverse_blocks(self, tol=1e-12):
        if self._inv is None:
            if self.s != self.t:
                raise ValueError("inverse needs a square preconditioner; use the pseudoinverse")
            sv = self.singular_values()
            bad = np.nonzero(sv.min(axis=1) <= tol * sv.max())[0]
            if bad.size:
                raise np.linalg.LinAlgError(f"singular preconditioner block at frequency index {int(bad[0])}")
            self._inv = np.linalg.inv(self.B)
        return self._inv

    def pinv_blocks(self, rcond=1e-12):
        if self._pinv is None:
            top = np.linalg.svd(self.B, compute_uv=False).max()
            U, sv, Vh = np.linalg.svd(self.B, full_matrices=False)
            inv = np.where(sv > rcond * top, 1.0 / np.where(sv > 0, sv, 1.0), 0.0)
            self._pinv = np.einsum("fji,fj,fkj->fik", Vh.conj(), inv, U.conj())
        return self._pinv

    def normal_inverse_blocks(self):
        if self._ninv is None:
            G = self.B @ np.conj(np.swapaxes(self.B, 1, 2))
            self._ninv = np.linalg.inv(G)
        return self._ninv


class PrecondOperator(LinearOperator):
    """The assembled preconditioner ``S`` with inverse actions."""

    def __init__(self, shape, dense_builder, uniform=None, real=True, description=""):
        self._builder = dense_builder
        self._uniform = uniform
        self._dense = None
        self._lu = self._pinv = self._ncho = None
        self.description = description
        self._real = real
        super().__init__(dtype=np.float64 if real else np.complex128, shape=shape)

    @property
    def fast(self):
        """True when inverses are applied in the transform domain."""
        return self._uniform is not None

    def to_dense(self):
        if self._dense is None:
            self._dense = realify(self._builder())
        return self._dense

    def _out(self, y, x):
        if self._real and not np.iscomplexobj(x):
            return np.real(y)
        return y

    def _matvec(self, x):
        if self._uniform is not None:
            u = self._uniform
            return self._out(u.apply(u.B, x, u.t, u.s), x)
        return self.to_dense() @ x

    def _rmatvec(self, x):
        if self._uniform is not None:
            u = self._uniform
            return self._out(u.apply(np.conj(np.swapaxes(u.B, 1, 2)), x, u.s, u.t), x)
        return self.to_dense().conj().T @ x

    def apply_inverse(self, b):
        b = np.asarray(b)
        if self.shape[0] != self.shape[1]:
            raise ValueError("apply_inverse needs a square preconditioner")
        if self._uniform is not None:
            u = self._uniform
            return self._out(u.apply(u.inverse_blocks(), b, u.s, u.t), b)
        if self._lu is None:
            S = self.to_dense()
            lu, piv = sla.lu_factor(S, check_finite=False)
            d = np.abs(np.diag(lu))
            if d.min() <= 1e-12 * d.max():
                raise np.linalg.LinAlgError(f"singular preconditioner (pivot {int(np.argmin(d))})")
            self._lu = (lu, piv)
        return sla.lu_solve(self._lu, b, check_finite=False)

    def apply_pseudoinverse(self, b, rcond=1e-12):
        b = np.asarray(b)
        if self._uniform is not None:
            u = self._uniform
            return self._out(u.apply(u.pinv_blocks(rcond), b, u.s, u.t), b)
        if self._pinv is None:
            self._pinv = np.linalg.pinv(self.to_dense(), rcond=rcond)
        return self._pinv @ b

    def apply_normal_inverse(self, b):
        """``(S S^*)^{-1} b``, the preconditioner used for the normal equations."""
        b = np.asarray(b)
        if self._uniform is not None:
            u = self._uniform
            return self._out(u.apply(u.normal_inverse_blocks(), b, u.s, u.s), b)
        if self._ncho is None:
            S = self.to_dense()
            self._ncho = sla.cho_factor(S @ S.conj().T)
        return sla.cho_solve(self._ncho, b)


def apply_inverse(P, b):
    return P.apply_inverse(b)


def apply_pseudoinverse(P, b, rcond=1e-12):
    return P.apply_pseudoinverse(b, rcond)


# --------------------------------------------------------------------------

def _resolve(spec, plan, base_size):
    """Decide the concrete kind of every slot, applying the Strang
    fallback rule at the given base size."""
    L = spec.layout
    kinds = {}
    for i in range(L.nu):
        for j in range(L.nu):
            k = plan.kind(i, j)
            if k == "strang":
                size = base_size(i, j)
                try:
                    ratio = strang_circulant(spec.grid[i, j], size).singular_ratio()
                except ValueError:
                    ratio = 0.0
                if ratio < plan.singular_threshold:
                    if plan.fallback is None:
                        raise np.linalg.LinAlgError("Strang singular: enable FrobeniusOptimal fallback")
                    k = plan.fallback
            kinds[i, j] = k
    return kinds


def _approx(sym, kind, size):
    if kind == "strang":
        return strang_circulant(sym, size)
    if kind == "chan":
        return chan_circulant(ToeplitzOperator(sym, size, size))
    if kind == "exact":
        return ToeplitzOperator(sym, size, size)
    if kind == "tau":
        from .structmat import tau
        if sym.s != 1 or sym.t != 1:
            raise ValueError("tau approximation needs a scalar symbol")
        return tau(sym, size)
    raise ValueError(kind)


def build_precond(spec: BlockMatrixSpec, plan: PrecondPlan | None = None):
    """Assemble ``S`` following ``plan``.

    With ``partition="copies"`` slot ``(i, j)`` contributes
    ``min(m_i, m_j)`` copies of its size-``n_m`` approximation; a last copy
    that is shorter is the truncated approximation, a longer one is
    approximated at its own size.
    """
    plan = plan or PrecondPlan()
    L = spec.layout
    copies = plan.partition == "copies" and L.m_parts is not None
    if plan.partition not in ("copies", "full"):
        raise ValueError(f"unknown partition {plan.partition!r}")
    nm = L.n_m if copies else None

    def base_size(i, j):
        return nm if copies else min(L.sizes[i], L.sizes[j])

    kinds = _resolve(spec, plan, base_size)
    cache = {}

    def approx(i, j, size):
        key = (i, j, size)
        if key not in cache:
            cache[key] = _approx(spec.grid[i, j], kinds[i, j], size)
        return cache[key]

    def dense_builder():
        rows = []
        for i in range(L.nu):
            row = []
            for j in range(L.nu):
                shape = (L.s * L.sizes[i], L.t * L.sizes[j])
                if kinds[i, j] == "zero":
                    row.append(np.zeros(shape))
                    continue
                if not copies:
                    q = min(L.sizes[i], L.sizes[j])
                    row.append(_embed(np.asarray(approx(i, j, q).to_dense()), *shape))
                    continue

                def make(r, i=i, j=j):
                    if r < nm:
                        return np.asarray(approx(i, j, nm).to_dense())[: L.s * r, : L.t * r]
                    return np.asarray(approx(i, j, r).to_dense())

                row.append(slot_pieces(L, i, j, make))
            rows.append(row)
        return np.block(rows)

    uniform = None
    real = True
    if copies and L.exact() and all(k in ("strang", "chan", "zero") for k in kinds.values()):
        m = L.m
        poff = np.concatenate([[0], np.cumsum(L.m_parts)])
        B = np.zeros((nm, m * L.s, m * L.t), dtype=complex)
        for (i, j), k in kinds.items():
            if k == "zero":
                continue
            C = approx(i, j, nm)
            for a in range(min(L.m_parts[i], L.m_parts[j])):
                r0, c0 = (poff[i] + a) * L.s, (poff[j] + a) * L.t
                B[:, r0:r0 + L.s, c0:c0 + L.t] = C.eig
        uniform = _Uniform(B, m, L.s, L.t, "dft", (nm,))
        real = all(not np.any(approx(i, j, nm).col.imag) for (i, j), k in kinds.items() if k != "zero")
    desc = ", ".join(f"({i + 1},{j + 1}):{k}" for (i, j), k in sorted(kinds.items()))
    op = PrecondOperator(L.shape, dense_builder, uniform=uniform, real=real,
                         description=f"{plan.partition} [{desc}]")
    op.kinds = kinds
    return op


def tau_block_precond(samples_grid, K, grid_shape, s_sizes=None):
    """Preconditioner made of ``K x K`` tau pieces sharing one sine grid.

    ``samples_grid[(p, q)]`` is the sample array of piece ``(p, q)`` (or
    absent for a zero piece).
    """
    nf = int(np.prod(grid_shape))
    B = np.zeros((nf, K, K))
    for (p, q), d in samples_grid.items():
        B[:, p, q] = np.asarray(d, dtype=float).reshape(-1)
    uni = _Uniform(B, K, 1, 1, "dst", grid_shape)

    def dense_builder():
        rows = []
        for p in range(K):
            row = []
            for q in range(K):
                d = samples_grid.get((p, q))
                row.append(np.zeros((nf, nf)) if d is None else TauOperator(np.asarray(d).reshape(grid_shape)).to_dense())
            rows.append(row)
        return np.block(rows)

    N = K * nf
    return PrecondOperator((N, N), dense_builder, uniform=uni, real=True, description="tau blocks")
