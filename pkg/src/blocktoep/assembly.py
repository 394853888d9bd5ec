"""Block matrices whose blocks are (rectangular) block Toeplitz matrices.

``A`` has diagonal blocks ``T_{n_i}(f_ii)`` and off-diagonal blocks
``T_{n_i,n_j}(f_ij)``.  The auxiliary matrices ``A_tilde`` (square
off-diagonal pieces, zero padded) and ``A_hat`` (pieces split into copies of
size ``n_m``) are what the preconditioners imitate; ``symbol_F`` is the
matrix-valued symbol that describes the singular value distribution.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .structmat import ToeplitzOperator, realify
from .symbols import Adjoint, Scaled, Sum, Symbol, catalog, symbol_from_json

__all__ = [
    "BlockLayout", "BlockMatrixSpec", "BlockOperator", "SymbolF", "SIZE_RULES",
    "assemble_A", "block_operator", "permutation_pi", "permutation_matrix",
    "assemble_symbol_F", "assemble_A_tilde", "assemble_A_hat", "group3_modify",
    "symmetrized_spec", "spec_from_json", "load_layout", "square_piece_partition",
    "slot_pieces", "catalog_spec",
]


@dataclass(frozen=True)
class BlockLayout:
    """Sizes ``n_1..n_nu`` (in blocks of ``s x t``) and, optionally, the
    rational ratios ``c_i = m_i / m`` given through the integers ``m_i``."""

    nu: int
    s: int
    t: int
    sizes: tuple
    m_parts: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        if self.m_parts is not None:
            object.__setattr__(self, "m_parts", tuple(int(v) for v in self.m_parts))
        if self.nu < 2:
            raise ValueError("need at least two block rows")
        if self.s < 1 or self.t < 1:
            raise ValueError("block shape must be positive")
        if len(self.sizes) != self.nu or min(self.sizes) < 1:
            raise ValueError(f"need {self.nu} positive sizes, got {self.sizes}")
        if self.m_parts is not None:
            if len(self.m_parts) != self.nu or min(self.m_parts) < 1:
                raise ValueError("ratio data must give a positive m_i per block")
            g = math.gcd(*self.m_parts)
            if g != 1:
                object.__setattr__(self, "m_parts", tuple(v // g for v in self.m_parts))

    @property
    def n(self):
        return sum(self.sizes)

    @property
    def m(self):
        self._need_ratios()
        return sum(self.m_parts)

    @property
    def ratios(self):
        self._need_ratios()
        return tuple(mi / self.m for mi in self.m_parts)

    @property
    def n_m(self):
        """Common copy size: ``n / m`` rounded to the nearest integer."""
        self._need_ratios()
        return max(int(round(self.n / self.m)), 1)

    def _need_ratios(self):
        if self.m_parts is None:
            raise ValueError("layout has no rational ratio data")

    @property
    def row_offsets(self):
        return np.concatenate([[0], np.cumsum([self.s * n for n in self.sizes])])

    @property
    def col_offsets(self):
        return np.concatenate([[0], np.cumsum([self.t * n for n in self.sizes])])

    @property
    def shape(self):
        return (self.s * self.n, self.t * self.n)

    def partition(self, i):
        """Piece sizes of block ``i``: ``m_i`` copies of ``n_m``, the last one
        absorbing the defect ``n_i - m_i n_m``."""
        nm = self.n_m
        mi = self.m_parts[i]
        last = self.sizes[i] - (mi - 1) * nm
        if last < 1:
            raise ValueError(f"size defect too large for block {i}: {self.sizes}")
        return [nm] * (mi - 1) + [last]

    def defects(self):
        return [self.sizes[i] - self.m_parts[i] * self.n_m for i in range(self.nu)]

    def exact(self):
        return self.m_parts is not None and all(d == 0 for d in self.defects())


@dataclass
class BlockMatrixSpec:
    layout: BlockLayout
    grid: dict = field(default_factory=dict)   # (i, j) -> Symbol, 0-based

    def __post_init__(self):
        L = self.layout
        for i in range(L.nu):
            for j in range(L.nu):
                sym = self.grid.get((i, j))
                if sym is None:
                    raise ValueError(f"missing symbol for block ({i + 1},{j + 1})")
                if (sym.s, sym.t) != (L.s, L.t):
                    raise ValueError(f"block ({i + 1},{j + 1}) has shape {(sym.s, sym.t)}, "
                                     f"layout expects {(L.s, L.t)}")

    def block(self, i, j):
        return ToeplitzOperator(self.grid[i, j], self.layout.sizes[i], self.layout.sizes[j])


class BlockOperator(LinearOperator):
    """Matrix-free ``A`` built from FFT-applied Toeplitz blocks."""

    def __init__(self, spec: BlockMatrixSpec):
        self.spec = spec
        L = spec.layout
        self.blocks = {(i, j): spec.block(i, j) for i in range(L.nu) for j in range(L.nu)}
        dt = np.result_type(*[b.dtype for b in self.blocks.values()])
        super().__init__(dtype=dt, shape=L.shape)
        self._ro, self._co = L.row_offsets, L.col_offsets

    def _matvec(self, x):
        nu = self.spec.layout.nu
        y = np.zeros(self.shape[0], dtype=np.result_type(self.dtype, x.dtype))
        for i in range(nu):
            for j in range(nu):
                y[self._ro[i]:self._ro[i + 1]] += self.blocks[i, j].matvec(x[self._co[j]:self._co[j + 1]])
        return y

    def _rmatvec(self, x):
        nu = self.spec.layout.nu
        y = np.zeros(self.shape[1], dtype=np.result_type(self.dtype, x.dtype))
        for i in range(nu):
            for j in range(nu):
                y[self._co[j]:self._co[j + 1]] += self.blocks[i, j].rmatvec(x[self._ro[i]:self._ro[i + 1]])
        return y

    def to_dense(self):
        return assemble_A(self.spec)


def block_operator(spec):
    return BlockOperator(spec)


def assemble_A(spec: BlockMatrixSpec):
    """Dense ``A_n``."""
    L = spec.layout
    rows = [[spec.block(i, j).to_dense() for j in range(L.nu)] for i in range(L.nu)]
    return realify(np.block(rows))


# --------------------------------------------------------------------------
# permutation and symbol

def permutation_pi(n, nu, mu=1):
    """Index form of ``Pi_mu``: ``(Pi x)[r] = x[perm[r]]``.

    ``n`` counts block indices (``n = nu * n(nu)``); each of them expands to
    ``mu`` consecutive scalar indices.
    """
    n, nu, mu = int(n), int(nu), int(mu)
    if n % nu:
        raise ValueError(f"nu={nu} does not divide n={n}")
    nn = n // nu
    base = (np.arange(nu)[None, :] * nn + np.arange(nn)[:, None]).ravel()
    return (base[:, None] * mu + np.arange(mu)[None, :]).ravel()


def permutation_matrix(perm):
    P = np.zeros((len(perm), len(perm)))
    P[np.arange(len(perm)), perm] = 1.0
    return P


class SymbolF(Symbol):
    """``(s m) x (t m)`` symbol with blocks ``E_{j,k}``:
    ``I_{m_j} (x) f_jj`` on the diagonal and ``I_{min(m_j,m_k)} (x) f_jk``
    zero padded elsewhere."""

    def __init__(self, grid, m_parts, s, t):
        self.grid, self.m_parts = grid, tuple(m_parts)
        self.fs, self.ft = s, t
        m = sum(self.m_parts)
        self.s, self.t = s * m, t * m
        self._ro = np.concatenate([[0], np.cumsum([s * mi for mi in self.m_parts])])
        self._co = np.concatenate([[0], np.cumsum([t * mi for mi in self.m_parts])])

    @property
    def support(self):
        sups = [g.support for g in self.grid.values()]
        if any(s is None for s in sups):
            return None
        return (min(s[0] for s in sups), max(s[1] for s in sups))

    def _place(self, values, lead):
        """Assemble from per-slot arrays of shape ``lead + (s, t)``."""
        out = np.zeros(lead + (self.s, self.t), dtype=complex)
        nu = len(self.m_parts)
        s, t = self.fs, self.ft
        for j in range(nu):
            for k in range(nu):
                c = min(self.m_parts[j], self.m_parts[k])
                v = values[j, k]
                for r in range(c):
                    out[..., self._ro[j] + r * s:self._ro[j] + (r + 1) * s,
                        self._co[k] + r * t:self._co[k] + (r + 1) * t] = v
        return out

    def _coeff(self, k):
        return self._place({key: g._coeff(k) for key, g in self.grid.items()}, ())

    def coeffs(self, kmin, kmax):
        return self._place({key: g.coeffs(kmin, kmax) for key, g in self.grid.items()}, (kmax - kmin + 1,))

    def eval(self, theta):
        th = np.asarray(theta, dtype=float)
        return self._place({key: g.eval(th) for key, g in self.grid.items()}, th.shape)


def assemble_symbol_F(spec: BlockMatrixSpec):
    L = spec.layout
    if L.m_parts is None:
        raise ValueError("missing rational ratio data")
    return SymbolF(dict(spec.grid), L.m_parts, L.s, L.t)


# --------------------------------------------------------------------------
# auxiliary matrices

def _embed(piece, rows, cols):
    out = np.zeros((rows, cols), dtype=piece.dtype)
    out[: piece.shape[0], : piece.shape[1]] = piece
    return out


def assemble_A_tilde(spec: BlockMatrixSpec):
    """Off-diagonal blocks replaced by ``T_{min(n_i,n_j)}(f_ij)`` padded with
    zero rows (``n_i > n_j``) or zero columns (``n_i < n_j``)."""
    L = spec.layout
    rows = []
    for i in range(L.nu):
        row = []
        for j in range(L.nu):
            q = min(L.sizes[i], L.sizes[j])
            piece = ToeplitzOperator(spec.grid[i, j], q, q).to_dense()
            row.append(_embed(piece, L.s * L.sizes[i], L.t * L.sizes[j]))
        rows.append(row)
    return realify(np.block(rows))


def square_piece_partition(layout, i, j):
    """Piece sizes used for slot ``(i, j)``: the partition of the smaller of
    the two blocks."""
    if layout.sizes[i] < layout.sizes[j]:
        return layout.partition(i)
    if layout.sizes[j] < layout.sizes[i]:
        return layout.partition(j)
    return layout.partition(i if layout.m_parts[i] <= layout.m_parts[j] else j)


def _block_diag(pieces, s, t):
    R = sum(p.shape[0] for p in pieces)
    C = sum(p.shape[1] for p in pieces)
    out = np.zeros((R, C), dtype=np.result_type(*pieces))
    r = c = 0
    for p in pieces:
        out[r:r + p.shape[0], c:c + p.shape[1]] = p
        r += p.shape[0]
        c += p.shape[1]
    return out


def slot_pieces(layout, i, j, make):
    """Block-diagonal arrangement of ``make(size)`` over the slot partition,
    embedded in the ``(s n_i) x (t n_j)`` block."""
    parts = square_piece_partition(layout, i, j)
    pieces = [make(r) for r in parts]
    D = _block_diag(pieces, layout.s, layout.t)
    return _embed(D, layout.s * layout.sizes[i], layout.t * layout.sizes[j])


def assemble_A_hat(spec: BlockMatrixSpec):
    """Each square piece ``T_q(f)`` of ``A_tilde`` replaced by copies of
    ``T_{n_m}(f)``; the last copy is truncated (negative defect) or zero
    extended (positive defect)."""
    L = spec.layout
    nm = L.n_m
    rows = []
    for i in range(L.nu):
        row = []
        for j in range(L.nu):
            f = spec.grid[i, j]
            base = ToeplitzOperator(f, nm, nm).to_dense()

            def make(r, base=base):
                if r <= nm:
                    return base[: L.s * r, : L.t * r]
                return _embed(base, L.s * r, L.t * r)

            row.append(slot_pieces(L, i, j, make))
        rows.append(row)
    return realify(np.block(rows))


def group3_modify(A, layout: BlockLayout, diag_scale=1.78, offdiag_scale=0.7):
    """Symmetrise, then scale every diagonal block by ``diag_scale`` and
    every off-diagonal block by ``offdiag_scale``."""
    A = np.asarray(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("group3_modify needs a square matrix")
    B = 0.5 * (A + A.conj().T)
    ro = layout.row_offsets
    for i in range(layout.nu):
        for j in range(layout.nu):
            B[ro[i]:ro[i + 1], ro[j]:ro[j + 1]] *= diag_scale if i == j else offdiag_scale
    return B


def symmetrized_spec(spec: BlockMatrixSpec, diag_scale=1.0, offdiag_scale=1.0):
    """Symbol-level counterpart of :func:`group3_modify`: slot ``(i, j)``
    becomes ``scale * (f_ij + f_ji^*) / 2``."""
    L = spec.layout
    if L.s != L.t:
        raise ValueError("symmetrisation needs square symbols")
    grid = {}
    for (i, j), f in spec.grid.items():
        c = diag_scale if i == j else offdiag_scale
        grid[i, j] = Scaled(Sum([f, Adjoint(spec.grid[j, i])]), 0.5 * c)
    return BlockMatrixSpec(L, grid)


# --------------------------------------------------------------------------
# size rules and JSON layouts

def _isqrt_ceil(x):
    r = math.isqrt(x)
    return r if r * r == x else r + 1


SIZE_RULES = {
    "group1a": (lambda e: (3 * e, 2 * e), (3, 2), "n₁=3η, n₂=2η"),
    "group1b": (lambda e: (3 * e, 2 * e + 20), (3, 2), "n₁=3η, n₂=2η+20"),
    "group1c": (lambda e: (3 * e, 2 * e + _isqrt_ceil(e)), (3, 2), "n₁=3η, n₂=2η+⌈√η⌉"),
    "group2a": (lambda e: (e, 2 * e), (1, 2), "n₁=η, n₂=2η"),
    "group2b": (lambda e: (e, 2 * e + 2), (1, 2), "n₁=η, n₂=2η+2"),
    "group2c": (lambda e: (e, 2 * e + _isqrt_ceil(e)), (1, 2), "n₁=η, n₂=2η+⌈√η⌉"),
    "group3": (lambda e: (e, e // 2, 2 * e - 2), (2, 1, 4), "n₁=η, n₂=η/2, n₃=2η−2"),
    "example": (lambda e: (e, 2 * e), (1, 2), "n₁=n, n₂=2n"),
}


def spec_from_json(obj):
    """Build a :class:`BlockMatrixSpec` from a layout document."""
    nu, s, t = int(obj["nu"]), int(obj.get("s", 1)), int(obj.get("t", 1))
    sizes = obj["sizes"]
    m_parts = obj.get("m_parts")
    if isinstance(sizes, dict):
        rule, default_parts, _ = SIZE_RULES[sizes["rule"]]
        m_parts = m_parts or default_parts
        sizes = rule(int(sizes["eta"]))
    layout = BlockLayout(nu, s, t, tuple(sizes), tuple(m_parts) if m_parts else None)
    grid = {}
    for key, ref in obj["grid"].items():
        i, j = int(key[0]) - 1, int(key[1]) - 1
        grid[i, j] = symbol_from_json(ref) if not isinstance(ref, Symbol) else ref
    return BlockMatrixSpec(layout, grid)


def load_layout(path):
    with open(path) as fh:
        return spec_from_json(json.load(fh))


def catalog_spec(prefix, layout):
    """Spec whose grid is ``catalog(f"{prefix}.f{i}{j}")``."""
    grid = {(i, j): catalog(f"{prefix}.f{i + 1}{j + 1}") for i in range(layout.nu) for j in range(layout.nu)}
    return BlockMatrixSpec(layout, grid)
