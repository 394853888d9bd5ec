"""Declarative experiment presets for the block Toeplitz test problems."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .assembly import SIZE_RULES, BlockLayout, BlockOperator, catalog_spec, symmetrized_spec
from .precond import PrecondPlan, build_precond, tau_block_precond
from .structmat import TwoLevelToeplitz, _sample, tau_grid
from .symbols import FractionalQ, catalog

__all__ = ["ExperimentPreset", "Problem", "PRESETS", "get_preset", "list_presets",
           "laplacian_1d", "two_level_laplacian", "build_ex3"]


@dataclass
class Problem:
    """One assembled instance: operator, preconditioner and bookkeeping."""

    A: object
    P: object
    d_n: int
    hermitian: bool
    spec: object = None
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    size_rule: str
    solver: str | None                   # "gmres" | "cg" | "cgne" | None
    etas: tuple
    analyses: tuple = ("clusters", "conditioning", "spectra")
    cluster_mode: str = "singular"       # "singular" (radius 0.5) or "eigen" (radius 0.05)
    builder: object = None
    params: dict = field(default_factory=dict)

    @property
    def cluster_radius(self):
        return 0.5 if self.cluster_mode == "singular" else 0.05

    def build(self, eta, **overrides):
        kw = dict(self.params)
        kw.update(overrides)
        return self.builder(int(eta), **kw)


# --------------------------------------------------------------------------
# builders

def _group(prefix, rule, eta):
    fn, parts, _text = SIZE_RULES[rule]
    sizes = fn(eta)
    probe = catalog(f"{prefix}.f11")
    layout = BlockLayout(len(sizes), probe.s, probe.t, tuple(sizes), parts)
    return catalog_spec(prefix, layout)


def build_group(eta, prefix, rule, plan=None, symmetrize=None):
    spec = _group(prefix, rule, eta)
    if symmetrize is not None:
        spec = symmetrized_spec(spec, *symmetrize)
    A = BlockOperator(spec)
    P = build_precond(spec, plan or PrecondPlan())
    herm = symmetrize is not None
    L = spec.layout
    return Problem(A, P, L.shape[0], herm, spec, {"sizes": L.sizes, "n_m": L.n_m})


def build_example(eta, prefix, plan=None, hermitian=True):
    fn, parts, _ = SIZE_RULES["example"]
    layout = BlockLayout(2, 1, 1, tuple(fn(eta)), parts)
    spec = catalog_spec(prefix, layout)
    A = BlockOperator(spec)
    P = build_precond(spec, plan or PrecondPlan(default="chan", fallback=None))
    return Problem(A, P, layout.shape[0], hermitian, spec, {"sizes": layout.sizes})


def laplacian_1d(n):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


def two_level_laplacian(n_fast, n_slow):
    """``I_{slow} (x) L_{fast} + L_{slow} (x) I_{fast}``."""
    return (sp.kron(sp.identity(n_slow), laplacian_1d(n_fast))
            + sp.kron(laplacian_1d(n_slow), sp.identity(n_fast))).tocsr()


class _Block2(LinearOperator):
    """``[[A11, A12], [A12^T, A22]]`` from fast pieces."""

    def __init__(self, A11, A12, A22):
        self.A11, self.A12, self.A22 = A11, A12, A22
        self.n1 = A11.shape[0]
        N = self.n1 + A22.shape[0]
        super().__init__(dtype=np.float64, shape=(N, N))

    def _matvec(self, x):
        x = np.asarray(x).ravel()
        u, v = x[: self.n1], x[self.n1:]
        return np.concatenate([self.A11.matvec(u) + self.A12 @ v,
                               self.A12.T @ u + self.A22.matvec(v)])

    _rmatvec = _matvec

    def _matmat(self, X):
        return np.column_stack([self._matvec(c) for c in np.asarray(X).T])

    def to_dense(self):
        return np.block([[self.A11.to_dense(), self.A12.toarray()],
                         [self.A12.T.toarray(), self.A22.to_dense()]])


def build_ex3(n, alpha=1.5, beta=1.8, c1=4.0, c2=1.0, coupling="fast_n"):
    """Two-level fractional saddle-type system with a tau block preconditioner.

    ``coupling="fast_n"`` takes the first ``n^2`` rows of the two-level
    Laplacian on the grid whose fast index has length ``n`` and slow index
    ``2n`` (matching the ordering of ``A22``); ``"fast_2n"`` swaps the two.
    """
    qa, qb = FractionalQ(alpha), FractionalQ(beta)
    A11 = TwoLevelToeplitz(qa, qb, n, n, c1)
    A22 = TwoLevelToeplitz(qa, qb, n, 2 * n, c2)
    if coupling == "fast_n":
        Lap = two_level_laplacian(n, 2 * n)
    elif coupling == "fast_2n":
        Lap = two_level_laplacian(2 * n, n)
    else:
        raise ValueError(f"unknown coupling layout {coupling!r}")
    A12 = Lap[: n * n].tocsr()
    A = _Block2(A11, A12, A22)
    th = tau_grid(n)
    a, b = _sample(qa, th), _sample(qb, th)
    lap = 2 - 2 * np.cos(th)
    D = b[:, None] + a[None, :]
    Dl = lap[:, None] + lap[None, :]
    P = tau_block_precond({(0, 0): c1 * D, (0, 1): Dl, (1, 0): Dl, (1, 1): c2 * D, (2, 2): c2 * D}, 3, (n, n))
    return Problem(A, P, 3 * n * n, True, None, {"n": n, "coupling": coupling})


# --------------------------------------------------------------------------
# registry

def _mk(name, desc, rule_text, solver, etas, builder, mode="singular", **params):
    return ExperimentPreset(name, desc, rule_text, solver, tuple(etas), builder=builder,
                            cluster_mode=mode, params=params)


PRESETS = {}
for _c in "abc":
    _r = f"group1{_c}"
    PRESETS[_r] = _mk(_r, f"Group 1 ({_c}): 2x2 block grid of scalar symbols, square, PGMRES",
                      SIZE_RULES[_r][2], "gmres", (100, 200, 500), build_group,
                      prefix="group1", rule=_r)
for _c in "abc":
    _r = f"group2{_c}"
    PRESETS[_r] = _mk(_r, f"Group 2 ({_c}): 1x2 vector symbols, rectangular, PCGNE",
                      SIZE_RULES[_r][2], "cgne", (100, 200, 500), build_group,
                      prefix="group2", rule=_r)
PRESETS["group3"] = _mk("group3", "Group 3: 3x3 grid of 2x2 B-spline symbols, symmetrised "
                        "(diag x1.78, off-diag x0.7), PCG", SIZE_RULES["group3"][2], "cg",
                        (100, 200, 500), build_group, prefix="group3", rule="group3",
                        symmetrize=(1.78, 0.7))
PRESETS["ex1"] = _mk("ex1", "Example 1: fractional diffusion block, alpha=1.5, PCG",
                     SIZE_RULES["example"][2], "cg", (100, 200, 400), build_example, "eigen",
                     prefix="ex1", hermitian=True)
PRESETS["ex2"] = _mk("ex2", "Example 2: indefinite fractional coupling, alpha=1.7, PGMRES",
                     SIZE_RULES["example"][2], "gmres", (100, 200, 400), build_example, "eigen",
                     prefix="ex2", hermitian=False)
PRESETS["ex3"] = _mk("ex3", "Example 3: two-level fractional, (alpha,beta)=(1.5,1.8), c1=4, c2=1, "
                     "tau preconditioner, PCG", "N₁=n², N₂=2n²", "cg", (20, 30, 40), build_ex3,
                     "eigen")


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None


def list_presets():
    """``[(name, description, size rule), ...]`` in registry order."""
    return [(p.name, p.description, p.size_rule) for p in PRESETS.values()]
