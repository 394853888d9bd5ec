"""Dense spectral analysis: singular values, eigenvalues, cluster counts,
Weyl-distribution discrepancy and conditioning."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = ["SpectrumReport", "ClusterStats", "singular_values", "eigenvalues",
           "generalized_eigenvalues", "cluster_stats", "weyl_discrepancy",
           "symbol_singular_samples", "condition_report", "preconditioned_matrix",
           "export_spectrum", "DEFAULT_TEST_FUNCTIONS"]

MAX_DENSE = 5000


@dataclass
class SpectrumReport:
    values: np.ndarray
    kind: str           # "singular" | "hermitian_eigen" | "general_eigen"
    size: tuple

    def __len__(self):
        return len(self.values)

    @property
    def min(self):
        return float(np.min(np.abs(self.values)))

    @property
    def max(self):
        return float(np.max(np.abs(self.values)))


@dataclass
class ClusterStats:
    center: float
    radius: float
    count_below: int
    count_above: int
    count_inside: int
    total: int

    @property
    def outliers(self):
        return self.count_below + self.count_above

    @property
    def ratio_below(self):
        return self.count_below / self.total if self.total else 0.0

    @property
    def ratio_above(self):
        return self.count_above / self.total if self.total else 0.0

    @property
    def ratio(self):
        return self.outliers / self.total if self.total else 0.0


def _dense(M):
    M = M.to_dense() if hasattr(M, "to_dense") else np.asarray(M)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if min(M.shape) > MAX_DENSE:
        raise ValueError(f"dense spectra limited to size {MAX_DENSE}")
    return M


def singular_values(M):
    """All singular values, ascending."""
    M = _dense(M)
    sv = sla.svdvals(M, check_finite=False)
    return SpectrumReport(np.sort(sv), "singular", M.shape)


def _sort_complex(v):
    return v[np.lexsort((v.imag, v.real))]


def eigenvalues(M, hermitian=False):
    M = _dense(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError("eigenvalues need a square matrix")
    if hermitian:
        ev = sla.eigvalsh(M, check_finite=False)
        return SpectrumReport(np.sort(ev), "hermitian_eigen", M.shape)
    ev = sla.eigvals(M, check_finite=False)
    if np.all(ev.imag == 0):
        ev = ev.real
        return SpectrumReport(np.sort(ev), "general_eigen", M.shape)
    return SpectrumReport(_sort_complex(ev), "general_eigen", M.shape)


def generalized_eigenvalues(A, P, hermitian=False):
    """Eigenvalues of ``P^{-1} A``; the symmetric-definite path is used when
    both matrices are Hermitian and ``P`` is positive definite."""
    A, P = _dense(A), _dense(P)
    if hermitian:
        ev = sla.eigh(A, P, eigvals_only=True, check_finite=False)
        return SpectrumReport(np.sort(ev), "hermitian_eigen", A.shape)
    ev = sla.eigvals(A, P, check_finite=False)
    if np.all(np.abs(ev.imag) == 0):
        return SpectrumReport(np.sort(ev.real), "general_eigen", A.shape)
    return SpectrumReport(_sort_complex(ev), "general_eigen", A.shape)


def cluster_stats(values, center=1.0, radius=0.5):
    """Counts of values outside ``[center - radius, center + radius]``.

    Complex values are compared through ``|z - center|``; those outside the
    disc are classified as below or above by the sign of their real
    deviation.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    v = np.asarray(values.values if isinstance(values, SpectrumReport) else values)
    if np.iscomplexobj(v):
        out = np.abs(v - center) > radius
        below = int(np.sum(out & (v.real < center)))
        above = int(np.sum(out)) - below
    else:
        below = int(np.sum(v < center - radius))
        above = int(np.sum(v > center + radius))
    return ClusterStats(center, radius, below, above, int(v.size) - below - above, int(v.size))


DEFAULT_TEST_FUNCTIONS = (
    ("exp(-x)", lambda x: np.exp(-x)),
    ("1/(1+x)", lambda x: 1.0 / (1.0 + x)),
    ("min(x,3)", lambda x: np.minimum(x, 3.0)),
)


def symbol_singular_samples(sym, grid_size):
    """Singular values of ``sym(theta_g)`` on a uniform grid over
    ``[-pi, pi)``, shape ``(grid_size, min(s, t))``."""
    th = -np.pi + 2 * np.pi * np.arange(grid_size) / grid_size
    return np.linalg.svd(sym.eval(th), compute_uv=False)


def weyl_discrepancy(values, symF, test_fns=None, grid_size=2048):
    """Largest gap between the empirical mean of ``F(sigma_j)`` and the
    symbol average ``1/(2 pi r) int sum_i F(sigma_i(f(theta))) d theta``."""
    if grid_size < 256:
        raise ValueError("grid_size must be at least 256")
    v = np.abs(np.asarray(values.values if isinstance(values, SpectrumReport) else values))
    samples = symbol_singular_samples(symF, grid_size)
    fns = test_fns or [f for _, f in DEFAULT_TEST_FUNCTIONS]
    return max(abs(float(np.mean(F(v))) - float(np.mean(F(samples)))) for F in fns)


def preconditioned_matrix(A, P, side="left"):
    """Dense ``P^{-1} A`` (square) or ``A P^+`` (``side="right_pinv"``)."""
    A = _dense(A)
    if side == "right_pinv":
        Pd = _dense(P)
        return A @ np.linalg.pinv(Pd, rcond=1e-12)
    if hasattr(P, "apply_inverse"):
        return np.column_stack([P.apply_inverse(A[:, k]) for k in range(A.shape[1])]) if getattr(P, "fast", False) \
            else sla.lu_solve(sla.lu_factor(_dense(P)), A)
    return np.linalg.solve(_dense(P), A)


def condition_report(A, M=None):
    """Extreme singular values and ``mu = max/min`` for ``A`` and, if given,
    the preconditioned matrix ``M`` (already formed)."""
    out = {}
    for name, X in (("A", A), ("M", M)):
        if X is None:
            continue
        sv = singular_values(X).values
        lo, hi = float(sv[0]), float(sv[-1])
        out[f"min_sigma_{name}"] = lo
        out[f"max_sigma_{name}"] = hi
        # numerically singular (below the rank tolerance) reports mu = inf
        out[f"mu_{name}"] = float("inf") if lo <= hi * np.finfo(float).eps * len(sv) else hi / lo
    return out


def export_spectrum(values, path):
    """One value per line, or ``re,im`` pairs for complex spectra."""
    v = np.asarray(values.values if isinstance(values, SpectrumReport) else values)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        if np.iscomplexobj(v):
            fh.writelines(f"{z.real:.16e},{z.imag:.16e}\n" for z in v)
        else:
            fh.writelines(f"{x:.16e}\n" for x in v)
    os.replace(tmp, path)
