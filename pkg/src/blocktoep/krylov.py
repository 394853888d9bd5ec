"""(Preconditioned) CG, restarted GMRES and CGNE with a residual-based
stopping rule and full residual histories."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse.linalg import aslinearoperator

from . import _backend

__all__ = ["KrylovConfig", "SolveReport", "cg", "gmres", "cgne", "predict_pcg_iterations",
           "IndefiniteError", "load_config"]


class IndefiniteError(np.linalg.LinAlgError):
    """Raised when CG meets a direction with nonpositive curvature."""


@dataclass(frozen=True)
class KrylovConfig:
    """``criterion="relative"`` stops on ``||b - A x|| <= tol ||b||``;
    ``"absolute"`` on ``||b - A x|| < tol``."""

    tol: float = 1e-8
    maxit: int = 1000
    restart: int = 100
    criterion: str = "relative"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.restart < 1 or self.maxit < 1:
            raise ValueError("restart and maxit must be positive")
        if self.criterion not in ("relative", "absolute"):
            raise ValueError("criterion must be 'relative' or 'absolute'")

    def threshold(self, bnorm):
        return self.tol * bnorm if self.criterion == "relative" else self.tol

    @classmethod
    def from_json(cls, obj):
        keys = {"tol", "maxit", "restart", "criterion"}
        return cls(**{k: v for k, v in obj.items() if k in keys})


def load_config(path):
    with open(path) as fh:
        return KrylovConfig.from_json(json.load(fh))


@dataclass
class SolveReport:
    x: np.ndarray
    iterations: int
    residual_history: list = field(default_factory=list)
    converged: bool = False
    method: str = ""

    @property
    def final_residual(self):
        return self.residual_history[-1] if self.residual_history else float("nan")

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("iteration,residual\n")
            for i, r in enumerate(self.residual_history):
                fh.write(f"{i},{r:.6e}\n")

    def summary(self):
        d = asdict(self)
        d.pop("x")
        d["final_residual"] = self.final_residual
        return d


def _precond(M, attr="apply_inverse"):
    if M is None:
        return lambda r: r
    if hasattr(M, attr):
        return getattr(M, attr)
    if callable(M):
        return M
    Mop = aslinearoperator(M)
    return Mop.matvec


def cg(A, b, M=None, cfg: KrylovConfig = KrylovConfig()):
    """Preconditioned conjugate gradients.

    ``M`` is either a preconditioner object (its ``apply_inverse`` is used),
    a callable returning ``M^{-1} r``, or ``None``.
    """
    Aop = aslinearoperator(A)
    b = np.asarray(b)
    Minv = _precond(M)
    x = np.zeros(Aop.shape[1], dtype=np.result_type(Aop.dtype, b.dtype))
    r = b.copy()
    bnorm = np.linalg.norm(b)
    thr = cfg.threshold(bnorm)
    hist = [float(np.linalg.norm(r))]
    if hist[0] <= thr:
        return SolveReport(x, 0, hist, True, "pcg" if M is not None else "cg")
    z = Minv(r)
    p = z.copy()
    rz = np.vdot(r, z).real
    it = 0
    converged = False
    while it < cfg.maxit:
        it += 1
        q = Aop.matvec(p)
        curv = np.vdot(p, q).real
        if curv <= 0:
            raise IndefiniteError(f"nonpositive curvature {curv:.3e} at iteration {it}")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * q
        rn = float(np.linalg.norm(r))
        hist.append(rn)
        if rn <= thr:
            converged = True
            break
        z = Minv(r)
        rz_new = np.vdot(r, z).real
        p = z + (rz_new / rz) * p
        rz = rz_new
    return SolveReport(x, it, hist, converged, "pcg" if M is not None else "cg")


def _givens(a, b):
    if b == 0:
        return 1.0, 0.0
    h = math.hypot(abs(a), abs(b))
    return a / h, b / h


def gmres(A, b, M=None, cfg: KrylovConfig = KrylovConfig()):
    """Restarted GMRES with modified Gram-Schmidt and left preconditioning.

    The Arnoldi process runs on ``M^{-1} A``; convergence is tested on the
    true residual ``||b - A x_k||`` after each inner step, and iterations are
    counted cumulatively across restarts.
    """
    Aop = aslinearoperator(A)
    b = np.asarray(b, dtype=float) if not np.iscomplexobj(b) else np.asarray(b)
    Minv = _precond(M)
    n = Aop.shape[0]
    x = np.zeros(n, dtype=b.dtype)
    bnorm = np.linalg.norm(b)
    thr = cfg.threshold(bnorm)
    r = b - Aop.matvec(x)
    hist = [float(np.linalg.norm(r))]
    if hist[0] <= thr:
        return SolveReport(x, 0, hist, True, "pgmres" if M is not None else "gmres")
    it = 0
    converged = False
    m = cfg.restart
    complex_mode = np.iscomplexobj(b) or np.iscomplexobj(Aop.matvec(np.zeros(n)))
    while it < cfg.maxit and not converged:
        z = np.asarray(Minv(r))
        beta = np.linalg.norm(z)
        if beta == 0:
            break
        dt = complex if complex_mode else float
        V = np.zeros((m + 1, n), dtype=dt)
        H = np.zeros((m + 1, m), dtype=dt)
        cs = np.zeros(m, dtype=dt)
        sn = np.zeros(m, dtype=dt)
        g = np.zeros(m + 1, dtype=dt)
        g[0] = beta
        V[0] = z / beta
        x0 = x.copy()
        for j in range(m):
            it += 1
            w = np.ascontiguousarray(Minv(Aop.matvec(V[j])), dtype=dt)
            if complex_mode:
                for i in range(j + 1):
                    H[i, j] = np.vdot(V[i], w)
                    w -= H[i, j] * V[i]
                H[j + 1, j] = np.linalg.norm(w)
            else:
                H[: j + 2, j] = _backend.mgs_orthogonalize(V, w, j)
            happy = abs(H[j + 1, j]) <= 1e-14 * beta
            if not happy:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                tmp = np.conj(cs[i]) * H[i, j] + np.conj(sn[i]) * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = tmp
            c, s = _givens(H[j, j], H[j + 1, j])
            cs[j], sn[j] = c, s
            H[j, j] = np.conj(c) * H[j, j] + np.conj(s) * H[j + 1, j]
            H[j + 1, j] = 0.0
            g[j + 1] = -s * g[j]
            g[j] = np.conj(c) * g[j]
            y = np.linalg.solve(np.triu(H[: j + 1, : j + 1]), g[: j + 1])
            xk = x0 + V[: j + 1].T @ y
            if not complex_mode:
                xk = xk.real
            r = b - Aop.matvec(xk)
            rn = float(np.linalg.norm(r))
            hist.append(rn)
            x = xk
            if rn <= thr:
                converged = True
                break
            if happy or it >= cfg.maxit:
                break
    return SolveReport(x, it, hist, converged, "pgmres" if M is not None else "gmres")


def cgne(A, b, M=None, cfg: KrylovConfig = KrylovConfig()):
    """CG on ``A A^* y = b``, returning ``x = A^* y``.

    With a preconditioner ``S`` the normal-equation system is preconditioned
    by ``(S S^*)^{-1}`` (``M.apply_normal_inverse``).  The residual
    ``b - A A^* y`` equals ``b - A x``, so the stopping rule is on the
    original system.
    """
    Aop = aslinearoperator(A)
    b = np.asarray(b)
    if M is None:
        Minv = None
    elif hasattr(M, "apply_normal_inverse"):
        Minv = M.apply_normal_inverse
    else:
        Minv = M

    rep = cg(_NormalOp(Aop), b, Minv, cfg)
    x = Aop.rmatvec(rep.x)
    return SolveReport(x, rep.iterations, rep.residual_history, rep.converged,
                       "pcgne" if M is not None else "cgne")


class _NormalOp:
    def __init__(self, Aop):
        self.Aop = Aop
        self.shape = (Aop.shape[0], Aop.shape[0])
        self.dtype = Aop.dtype

    def matvec(self, v):
        return self.Aop.matvec(self.Aop.rmatvec(v))

    def rmatvec(self, v):
        return self.matvec(v)


def predict_pcg_iterations(a, b, eps, q=0, mu=1.0, case=1, C_hat=None, eps_const=1.0):
    """Outlier-aware PCG iteration bound.

    Returns ``N = q + k*(a, b, eps')`` with
    ``k* = ceil(log(2/eps') / log(1/sigma))``,
    ``sigma = (sqrt(b) - sqrt(a)) / (sqrt(b) + sqrt(a))`` and
    ``eps' = eps`` (case 1) or ``eps * eps_const * mu`` (cases 2, 3).

    When ``C_hat`` is given a second value, the empirical estimate
    ``q - 6.072 log(2 / mu) + C_hat`` (natural log), is returned as well.
    """
    if a <= 0 or b <= 0:
        raise ValueError("cluster endpoints must be positive")
    if a > b:
        raise ValueError("need a <= b")
    if case not in (1, 2, 3):
        raise ValueError("case must be 1, 2 or 3")
    e = eps if case == 1 else eps * eps_const * mu
    sig = (math.sqrt(b) - math.sqrt(a)) / (math.sqrt(b) + math.sqrt(a))
    if sig == 0:
        N = q + 1
    else:
        N = q + max(1, math.ceil(math.log(2.0 / e) / math.log(1.0 / sig)))
    if C_hat is None:
        return N
    return N, q - 6.072 * math.log(2.0 / mu) + C_hat
