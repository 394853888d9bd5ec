"""Property checks without reference numbers: permutation identity, Weyl
distribution and zero clustering, Hankel and norm bounds, fast-vs-dense
oracle agreement and the iteration predictor."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis as an
from .assembly import (BlockLayout, BlockOperator, assemble_A, assemble_A_hat, assemble_symbol_F,
                       catalog_spec, permutation_pi)
from .krylov import predict_pcg_iterations
from .precond import PrecondPlan, build_precond, tau_block_precond
from .presets import PRESETS
from .structmat import (CirculantOperator, ToeplitzOperator, TwoLevelToeplitz, chan_circulant,
                        hankel, schatten_norm, strang_circulant, tau, tau2, toeplitz)
from .symbols import catalog, catalog_names, trig

__all__ = ["CheckResult", "permutation_identity", "weyl_decrease", "zero_cluster_ratio",
           "strong_cluster", "hankel_zero", "norm_bound", "oracle_equivalence", "a_hat_identity",
           "predictor_bracket", "ALL_CHECKS", "run_checks"]

GROUP_PRESETS = ("group1a", "group1b", "group1c", "group2a", "group2b", "group2c", "group3")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def permutation_identity(n=64):
    """``Pi_s A Pi_t^T == T_n(F)`` exactly for equal Group 1 block sizes."""
    layout = BlockLayout(2, 1, 1, (n, n), (1, 1))
    spec = catalog_spec("group1", layout)
    A = assemble_A(spec)
    F = assemble_symbol_F(spec)
    pr = permutation_pi(2 * n, 2, layout.s)
    pc = permutation_pi(2 * n, 2, layout.t)
    T = np.real_if_close(toeplitz(F, n).to_dense())
    err = float(np.linalg.norm(A[np.ix_(pr, pc)] - T))
    return CheckResult("permutation identity", err == 0.0, f"||Pi A Pi^T - T_n(F)||_F = {err:.3g}")


def weyl_decrease(ns=(64, 128, 256), limit=0.02):
    f = trig((0, 2.0), (1, -1.0), (-1, -1.0))
    d = [an.weyl_discrepancy(an.singular_values(toeplitz(f, n)), f) for n in ns]
    ok = all(a > b for a, b in zip(d, d[1:])) and d[-1] < limit
    return CheckResult("Weyl discrepancy decreasing", ok,
                       ", ".join(f"n={n}: {v:.3e}" for n, v in zip(ns, d)))


def _diff_sv(name, eta):
    prob = PRESETS[name].build(eta)
    D = prob.A.to_dense() - prob.P.to_dense()
    return an.singular_values(D).values, prob.d_n


def zero_cluster_ratio(presets=GROUP_PRESETS, etas=(50, 100, 200), thr=0.1, limit=0.1):
    ok, parts = True, []
    for name in presets:
        ratios = []
        for eta in etas:
            sv, dn = _diff_sv(name, eta)
            ratios.append(float(np.sum(sv > thr)) / dn)
        good = all(a > b for a, b in zip(ratios, ratios[1:])) and ratios[-1] < limit
        ok &= good
        parts.append(f"{name} " + "/".join(f"{r:.4f}" for r in ratios) + ("" if good else " (!)"))
    return CheckResult("zero clustering of A - S", ok, "; ".join(parts))


def strong_cluster(name="group1a", etas=(100, 500), thr=0.5, max_change=2):
    counts = [int(np.sum(_diff_sv(name, e)[0] > thr)) for e in etas]
    ok = abs(counts[-1] - counts[0]) <= max_change
    return CheckResult("strong cluster of A - S", ok,
                       ", ".join(f"eta={e}: {c}" for e, c in zip(etas, counts)))


def hankel_zero(ns=(32, 64), thr=0.1, max_count=2):
    f = trig((0, 2.0), (1, -1.0), (-1, -1.0))
    counts = [int(np.sum(an.singular_values(hankel(f, n)).values > thr)) for n in ns]
    return CheckResult("Hankel zero distribution", all(c <= max_count for c in counts),
                       ", ".join(f"n={n}: {c}" for n, c in zip(ns, counts)))


def _symbol_lp(f, p, grid=8192):
    th = -np.pi + 2 * np.pi * np.arange(grid) / grid
    sv = np.linalg.svd(f.eval(th), compute_uv=False)
    if np.isinf(p):
        return float(sv.max())
    return float((2 * np.pi * np.mean(np.sum(sv ** p, axis=1))) ** (1.0 / p))


def norm_bound(ns=(8, 16), ps=(1, 2, np.inf), names=None):
    """``||T_n(f)||_p <= n^{1/p} ||f||_{L^p} / (2 pi)^{1/p}`` over the catalog."""
    names = names or catalog_names()
    worst, bad = 0.0, []
    for name in names:
        f = catalog(name)
        for p in ps:
            fp = _symbol_lp(f, p)
            for n in ns:
                lhs = schatten_norm(ToeplitzOperator(f, n, n), p)
                rhs = fp if np.isinf(p) else n ** (1 / p) * fp / (2 * np.pi) ** (1 / p)
                r = lhs / rhs if rhs > 0 else 0.0
                worst = max(worst, r)
                if lhs > rhs * (1 + 1e-6):
                    bad.append(f"{name} p={p} n={n}")
    return CheckResult("Toeplitz norm bound", not bad,
                       f"{len(names)} symbols, worst ratio {worst:.4f}" + (f"; violations {bad}" if bad else ""))


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def oracle_equivalence(nvec=32, tol=1e-9, seed=0):
    """Fast products and solves against dense oracles for each operator kind."""
    rng = np.random.default_rng(seed)
    errs = {}

    def vecs(n):
        return rng.standard_normal((n, nvec))

    def probe(name, op, D, inverse=None, Dinv_of=None):
        X = vecs(op.shape[1])
        e = max(_rel(op.matvec(x), D @ x) for x in X.T)
        Y = vecs(op.shape[0])
        e = max(e, max(_rel(op.rmatvec(y), D.conj().T @ y) for y in Y.T))
        if inverse is not None:
            B = vecs(op.shape[0])
            e = max(e, max(_rel(D @ inverse(b), b) for b in B.T))
        errs[name] = e

    f2 = catalog("group3.f11")
    for nm, sym, n, m in (("toeplitz scalar", catalog("group1.f11"), 40, 40),
                          ("toeplitz rectangular", catalog("group1.f12"), 30, 45),
                          ("toeplitz 2x2", f2, 25, 25),
                          ("toeplitz 1x2", catalog("group2.f11"), 20, 20),
                          ("toeplitz fractional", catalog("ex1.f11"), 33, 33)):
        T = ToeplitzOperator(sym, n, m)
        probe(nm, T, T.to_dense())
    C = strang_circulant(catalog("group1.f22"), 40)
    probe("circulant strang", C, C.to_dense(), C.solve)
    Cc = chan_circulant(ToeplitzOperator(f2, 24, 24))
    probe("circulant chan 2x2", Cc, Cc.to_dense(), Cc.solve)
    t1 = tau(catalog("ex3.q_alpha"), 37)
    probe("tau 1-level", t1, t1.to_dense(), t1.solve)
    t2 = tau2(catalog("ex3.q_alpha"), catalog("ex3.q_beta"), 9, 13)
    probe("tau 2-level", t2, t2.to_dense(), t2.solve)
    tl = TwoLevelToeplitz(catalog("ex3.q_alpha"), catalog("ex3.q_beta"), 8, 11, 2.0)
    probe("two-level toeplitz", tl, tl.to_dense())
    for pre, sizes, parts in (("group1", (60, 40), (3, 2)), ("group1", (61, 43), (3, 2)),
                              ("group3", (20, 10, 38), (2, 1, 4)), ("ex2", (30, 60), (1, 2))):
        f11 = catalog(f"{pre}.f11")
        L = BlockLayout(len(sizes), f11.s, f11.t, sizes, parts)
        spec = catalog_spec(pre, L)
        A = BlockOperator(spec)
        probe(f"block operator {pre} {sizes}", A, A.to_dense())
        P = build_precond(spec, PrecondPlan(default="chan", fallback=None))
        probe(f"preconditioner {pre} {sizes}" + (" fast" if P.fast else " dense"), P, P.to_dense(),
              P.apply_inverse)
    n = 7
    d = np.linspace(1, 2, n * n).reshape(n, n)
    tb = tau_block_precond({(0, 0): 4 * d, (0, 1): 0.3 * d, (1, 0): 0.3 * d, (1, 1): d, (2, 2): d}, 3, (n, n))
    probe("tau block preconditioner", tb, tb.to_dense(), tb.apply_inverse)
    worst = max(errs.values())
    bad = [k for k, v in errs.items() if not v <= tol]
    return CheckResult("fast vs dense oracles", not bad,
                       f"{len(errs)} operators, worst rel. error {worst:.2e}" + (f"; failing {bad}" if bad else ""))


def a_hat_identity(cases=(("group1", (60, 40), (3, 2)), ("group3", (20, 10, 40), (2, 1, 4)),
                          ("group2", (30, 60), (1, 2)))):
    """With exact ratios ``Pi A_hat Pi^T == T_{n_m}(F)`` exactly."""
    errs = []
    for pre, sizes, parts in cases:
        f11 = catalog(f"{pre}.f11")
        L = BlockLayout(len(sizes), f11.s, f11.t, sizes, parts)
        spec = catalog_spec(pre, L)
        Ah = assemble_A_hat(spec)
        F = assemble_symbol_F(spec)
        nm, m = L.n_m, L.m
        pr, pc = permutation_pi(m * nm, m, L.s), permutation_pi(m * nm, m, L.t)
        T = np.real_if_close(ToeplitzOperator(F, nm, nm).to_dense(), tol=1e6)
        errs.append(float(np.max(np.abs(Ah[np.ix_(pr, pc)] - T))))
    ok = all(e < 1e-12 for e in errs)
    return CheckResult("A_hat conjugate to T_{n_m}(F)", ok, ", ".join(f"{e:.1e}" for e in errs))


def predictor_bracket(q=18, mu=4.72e2, c_range=(30.0, 40.0), observed=23):
    lo = predict_pcg_iterations(0.5, 1.5, 1e-8, q, mu, case=2, C_hat=c_range[0])[1]
    hi = predict_pcg_iterations(0.5, 1.5, 1e-8, q, mu, case=2, C_hat=c_range[1])[1]
    ok = lo <= observed <= hi
    return CheckResult("iteration predictor bracket", ok, f"[{lo:.1f}, {hi:.1f}] vs observed {observed}")


ALL_CHECKS = {
    "permutation": permutation_identity,
    "weyl": weyl_decrease,
    "zero-cluster": zero_cluster_ratio,
    "strong-cluster": strong_cluster,
    "hankel": hankel_zero,
    "norm-bound": norm_bound,
    "oracles": oracle_equivalence,
    "a-hat": a_hat_identity,
    "predictor": predictor_bracket,
}


def run_checks(names=None):
    out = []
    for key in names or ALL_CHECKS:
        try:
            out.append(ALL_CHECKS[key]())
        except Exception as exc:
            out.append(CheckResult(key, False, f"error: {exc}"))
    return out
