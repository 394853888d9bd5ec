import json

import numpy as np
import pytest
from scipy.linalg import toeplitz as sp_toeplitz

from blocktoep.krylov import (IndefiniteError, KrylovConfig, cg, cgne, gmres, load_config,
                              predict_pcg_iterations)


def spd(n, seed=0, cond=50.0):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(np.geomspace(1, cond, n)) @ Q.T


def test_identity_one_step():
    b = np.arange(1.0, 6.0)
    for solver in (cg, gmres):
        rep = solver(np.eye(5), b)
        assert rep.iterations == 1 and rep.converged
        assert np.allclose(rep.x, b)


def test_diag_two_steps():
    rep = cg(np.diag([1.0, 2.0]), np.array([1.0, 1.0]))
    assert rep.iterations <= 2
    assert np.allclose(rep.x, [1, 0.5])


def test_zero_rhs():
    rep = cg(np.eye(3), np.zeros(3))
    assert rep.iterations == 0 and rep.converged and not np.any(rep.x)


def test_cg_distinct_eigenvalues():
    rng = np.random.default_rng(1)
    Q, _ = np.linalg.qr(rng.standard_normal((40, 40)))
    A = Q @ np.diag(np.repeat([1.0, 3.0, 7.0, 20.0], 10)) @ Q.T
    rep = cg(A, rng.standard_normal(40), cfg=KrylovConfig(tol=1e-10))
    assert rep.converged and rep.iterations <= 4


def test_cg_energy_error_monotone():
    A = spd(60, 2, 1e3)
    b = np.random.default_rng(3).standard_normal(60)
    xs = np.linalg.solve(A, b)
    errs = []
    for k in range(1, 40):
        rep = cg(A, b, cfg=KrylovConfig(tol=1e-300, maxit=k))
        e = rep.x - xs
        errs.append(e @ A @ e)
    assert all(e2 <= e1 * (1 + 1e-10) for e1, e2 in zip(errs, errs[1:]))


def test_pcg_identity_equals_cg():
    A = spd(30, 4)
    b = np.ones(30)
    r1, r2 = cg(A, b), cg(A, b, M=lambda r: r.copy())
    assert r1.iterations == r2.iterations
    assert np.allclose(r1.residual_history, r2.residual_history)


def test_pcg_exact_preconditioner():
    A = spd(30, 5)
    rep = cg(A, np.ones(30), M=lambda r: np.linalg.solve(A, r))
    assert rep.iterations == 1


def test_indefinite():
    with pytest.raises(IndefiniteError):
        cg(np.diag([1.0, -1.0]), np.array([1.0, 2.0]))


def test_gmres_nonsymmetric_and_history():
    n = 50
    c = np.zeros(n); c[:3] = [4, 1, 0.5]
    r = np.zeros(n); r[:2] = [4, -2]
    A = sp_toeplitz(c, r)
    b = np.random.default_rng(6).standard_normal(n)
    rep = gmres(A, b, cfg=KrylovConfig(restart=n))
    assert rep.converged
    assert np.linalg.norm(A @ rep.x - b) <= 1e-8 * np.linalg.norm(b) * 1.01
    h = np.array(rep.residual_history)
    assert np.all(np.diff(h) <= 1e-12 * h[0])
    assert len(h) == rep.iterations + 1


def test_gmres_restart_counts_cumulatively():
    A = spd(80, 7, 1e4) + 0.3 * np.triu(np.ones((80, 80)), 1) / 80
    b = np.ones(80)
    rep = gmres(A, b, cfg=KrylovConfig(restart=5, maxit=400))
    assert rep.iterations > 5
    assert len(rep.residual_history) == rep.iterations + 1


def test_gmres_complex():
    rng = np.random.default_rng(8)
    A = np.eye(20) * 3 + 0.3j * rng.standard_normal((20, 20))
    b = rng.standard_normal(20) + 0j
    rep = gmres(A, b)
    assert rep.converged and np.allclose(A @ rep.x, b, atol=1e-7)


def test_cgne_minimum_norm():
    rng = np.random.default_rng(9)
    A = rng.standard_normal((4, 8))
    b = rng.standard_normal(4)
    rep = cgne(A, b, cfg=KrylovConfig(tol=1e-12))
    assert rep.converged
    assert np.allclose(rep.x, np.linalg.pinv(A) @ b, atol=1e-9)


def test_pcgne_uses_normal_inverse():
    rng = np.random.default_rng(10)
    A = rng.standard_normal((6, 10))

    class Exact:
        def apply_normal_inverse(self, r):
            return np.linalg.solve(A @ A.T, r)

    rep = cgne(A, np.ones(6), M=Exact())
    assert rep.iterations == 1 and rep.method == "pcgne"


def test_absolute_criterion():
    A = spd(40, 11, 1e3)
    b = 1e-3 * np.ones(40)
    rel = cg(A, b, cfg=KrylovConfig(tol=1e-8))
    ab = cg(A, b, cfg=KrylovConfig(tol=1e-8, criterion="absolute"))
    assert ab.final_residual < 1e-8 and rel.final_residual <= 1e-8 * np.linalg.norm(b)
    assert ab.iterations <= rel.iterations


def test_maxit_not_converged():
    rep = cg(spd(50, 12, 1e6), np.ones(50), cfg=KrylovConfig(maxit=3))
    assert rep.iterations == 3 and not rep.converged


def test_predictor():
    assert predict_pcg_iterations(0.25, 4, 1e-8) == 38
    assert predict_pcg_iterations(0.25, 4, 1e-8, q=5) == 43
    assert predict_pcg_iterations(2.0, 2.0, 1e-8, q=7) == 8
    N, est = predict_pcg_iterations(0.5, 1.5, 1e-8, q=3, mu=2.0, case=2, C_hat=30.0)
    assert est == pytest.approx(33.0)
    _, est = predict_pcg_iterations(0.5, 1.5, 1e-8, q=0, mu=2 * np.e, case=2, C_hat=0.0)
    assert est == pytest.approx(6.072)
    with pytest.raises(ValueError):
        predict_pcg_iterations(0.0, 4, 1e-8)
    with pytest.raises(ValueError):
        predict_pcg_iterations(5, 4, 1e-8)


def test_config(tmp_path):
    with pytest.raises(ValueError):
        KrylovConfig(tol=0)
    with pytest.raises(ValueError):
        KrylovConfig(criterion="loose")
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"tol": 1e-6, "maxit": 50, "restart": 10, "criterion": "absolute", "extra": 1}))
    cfg = load_config(p)
    assert cfg == KrylovConfig(1e-6, 50, 10, "absolute")


def test_history_csv(tmp_path):
    rep = cg(np.diag([1.0, 2.0, 3.0]), np.ones(3))
    rep.to_csv(tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "iteration,residual" and len(lines) == len(rep.residual_history) + 1
