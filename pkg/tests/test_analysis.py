import numpy as np
import pytest

from blocktoep import analysis as an
from blocktoep.structmat import toeplitz
from blocktoep.symbols import catalog, trig

LAPL = trig((0, 2), (1, -1), (-1, -1))


def test_diag_singular_values():
    rep = an.singular_values(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(rep.values, [1, 2, 3]) and rep.kind == "singular"
    assert rep.min == 1 and rep.max == 3


def test_laplacian_spectrum():
    n = 4
    ev = an.eigenvalues(toeplitz(LAPL, n), hermitian=True).values
    want = 2 - 2 * np.cos(np.pi * np.arange(1, n + 1) / (n + 1))
    assert np.allclose(ev, np.sort(want), atol=1e-13)


def test_hermitian_sv_are_abs_eig():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((12, 12))
    H = X + X.T
    sv = an.singular_values(H).values
    ev = an.eigenvalues(H, hermitian=True).values
    assert np.allclose(sv, np.sort(np.abs(ev)))


def test_complex_eigen_sorted():
    M = np.array([[0.0, -1.0], [1.0, 0.0]])
    ev = an.eigenvalues(M).values
    assert np.allclose(ev, [-1j, 1j])


def test_generalized():
    A = np.diag([2.0, 6.0])
    P = np.diag([1.0, 2.0])
    assert np.allclose(an.generalized_eigenvalues(A, P, hermitian=True).values, [2, 3])
    assert np.allclose(an.generalized_eigenvalues(A, P).values, [2, 3])


def test_dense_guard():
    with pytest.raises(ValueError):
        an.singular_values(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        an.eigenvalues(np.ones((2, 3)))


def test_cluster_counts():
    c = an.cluster_stats(np.array([1.0, 1.0, 1.0]), 1.0, 0.1)
    assert (c.count_below, c.count_above, c.outliers, c.ratio) == (0, 0, 0, 0.0)
    v = np.array([0.1, 0.9, 1.2, 1.6, 5.0])
    c = an.cluster_stats(v)
    assert (c.count_below, c.count_above, c.count_inside) == (1, 2, 2)
    assert c.ratio == pytest.approx(0.6)
    rng = np.random.default_rng(1)
    c2 = an.cluster_stats(rng.permutation(v))
    assert c2 == c
    with pytest.raises(ValueError):
        an.cluster_stats(v, radius=0)


def test_cluster_complex():
    v = np.array([1 + 0.01j, 0.3 + 0.0j, 1.0 + 0.8j, 2.0 - 0.1j])
    c = an.cluster_stats(v, 1.0, 0.5)
    assert (c.count_below, c.count_above, c.count_inside) == (1, 2, 1)


def test_weyl_constant_symbol():
    f = trig((0, 2.0))
    sv = np.full(50, 2.0)
    assert an.weyl_discrepancy(sv, f) < 1e-14
    with pytest.raises(ValueError):
        an.weyl_discrepancy(sv, f, grid_size=100)


def test_weyl_small_for_toeplitz():
    f = catalog("group1.f22")
    d = [an.weyl_discrepancy(an.singular_values(toeplitz(f, n)), f) for n in (32, 128)]
    assert d[1] < d[0] < 0.2


def test_weyl_identity_from_samples():
    f = LAPL
    samples = an.symbol_singular_samples(f, 512).ravel()
    assert an.weyl_discrepancy(samples, f, grid_size=512) < 1e-14


def test_condition_report():
    r = an.condition_report(np.eye(4))
    assert r["min_sigma_A"] == r["max_sigma_A"] == r["mu_A"] == 1
    r = an.condition_report(np.diag([1.0, 0.0]), np.diag([4.0, 2.0]))
    assert r["mu_A"] == np.inf and r["mu_M"] == 2
    r = an.condition_report(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert r["mu_A"] == np.inf


def test_preconditioned_matrix():
    A = np.array([[4.0, 1.0], [2.0, 3.0]])
    P = np.diag([2.0, 1.0])
    assert np.allclose(an.preconditioned_matrix(A, P), np.linalg.solve(P, A))
    R = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    assert np.allclose(an.preconditioned_matrix(R, R, side="right_pinv"), R @ np.linalg.pinv(R))


def test_export(tmp_path):
    p = tmp_path / "s.csv"
    an.export_spectrum(np.array([1.5, 2.0]), p)
    assert np.allclose(np.loadtxt(p), [1.5, 2.0])
    an.export_spectrum(np.array([1 + 2j]), p)
    assert p.read_text().strip().split(",") == ["1.0000000000000000e+00", "2.0000000000000000e+00"]
