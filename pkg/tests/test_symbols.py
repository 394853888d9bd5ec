import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blocktoep.symbols import (Adjoint, Composed, FractionalAlpha, FractionalQ, Reflected, Scaled,
                               Sum, TrigPolynomial, catalog, catalog_names, fourier_coefficient,
                               fractional_w, grunwald_g, symbol_from_json, symbol_to_json, trig)

LAPL = trig((0, 2), (1, -1), (-1, -1))


def test_cosine_coefficients():
    assert fourier_coefficient(LAPL, 0)[0, 0] == 2
    assert fourier_coefficient(LAPL, 1)[0, 0] == -1
    assert fourier_coefficient(LAPL, -1)[0, 0] == -1
    assert fourier_coefficient(LAPL, 2)[0, 0] == 0


def test_group2_offdiag_first_entry():
    f = catalog("group2.f12")
    assert f.shape == (1, 2)
    assert f.coeff(1)[0, 0] == 1
    assert f.coeff(-1)[0, 0] == 0


def test_non_integer_index_rejected():
    with pytest.raises((TypeError, ValueError)):
        LAPL.coeff(0.5)


def test_eval_points():
    assert LAPL.eval(np.pi)[0, 0] == pytest.approx(4)
    assert abs(LAPL.eval(0.0)[0, 0]) < 1e-15


@given(st.floats(-50, 50))
def test_eval_periodic(th):
    f = catalog("group3.f11")
    assert np.allclose(f.eval(th), f.eval(th + 2 * np.pi), atol=1e-12)


def test_grunwald_values():
    g = grunwald_g(1.5, 3)
    assert np.allclose(g, [1, -1.5, 0.375, 0.0625], atol=1e-15)
    assert np.allclose(grunwald_g(1.0, 4), [1, -1, 0, 0, 0])
    assert grunwald_g(0.3, 0)[0] == 1


@pytest.mark.parametrize("a", [0.0, -1.0, 2.5])
def test_grunwald_rejects(a):
    with pytest.raises(ValueError):
        grunwald_g(a, 5)


@pytest.mark.parametrize("a", [1.1, 1.5, 1.9])
def test_grunwald_partial_sums_decrease(a):
    s = np.abs(np.cumsum(grunwald_g(a, 400)))[2:]
    assert np.all(np.diff(s) < 0)


def test_fractional_w():
    w = fractional_w(1.5, 2)
    # w_2 = 0.75 * 0.375 + 0.25 * (-1.5)
    assert np.allclose(w, [0.75, -0.875, -0.09375])
    assert np.allclose(fractional_w(2.0, 10), grunwald_g(2.0, 10))
    assert fractional_w(1.8, 0)[0] == pytest.approx(0.9)


def test_fractional_alpha_diagonal():
    assert FractionalAlpha(1.5).coeff(0)[0, 0] == pytest.approx(3.0)


def test_fractional_q_closed_form_vs_series():
    q = FractionalQ(1.5, L=2000)
    th = np.array([np.pi])
    closed = q.closed_form(th)[0]
    series = q.eval(th)[0, 0].real
    assert closed > 0
    assert abs(series - closed) / closed < 1e-6


@pytest.mark.parametrize("g", [1.5, 1.8])
def test_fractional_q_nonnegative_with_zero(g):
    q = FractionalQ(g)
    th = np.linspace(-np.pi, np.pi, 1024)
    v = q.closed_form(th)
    assert v.min() > -1e-12
    assert abs(q.closed_form(np.array([0.0]))[0]) < 1e-12


def test_catalog_examples():
    f13 = catalog("group3.f13")
    assert np.allclose(f13.coeff(0), 48 / 40 * np.eye(2))
    f22 = catalog("group1.f22")
    want = {0: 2, 1: -1, -1: -1, 2: -3, -2: -3, 3: 0}
    for k, v in want.items():
        assert f22.coeff(k)[0, 0] == v


def test_composed_two_grid_at_zero():
    p = catalog("pQ2")
    f = catalog("group3.f22")
    a, b = p.eval(0.0), p.eval(np.pi)
    want = a.conj().T @ a + b.conj().T @ b
    assert np.allclose(f.eval(0.0), want, atol=1e-12)


def test_unknown_catalog_name():
    with pytest.raises(KeyError):
        catalog("nope")


@pytest.mark.parametrize("name", catalog_names())
def test_coefficients_reconstruct_eval(name):
    f = catalog(name)
    rng = np.random.default_rng(1)
    th = rng.uniform(-np.pi, np.pi, 64)
    if f.support is None:
        pytest.skip("infinite series: covered by the closed-form comparison")
    lo, hi = f.support
    c = f.coeffs(lo, hi)
    k = np.arange(lo, hi + 1)
    rec = np.einsum("tk,kab->tab", np.exp(1j * np.outer(th, k)), c)
    direct = f.eval(th)
    assert np.max(np.abs(rec - direct)) <= 1e-12 * max(1.0, np.max(np.abs(direct)))


def test_fractional_eval_matches_closed_form():
    f = FractionalAlpha(1.5)
    th = np.random.default_rng(2).uniform(0.2, np.pi, 64)
    assert np.allclose(f.eval(th)[:, 0, 0].real, f.closed_form(th).real, rtol=1e-3, atol=1e-3)


HERMITIAN = ["group1.f11", "group1.f22", "f2", "fQ2", "f20", "f31", "group3.f22", "ex3.q_alpha",
             "ex3.q_beta", "ex1.f11"]


@pytest.mark.parametrize("name", HERMITIAN)
def test_hermitian_symbols(name):
    f = catalog(name)
    v = f.eval(np.linspace(-np.pi, np.pi, 256, endpoint=False))
    assert np.allclose(v, np.conj(np.swapaxes(v, -1, -2)), atol=1e-10)
    assert f.is_hermitian_coeffs(kmax=16)


def test_combinators():
    f = catalog("group2.f12")
    assert np.allclose(Adjoint(f).coeff(-1), f.coeff(1).conj().T)
    assert np.allclose(Reflected(f).coeff(1), f.coeff(-1))
    s = Sum([LAPL, Scaled(LAPL, 2.0)])
    assert np.allclose(s.coeff(1), -3)
    with pytest.raises(ValueError):
        Sum([LAPL, f])


def test_composed_rejects_leakage():
    with pytest.raises(ValueError):
        Composed(lambda th: np.exp(1j * 5 * np.asarray(th))[..., None, None], 1, 1, (-2, 2))


def test_json_roundtrip(tmp_path):
    f = catalog("group3.f11")
    doc = symbol_to_json(f)
    g = symbol_from_json(json.loads(json.dumps(doc)))
    for k in range(-2, 3):
        assert np.allclose(f.coeff(k), g.coeff(k))
    fa = symbol_from_json({"kind": "fractional_alpha", "alpha": 1.5, "L": 40})
    assert fa.coeff(0)[0, 0] == pytest.approx(3.0)
    assert fa.coeff(100)[0, 0] == 0
    assert symbol_from_json({"kind": "catalog", "name": "group1.f11"}) is catalog("group1.f11")


def test_trigpoly_shape_mismatch():
    with pytest.raises(ValueError):
        TrigPolynomial({0: np.eye(2), 1: np.ones((1, 2))})


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=5), st.floats(-np.pi, np.pi))
def test_trig_eval_definition(cs, th):
    f = TrigPolynomial({k: np.array([[c]]) for k, c in enumerate(cs)})
    want = sum(c * np.exp(1j * k * th) for k, c in enumerate(cs))
    assert np.allclose(f.eval(th)[0, 0], want, atol=1e-12)
