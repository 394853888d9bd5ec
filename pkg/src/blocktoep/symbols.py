"""Matrix-valued 2*pi-periodic generating functions.

A symbol is represented by its Fourier coefficients ``f_k`` (``s x t``
complex matrices) so that ``f(theta) = sum_k f_k exp(i k theta)``.  Trig
polynomials are exact; fractional-diffusion symbols expose their series
coefficients exactly for every index and truncate only when evaluated
pointwise.
"""
from __future__ import annotations

import json
import numbers
from functools import lru_cache

import numpy as np

__all__ = [
    "Symbol", "TrigPolynomial", "FractionalAlpha", "FractionalQ", "Scaled",
    "Sum", "Adjoint", "Reflected", "Composed",
    "grunwald_g", "fractional_w", "fourier_coefficient", "eval_symbol",
    "catalog", "catalog_names", "symbol_from_json", "symbol_to_json",
    "load_symbol", "trig",
]

# default number of series terms used when a fractional symbol is evaluated
# pointwise without an explicit truncation length
EVAL_TERMS = 4096


def _check_index(k):
    if isinstance(k, (bool, np.bool_)) or not isinstance(k, (numbers.Integral, np.integer)):
        raise TypeError(f"Fourier index must be an integer, got {k!r}")
    return int(k)


class Symbol:
    """Base class.  Subclasses implement :meth:`_coeff` and optionally
    :meth:`eval` and :attr:`support`."""

    s: int = 1
    t: int = 1

    @property
    def shape(self):
        return (self.s, self.t)

    @property
    def support(self):
        """``(kmin, kmax)`` of the nonzero coefficients, or ``None`` when the
        series is infinite."""
        return None

    @property
    def bandwidth(self):
        sup = self.support
        if sup is None:
            return None
        return max(abs(sup[0]), abs(sup[1]))

    def coeff(self, k):
        """Fourier coefficient ``f_k`` as an ``s x t`` complex array."""
        return self._coeff(_check_index(k))

    def _coeff(self, k):
        raise NotImplementedError

    def coeffs(self, kmin, kmax):
        """Stack of coefficients for ``k = kmin..kmax`` (inclusive),
        shape ``(kmax - kmin + 1, s, t)``."""
        out = np.zeros((max(kmax - kmin + 1, 0), self.s, self.t), dtype=complex)
        for i, k in enumerate(range(kmin, kmax + 1)):
            out[i] = self._coeff(k)
        return out

    def eval(self, theta):
        """Evaluate at a scalar or array of angles.

        Returns an array of shape ``theta.shape + (s, t)``.
        """
        th = np.asarray(theta, dtype=float)
        sup = self.support
        if sup is None:
            sup = (-EVAL_TERMS, EVAL_TERMS)
        ks = np.arange(sup[0], sup[1] + 1)
        c = self.coeffs(sup[0], sup[1])
        ph = np.exp(1j * np.multiply.outer(th, ks))
        return np.tensordot(ph, c, axes=([-1], [0]))

    def __call__(self, theta):
        return self.eval(theta)

    def is_hermitian_coeffs(self, kmax=None, tol=1e-14):
        """Check ``f_{-k} == f_k^*`` on the coefficient map."""
        if self.s != self.t:
            return False
        sup = self.support
        K = kmax if kmax is not None else (self.bandwidth if sup is not None else 64)
        for k in range(0, K + 1):
            a, b = self._coeff(k), self._coeff(-k)
            if np.max(np.abs(a - b.conj().T), initial=0.0) > tol * max(1.0, np.abs(a).max(initial=0)):
                return False
        return True

    # convenience algebra
    def __add__(self, other):
        return Sum([self, other])

    def __mul__(self, c):
        return Scaled(self, c)

    __rmul__ = __mul__

    def adjoint(self):
        return Adjoint(self)

    def reflect(self):
        return Reflected(self)


class TrigPolynomial(Symbol):
    """Finite Fourier series given as a map ``k -> s x t`` matrix."""

    def __init__(self, coeffs, shape=None, name=None):
        items = {}
        for k, v in dict(coeffs).items():
            v = np.atleast_2d(np.asarray(v, dtype=complex))
            items[_check_index(k)] = v
        if not items:
            if shape is None:
                raise ValueError("empty polynomial needs an explicit shape")
            items = {0: np.zeros(shape, dtype=complex)}
        shapes = {v.shape for v in items.values()}
        if len(shapes) != 1:
            raise ValueError(f"inconsistent coefficient shapes {shapes}")
        self.s, self.t = shapes.pop()
        if shape is not None and tuple(shape) != (self.s, self.t):
            raise ValueError("shape mismatch")
        self._c = {k: v.copy() for k, v in items.items()}
        for v in self._c.values():
            v.flags.writeable = False
        self.name = name

    @property
    def support(self):
        nz = [k for k, v in self._c.items() if np.any(v != 0)]
        if not nz:
            return (0, 0)
        return (min(nz), max(nz))

    def _coeff(self, k):
        v = self._c.get(k)
        if v is None:
            return np.zeros((self.s, self.t), dtype=complex)
        return v.copy()

    def items(self):
        return sorted(self._c.items())

    def __repr__(self):
        return f"TrigPolynomial(s={self.s}, t={self.t}, support={self.support}, name={self.name!r})"


def trig(*pairs, name=None):
    """Shorthand: ``trig((0, 2), (1, -1), (-1, -1))`` for a scalar polynomial."""
    return TrigPolynomial({k: np.atleast_2d(v) for k, v in pairs}, name=name)


# --------------------------------------------------------------------------
# fractional weights

def grunwald_g(alpha, kmax):
    """Grunwald-Letnikov weights ``g_k = (-1)^k binom(alpha, k)``, k=0..kmax.

    Uses ``g_k = g_{k-1} (k - 1 - alpha) / k``.

    >>> grunwald_g(1.5, 3)
    array([ 1.    , -1.5   ,  0.375 ,  0.0625])
    """
    alpha = float(alpha)
    if not (0.0 < alpha <= 2.0):
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    kmax = int(kmax)
    if kmax < 0:
        raise ValueError("kmax must be nonnegative")
    return _grunwald_cached(alpha, kmax).copy()


@lru_cache(maxsize=64)
def _grunwald_cached(alpha, kmax):
    k = np.arange(1, kmax + 1, dtype=float)
    g = np.empty(kmax + 1)
    g[0] = 1.0
    g[1:] = np.cumprod((k - 1.0 - alpha) / k)
    g.flags.writeable = False
    return g


def fractional_w(gamma, kmax):
    """Shifted weights ``w_0 = (gamma/2) g_0`` and
    ``w_k = (gamma/2) g_k + ((2-gamma)/2) g_{k-1}``."""
    g = grunwald_g(gamma, kmax)
    w = 0.5 * gamma * g
    w[1:] += 0.5 * (2.0 - gamma) * g[:-1]
    return w


def _fractional_series(weights_fn, p, k, L):
    """Coefficient pattern ``-2 v_1, -(v_0 + v_2), -v_{|k|+1}`` shared by
    both fractional families."""
    a = abs(k)
    if L is not None and a > L:
        return 0.0
    v = weights_fn(p, max(a + 1, 2))
    if a == 0:
        return -2.0 * v[1]
    if a == 1:
        return -(v[0] + v[2])
    return -v[a + 1]


class _Fractional(Symbol):
    s = t = 1
    _weights = None
    _param_name = "p"

    def __init__(self, p, L=None):
        p = float(p)
        if not (1.0 < p < 2.0) and not (self._allow_two and p == 2.0):
            raise ValueError(f"exponent must lie in (1, 2), got {p}")
        self.p = p
        self.L = None if L is None else int(L)

    _allow_two = False

    @property
    def support(self):
        return None if self.L is None else (-self.L, self.L)

    def _coeff(self, k):
        return np.array([[_fractional_series(type(self)._weights, self.p, k, self.L)]], dtype=complex)

    def coeffs(self, kmin, kmax):
        a = max(abs(kmin), abs(kmax)) + 2
        v = type(self)._weights(self.p, a)
        ks = np.arange(kmin, kmax + 1)
        ak = np.abs(ks)
        out = -v[np.minimum(ak + 1, a)].astype(complex)
        out[ak == 0] = -2.0 * v[1]
        out[ak == 1] = -(v[0] + v[2])
        if self.L is not None:
            out[ak > self.L] = 0.0
        return out.reshape(-1, 1, 1)

    def eval(self, theta):
        th = np.asarray(theta, dtype=float)
        K = self.L if self.L is not None else EVAL_TERMS
        c = self.coeffs(0, K)[:, 0, 0].real
        ks = np.arange(1, K + 1)
        val = c[0] + 2.0 * np.cos(np.multiply.outer(th, ks)) @ c[1:]
        return np.asarray(val, dtype=complex)[..., None, None]


class FractionalAlpha(_Fractional):
    """``-e^{-i th}(1-e^{i th})^a - e^{i th}(1-e^{-i th})^a`` via its
    Grunwald series."""

    _weights = staticmethod(grunwald_g)

    @property
    def alpha(self):
        return self.p

    def closed_form(self, theta):
        th = np.asarray(theta, dtype=float)
        a = self.p
        z = np.exp(1j * th)
        return -np.conj(z) * (1 - z) ** a - z * (1 - np.conj(z)) ** a

    def __repr__(self):
        return f"FractionalAlpha(alpha={self.p}, L={self.L})"


class FractionalQ(_Fractional):
    """``q_g(th) = w_g(th) + w_g(-th)`` with
    ``w_g(th) = -((2 - g(1 - e^{-i th}))/2) (1 - e^{i th})^g``."""

    _weights = staticmethod(fractional_w)

    @property
    def gamma(self):
        return self.p

    def closed_form(self, theta):
        th = np.asarray(theta, dtype=float)
        g = self.p

        def w(x):
            return -((2 - g * (1 - np.exp(-1j * x))) / 2) * (1 - np.exp(1j * x)) ** g

        return w(th) + w(-th)

    def __repr__(self):
        return f"FractionalQ(gamma={self.p}, L={self.L})"


# --------------------------------------------------------------------------
# derived symbols

class Scaled(Symbol):
    def __init__(self, base, c):
        self.base, self.c = base, complex(c)
        self.s, self.t = base.s, base.t

    @property
    def support(self):
        return self.base.support

    def _coeff(self, k):
        return self.c * self.base._coeff(k)

    def coeffs(self, kmin, kmax):
        return self.c * self.base.coeffs(kmin, kmax)


class Sum(Symbol):
    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise ValueError("empty sum")
        shapes = {(p.s, p.t) for p in parts}
        if len(shapes) != 1:
            raise ValueError(f"shape mismatch in sum: {shapes}")
        self.parts = parts
        self.s, self.t = shapes.pop()

    @property
    def support(self):
        sups = [p.support for p in self.parts]
        if any(s is None for s in sups):
            return None
        return (min(s[0] for s in sups), max(s[1] for s in sups))

    def _coeff(self, k):
        return sum(p._coeff(k) for p in self.parts)

    def coeffs(self, kmin, kmax):
        return sum(p.coeffs(kmin, kmax) for p in self.parts)


class Adjoint(Symbol):
    """Pointwise conjugate transpose: coefficients ``k -> f_{-k}^*``."""

    def __init__(self, base):
        self.base = base
        self.s, self.t = base.t, base.s

    @property
    def support(self):
        sup = self.base.support
        return None if sup is None else (-sup[1], -sup[0])

    def _coeff(self, k):
        return self.base._coeff(-k).conj().T

    def coeffs(self, kmin, kmax):
        c = self.base.coeffs(-kmax, -kmin)[::-1]
        return np.conj(np.transpose(c, (0, 2, 1)))


class Reflected(Symbol):
    """``theta -> f(-theta)``: coefficients ``k -> f_{-k}``."""

    def __init__(self, base):
        self.base = base
        self.s, self.t = base.s, base.t

    @property
    def support(self):
        sup = self.base.support
        return None if sup is None else (-sup[1], -sup[0])

    def _coeff(self, k):
        return self.base._coeff(-k)

    def coeffs(self, kmin, kmax):
        return self.base.coeffs(-kmax, -kmin)[::-1].copy()


class Composed(Symbol):
    """Pointwise expression of other symbols.

    ``fn(theta)`` must return an array of shape ``theta.shape + (s, t)``.
    Fourier coefficients are obtained from trapezoidal quadrature on
    ``nquad`` points, which is exact when ``support`` is known and
    ``nquad > 2 * bandwidth``.
    """

    def __init__(self, fn, s, t, support, nquad=4096, tol=1e-12, name=None):
        self.fn = fn
        self.s, self.t = int(s), int(t)
        self._support = tuple(support)
        self.nquad = int(nquad)
        self.name = name
        bw = max(abs(self._support[0]), abs(self._support[1]))
        if self.nquad < 4 * max(bw, 1):
            raise ValueError("quadrature resolution must be at least 4x the support")
        th = 2 * np.pi * np.arange(self.nquad) / self.nquad
        vals = np.asarray(fn(th), dtype=complex).reshape(self.nquad, self.s, self.t)
        F = np.fft.fft(vals, axis=0) / self.nquad
        # F[k mod nquad] is the k-th Fourier coefficient
        self._table = F
        kmin, kmax = self._support
        outside = np.ones(self.nquad, dtype=bool)
        outside[[k % self.nquad for k in range(kmin, kmax + 1)]] = False
        leak = np.abs(F[outside]).max(initial=0.0)
        if leak > tol * max(1.0, np.abs(F).max()):
            raise ValueError(f"coefficients outside the declared support ({leak:.2e})")
        self._exact = {k: self._snap(F[k % self.nquad]) for k in range(kmin, kmax + 1)}

    @staticmethod
    def _snap(c, tol=1e-13):
        c = c.copy()
        c.real[np.abs(c.real) < tol] = 0.0
        c.imag[np.abs(c.imag) < tol] = 0.0
        return c

    @property
    def support(self):
        return self._support

    def _coeff(self, k):
        v = self._exact.get(k)
        return np.zeros((self.s, self.t), dtype=complex) if v is None else v.copy()

    def eval(self, theta):
        th = np.asarray(theta, dtype=float)
        return np.asarray(self.fn(th.ravel()), dtype=complex).reshape(th.shape + (self.s, self.t))


def fourier_coefficient(sym, k):
    return sym.coeff(k)


def eval_symbol(sym, theta):
    return sym.eval(theta)


# --------------------------------------------------------------------------
# catalog

def _m(rows, scale=1.0):
    return scale * np.array(rows, dtype=float)


def _tp(d, scale=1.0, name=None):
    return TrigPolynomial({k: _m(v, scale) for k, v in d.items()}, name=name)


def _build_catalog():
    cat = {}
    # scalar group
    cat["group1.f11"] = trig((0, 2), (1, -1), (-1, -1), name="2-2cos")
    cat["group1.f22"] = trig((0, 2), (1, -1), (-1, -1), (2, -3), (-2, -3), name="2-2cos-6cos2")
    cat["group1.f12"] = trig((0, 1), (1, -1), (-1, -1), name="1-2cos")
    cat["group1.f21"] = trig((0, 1), (1, -1), (-1, -1), name="1-2cos")
    # 1 x 2 rectangular group
    cat["group2.f11"] = _tp({0: [[2, 4]], 1: [[-1, 0]], -1: [[-1, 0]], 2: [[0, 3]], -2: [[0, 3]]},
                            name="(2-2cos, 4+6cos2)")
    cat["group2.f22"] = _tp({0: [[3, 4]], 1: [[1, 3]], -1: [[1, 3]], 2: [[0, -1]], -2: [[0, -1]]},
                            name="(3+2cos, 4+6cos-2cos2)")
    cat["group2.f12"] = _tp({0: [[1, 1]], 1: [[1, 0]], -1: [[0, -1]]}, name="(1+e^it, 1-e^-it)")
    cat["group2.f21"] = cat["group2.f12"]
    # 2 x 2 groups from discretised 1D Laplacians
    f2 = _tp({0: [[2, -1], [-1, 2]], -1: [[0, 0], [-1, 0]], 1: [[0, -1], [0, 0]]}, name="f[2]")
    fq2 = _tp({0: [[16, -8], [-8, 14]], 1: [[0, -8], [0, 1]], -1: [[0, 0], [-8, 1]]}, 1 / 3, name="fQ2")
    f20 = _tp({0: [[4, -2], [-2, 8]], 1: [[0, -2], [0, -2]], -1: [[0, 0], [-2, -2]]}, 1 / 3, name="f(2,0)")
    f31 = _tp({0: [[48, 0], [0, 48]], 1: [[-15, -15], [-3, -1]], -1: [[-15, -3], [-15, -1]]}, 1 / 40,
              name="f(3,1)")
    pq2 = _tp({0: [[3 / 4, 3 / 8], [0, 1]], 1: [[0, 3 / 8], [0, 0]],
               -1: [[3 / 4, -1 / 8], [1, 0]], -2: [[0, -1 / 8], [0, 0]]}, name="pQ2")
    cat["f2"], cat["fQ2"], cat["f20"], cat["f31"], cat["pQ2"] = f2, fq2, f20, f31, pq2

    def two_grid(th):
        p0 = pq2.eval(th)
        p1 = pq2.eval(th + np.pi)
        return np.conj(np.swapaxes(p0, -1, -2)) @ p0 + np.conj(np.swapaxes(p1, -1, -2)) @ p1

    bw = pq2.bandwidth
    cat["group3.f22"] = Composed(two_grid, 2, 2, (-2 * bw, 2 * bw), name="p*p + p*p(.+pi)")
    cat["group3.f11"] = fq2
    cat["group3.f12"] = cat["group3.f21"] = f20
    cat["group3.f13"] = cat["group3.f31"] = f31
    cat["group3.f23"] = cat["group3.f32"] = pq2
    cat["group3.f33"] = f2
    # fractional examples
    cat["ex1.f11"] = FractionalAlpha(1.5)
    cat["ex1.f12"] = trig((0, -1), (-1, 1), name="-1+e^-it")
    cat["ex1.f21"] = trig((0, -1), (1, 1), name="-1+e^it")
    cat["ex1.f22"] = trig((0, 4), (1, -1), (-1, -1), name="4-2cos")
    cat["ex2.f11"] = cat["group1.f11"]
    cat["ex2.f12"] = FractionalAlpha(1.7)
    cat["ex2.f21"] = Reflected(cat["ex2.f12"])
    cat["ex2.f22"] = cat["ex1.f22"]
    cat["ex3.q_alpha"] = FractionalQ(1.5)
    cat["ex3.q_beta"] = FractionalQ(1.8)
    cat["ex3.laplace"] = cat["group1.f11"]
    return cat


_CATALOG = None


def catalog(name):
    """Look up a registered symbol by dotted name, e.g. ``"group1.f22"``."""
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = _build_catalog()
    try:
        return _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown symbol {name!r}") from None


def catalog_names():
    catalog("f2")
    return sorted(_CATALOG)


# --------------------------------------------------------------------------
# JSON

def symbol_from_json(obj):
    """Build a symbol from a parsed JSON object (or a catalog name string)."""
    if isinstance(obj, str):
        return catalog(obj)
    kind = obj.get("kind", "trigpoly")
    if kind == "trigpoly":
        s, t = int(obj["s"]), int(obj["t"])
        co = {}
        for c in obj["coeffs"]:
            re = np.asarray(c.get("re", np.zeros((s, t))), dtype=float).reshape(s, t)
            im = np.asarray(c.get("im", np.zeros((s, t))), dtype=float).reshape(s, t)
            co[int(c["k"])] = re + 1j * im
        return TrigPolynomial(co, shape=(s, t))
    if kind == "fractional_alpha":
        return FractionalAlpha(obj["alpha"], obj.get("L"))
    if kind == "fractional_q":
        return FractionalQ(obj["gamma"], obj.get("L"))
    if kind == "catalog":
        return catalog(obj["name"])
    raise ValueError(f"unknown symbol kind {kind!r}")


def symbol_to_json(sym):
    if isinstance(sym, TrigPolynomial):
        return {"s": sym.s, "t": sym.t, "kind": "trigpoly",
                "coeffs": [{"k": k, "re": v.real.tolist(), "im": v.imag.tolist()} for k, v in sym.items()]}
    if isinstance(sym, FractionalAlpha):
        return {"s": 1, "t": 1, "kind": "fractional_alpha", "alpha": sym.p, "L": sym.L}
    if isinstance(sym, FractionalQ):
        return {"s": 1, "t": 1, "kind": "fractional_q", "gamma": sym.p, "L": sym.L}
    raise TypeError(f"cannot serialise {type(sym).__name__}")


def load_symbol(path):
    with open(path) as fh:
        return symbol_from_json(json.load(fh))
