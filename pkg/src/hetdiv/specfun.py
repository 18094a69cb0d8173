"""Special functions and numerical differentiation used by the coverage formulas.

The hypergeometric evaluator targets the parameter family that arises from
Poisson interference fields, ``2F1(-2/alpha, b; 1 - 2/alpha; x)`` with
``x <= 0`` and its index-shifted variants, but it is written for general real
``a, b, c`` on the non-positive real axis.
"""

from dataclasses import dataclass, field
import math
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from scipy import integrate, special

from .errors import DomainError, NumericalError

__all__ = [
    "HyperGeomArgs",
    "hyp2f1",
    "hyp2f1_deriv",
    "hyp2f1_dx",
    "hyp2f1_taylor",
    "rising_factorial",
    "erlang_ccdf",
    "erlang_moment",
    "psi_integral",
    "psi_closed_p1",
    "psi_partials",
    "ChebyshevDiffPlan",
    "cheb_derivatives",
    "mixed_cheb_derivatives",
    "cheb_tensor_derivatives",
]

_EPS = 2.0 ** -53
_MAX_TERMS = 20000

# Gauss-Legendre rule used by the vectorised Psi quadrature.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
# Below v0 = _PSI_SERIES_CUT / max(a1, a2) the Psi integrand is summed as a
# power series; |a v| <= 1e-3 there, so a dozen terms are exact to rounding.
_PSI_SERIES_CUT = 1e-3
_PSI_SERIES_TERMS = 12


class HyperGeomArgs(NamedTuple):
    """Parameters ``(a, b; c; x)`` of a Gauss hypergeometric evaluation."""

    a: float
    b: float
    c: float
    x: float


def _is_nonpos_int(v):
    return v <= 0 and float(v).is_integer()


def rising_factorial(x, n):
    """Pochhammer symbol ``(x)_n = x (x+1) ... (x+n-1)`` as a product."""
    out = 1.0
    for k in range(int(n)):
        out *= x + k
    return out


def _gauss_series(a, b, c, x):
    """Sum the defining series of 2F1 elementwise; requires |x| < 1."""
    x = np.asarray(x, dtype=float)
    total = np.ones_like(x)
    term = np.ones_like(x)
    # past this index the term ratio is monotone in n
    n_settle = abs(a) + abs(b) + abs(c) + 2.0
    for n in range(_MAX_TERMS):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * x
        total = total + term
        if not np.any(term):
            return total
        if n >= n_settle and np.all(np.abs(term) <= _EPS * np.abs(total)):
            return total
    worst = float(np.max(np.abs(x))) if x.size else 0.0
    raise NumericalError(
        "hypergeometric series did not converge",
        HyperGeomArgs(a, b, c, worst)._asdict(),
    )


def _inverse_argument(a, b, c, x):
    """2F1 for x < -1 through the 1/x connection formula (b - a not integer)."""
    w = 1.0 / x
    mx = -x
    gc = special.gamma(c)
    t1 = (gc * special.gamma(b - a) * special.rgamma(b) * special.rgamma(c - a)
          * mx ** (-a) * _gauss_series(a, a - c + 1.0, a - b + 1.0, w))
    t2 = (gc * special.gamma(a - b) * special.rgamma(a) * special.rgamma(c - b)
          * mx ** (-b) * _gauss_series(b, b - c + 1.0, b - a + 1.0, w))
    return t1 + t2


def hyp2f1(a, b=None, c=None, x=None):
    """Gauss hypergeometric function ``2F1(a, b; c; x)`` for ``x <= 0``.

    Parameters
    ----------
    a, b, c : float
        Real parameters; ``c`` must not be a non-positive integer.  A single
        :class:`HyperGeomArgs` may be passed instead of all four values.
    x : float or array_like
        Argument(s), all ``<= 0``.

    Returns
    -------
    float or ndarray
        Values with relative accuracy of a few ulps times the condition of the
        chosen representation (better than 1e-12 for ``|x| <= 1e4`` on the
        parameter family used in this package).

    Notes
    -----
    Three regimes are used: the Gauss series for ``-1/2 <= x <= 0``, the
    Pfaff transformation ``(1-x)^(-b) 2F1(c-a, b; c; x/(x-1))`` for
    ``-2 <= x < -1/2`` (mapped argument in ``(1/3, 2/3]``) and the ``1/x``
    connection formula for ``x < -2``.  Terminating series are summed
    directly for any ``x``.

    Raises
    ------
    DomainError
        If ``c`` is a non-positive integer or any ``x > 0``.
    NumericalError
        If a series fails to converge within the term budget.
    """
    if isinstance(a, HyperGeomArgs):
        a, b, c, x = a
    if _is_nonpos_int(c):
        raise DomainError(f"c={c} is a non-positive integer")
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(x_arr)):
        raise DomainError("hyp2f1 argument is NaN")
    if np.any(x_arr > 0):
        raise DomainError("hyp2f1 is only provided for x <= 0")
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    out = np.empty_like(x_arr)

    if _is_nonpos_int(a) or _is_nonpos_int(b):
        out[:] = _gauss_series(a, b, c, x_arr)
    else:
        near = x_arr >= -0.5
        mid = (x_arr < -0.5) & (x_arr >= -2.0)
        far = x_arr < -2.0
        if np.any(near):
            out[near] = _gauss_series(a, b, c, x_arr[near])
        use_pfaff = mid.copy()
        if np.any(far):
            if float(b - a).is_integer():
                # connection formula degenerates; slow but convergent Pfaff
                use_pfaff |= far
            else:
                out[far] = _inverse_argument(a, b, c, x_arr[far])
        if np.any(use_pfaff):
            xm = x_arr[use_pfaff]
            out[use_pfaff] = (1.0 - xm) ** (-b) * _gauss_series(
                c - a, b, c, xm / (xm - 1.0))
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite hypergeometric value",
                             HyperGeomArgs(a, b, c, float(x_arr[0]))._asdict())
    return float(out[0]) if scalar else out


def hyp2f1_dx(a, b, c, x, m):
    """``m``-th derivative of ``v -> 2F1(a, b; c; -v)`` at ``v = x``."""
    coef = rising_factorial(a, m) * rising_factorial(b, m) / rising_factorial(c, m)
    return (-1.0) ** m * coef * hyp2f1(a + m, b + m, c + m, -np.asarray(x, float))


def hyp2f1_deriv(a, b, c, m=None, scale=None):
    """``d^m/ds^m 2F1(a, b; c; -s*scale)`` evaluated at ``s = 1``.

    Uses ``(-scale)^m (a)_m (b)_m / (c)_m 2F1(a+m, b+m; c+m; -scale)``; for
    ``c = 1 + a`` the prefactor reduces to ``a (b)_m / (a + m)``.  ``m = 0``
    returns exactly :func:`hyp2f1`.  ``hyp2f1_deriv(args, m, scale)`` with a
    :class:`HyperGeomArgs` is accepted as well; its ``x`` field is ignored.
    """
    if isinstance(a, HyperGeomArgs):
        m, scale = b, c
        a, b, c = a.a, a.b, a.c
    if m < 0:
        raise DomainError("derivative order must be non-negative")
    coef = 1.0
    for k in range(m):
        coef *= (a + k) * (b + k) / (c + k)
    return (-scale) ** m * coef * hyp2f1(a + m, b + m, c + m, -scale)


def hyp2f1_taylor(a, b, c, scale, order, s0=1.0):
    """Taylor coefficients of ``s -> 2F1(a, b; c; -s*scale)`` around ``s0``.

    Returns an array ``[f(s0), f'(s0), f''(s0)/2!, ...]`` of length
    ``order + 1``.
    """
    coefs = np.empty(order + 1)
    x0 = -s0 * scale
    ratio = 1.0
    for j in range(order + 1):
        if j:
            ratio *= (a + j - 1) * (b + j - 1) / ((c + j - 1) * j) * (-scale)
        coefs[j] = ratio * hyp2f1(a + j, b + j, c + j, x0) if ratio else 0.0
    return coefs


def erlang_ccdf(shape, theta):
    """Complementary CDF ``P(G > theta)`` of an Erlang(shape, 1) variable.

    Equals ``exp(-theta) * sum_{j<shape} theta^j / j!``.  Vectorised over
    ``theta``.
    """
    shape = int(shape)
    if shape < 1:
        raise DomainError("Erlang shape must be a positive integer")
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0):
        raise DomainError("theta must be non-negative")
    with np.errstate(divide="ignore"):
        log_th = np.log(th)
    total = np.zeros_like(th)
    for j in range(shape):
        # j = 0 term must not evaluate 0 * log(0)
        log_term = -th + (j * log_th if j else 0.0) - math.lgamma(j + 1)
        total = total + np.exp(log_term)
    total = np.where(th == 0, 1.0, np.minimum(total, 1.0))
    return float(total) if np.ndim(total) == 0 else total


def erlang_moment(shape, p):
    """Raw moment ``E[G^p] = Gamma(shape + p) / Gamma(shape)``, ``p > -shape``."""
    if p <= -shape:
        raise DomainError(f"moment order p={p} must exceed -shape={-shape}")
    if float(p).is_integer() and p >= 0:
        return rising_factorial(shape, int(p))
    return math.exp(math.lgamma(shape + p) - math.lgamma(shape))


def _check_psi(a1, a2, q):
    if q <= 2:
        raise DomainError(f"Psi integral diverges for q={q} <= 2")
    if np.any(np.asarray(a1) < 0) or np.any(np.asarray(a2) < 0):
        raise DomainError("Psi arguments must be non-negative")


def psi_integral(a1, a2, p, q):
    """Joint interference integral
    ``int_1^inf 1 - [(1 + a1 u^{-q/2})(1 + a2 u^{-q/2})]^{-p} du``.

    Computed with ``u = v^{-2/q}``, which turns the tail into the algebraic
    end-point weight ``v^{-2/q}`` on ``(0, 1]``; QUADPACK's QAWS then handles
    it adaptively.
    """
    _check_psi(a1, a2, q)
    if p < 1:
        raise DomainError("Psi exponent p must be positive")
    # ordered arguments make the result exactly symmetric
    a1, a2 = max(float(a1), float(a2)), min(float(a1), float(a2))
    if a1 == 0.0:
        return 0.0
    k = 2.0 / q

    def smooth(v):
        if v == 0.0:
            return k * p * (a1 + a2)
        return -k * math.expm1(-p * (math.log1p(a1 * v) + math.log1p(a2 * v))) / v

    val, err = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(-k, 0.0),
                              epsabs=1e-14, epsrel=1e-13, limit=500)
    if not np.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
        raise NumericalError("Psi quadrature failed",
                             {"a1": a1, "a2": a2, "p": p, "q": q, "err": err})
    return val


# Closed-form branch switches to the confluent limit when the divided
# difference would lose more digits than the midpoint derivative.
_PSI_P1_DEGENERATE = 1e-6


def psi_closed_p1(a1, a2, q):
    """``1 + Psi(a1, a2, 1, q)`` through hypergeometric partial fractions.

    With ``F(x) = 2F1(-2/q, 1; 1 - 2/q; -x)`` and ``g(x) = x F(x)`` the value is
    the divided difference ``(g(a1) - g(a2)) / (a1 - a2)``.  For nearly equal
    arguments it is replaced by ``g'`` at the midpoint, which is exact to
    second order in ``a1 - a2``.
    """
    _check_psi(a1, a2, q)
    a1 = float(a1)
    a2 = float(a2)
    pa, pc = -2.0 / q, 1.0 - 2.0 / q
    if abs(a1 - a2) < _PSI_P1_DEGENERATE * max(a1, a2, 1.0):
        mid = 0.5 * (a1 + a2)
        return hyp2f1(pa, 1.0, pc, -mid) + mid * hyp2f1_dx(pa, 1.0, pc, mid, 1)
    g1 = a1 * hyp2f1(pa, 1.0, pc, -a1)
    g2 = a2 * hyp2f1(pa, 1.0, pc, -a2)
    return (g1 - g2) / (a1 - a2)


def _binom_neg(r, n_terms):
    """Coefficients of (1 + y)^(-r): (-1)^n (r)_n / n!."""
    out = np.empty(n_terms)
    out[0] = 1.0
    for n in range(1, n_terms):
        out[n] = out[n - 1] * -(r + n - 1) / n
    return out


def psi_partials(a1, a2, p, q, max_i=0, max_j=0):
    """Partial derivatives ``d^{i+j} Psi / da1^i da2^j`` on arrays of points.

    Parameters
    ----------
    a1, a2 : array_like
        Non-negative arguments (broadcast together).
    p : int
        Exponent of the Psi integrand.
    q : float
        Path-loss exponent, ``q > 2``.
    max_i, max_j : int
        Highest derivative orders in ``a1`` and ``a2``.

    Returns
    -------
    ndarray
        Shape ``broadcast_shape + (max_i + 1, max_j + 1)``; entry ``[..., 0, 0]``
        is Psi itself.

    Notes
    -----
    In ``v = u^{-q/2}`` the derivatives are
    ``-(-1)^{i+j} (p)_i (p)_j (2/q) int_0^1 v^{i+j-1-2/q}
    (1 + a1 v)^{-p-i} (1 + a2 v)^{-p-j} dv``.  The piece ``v < v0`` is summed
    as a power series; the rest uses ``v = e^{-x}`` with composite 16-point
    Gauss-Legendre panels of width <= 2.  The integrand is analytic in the
    strip ``|Im x| < pi``, so each panel is accurate to rounding.
    """
    _check_psi(a1, a2, q)
    a1, a2 = np.broadcast_arrays(np.asarray(a1, float), np.asarray(a2, float))
    shape = a1.shape
    a1 = a1.ravel()
    a2 = a2.ravel()
    k = 2.0 / q
    ni, nj = max_i + 1, max_j + 1
    out = np.zeros((a1.size, ni, nj))
    if a1.size == 0:
        return out.reshape(shape + (ni, nj))

    amax = np.maximum(a1, a2)
    v0 = np.where(amax > _PSI_SERIES_CUT, _PSI_SERIES_CUT / np.where(amax > 0, amax, 1.0), 1.0)
    span = -np.log(v0)
    n_pan = max(1, int(math.ceil(float(span.max()) / 2.0)))
    width = span / n_pan
    base = np.arange(n_pan)[:, None] + 0.5 * (1.0 + _GL_X[None, :])
    x = width[:, None] * base.ravel()[None, :]
    wts = (0.5 * width)[:, None] * np.tile(_GL_W, n_pan)[None, :]
    v = np.exp(-x)
    l1 = np.log1p(a1[:, None] * v)
    l2 = np.log1p(a2[:, None] * v)
    weight = k * v ** (-k) * wts

    # series piece: coefficients of (1+a1 v)^{-p-i} (1+a2 v)^{-p-j}
    nt = _PSI_SERIES_TERMS
    n_idx = np.arange(nt)
    pow1 = a1[:, None] ** n_idx
    pow2 = a2[:, None] ** n_idx

    for i in range(ni):
        b1 = _binom_neg(p + i, nt)
        for j in range(nj):
            b2 = _binom_neg(p + j, nt)
            c1 = b1[None, :] * pow1
            c2 = b2[None, :] * pow2
            coef = np.zeros((a1.size, nt))
            for n in range(nt):
                coef[:, n] = np.sum(c1[:, : n + 1] * c2[:, n::-1], axis=1)
            if i == 0 and j == 0:
                body = -np.expm1(-p * (l1 + l2))
                outer = np.sum(weight * body, axis=1)
                expo = n_idx[1:] - k
                series = -k * np.sum(coef[:, 1:] * v0[:, None] ** expo / expo, axis=1)
                out[:, 0, 0] = outer + series
                continue
            e = i + j
            body = v ** e * np.exp(-(p + i) * l1 - (p + j) * l2)
            outer = np.sum(weight * body, axis=1)
            expo = e + n_idx - k
            series = k * np.sum(coef * v0[:, None] ** expo / expo, axis=1)
            pref = -((-1.0) ** e) * rising_factorial(p, i) * rising_factorial(p, j)
            out[:, i, j] = pref * (outer + series)
    return out.reshape(shape + (ni, nj))


@dataclass(frozen=True)
class ChebyshevDiffPlan:
    """Chebyshev collocation plan for derivatives at ``s = 1``.

    Attributes
    ----------
    order : int
        Highest derivative returned.
    node_count : int
        Number of first-kind Chebyshev points, at least ``order + 1``.
    interval : tuple of float
        ``(lo, hi)`` strictly containing 1.
    """

    order: int
    node_count: int
    interval: tuple = (0.5, 1.5)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lo, hi = (float(v) for v in self.interval)
        if self.order < 0:
            raise DomainError("order must be non-negative")
        if self.node_count < self.order + 1:
            raise DomainError("node_count must be at least order + 1")
        if not lo < 1.0 < hi:
            raise DomainError("interval must strictly contain 1")
        n = self.node_count
        ref = np.cos((2.0 * np.arange(n)[::-1] + 1.0) * np.pi / (2.0 * n))
        object.__setattr__(self, "interval", (lo, hi))
        object.__setattr__(self, "nodes", lo + 0.5 * (hi - lo) * (ref + 1.0))

    @classmethod
    def default(cls, order, interval=(0.5, 1.5)):
        """Plan with ``max(16, 4 * order)`` nodes on ``interval``."""
        return cls(order, max(16, 4 * order), interval)

    @property
    def _ref_nodes(self):
        lo, hi = self.interval
        return (2.0 * self.nodes - (lo + hi)) / (hi - lo)

    def _coef_matrix(self):
        """Matrix mapping node values to Chebyshev coefficients."""
        n = self.node_count
        vt = _cheb.chebvander(self._ref_nodes, n - 1).T * (2.0 / n)
        vt[0] *= 0.5
        return vt

    def _deriv_rows(self):
        """Row ``i`` holds ``d^i T_k / ds^i`` at ``s = 1`` for every ``k``."""
        lo, hi = self.interval
        x1 = (2.0 - (lo + hi)) / (hi - lo)
        scale = 2.0 / (hi - lo)
        eye = np.eye(self.node_count)
        rows = np.empty((self.order + 1, self.node_count))
        for i in range(self.order + 1):
            rows[i] = _cheb.chebval(x1, _cheb.chebder(eye, i)) * scale ** i
        return rows


def cheb_derivatives(f: Callable[[float], float], plan: ChebyshevDiffPlan):
    """``[f(1), f'(1), ..., f^(order)(1)]`` from a Chebyshev interpolant.

    ``f`` is sampled at ``plan.nodes``; the interpolating polynomial is
    differentiated exactly, so polynomials of degree ``< node_count`` are
    reproduced up to rounding.
    """
    values = np.array([f(float(s)) for s in plan.nodes], dtype=float)
    coef = plan._coef_matrix() @ values
    return plan._deriv_rows() @ coef


def cheb_tensor_derivatives(values, plan_s: ChebyshevDiffPlan, plan_t: ChebyshevDiffPlan):
    """Mixed derivatives at ``(1, 1)`` from samples on the tensor node grid.

    ``values`` may carry leading batch axes; the last two axes index
    ``plan_s.nodes`` and ``plan_t.nodes``.
    """
    values = np.asarray(values, dtype=float)
    cs = plan_s._coef_matrix()
    ct = plan_t._coef_matrix()
    coef = np.einsum("ia,...ab,jb->...ij", cs, values, ct)
    return np.einsum("pi,...ij,qj->...pq", plan_s._deriv_rows(), coef, plan_t._deriv_rows())


def mixed_cheb_derivatives(f: Callable[[float, float], float],
                           plan_s: ChebyshevDiffPlan, plan_t: ChebyshevDiffPlan):
    """Matrix ``D[i, j] = d^{i+j} f / ds^i dt^j`` at ``(1, 1)``."""
    values = np.array([[f(float(s), float(t)) for t in plan_t.nodes]
                       for s in plan_s.nodes], dtype=float)
    return cheb_tensor_derivatives(values, plan_s, plan_t)
