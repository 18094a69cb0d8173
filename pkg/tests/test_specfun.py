import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetdiv import specfun as sf
from hetdiv.errors import DomainError

mp.mp.dps = 30


def mp_f1(a, b, c, x):
    return float(mp.hyp2f1(a, b, c, x))


@pytest.mark.parametrize("alpha", [2.5, 3.0, 3.7, 4.0, 5.0])
@pytest.mark.parametrize("m", [0, 1, 3, 6])
@pytest.mark.parametrize("x", [0.0, -1e-3, -0.3, -0.7, -1.5, -3.0, -40.0, -1e3, -1e5])
def test_hyp2f1_against_mpmath(alpha, m, x):
    a, b, c = -2 / alpha + m, 1 + m, 1 - 2 / alpha + m
    ref = mp_f1(a, b, c, x)
    assert sf.hyp2f1(a, b, c, x) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("s", [1, 2, 3, 5])
@pytest.mark.parametrize("x", [-0.2, -1.2, -7.0, -300.0])
def test_hyp2f1_interference_shapes(s, x):
    a, b, c = -2 / 3.7, s, 1 - 2 / 3.7
    assert sf.hyp2f1(a, b, c, x) == pytest.approx(mp_f1(a, b, c, x), rel=1e-12)


def test_hyp2f1_integer_gap_fallback():
    # b - a integer disables the 1/x connection formula
    a, b, c = 0.5, 2.5, 1.5
    for x in (-3.0, -50.0):
        assert sf.hyp2f1(a, b, c, x) == pytest.approx(mp_f1(a, b, c, x), rel=1e-11)


def test_hyp2f1_arctan_identity():
    u = np.logspace(-6, 3, 50)
    want = 1 + np.sqrt(u) * np.arctan(np.sqrt(u))
    got = sf.hyp2f1(-0.5, 1.0, 0.5, -u)
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_hyp2f1_args_tuple_and_vector():
    args = sf.HyperGeomArgs(-0.5, 1.0, 0.5, -2.0)
    assert sf.hyp2f1(args) == sf.hyp2f1(-0.5, 1.0, 0.5, -2.0)
    vec = sf.hyp2f1(-0.5, 1.0, 0.5, np.array([-1.0, -2.0]))
    assert vec.shape == (2,)


@pytest.mark.parametrize("bad", [0.1, float("nan")])
def test_hyp2f1_domain(bad):
    with pytest.raises(DomainError):
        sf.hyp2f1(-0.5, 1.0, 0.5, bad)


def test_hyp2f1_nonpositive_c():
    with pytest.raises(DomainError):
        sf.hyp2f1(0.5, 1.0, -2.0, -1.0)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(2.2, 6.0), x=st.floats(1e-6, 1e4))
def test_hyp2f1_positive_and_increasing(alpha, x):
    a, c = -2 / alpha, 1 - 2 / alpha
    f0 = sf.hyp2f1(a, 1.0, c, -x)
    f1 = sf.hyp2f1(a, 1.0, c, -1.01 * x)
    assert f0 >= 1.0 and f1 >= f0


@pytest.mark.parametrize("m", [1, 2, 4])
def test_hyp2f1_deriv_against_mpmath(m):
    a, b, c, scale = -2 / 3.7, 2.0, 1 - 2 / 3.7, 3.0
    ref = float(mp.diff(lambda s: mp.hyp2f1(a, b, c, -s * scale), 1, m))
    assert sf.hyp2f1_deriv(a, b, c, m, scale) == pytest.approx(ref, rel=1e-10)
    args = sf.HyperGeomArgs(a, b, c, 0.0)
    assert sf.hyp2f1_deriv(args, m, scale) == sf.hyp2f1_deriv(a, b, c, m, scale)


def test_hyp2f1_deriv_zero_order_is_value():
    assert sf.hyp2f1_deriv(-0.5, 1.0, 0.5, 0, 2.0) == sf.hyp2f1(-0.5, 1.0, 0.5, -2.0)


def test_hyp2f1_taylor_against_mpmath():
    a, b, c, scale, s0 = -2 / 4.0, 1.0, 0.5, 2.0, 0.6
    co = sf.hyp2f1_taylor(a, b, c, scale, 5, s0)
    mp_co = mp.taylor(lambda s: mp.hyp2f1(a, b, c, -s * scale), s0, 5)
    np.testing.assert_allclose(co, [float(v) for v in mp_co], rtol=1e-10)


def test_erlang_ccdf_against_scipy_gamma():
    from scipy import stats
    th = np.array([0.0, 0.1, 1.0, 5.0, 30.0])
    for k in (1, 2, 4, 8):
        np.testing.assert_allclose(sf.erlang_ccdf(k, th), stats.gamma.sf(th, k), rtol=1e-12,
                                   atol=1e-300)
    assert sf.erlang_ccdf(3, 0.0) == 1.0


def test_erlang_moment():
    assert sf.erlang_moment(3, 2) == 12.0
    assert sf.erlang_moment(2, 0.5) == pytest.approx(math.gamma(2.5) / math.gamma(2))
    with pytest.raises(DomainError):
        sf.erlang_moment(2, -2)


def mp_psi(a1, a2, p, q):
    # u = v^(-2/q), v = w^m with m = 1/(1 - 2/q): smooth integrand on [0, 1]
    k = mp.mpf(2) / q
    m = 1 / (1 - k)

    def f(w):
        if w == 0:
            return m * k * p * (a1 + a2)
        v = w ** m
        h = -mp.expm1(-p * (mp.log1p(a1 * v) + mp.log1p(a2 * v)))
        return k * m * w ** (m - 1) * v ** (-k - 1) * h

    return float(mp.quad(f, [0, 0.25, 0.5, 1]))


@pytest.mark.parametrize("a1,a2", [(0.3, 0.3), (2.0, 0.5), (10.0, 0.0), (1e-4, 3.0)])
@pytest.mark.parametrize("p,q", [(1, 3.7), (2, 4.0), (1, 2.5)])
def test_psi_integral_against_mpmath(a1, a2, p, q):
    assert sf.psi_integral(a1, a2, p, q) == pytest.approx(mp_psi(a1, a2, p, q), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(a1=st.floats(0, 50), a2=st.floats(0, 50), q=st.floats(2.3, 6.0))
def test_psi_integral_symmetric(a1, a2, q):
    assert sf.psi_integral(a1, a2, 1, q) == sf.psi_integral(a2, a1, 1, q)


@pytest.mark.parametrize("a1,a2", [(0.2, 0.9), (5.0, 5.0), (3.0, 3.0 + 1e-9), (40.0, 0.01)])
@pytest.mark.parametrize("q", [2.6, 3.7, 4.5])
def test_psi_closed_form_matches_integral(a1, a2, q):
    assert sf.psi_closed_p1(a1, a2, q) == pytest.approx(1 + sf.psi_integral(a1, a2, 1, q),
                                                        rel=1e-9, abs=1e-9)


def test_psi_domain():
    with pytest.raises(DomainError):
        sf.psi_integral(1.0, 1.0, 1, 2.0)
    with pytest.raises(DomainError):
        sf.psi_integral(-1.0, 1.0, 1, 3.0)


def mp_psi_partial(a1, a2, q, i, j):
    """Derivative of the p = 1 integrand taken under the integral sign."""
    k = mp.mpf(2) / q
    m = 1 / (1 - k)
    sign = -(-1) ** (i + j)
    fac = mp.factorial(i) * mp.factorial(j)

    def f(w):
        v = w ** m
        inner = sign * fac * v ** (i + j) / ((1 + a1 * v) ** (i + 1) * (1 + a2 * v) ** (j + 1))
        return k * m * w ** (m - 1) * v ** (-k - 1) * inner

    return float(mp.quad(f, [0, 0.25, 0.5, 1]))


@pytest.mark.parametrize("q", [2.7, 3.7, 4.6])
def test_psi_partials_against_differentiated_integral(q):
    a1, a2 = 1.3, 0.4
    parts = sf.psi_partials(a1, a2, 1, q, max_i=3, max_j=3)
    assert parts[0, 0] == pytest.approx(sf.psi_integral(a1, a2, 1, q), rel=1e-10)
    for i, j in [(1, 0), (0, 1), (1, 1), (2, 1), (2, 2), (3, 1), (3, 3)]:
        ref = mp_psi_partial(a1, a2, q, i, j)
        assert parts[i, j] == pytest.approx(ref, rel=1e-9), (i, j)


def test_psi_partials_finite_difference_p2():
    q, a1, a2, h = 3.7, 0.8, 0.5, 1e-4
    parts = sf.psi_partials(a1, a2, 2, q, max_i=1, max_j=1)
    fd = (sf.psi_integral(a1 + h, a2, 2, q) - sf.psi_integral(a1 - h, a2, 2, q)) / (2 * h)
    assert parts[1, 0] == pytest.approx(fd, rel=1e-6)


def test_psi_partials_batch_shape():
    out = sf.psi_partials(np.array([0.1, 1.0, 3.0]), 0.5, 1, 4.0, 1, 2)
    assert out.shape == (3, 2, 3)


def test_chebyshev_derivatives_of_exponential():
    plan = sf.ChebyshevDiffPlan.default(6)
    d = sf.cheb_derivatives(lambda s: math.exp(2 * s), plan)
    want = [2.0 ** k * math.e ** 2 for k in range(7)]
    # spectral accuracy degrades with derivative order
    np.testing.assert_allclose(d[:5], want[:5], rtol=1e-8)
    np.testing.assert_allclose(d[5:7], want[5:7], rtol=1e-5)


def test_chebyshev_matches_closed_hypergeometric_derivatives():
    # spectral differentiation against the rising-factorial formula
    a, b, c, scale = -2 / 3.7, 1.0, 1 - 2 / 3.7, 2.5
    plan = sf.ChebyshevDiffPlan.default(4)
    d = sf.cheb_derivatives(lambda s: sf.hyp2f1(a, b, c, -s * scale), plan)
    for m in range(5):
        assert d[m] == pytest.approx(sf.hyp2f1_deriv(a, b, c, m, scale), rel=1e-6)


def test_mixed_chebyshev_derivatives():
    ps = sf.ChebyshevDiffPlan.default(2)
    pt = sf.ChebyshevDiffPlan.default(2)
    d = sf.mixed_cheb_derivatives(lambda s, t: math.exp(s + 2 * t), ps, pt)
    assert d[1, 1] == pytest.approx(2 * math.exp(3), rel=1e-8)
    assert d[2, 2] == pytest.approx(4 * math.exp(3), rel=1e-7)
