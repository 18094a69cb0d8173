import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from hetdiv import hetnet as hn
from hetdiv.errors import DomainError


def test_unit_conversions():
    assert hn.dbm_to_watt(30.0) == pytest.approx(1.0)
    assert hn.dbm_to_watt(46.0) == pytest.approx(39.810717055, rel=1e-9)
    assert hn.per_km2_to_per_m2(4.0) == pytest.approx(4e-6)


@pytest.mark.parametrize("name,m,l,r,s", [
    ("siso", 1, 1, 1, 1), ("alamouti", 2, 2, 1, 2), ("4,4,1/2", 4, 4, 0.5, 2),
    ("4,4,3/4", 4, 4, 0.75, 3)])
def test_code_parameters(name, m, l, r, s):
    c = hn.OstbcCode.from_name(name)
    assert (c.m_tx, c.codeword_len, float(c.rate), c.s_active) == (m, l, r, s)
    pattern = np.asarray(c.activation_pattern)
    assert pattern.shape == (l, m)
    assert np.all(pattern.sum(axis=1) == s)


@pytest.mark.parametrize("name", ["siso", "alamouti", "4,4,1/2", "4,4,3/4"])
def test_codewords_are_orthogonal(name):
    # X^H X = kappa ||d||^2 I with a code constant kappa
    c = hn.OstbcCode.from_name(name)
    rng = np.random.default_rng(3)
    kappas = []
    for _ in range(3):
        d = rng.standard_normal(c.n_symbols) + 1j * rng.standard_normal(c.n_symbols)
        x = np.asarray(c.codeword(d))
        gram = x.conj().T @ x / np.sum(np.abs(d) ** 2)
        np.testing.assert_allclose(gram, gram[0, 0] * np.eye(c.m_tx), atol=1e-12)
        kappas.append(gram[0, 0].real)
    np.testing.assert_allclose(kappas, kappas[0], rtol=1e-12)


@pytest.mark.parametrize("name", ["alamouti", "4,4,1/2", "4,4,3/4"])
def test_real_dispersion_gives_scaled_identity(name):
    c = hn.OstbcCode.from_name(name)
    disp = c.real_dispersion()
    rng = np.random.default_rng(5)
    h = (rng.standard_normal(c.m_tx) + 1j * rng.standard_normal(c.m_tx)) / math.sqrt(2)
    g = np.einsum("qlm,m->lq", disp, h)
    r = np.concatenate([g.real, g.imag])
    gram = r.T @ r
    np.testing.assert_allclose(gram, np.eye(gram.shape[0]) * gram[0, 0], atol=1e-12)


def test_code_lookup_rejects_unknown():
    with pytest.raises(DomainError):
        hn.OstbcCode.from_name("8,8,1/2")


def test_config_validation():
    with pytest.raises(DomainError):
        hn.TierConfig(0.0, 1.0, 3.5)
    with pytest.raises(DomainError):
        hn.TierConfig(1e-6, 1.0, 2.0)
    with pytest.raises(DomainError):
        hn.NetworkConfig((hn.TierConfig(1e-6, 1.0, 3.5),), rx_antennas=0)


def test_table2_association_sums_to_one():
    net = hn.table2_network()
    probs = [hn.association_probability(net, k) for k in range(3)]
    assert sum(probs) == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(probs, [0.3429, 0.2390, 0.4180], atol=5e-4)


@settings(max_examples=25, deadline=None)
@given(l1=st.floats(0.5, 50), l2=st.floats(0.5, 50), p1=st.floats(10, 50), p2=st.floats(10, 50),
       a1=st.floats(2.5, 5), a2=st.floats(2.5, 5))
def test_association_sums_to_one_property(l1, l2, p1, p2, a1, a2):
    net = hn.NetworkConfig((hn.TierConfig(l1 * 1e-6, hn.dbm_to_watt(p1), a1),
                            hn.TierConfig(l2 * 1e-6, hn.dbm_to_watt(p2), a2)))
    total = sum(hn.association_probability(net, k) for k in range(2))
    assert total == pytest.approx(1.0, abs=1e-8)


def test_equal_alpha_association_closed_form():
    net = hn.table2_network().replace(
        tiers=tuple(hn.TierConfig(t.density, t.power, 4.0) for t in hn.table2_network().tiers))
    w = np.array([t.density * t.power ** 0.5 for t in net.tiers])
    np.testing.assert_allclose([hn.association_probability(net, k) for k in range(3)],
                               w / w.sum(), rtol=1e-12)


@pytest.mark.parametrize("ell", [0, 1, 2])
def test_serving_distance_pdf_normalized(ell):
    net = hn.table2_network()
    y_max = hn._radial_cutoff(net, ell, 60.0)
    val, _ = integrate.quad(lambda y: hn.serving_distance_pdf(net, ell, y), 0, y_max, limit=200)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_serving_context_noise_sentinel():
    net = hn.table2_network(noise_dbm=None)
    ctx = hn.serving_context(net, 0, 100.0)
    assert math.isinf(ctx.mean_snr)
    ctx = hn.serving_context(hn.table2_network(), 1, 50.0)
    want = hn.dbm_to_watt(30) * 50.0 ** -3.67 / hn.dbm_to_watt(-104)
    assert ctx.mean_snr == pytest.approx(want, rel=1e-12)
    assert ctx.excl_radius[1] == pytest.approx(50.0)


def test_interference_moments_closed_forms():
    assert hn.interference_variance(3.7, 1) == pytest.approx(0.7407407407, rel=1e-9)
    assert hn.interference_correlation(1) == 0.5
    assert hn.interference_correlation(3) == 0.75
    with pytest.raises(DomainError):
        hn.interference_variance(2.0, 1)


@pytest.mark.parametrize("alpha,s", [(3.7, 1), (4.0, 2), (3.2, 3)])
def test_conditional_variance_deconditions_to_closed_form(alpha, s):
    code = {1: "siso", 2: "alamouti", 3: "4,4,3/4"}[s]
    net = hn.NetworkConfig(tuple(hn.TierConfig(d * 1e-6, p, alpha, hn.OstbcCode.from_name(code))
                                 for d, p in ((4, 40.0), (16, 1.0))))
    total = 0.0
    for ell in range(net.n_tiers):
        y_max = hn._radial_cutoff(net, ell, 80.0)
        f = lambda y: (hn.interference_variance_conditional(net, hn.serving_context(net, ell, y))
                       * hn.serving_distance_pdf(net, ell, y))
        val, _ = integrate.quad(f, 0, y_max, limit=200, epsabs=1e-13, epsrel=1e-11)
        total += hn.association_probability(net, ell) * val
    assert total == pytest.approx(hn.interference_variance(alpha, s), rel=1e-6)


def test_rate_adjusted_threshold():
    code = hn.OstbcCode.from_name("4,4,1/2")
    assert hn.rate_adjusted_threshold(1.0, code) == pytest.approx(3.0)
    assert hn.rate_adjusted_threshold(2.5, hn.OstbcCode.from_name("alamouti")) == 2.5
