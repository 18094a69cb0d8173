"""Analytic coverage probabilities for MRC and SC receivers in multi-tier
networks with OSTBC transmit diversity.

Every coverage expression is a sum over serving tiers of a radial integral of
derivatives of an interference Laplace-type functional.  The derivatives are
taken as truncated Taylor series in the differentiation variables, with the
hypergeometric (or Psi) coefficients known in closed form, so that no
numerical differentiation is needed on the default path.  The Chebyshev route
(``method="chebyshev"``) differentiates the same functional numerically and
serves as an independent cross-check.

Radial integrals use ``x = log y`` with composite Gauss-Legendre panels whose
end points sit at ``sum_k rho_k(y) = 2^{j/2}``.  Integrands depend on ``y``
through ``exp(-kappa * rho)``-type factors, so these scale-invariant panels
resolve every decay rate equally well.  When ``sigma^2 = 0`` and all
path-loss exponents agree the radial integral is done in closed form.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import enum
import math
from typing import Sequence

import numpy as np

from . import _taylor
from .errors import DomainError, NumericalError, UnsupportedConfigurationError
from .hetnet import NetworkConfig, OstbcCode, rate_adjusted_threshold
from .specfun import (
    ChebyshevDiffPlan,
    cheb_tensor_derivatives,
    hyp2f1,
    hyp2f1_deriv,
    hyp2f1_dx,
    hyp2f1_taylor,
    psi_closed_p1,
    psi_integral,
    psi_partials,
)

__all__ = [
    "Scheme",
    "CoverageQuery",
    "CoverageCurve",
    "coverage_ib_mrc",
    "coverage_ib_mrc_simplified",
    "coverage_ia_mrc",
    "coverage_ia_simplified",
    "coverage_ia_nocorr",
    "coverage_ia_fullcorr",
    "coverage_sc",
    "coverage_siso",
    "ia_tail",
    "gain_ib",
    "gain_ia",
    "gain_ia_explicit",
    "relative_gain_ib",
    "relative_gain_ia",
    "outage_ib_mrc",
    "outage_ia_mrc",
    "evaluate_curve",
    "db_to_linear",
    "linear_to_db",
]

_GL16 = np.polynomial.legendre.leggauss(16)
_GL10 = np.polynomial.legendre.leggauss(10)
# radial panels: sum_k rho_k from 2^-46 to 2^7 in half-octave steps
_U_LO_EXP, _U_HI_EXP, _U_PER_OCTAVE = -46, 7, 2
_POINT_CHUNK = 48


def db_to_linear(db):
    """``10^(db/10)``."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    """``10 log10(x)``."""
    return 10.0 * np.log10(np.asarray(x, dtype=float))


class Scheme(str, enum.Enum):
    """Receiver schemes with an analytic coverage expression."""

    IB_MRC = "IB_MRC"
    IA_MRC = "IA_MRC"
    SC = "SC"
    IA_NC = "IA_NC"
    IA_FC = "IA_FC"
    SISO = "SISO"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().upper())
        except ValueError:
            raise DomainError(f"unknown scheme {name!r}") from None


# ---------------------------------------------------------------- helpers

def _tier_thresholds(net, t):
    """Per-tier thresholds from a scalar or a per-tier sequence."""
    if np.ndim(t) == 0:
        t = float(t)
        if not t > 0:
            raise DomainError("threshold must be positive")
        return [t] * net.n_tiers
    t = [float(v) for v in t]
    if len(t) != net.n_tiers:
        raise DomainError("per-tier thresholds must match the tier count")
    if not all(v > 0 for v in t):
        raise DomainError("threshold must be positive")
    return t


def _closed_radial(net):
    return net.noise_power == 0 and net.equal_alpha


def _gl_panels(edges, rule):
    """Nodes and weights of a composite Gauss-Legendre rule on ``edges``."""
    x, w = rule
    edges = np.asarray(edges, dtype=float)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _solve_log_y(c, e, u):
    """``x = log y`` with ``sum_k c_k exp(e_k x) = u`` (vectorised bisection)."""
    u = np.asarray(u, dtype=float)
    logc = np.log(c)
    k = len(c)
    hi = np.min((np.log(u)[:, None] - logc) / e, axis=1)
    lo = np.min((np.log(u / k)[:, None] - logc) / e, axis=1)
    lo = np.minimum(lo, hi) - 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = np.sum(c * np.exp(e * mid[:, None]), axis=1)
        big = val > u
        hi = np.where(big, mid, hi)
        lo = np.where(big, lo, mid)
        if np.all(hi - lo < 1e-14 * np.maximum(1.0, np.abs(mid))):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class _RadialRule:
    """Quadrature for ``int_0^inf y f(y) dy`` seen from serving tier ``ell``."""

    y: np.ndarray
    w: np.ndarray
    rho: np.ndarray
    noise: np.ndarray

    @classmethod
    def build(cls, net, ell, rule):
        c, e = net.rho_coefficients(ell)
        j = np.arange(_U_LO_EXP * _U_PER_OCTAVE, _U_HI_EXP * _U_PER_OCTAVE + 1)
        edges = _solve_log_y(c, e, 2.0 ** (j / _U_PER_OCTAVE))
        x, wx = _gl_panels(edges, rule)
        y = np.exp(x)
        alpha = net.tiers[ell].path_loss_exp
        return cls(y, wx * y * y, c * y[:, None] ** e,
                   net.noise_coefficient(ell) * y ** alpha)


_RADIAL_CACHE = {}


def _radial_rules(net, ell):
    key = (net, ell)
    rules = _RADIAL_CACHE.get(key)
    if rules is None:
        rules = (_RadialRule.build(net, ell, _GL16), _RadialRule.build(net, ell, _GL10))
        if len(_RADIAL_CACHE) > 256:
            _RADIAL_CACHE.clear()
        _RADIAL_CACHE[key] = rules
    return rules


def _split_panels(t):
    """Break points on ``[0, t]`` graded geometrically toward both ends.

    The z-integrands are analytic with singularities at distance O(1) from the
    real segment, so panels of width at most half their distance from an end
    point converge at the Gauss-Legendre rate.
    """
    half = 0.5 * t
    pts = [0.0]
    h = min(half, 0.25)
    while h < half:
        pts.append(h)
        h *= 2.0
    left = np.array(pts + [half])
    right = t - left[::-1]
    return np.concatenate([left, right[1:]])


# ---------------------------------------------------------------- IB

def _ib_laplace_coefs(net, ell, t_ell, order, s0=1.0):
    """Taylor coefficients around ``s0`` of
    ``L(s) = int 2 pi lambda_ell y exp(-s S_ell T nu y^alpha - sum_k rho_k F_k(s)) dy``.

    Returns ``(coef, abs_err)`` arrays of length ``order + 1``.
    """
    tiers = net.tiers
    s_l = tiers[ell].code.s_active
    fk = np.array([hyp2f1_taylor(-2.0 / tk.path_loss_exp, tk.code.s_active,
                                 1.0 - 2.0 / tk.path_loss_exp,
                                 t_ell * s_l / tk.code.s_active, order, s0)
                   for tk in tiers])
    lam = tiers[ell].density
    if _closed_radial(net):
        c, _ = net.rho_coefficients(ell)
        coef = math.pi * lam * _taylor.reciprocal_series(c @ fk)
        return coef, np.zeros_like(coef)
    vals = []
    for rule in _radial_rules(net, ell):
        expo = -(rule.rho @ fk)
        lin = s_l * t_ell * rule.noise
        expo[:, 0] -= s0 * lin
        if order >= 1:
            expo[:, 1] -= lin
        series = _taylor.exp_series(expo)
        vals.append(2.0 * math.pi * lam * (rule.w @ series))
    return vals[0], np.abs(vals[0] - vals[1])


def _ib_laplace_values(net, ell, t_ell, s):
    """``L(s)`` at an array of points ``s`` (used by the Chebyshev path)."""
    tiers = net.tiers
    s = np.asarray(s, dtype=float)
    s_l = tiers[ell].code.s_active
    fk = np.array([hyp2f1(-2.0 / tk.path_loss_exp, tk.code.s_active,
                          1.0 - 2.0 / tk.path_loss_exp,
                          -s * t_ell * s_l / tk.code.s_active) for tk in tiers])
    lam = tiers[ell].density
    if _closed_radial(net):
        c, _ = net.rho_coefficients(ell)
        return math.pi * lam / (c @ fk), np.zeros_like(s)
    vals = []
    for rule in _radial_rules(net, ell):
        expo = -(rule.rho @ fk) - s_l * t_ell * np.outer(rule.noise, s)
        vals.append(2.0 * math.pi * lam * (rule.w @ np.exp(expo)))
    return vals[0], np.abs(vals[0] - vals[1])


def _coverage_ib(net, t, method="series"):
    thr = _tier_thresholds(net, t)
    total, err = 0.0, 0.0
    for ell, tier in enumerate(net.tiers):
        n_terms = net.rx_antennas * tier.code.m_tx
        if method == "series":
            coef, cerr = _ib_laplace_coefs(net, ell, thr[ell], n_terms - 1)
            signs = (-1.0) ** np.arange(n_terms)
            terms = signs * coef
            total += math.fsum(terms)
            err += float(np.sum(cerr))
        elif method == "chebyshev":
            plan = ChebyshevDiffPlan.default(n_terms - 1)
            vals, verr = _ib_laplace_values(net, ell, thr[ell], plan.nodes)
            deriv = plan._deriv_rows() @ (plan._coef_matrix() @ vals)
            fact = _taylor.factorial_scale(n_terms)
            total += math.fsum((-1.0) ** np.arange(n_terms) * deriv / fact)
            err += float(np.max(verr))
        else:
            raise DomainError(f"unknown method {method!r}")
        if not np.isfinite(total):
            raise NumericalError("non-finite IB coverage term", {"tier": ell, "m": n_terms - 1})
    return total, err


def coverage_ib_mrc(net: NetworkConfig, t, method="series"):
    """Coverage probability of interference-blind MRC.

    Parameters
    ----------
    net : NetworkConfig
    t : float or sequence of float
        Linear SINR threshold, or one threshold per serving tier.
    method : {"series", "chebyshev"}
        Closed-form hypergeometric derivatives (default) or Chebyshev
        differentiation of the radial functional.
    """
    return _coverage_ib(net, t, method)[0]


def coverage_ia_fullcorr(net: NetworkConfig, t, method="series"):
    """IA-MRC under fully correlated per-antenna interference; equals IB-MRC."""
    return coverage_ib_mrc(net, t, method)


def coverage_siso(net: NetworkConfig, t):
    """Single-antenna coverage for the same tier geometry."""
    siso = net.with_codes(OstbcCode(1, 1, 1)).replace(rx_antennas=1)
    return coverage_ib_mrc(siso, t)


def coverage_ib_mrc_simplified(alpha, n_rx, s_active, m_tx, t):
    """Interference-limited IB-MRC coverage with a common exponent and code.

    ``sum_{m < N M} (-1)^m / m! d^m/ds^m [1 / 2F1(-2/alpha, S; 1-2/alpha; -sT)]``
    at ``s = 1``; independent of densities and powers.
    """
    if not alpha > 2 or not t > 0:
        raise DomainError("need alpha > 2 and t > 0")
    n_terms = int(n_rx) * int(m_tx)
    f = hyp2f1_taylor(-2.0 / alpha, s_active, 1.0 - 2.0 / alpha, t, n_terms - 1)
    r = _taylor.reciprocal_series(f)
    return math.fsum((-1.0) ** np.arange(n_terms) * r)


# ---------------------------------------------------------------- IA

class _PsiModel(enum.Enum):
    EXACT = "exact"
    NOCORR = "nocorr"


def _model_partials(model, a, b, p, q, ni, nj):
    """Partials of Psi (exact) or of its no-correlation replacement, shape (P, ni, nj)."""
    if model is _PsiModel.EXACT:
        return psi_partials(a, b, p, q, ni - 1, nj - 1)
    out = np.zeros(np.shape(a) + (ni, nj))
    pa, pc = -2.0 / q, 1.0 - 2.0 / q
    for i in range(ni):
        out[..., i, 0] += hyp2f1_dx(pa, p, pc, a, i)
    for j in range(nj):
        out[..., 0, j] += hyp2f1_dx(pa, p, pc, b, j)
    out[..., 0, 0] -= 2.0
    return out


def _check_ia(net):
    if net.rx_antennas != 2:
        raise UnsupportedConfigurationError("IA-MRC analysis requires N = 2")
    if any(t.code.m_tx > 2 for t in net.tiers):
        raise UnsupportedConfigurationError("IA-MRC analysis requires M_k <= 2")


def _ia_q_coefs(net, ell, a, b, ni, nj, model=_PsiModel.EXACT):
    """Bivariate Taylor coefficients of
    ``Q(a, b) = int 2 pi lambda_ell y exp(-M nu y^alpha (a + b)
    - sum_k rho_k(y) [1 + Psi_k(a/M_hat_k, b/M_hat_k)]) dy`` at points ``(a, b)``.

    Returns ``(coef, abs_err)`` of shape ``(P, ni, nj)``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    tiers = net.tiers
    m_l = tiers[ell].code.m_tx
    lam = tiers[ell].density
    ii = np.arange(ni)[:, None]
    jj = np.arange(nj)[None, :]
    fact = _taylor.factorial_scale(max(ni, nj))
    psi = []
    for tk in tiers:
        mh = tk.code.m_tx / m_l
        part = _model_partials(model, a / mh, b / mh, tk.code.m_tx, tk.path_loss_exp, ni, nj)
        part = part / (fact[:ni, None] * fact[None, :nj] * mh ** (ii + jj))
        part[..., 0, 0] += 1.0
        psi.append(part)
    psi = np.stack(psi)
    if _closed_radial(net):
        c, _ = net.rho_coefficients(ell)
        h = np.tensordot(c, psi, axes=1)
        coef = math.pi * lam * _taylor.reciprocal_series2(h)
        return coef, np.zeros_like(coef)

    out = []
    for rule in _radial_rules(net, ell):
        res = np.empty((a.size, ni, nj))
        for lo in range(0, a.size, _POINT_CHUNK):
            sl = slice(lo, lo + _POINT_CHUNK)
            expo = -np.einsum("yk,kpij->ypij", rule.rho, psi[:, sl])
            lin = m_l * rule.noise[:, None]
            expo[:, :, 0, 0] -= lin * (a[sl] + b[sl])[None, :]
            if ni > 1:
                expo[:, :, 1, 0] -= lin
            if nj > 1:
                expo[:, :, 0, 1] -= lin
            series = _taylor.exp_series2(expo)
            res[sl] = 2.0 * math.pi * lam * np.einsum("y,ypij->pij", rule.w, series)
        out.append(res)
    return out[0], np.abs(out[0] - out[1])


def _ia_tier_parts(net, ell, t_ell, model, rule=_GL16):
    """Body ``int_0^T`` and tail ``int_T^inf`` of the IA z-integral for tier ``ell``.

    The tail equals ``sum_{m < M} (-1)^m T^m Q_{0,m}(0, T)`` after repeated
    integration by parts, which avoids its slow algebraic decay.
    """
    m = net.tiers[ell].code.m_tx
    z, wz = _gl_panels(_split_panels(t_ell), rule)
    coef, cerr = _ia_q_coefs(net, ell, t_ell - z, z, m, m + 1, model)
    body_terms = np.zeros_like(z)
    body_err = np.zeros_like(z)
    for k in range(m):
        fac = (-1.0) ** (k + m) * m * (t_ell - z) ** k * z ** (m - 1)
        body_terms += fac * coef[:, k, m]
        body_err += np.abs(fac) * cerr[:, k, m]
    body = float(wz @ body_terms)
    tc, terr = _ia_q_coefs(net, ell, [0.0], [t_ell], 1, m, model)
    tail = math.fsum((-1.0) ** k * t_ell ** k * tc[0, 0, k] for k in range(m))
    err = float(wz @ body_err) + float(np.sum(t_ell ** np.arange(m) * terr[0, 0]))
    return body, tail, err


def ia_tail(net: NetworkConfig, t, tier=0, model="exact", method="parts"):
    """Contribution of ``z > T`` to the IA-MRC z-integral for one serving tier.

    ``method="parts"`` uses the integration-by-parts identity,
    ``method="quadrature"`` integrates ``(-1)^M M z^{M-1} Q_{0,M}(0, z)`` over
    ``[T, inf)`` numerically (substitution ``z = T / w``).
    """
    _check_ia(net)
    thr = _tier_thresholds(net, t)[tier]
    mdl = _PsiModel(model)
    if method == "parts":
        return _ia_tier_parts(net, tier, thr, mdl)[1]
    if method != "quadrature":
        raise DomainError(f"unknown method {method!r}")
    m = net.tiers[tier].code.m_tx
    # z = T / w maps [T, inf) to (0, 1]; the integrand decays like z^{-1-2/alpha}
    edges = np.concatenate([[0.0], 2.0 ** (np.arange(-80, 1) / 2.0)])
    w, ww = _gl_panels(edges, _GL16)
    z = thr / w
    coef, _ = _ia_q_coefs(net, tier, np.zeros_like(z), z, 1, m + 1, mdl)
    integrand = (-1.0) ** m * m * z ** (m - 1) * coef[:, 0, m] * thr / w ** 2
    return float(ww @ integrand)


def _ia_q_values(net, ell, a, b, model):
    return _ia_q_coefs(net, ell, a, b, 1, 1, model)[0][:, 0, 0]


def _coverage_ia_cheb(net, thr, model):
    total = 0.0
    for ell, tier in enumerate(net.tiers):
        m = tier.code.m_tx
        t_ell = thr[ell]
        ps = ChebyshevDiffPlan.default(m - 1)
        pt = ChebyshevDiffPlan.default(m)
        z, wz = _gl_panels(_split_panels(t_ell), _GL16)
        ss, tt = np.meshgrid(ps.nodes, pt.nodes, indexing="ij")
        a = (ss[None] * (t_ell - z)[:, None, None]).ravel()
        b = (tt[None] * z[:, None, None]).ravel()
        vals = _ia_q_values(net, ell, a, b, model).reshape(z.size, *ss.shape)
        deriv = cheb_tensor_derivatives(vals, ps, pt)
        fact = _taylor.factorial_scale(m + 1)
        body = np.zeros_like(z)
        for k in range(m):
            body += ((-1.0) ** (k + m) / (fact[k] * fact[m - 1])) * deriv[:, k, m] / z
        total += float(wz @ body)
        # tail by parts: derivatives of t -> Q(0, t T) at t = 1
        vt = _ia_q_values(net, ell, np.zeros_like(pt.nodes), pt.nodes * t_ell, model)
        dt = pt._deriv_rows() @ (pt._coef_matrix() @ vt)
        total += math.fsum((-1.0) ** k * dt[k] / fact[k] for k in range(m))
    return total, 0.0


def _coverage_ia(net, t, model, method="series"):
    _check_ia(net)
    thr = _tier_thresholds(net, t)
    if method == "chebyshev":
        return _coverage_ia_cheb(net, thr, model)
    if method != "series":
        raise DomainError(f"unknown method {method!r}")
    total, err = 0.0, 0.0
    for ell in range(net.n_tiers):
        body, tail, e1 = _ia_tier_parts(net, ell, thr[ell], model)
        body10, _, _ = _ia_tier_parts(net, ell, thr[ell], model, _GL10)
        total += body + tail
        err += e1 + abs(body - body10)
        if not np.isfinite(total):
            raise NumericalError("non-finite IA coverage term", {"tier": ell})
    return total, err


def coverage_ia_mrc(net: NetworkConfig, t, method="series"):
    """Coverage probability of interference-aware MRC (``N = 2``, ``M_k <= 2``).

    Raises
    ------
    UnsupportedConfigurationError
        If ``N != 2`` or some tier uses more than two transmit antennas.
    """
    return _coverage_ia(net, t, _PsiModel.EXACT, method)[0]


def coverage_ia_nocorr(net: NetworkConfig, t, method="series"):
    """IA-MRC coverage when each receive antenna sees an independent field."""
    return _coverage_ia(net, t, _PsiModel.NOCORR, method)[0]


def coverage_ia_simplified(alpha, m_tx, t, nodes=16):
    """Interference-limited IA-MRC coverage with a common exponent and ``M``.

    Independent of densities and powers.  The radial integral reduces to
    ``Q = 1 / (1 + Psi(a, b, M, alpha))``; its mixed derivatives are taken by
    Chebyshev collocation of ``Psi`` values from direct quadrature, so this
    path shares neither the radial rule nor the Taylor recursions with
    :func:`coverage_ia_mrc`.
    """
    if m_tx not in (1, 2):
        raise UnsupportedConfigurationError("m_tx must be 1 or 2")
    if not alpha > 2 or not t > 0:
        raise DomainError("need alpha > 2 and t > 0")
    m = int(m_tx)
    ps = ChebyshevDiffPlan(m - 1, nodes)
    pt = ChebyshevDiffPlan(m, nodes)
    fact = _taylor.factorial_scale(m + 1)

    def q(a, b):
        return 1.0 / (1.0 + psi_integral(a, b, m, alpha))

    z, wz = _gl_panels(_split_panels(t), _GL16)
    body = np.empty_like(z)
    for i, zi in enumerate(z):
        vals = np.array([[q(sv * (t - zi), tv * zi) for tv in pt.nodes] for sv in ps.nodes])
        d = cheb_tensor_derivatives(vals, ps, pt)
        body[i] = sum((-1.0) ** (k + m) / (fact[k] * fact[m - 1]) * d[k, m]
                      for k in range(m)) / zi
    vt = np.array([q(0.0, tv * t) for tv in pt.nodes])
    dt = pt._deriv_rows() @ (pt._coef_matrix() @ vt)
    tail = math.fsum((-1.0) ** k * dt[k] / fact[k] for k in range(m))
    return float(wz @ body) + tail


# ---------------------------------------------------------------- SC

def coverage_sc(net: NetworkConfig, t):
    """Coverage probability of selection combining (all ``M_k = 1``)."""
    return _coverage_sc(net, t)[0]


def _coverage_sc(net, t):
    if any(tk.code.m_tx != 1 for tk in net.tiers):
        raise UnsupportedConfigurationError("selection combining requires M_k = 1")
    thr = _tier_thresholds(net, t)
    n_rx = net.rx_antennas
    total, err = [], 0.0
    for ell, tier in enumerate(net.tiers):
        t_ell = thr[ell]
        lam = tier.density
        for n in range(1, n_rx + 1):
            fk = np.array([hyp2f1(-2.0 / tk.path_loss_exp, n, 1.0 - 2.0 / tk.path_loss_exp, -t_ell)
                           for tk in net.tiers])
            sign = (-1.0) ** (n + 1) * math.comb(n_rx, n)
            if _closed_radial(net):
                c, _ = net.rho_coefficients(ell)
                total.append(sign * math.pi * lam / float(c @ fk))
                continue
            vals = []
            for rule in _radial_rules(net, ell):
                expo = -(rule.rho @ fk) - n * t_ell * rule.noise
                vals.append(2.0 * math.pi * lam * float(rule.w @ np.exp(expo)))
            total.append(sign * vals[0])
            err += abs(sign) * abs(vals[0] - vals[1])
    return math.fsum(total), err


# ---------------------------------------------------------------- gains

def _f1(alpha, x):
    return hyp2f1(-2.0 / alpha, 1.0, 1.0 - 2.0 / alpha, -np.asarray(x, dtype=float))


def gain_ib(alpha, t):
    """Coverage increase of dual-antenna IB-MRC over SISO (single-antenna BSs).

    ``d/ds 2F1(-2/alpha, 1; 1-2/alpha; -sT)|_{s=1} / 2F1(...; -T)^2``.
    """
    if not alpha > 2 or not t > 0:
        raise DomainError("need alpha > 2 and t > 0")
    pa, pc = -2.0 / alpha, 1.0 - 2.0 / alpha
    return hyp2f1_deriv(pa, 1.0, pc, 1, t) / hyp2f1(pa, 1.0, pc, -t) ** 2


def _g_derivs(alpha, x, n):
    """``g^(k)(x)`` for ``g(x) = x F(x)``, ``k = 0..n``."""
    pa, pc = -2.0 / alpha, 1.0 - 2.0 / alpha
    fd = [hyp2f1_dx(pa, 1.0, pc, x, k) for k in range(n + 1)]
    out = [x * fd[0]]
    for k in range(1, n + 1):
        out.append(k * fd[k - 1] + x * fd[k])
    return out


def _ia_gain_integrand(alpha, t, z):
    """``d/db A(a, b) / A(a, b)^2`` at ``a = T - z``, ``b = z``."""
    a = t - z
    b = z
    g_a = _g_derivs(alpha, a, 0)[0]
    gb = _g_derivs(alpha, b, 4)
    diff = a - b
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = (g_a - gb[0]) / diff
        dA = (amp - gb[1]) / diff
    near = np.abs(diff) < 1e-3 * np.maximum(1.0, np.abs(b))
    taylor_amp = gb[1] + gb[2] * diff / 2.0 + gb[3] * diff ** 2 / 6.0 + gb[4] * diff ** 3 / 24.0
    taylor_dA = gb[2] / 2.0 + gb[3] * diff / 6.0 + gb[4] * diff ** 2 / 24.0
    amp = np.where(near, taylor_amp, amp)
    dA = np.where(near, taylor_dA, dA)
    return dA / amp ** 2


def gain_ia(alpha, t):
    """Coverage increase of dual-antenna IA-MRC over SISO (single-antenna BSs).

    ``int_0^T d/dt A(T - z, t z)|_{t=1} / (z A(T - z, z)^2) dz`` with
    ``A = 1 + Psi(., ., 1, alpha)`` in its hypergeometric closed form.
    """
    if not alpha > 2 or not t > 0:
        raise DomainError("need alpha > 2 and t > 0")
    z, w = _gl_panels(_split_panels(t), _GL16)
    return float(w @ _ia_gain_integrand(alpha, t, z))


def gain_ia_explicit(alpha, t):
    """The same gain through the expanded rational-hypergeometric integrand."""
    if not alpha > 2 or not t > 0:
        raise DomainError("need alpha > 2 and t > 0")
    z, w = _gl_panels(_split_panels(t), _GL16)
    fz = _f1(alpha, z)
    fr = _f1(alpha, t - z)
    num = (2 * t - 4 * z) / (z + 1) - ((t * (2 + alpha) - z * (4 + alpha)) * fz
                                       + alpha * (z - t) * fr)
    den = alpha * (z * fz + (z - t) * fr) ** 2
    return float(w @ (num / den))


def relative_gain_ib(alpha, t):
    """``P_c^IB / P_c^SISO - 1`` for ``N = 2``, ``M = 1``."""
    return gain_ib(alpha, t) * _f1(alpha, t)


def relative_gain_ia(alpha, t):
    """``P_c^IA / P_c^SISO - 1`` for ``N = 2``, ``M = 1``."""
    return gain_ia(alpha, t) * _f1(alpha, t)


# ---------------------------------------------------------------- outage

def outage_ib_mrc(net: NetworkConfig, t):
    """``1 - P_c^IB`` without subtractive cancellation.

    Taylor's remainder about ``s = 1`` evaluated at ``s = 0`` gives
    ``sum_ell int_0^1 (-1)^n L^(n)(sigma) sigma^{n-1} / (n-1)! d sigma`` with
    ``n = N M_ell``.
    """
    thr = _tier_thresholds(net, t)
    sig, ws = _gl_panels([0.0, 0.25, 0.5, 1.0], _GL16)
    total = 0.0
    for ell, tier in enumerate(net.tiers):
        n = net.rx_antennas * tier.code.m_tx
        vals = np.array([_ib_laplace_coefs(net, ell, thr[ell], n, s0)[0][n] for s0 in sig])
        total += float(ws @ ((-1.0) ** n * n * sig ** (n - 1) * vals))
    return total


def outage_ia_mrc(net: NetworkConfig, t, model="exact"):
    """``1 - P_c^IA`` without subtractive cancellation.

    ``sum_ell int_0^T int_0^1 M^2 sigma^{M-1} z^{M-1} (T - z)^M
    Q_{M,M}(sigma (T - z), z) d sigma dz`` with ``Q_{i,j}`` the Taylor
    coefficients of the radial functional.
    """
    _check_ia(net)
    thr = _tier_thresholds(net, t)
    mdl = _PsiModel(model)
    sig, ws = _gl_panels([0.0, 0.5, 1.0], _GL16)
    total = 0.0
    for ell, tier in enumerate(net.tiers):
        m = tier.code.m_tx
        t_ell = thr[ell]
        z, wz = _gl_panels(_split_panels(t_ell), _GL16)
        zz = np.repeat(z, sig.size)
        ss = np.tile(sig, z.size)
        coef, _ = _ia_q_coefs(net, ell, ss * (t_ell - zz), zz, m + 1, m + 1, mdl)
        inner = (m * m * ss ** (m - 1) * zz ** (m - 1) * (t_ell - zz) ** m
                 * coef[:, m, m]).reshape(z.size, sig.size)
        total += float(wz @ (inner @ ws))
    return total


# ---------------------------------------------------------------- curves

@dataclass(frozen=True)
class CoverageQuery:
    """Batch request: network, ascending linear thresholds, scheme."""

    net: NetworkConfig
    thresholds: tuple
    scheme: Scheme
    apply_rate_loss: bool = False

    def __post_init__(self):
        th = tuple(float(v) for v in self.thresholds)
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not th or any(v <= 0 for v in th):
            raise DomainError("thresholds must be positive")
        if any(b <= a for a, b in zip(th, th[1:])):
            raise DomainError("thresholds must be strictly ascending")
        if self.scheme in (Scheme.IA_MRC, Scheme.IA_NC):
            _check_ia(self.net)
        if self.scheme is Scheme.SC and any(t.code.m_tx != 1 for t in self.net.tiers):
            raise UnsupportedConfigurationError("selection combining requires M_k = 1")


@dataclass(frozen=True)
class CoverageCurve:
    """Evaluated ``(T, P_c)`` pairs with per-point error estimates."""

    query: CoverageQuery
    points: tuple
    method: str
    est_abs_error: tuple

    @property
    def thresholds(self):
        return np.array([p[0] for p in self.points])

    @property
    def probabilities(self):
        return np.array([p[1] for p in self.points])


def _dispatch(scheme, net, t):
    if scheme in (Scheme.IB_MRC, Scheme.IA_FC):
        return _coverage_ib(net, t)
    if scheme is Scheme.SISO:
        siso = net.with_codes(OstbcCode(1, 1, 1)).replace(rx_antennas=1)
        return _coverage_ib(siso, t)
    if scheme is Scheme.IA_MRC:
        return _coverage_ia(net, t, _PsiModel.EXACT)
    if scheme is Scheme.IA_NC:
        return _coverage_ia(net, t, _PsiModel.NOCORR)
    if scheme is Scheme.SC:
        return _coverage_sc(net, t)
    raise DomainError(f"unknown scheme {scheme}")


def evaluate_curve(q: CoverageQuery, workers=None):
    """Evaluate a coverage curve, optionally in parallel across thresholds.

    Each point is computed independently with a fixed rule, so the result
    does not depend on ``workers``.  With ``apply_rate_loss`` each serving
    tier uses ``(1 + T)^{1/r_ell} - 1``.

    Raises
    ------
    NumericalError
        Listing every failing threshold index, or when the curve is not
        nonincreasing beyond its error estimate.
    """
    net = q.net
    tiers = net.tiers

    def point(t):
        if q.apply_rate_loss and q.scheme is not Scheme.SISO:
            arg = [rate_adjusted_threshold(t, tk.code) for tk in tiers]
        else:
            arg = t
        try:
            return _dispatch(q.scheme, net, arg)
        except NumericalError as exc:
            return exc

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(point, q.thresholds))
    else:
        results = [point(t) for t in q.thresholds]
    failures = [(i, str(r)) for i, r in enumerate(results) if isinstance(r, Exception)]
    if failures:
        raise NumericalError("coverage evaluation failed",
                             {"scheme": q.scheme.value, "failures": failures})
    probs = [min(1.0, max(0.0, r[0])) for r in results]
    errs = [r[1] for r in results]
    for i in range(1, len(probs)):
        if probs[i] > probs[i - 1] + 1e-9 + errs[i] + errs[i - 1]:
            raise NumericalError("coverage curve is not monotone",
                                 {"scheme": q.scheme.value, "index": i})
    return CoverageCurve(q, tuple(zip(q.thresholds, probs)), "analytic", tuple(errs))
