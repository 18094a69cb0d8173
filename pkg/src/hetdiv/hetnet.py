"""Multi-tier network model: OSTBC descriptors, tier parameters, association
statistics and second-order interference statistics.

Units are SI throughout: densities in BS/m^2, powers in W, distances in m.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericalError

__all__ = [
    "OstbcCode",
    "TierConfig",
    "NetworkConfig",
    "ServingContext",
    "serving_context",
    "association_probability",
    "serving_distance_pdf",
    "interference_variance_conditional",
    "interference_covariance_conditional",
    "interference_variance",
    "interference_correlation",
    "rate_adjusted_threshold",
    "dbm_to_watt",
    "per_km2_to_per_m2",
    "table2_network",
]


def dbm_to_watt(dbm):
    """Convert a power level in dBm to watts."""
    return 10.0 ** ((float(dbm) - 30.0) / 10.0)


def per_km2_to_per_m2(density):
    """Convert a density per km^2 to per m^2."""
    return float(density) * 1e-6


# Code generators: each maps a complex symbol vector to an L x M codeword.
def _gen_siso(d):
    return np.array([[d[0]]])


def _gen_alamouti(d):
    return np.array([[d[0], d[1]],
                     [-np.conj(d[1]), np.conj(d[0])]])


def _gen_4x4_half(d):
    z = 0.0
    return np.array([[d[0], d[1], z, z],
                     [-np.conj(d[1]), np.conj(d[0]), z, z],
                     [z, z, d[0], d[1]],
                     [z, z, -np.conj(d[1]), np.conj(d[0])]])


def _gen_4x4_3q(d):
    z = 0.0
    c = np.conj
    return np.array([[d[0], d[1], d[2], z],
                     [-c(d[1]), c(d[0]), z, d[2]],
                     [-c(d[2]), z, c(d[0]), -d[1]],
                     [z, -c(d[2]), c(d[1]), d[0]]])


_GENERATORS = {
    (1, 1, Fraction(1)): ("siso", 1, _gen_siso),
    (2, 2, Fraction(1)): ("alamouti", 2, _gen_alamouti),
    (4, 4, Fraction(1, 2)): ("4,4,1/2", 2, _gen_4x4_half),
    (4, 4, Fraction(3, 4)): ("4,4,3/4", 3, _gen_4x4_3q),
}

_NAME_ALIASES = {
    "siso": (1, 1, Fraction(1)),
    "1,1,1": (1, 1, Fraction(1)),
    "none": (1, 1, Fraction(1)),
    "alamouti": (2, 2, Fraction(1)),
    "2,2,1": (2, 2, Fraction(1)),
    "4,4,1/2": (4, 4, Fraction(1, 2)),
    "4,4,3/4": (4, 4, Fraction(3, 4)),
}


@dataclass(frozen=True)
class OstbcCode:
    """Power-balanced orthogonal space-time block code ``(M, L, r)``.

    Attributes
    ----------
    m_tx : int
        Transmit antennas ``M``.
    codeword_len : int
        Slots per codeword ``L``.
    rate : Fraction
        Code rate ``r``; ``S = L r`` symbols per codeword.
    s_active : int
        Active antennas per slot.
    activation_pattern : tuple of tuple of int
        Row ``tau`` flags the antennas active in slot ``tau``.
    """

    m_tx: int
    codeword_len: int
    rate: Fraction
    s_active: int = field(init=False)
    activation_pattern: tuple = field(init=False, repr=False)
    name: str = field(init=False, compare=False)

    def __post_init__(self):
        rate = Fraction(self.rate).limit_denominator(64)
        key = (int(self.m_tx), int(self.codeword_len), rate)
        if key not in _GENERATORS:
            raise DomainError(f"unsupported OSTBC {key[0]},{key[1]},{rate}")
        name, n_sym, gen = _GENERATORS[key]
        s = rate * key[1]
        if s.denominator != 1:
            raise DomainError("codeword_len * rate must be an integer")
        object.__setattr__(self, "rate", rate)
        object.__setattr__(self, "s_active", int(s))
        object.__setattr__(self, "name", name)
        probe = gen(np.ones(n_sym, dtype=complex))
        pattern = tuple(tuple(int(v != 0) for v in row) for row in probe)
        object.__setattr__(self, "activation_pattern", pattern)
        if any(sum(row) != self.s_active for row in pattern):
            raise DomainError("code is not power balanced")

    @classmethod
    def from_name(cls, name):
        """Build a code from ``siso``, ``alamouti``, ``4,4,1/2`` or ``4,4,3/4``."""
        key = _NAME_ALIASES.get(str(name).strip().lower().replace(" ", ""))
        if key is None:
            raise DomainError(f"unknown OSTBC name {name!r}")
        return cls(*key)

    @property
    def n_symbols(self):
        """Complex symbols per codeword."""
        return _GENERATORS[(self.m_tx, self.codeword_len, self.rate)][1]

    def codeword(self, symbols):
        """``L x M`` codeword matrix for the given complex symbols."""
        gen = _GENERATORS[(self.m_tx, self.codeword_len, self.rate)][2]
        return np.asarray(gen(np.asarray(symbols, dtype=complex)), dtype=complex)

    def real_dispersion(self):
        """Codewords of the unit real and imaginary symbol directions.

        Returns an array of shape ``(2 Q, L, M)``: entry ``2q`` is the codeword
        for ``d = e_q`` and ``2q + 1`` for ``d = i e_q``.  A codeword is real
        linear in ``(Re d, Im d)`` with these as basis matrices.
        """
        q = self.n_symbols
        out = np.empty((2 * q, self.codeword_len, self.m_tx), dtype=complex)
        for k in range(q):
            e = np.zeros(q, dtype=complex)
            e[k] = 1.0
            out[2 * k] = self.codeword(e)
            out[2 * k + 1] = self.codeword(1j * e)
        return out


@dataclass(frozen=True)
class TierConfig:
    """One BS tier: PPP density, transmit power, path-loss exponent, code."""

    density: float
    power: float
    path_loss_exp: float
    code: OstbcCode = field(default_factory=lambda: OstbcCode(1, 1, 1))

    def __post_init__(self):
        if not self.density > 0:
            raise DomainError("tier density must be positive")
        if not self.power > 0:
            raise DomainError("tier power must be positive")
        if not self.path_loss_exp > 2:
            raise DomainError("path-loss exponent must exceed 2")


@dataclass(frozen=True)
class NetworkConfig:
    """Ordered tiers plus receive antennas ``N`` and noise power (W)."""

    tiers: tuple
    rx_antennas: int = 1
    noise_power: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))
        if not self.tiers:
            raise DomainError("at least one tier is required")
        if int(self.rx_antennas) != self.rx_antennas or self.rx_antennas < 1:
            raise DomainError("rx_antennas must be a positive integer")
        if not self.noise_power >= 0:
            raise DomainError("noise power must be non-negative")

    @property
    def n_tiers(self):
        return len(self.tiers)

    @property
    def equal_alpha(self):
        """True when every tier has the same path-loss exponent."""
        a0 = self.tiers[0].path_loss_exp
        return all(t.path_loss_exp == a0 for t in self.tiers)

    def replace(self, **changes):
        """Copy with fields replaced (``tiers``, ``rx_antennas``, ``noise_power``)."""
        kw = dict(tiers=self.tiers, rx_antennas=self.rx_antennas,
                  noise_power=self.noise_power)
        kw.update(changes)
        return NetworkConfig(**kw)

    def with_codes(self, code):
        """Copy with every tier using ``code``."""
        tiers = [TierConfig(t.density, t.power, t.path_loss_exp, code) for t in self.tiers]
        return self.replace(tiers=tiers)

    def check_tier(self, ell):
        if not 0 <= ell < len(self.tiers):
            raise DomainError(f"tier index {ell} out of range")

    def rho_coefficients(self, ell):
        """``(c_k, e_k)`` with ``rho_k(y) = c_k y^{e_k}`` seen from tier ``ell``.

        ``c_k = pi lambda_k P_hat_k^{2/alpha_k}`` and ``e_k = 2 alpha_ell / alpha_k``.
        """
        self.check_tier(ell)
        serving = self.tiers[ell]
        c = np.array([math.pi * t.density * (t.power / serving.power) ** (2.0 / t.path_loss_exp)
                      for t in self.tiers])
        e = np.array([2.0 * serving.path_loss_exp / t.path_loss_exp for t in self.tiers])
        return c, e

    def rho(self, ell, y):
        """Array ``rho_k(y)`` over tiers (last axis) for distances ``y``."""
        c, e = self.rho_coefficients(ell)
        y = np.asarray(y, dtype=float)
        return c * y[..., None] ** e

    def noise_coefficient(self, ell):
        """``nu`` with ``1/SNR_ell(y) = nu * y^alpha_ell``."""
        t = self.tiers[ell]
        return self.noise_power / t.power


@dataclass(frozen=True)
class ServingContext:
    """Quantities seen by a user served by tier ``tier_index`` at distance ``distance``."""

    tier_index: int
    distance: float
    rel_power: tuple
    rel_alpha: tuple
    excl_radius: tuple
    mean_snr: float


def serving_context(net, ell, y):
    """Build the :class:`ServingContext` for tier ``ell`` and distance ``y``."""
    net.check_tier(ell)
    if y < 0:
        raise DomainError("distance must be non-negative")
    serv = net.tiers[ell]
    p_hat = tuple(t.power / serv.power for t in net.tiers)
    a_hat = tuple(t.path_loss_exp / serv.path_loss_exp for t in net.tiers)
    d = tuple(ph ** (1.0 / t.path_loss_exp) * y ** (1.0 / ah)
              for ph, ah, t in zip(p_hat, a_hat, net.tiers))
    if net.noise_power == 0:
        snr = math.inf
    elif y == 0:
        snr = math.inf
    else:
        snr = serv.power * y ** (-serv.path_loss_exp) / net.noise_power
    return ServingContext(ell, float(y), p_hat, a_hat, d, snr)


def _radial_cutoff(net, ell, level=40.0):
    """Distance where ``sum_k rho_k(y)`` reaches ``level``."""
    c, e = net.rho_coefficients(ell)

    def excess(log_y):
        return float(np.sum(c * np.exp(e * log_y))) - level

    lo, hi = -50.0, 50.0
    return math.exp(optimize.brentq(excess, lo, hi, xtol=1e-12))


def association_probability(net, ell):
    """Probability that the typical user is served by tier ``ell``.

    Closed form ``lambda_ell P_ell^{2/alpha} / sum_k lambda_k P_k^{2/alpha}``
    when all exponents agree, otherwise adaptive quadrature over ``[0, y_max]``
    with ``y_max`` at ``sum_k rho_k = 40``.
    """
    net.check_tier(ell)
    c, e = net.rho_coefficients(ell)
    if net.equal_alpha:
        return float(c[ell] / np.sum(c))
    lam = net.tiers[ell].density
    y_max = _radial_cutoff(net, ell)

    def f(y):
        return 2.0 * math.pi * lam * y * math.exp(-float(np.sum(c * y ** e)))

    val, err = integrate.quad(f, 0.0, y_max, epsabs=1e-13, epsrel=1e-11, limit=200)
    if err > 1e-9:
        raise NumericalError("association quadrature failed", {"tier": ell, "err": err})
    return val


def serving_distance_pdf(net, ell, y):
    """Density of the serving distance given association with tier ``ell``."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("distance must be non-negative")
    c, e = net.rho_coefficients(ell)
    lam = net.tiers[ell].density
    a_ell = association_probability(net, ell)
    rho = np.sum(c * y[..., None] ** e, axis=-1)
    out = 2.0 * math.pi * lam * y / a_ell * np.exp(-rho)
    return float(out) if out.ndim == 0 else out


def interference_variance_conditional(net, ctx):
    """Variance of the normalized per-antenna interference given ``(ell, y)``.

    ``pi sum_k lambda_k P_hat_k^{2/alpha_k} (1 + 1/S_k) y^{2/alpha_hat_k} / (alpha_k - 1)``.
    """
    c, e = net.rho_coefficients(ctx.tier_index)
    s = np.array([t.code.s_active for t in net.tiers], dtype=float)
    alpha = np.array([t.path_loss_exp for t in net.tiers])
    return float(np.sum(c * (1.0 + 1.0 / s) * ctx.distance ** e / (alpha - 1.0)))


def interference_covariance_conditional(net, ctx):
    """Cross-antenna covariance of the normalized interference given ``(ell, y)``."""
    c, e = net.rho_coefficients(ctx.tier_index)
    alpha = np.array([t.path_loss_exp for t in net.tiers])
    return float(np.sum(c * ctx.distance ** e / (alpha - 1.0)))


def interference_variance(alpha, s_active):
    """Distance-averaged normalized interference variance ``(1 + 1/S)/(alpha - 1)``."""
    if not alpha > 2:
        raise DomainError("path-loss exponent must exceed 2")
    if s_active < 1:
        raise DomainError("s_active must be positive")
    return (1.0 + 1.0 / s_active) / (alpha - 1.0)


def interference_correlation(s_active):
    """Cross-antenna interference correlation coefficient ``S / (1 + S)``."""
    if s_active < 1:
        raise DomainError("s_active must be positive")
    return s_active / (1.0 + s_active)


def rate_adjusted_threshold(t, code):
    """Threshold ``(1 + t)^{1/r} - 1`` that equalizes the information rate."""
    if not t > 0:
        raise DomainError("threshold must be positive")
    if code.rate == 1:
        return float(t)
    return math.expm1(math.log1p(t) / float(code.rate))


def table2_network(rx_antennas=2, tier1_code="4,4,3/4", noise_dbm=-104.0):
    """Three-tier reference network (macro, pico, femto).

    Densities 4/16/40 per km^2, powers 46/30/24 dBm, exponents 3.76/3.67/3.5,
    codes ``tier1_code``/Alamouti/single antenna.  ``noise_dbm=None`` gives
    the interference-limited network.
    """
    codes = [OstbcCode.from_name(tier1_code), OstbcCode.from_name("alamouti"),
             OstbcCode.from_name("siso")]
    dens = (4.0, 16.0, 40.0)
    pwr = (46.0, 30.0, 24.0)
    alpha = (3.76, 3.67, 3.5)
    tiers = [TierConfig(per_km2_to_per_m2(l), dbm_to_watt(p), a, c)
             for l, p, a, c in zip(dens, pwr, alpha, codes)]
    noise = 0.0 if noise_dbm is None else dbm_to_watt(noise_dbm)
    return NetworkConfig(tiers, rx_antennas, noise)
