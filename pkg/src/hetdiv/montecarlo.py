"""Stochastic-geometry Monte Carlo simulator for downlink MRC/SC coverage.

Each iteration drops Poisson numbers of base stations uniformly in per-tier
discs around the typical user, associates the user with the strongest mean
received power, draws Rayleigh MIMO channels and evaluates the post-combiner
SINR of every requested receiver.  Iteration ``i`` draws from its own stream
``SeedSequence(seed, spawn_key=(i,))``, so results do not depend on how
iterations are scheduled across threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import enum
import math

import numpy as np
from scipy import stats

from .errors import DomainError, UnsupportedConfigurationError
from .hetnet import NetworkConfig, rate_adjusted_threshold

__all__ = [
    "SimScheme",
    "SimConfig",
    "Geometry",
    "IterationSample",
    "SimCurve",
    "SimResult",
    "iteration_rng",
    "sample_geometry",
    "sample_interference",
    "simulate_iteration",
    "combine_ib",
    "combine_ia",
    "combine_sc",
    "run",
    "interference_moments",
    "wilson_interval",
    "write_samples_csv",
]


class SimScheme(str, enum.Enum):
    """Simulated receivers.

    ``IB_MRC`` uses the equivalent-channel model with Gamma interference;
    ``IB_MRC_EXACT`` and ``IA_MRC_EXACT`` combine actual codewords (``M <= 2``);
    ``IA_NC`` redraws the interferer field independently per antenna and
    ``IA_FC`` shares one fading row across antennas.
    """

    IB_MRC = "IB_MRC"
    IB_MRC_EXACT = "IB_MRC_EXACT"
    IA_MRC_EXACT = "IA_MRC_EXACT"
    IA_MRC_SIMPLIFIED = "IA_MRC_SIMPLIFIED"
    SC = "SC"
    IA_NC = "IA_NC"
    IA_FC = "IA_FC"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper()
        aliases = {"IA_MRC": "IA_MRC_SIMPLIFIED"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise DomainError(f"unknown simulation scheme {name!r}") from None


_EXACT = (SimScheme.IB_MRC_EXACT, SimScheme.IA_MRC_EXACT)


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run configuration."""

    net: NetworkConfig
    iterations: int
    thresholds: tuple
    combining: frozenset = frozenset({SimScheme.IB_MRC})
    mean_bs_per_tier: int = 100
    resources_per_frame: int = 80
    rng_seed: int = 0
    noisy_estimation: bool = False
    disc_scale: float = 1.0
    moments: bool = True
    keep_samples: bool = False
    rate_loss: bool = False

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        object.__setattr__(self, "combining",
                           frozenset(SimScheme.parse(s) for s in self.combining))
        if self.iterations < 1:
            raise DomainError("iterations must be positive")
        if self.mean_bs_per_tier < 1 or self.resources_per_frame < 1:
            raise DomainError("mean_bs_per_tier and resources_per_frame must be positive")
        if not self.disc_scale > 0:
            raise DomainError("disc_scale must be positive")
        if not 0 <= int(self.rng_seed) < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        m_all = [t.code.m_tx for t in self.net.tiers]
        if self.combining & set(_EXACT) or (
                self.noisy_estimation and self.combining & {SimScheme.IA_MRC_SIMPLIFIED}):
            if max(m_all) > 2:
                raise UnsupportedConfigurationError(
                    "codeword-level simulation needs M_k <= 2 in every tier")
        if SimScheme.SC in self.combining and max(m_all) != 1:
            raise UnsupportedConfigurationError("selection combining requires M_k = 1")
        ia = {SimScheme.IA_MRC_EXACT, SimScheme.IA_MRC_SIMPLIFIED, SimScheme.IA_NC,
              SimScheme.IA_FC}
        if self.combining & ia and max(m_all) > 2:
            raise UnsupportedConfigurationError("IA-MRC requires M_k <= 2")

    def disc_radii(self):
        """Per-tier disc radius ``scale * sqrt(mean_bs / (lambda pi))``."""
        return np.array([self.disc_scale * math.sqrt(self.mean_bs_per_tier / (t.density * math.pi))
                         for t in self.net.tiers])


def iteration_rng(seed, index):
    """Independent generator for iteration ``index``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def _cgauss(rng, shape):
    """Unit-variance circularly symmetric complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


# ---------------------------------------------------------------- geometry

@dataclass(frozen=True)
class Geometry:
    """Base-station drop with the serving BS removed from the interferer set."""

    serving_tier: int
    serving_distance: float
    interferer_tier: np.ndarray
    interferer_distance: np.ndarray
    interferer_angle: np.ndarray
    resamples: int = 0


def sample_geometry(net, rng, mean_bs_per_tier=100, disc_scale=1.0):
    """Drop Poisson BSs in per-tier discs and associate the user at the origin.

    Discs have radius ``disc_scale * sqrt(mean_bs / (lambda_k pi))`` and mean
    count ``mean_bs * disc_scale^2`` (constant density).  Empty networks are
    redrawn and counted in ``resamples``.
    """
    radii = [disc_scale * math.sqrt(mean_bs_per_tier / (t.density * math.pi)) for t in net.tiers]
    mean_count = mean_bs_per_tier * disc_scale ** 2
    resamples = 0
    while True:
        counts = rng.poisson(mean_count, size=net.n_tiers)
        if counts.sum() > 0:
            break
        resamples += 1
    tier = np.repeat(np.arange(net.n_tiers), counts)
    r = np.concatenate([radii[k] * np.sqrt(rng.random(c)) for k, c in enumerate(counts)])
    theta = rng.random(r.size) * 2.0 * math.pi
    power = np.array([t.power for t in net.tiers])[tier]
    alpha = np.array([t.path_loss_exp for t in net.tiers])[tier]
    with np.errstate(divide="ignore"):
        score = np.log(power) - alpha * np.log(r)
    o = int(np.argmax(score))
    keep = np.ones(r.size, dtype=bool)
    keep[o] = False
    return Geometry(int(tier[o]), float(r[o]), tier[keep], r[keep], theta[keep], resamples)


def _interferer_gains(net, geom):
    """``P_k / (S_k r^alpha_k)`` for every interferer."""
    p = np.array([t.power / t.code.s_active for t in net.tiers])
    a = np.array([t.path_loss_exp for t in net.tiers])
    return p[geom.interferer_tier] * geom.interferer_distance ** (-a[geom.interferer_tier])


def _draw_channels(net, geom, n_rx, rng):
    """Per-interferer channel rows ``(n_i, N, M_k)`` grouped by tier, plus slot offsets."""
    chans, offsets = {}, {}
    for k, t in enumerate(net.tiers):
        n_k = int(np.count_nonzero(geom.interferer_tier == k))
        chans[k] = _cgauss(rng, (n_k, n_rx, t.code.m_tx))
        offsets[k] = rng.integers(0, t.code.codeword_len, size=n_k)
    return chans, offsets


def _per_antenna_power(net, geom, chans, offsets, gains):
    """Per-antenna interference power from drawn channel rows."""
    n_rx = next(iter(chans.values())).shape[1] if chans else 0
    total = np.zeros(n_rx)
    for k, t in enumerate(net.tiers):
        sel = geom.interferer_tier == k
        if not np.any(sel):
            continue
        pattern = np.array(t.code.activation_pattern, dtype=float)[offsets[k]]
        energy = np.einsum("inm,im->in", np.abs(chans[k]) ** 2, pattern)
        total += gains[sel] @ energy
    return total


def sample_interference(geom, net, rng, n_rx=None):
    """Per-antenna interference powers ``I_n`` for a geometry.

    Every interferer gets independent complex Gaussian rows per receive
    antenna; its active antennas follow the code's activation pattern in a
    uniformly drawn slot.
    """
    n_rx = net.rx_antennas if n_rx is None else n_rx
    gains = _interferer_gains(net, geom)
    chans, offsets = _draw_channels(net, geom, n_rx, rng)
    return _per_antenna_power(net, geom, chans, offsets, gains)


def _annulus_field(net, ell, y, rng, radii, mean_count, n_rx):
    """Independent interferer field outside the exclusion radii, per-antenna powers."""
    serv = net.tiers[ell]
    total = np.zeros(n_rx)
    for k, t in enumerate(net.tiers):
        d = (t.power / serv.power) ** (1.0 / t.path_loss_exp) * y ** (serv.path_loss_exp / t.path_loss_exp)
        big = radii[k]
        if d >= big:
            continue
        lam_area = mean_count * (1.0 - (d / big) ** 2)
        n_k = rng.poisson(lam_area)
        if n_k == 0:
            continue
        r = np.sqrt(d * d + rng.random(n_k) * (big * big - d * d))
        g = t.power / t.code.s_active * r ** (-t.path_loss_exp)
        fade = rng.standard_gamma(t.code.s_active, size=(n_k, n_rx))
        total += g @ fade
    return total


# ---------------------------------------------------------------- samples

@dataclass
class IterationSample:
    """One network realization and its receiver SINRs."""

    serving_tier: int
    serving_distance: float
    per_antenna_interference: np.ndarray
    desired_channel: np.ndarray
    sinr_by_scheme: dict = field(default_factory=dict)
    interferer_gain: np.ndarray = None
    interferer_shape: np.ndarray = None
    eqv_fading: np.ndarray = None
    resampled_interference: np.ndarray = None
    resamples: int = 0


def combine_ib(sample, net):
    """IB-MRC SINR in the equivalent-channel model.

    ``(P_ell / (S_ell y^alpha)) ||H_o||^2 / (sum_i g_i G_i + sigma^2)`` with
    ``G_i ~ Gamma(S_k)`` independent of ``H_o``.
    """
    serv = net.tiers[sample.serving_tier]
    sig = serv.power / (serv.code.s_active * sample.serving_distance ** serv.path_loss_exp)
    h2 = float(np.sum(np.abs(sample.desired_channel) ** 2))
    den = float(sample.interferer_gain @ sample.eqv_fading) + net.noise_power
    return math.inf if den == 0 else sig * h2 / den


def combine_ia(sample, net, mode="SIMPLIFIED", interference=None):
    """IA-MRC SINR ``(P / (M y^alpha)) sum_n ||h_{o,n}||^2 / (I_n + sigma^2)``.

    ``mode="SIMPLIFIED"`` only; the codeword-level ``EXACT`` mode needs the
    channel rows and is evaluated inside :func:`simulate_iteration`.
    """
    if str(mode).upper() != "SIMPLIFIED":
        raise DomainError("combine_ia on a sample supports SIMPLIFIED only")
    serv = net.tiers[sample.serving_tier]
    i_n = sample.per_antenna_interference if interference is None else interference
    den = i_n + net.noise_power
    row = np.sum(np.abs(sample.desired_channel) ** 2, axis=1)
    with np.errstate(divide="ignore"):
        ratio = np.where(den > 0, row / np.where(den > 0, den, 1.0), np.inf)
    return float(serv.power / (serv.code.m_tx * sample.serving_distance ** serv.path_loss_exp)
                 * np.sum(ratio))


def combine_sc(sample, net):
    """Selection combining: best per-antenna SINR (single transmit antenna)."""
    serv = net.tiers[sample.serving_tier]
    if serv.code.m_tx != 1:
        raise UnsupportedConfigurationError("selection combining requires M = 1")
    row = np.abs(sample.desired_channel[:, 0]) ** 2
    den = sample.per_antenna_interference + net.noise_power
    if np.any(den == 0):
        return math.inf
    return float(np.max(row * serv.power * sample.serving_distance ** (-serv.path_loss_exp) / den))


# ---------------------------------------------------------------- codeword level

def _real_stack(g):
    """``[Re g; Im g]`` along the slot axis (axis -2)."""
    return np.concatenate([g.real, g.imag], axis=-2)


_WINDOW_CACHE = {}


def _window_basis(code_i, offset, slots):
    """Real-direction basis of an interferer's signal over ``slots`` slots.

    The interferer sends back-to-back codewords starting ``offset`` slots
    before the observation window.  Shape ``(n_dir, slots, M_k)``.
    """
    key = (code_i, int(offset), int(slots))
    basis = _WINDOW_CACHE.get(key)
    if basis is not None:
        return basis
    disp = code_i.real_dispersion()
    n_q, l_i, m_i = disp.shape
    n_cw = -(-(offset + slots) // l_i)
    full = np.zeros((n_cw * n_q, n_cw * l_i, m_i), dtype=complex)
    for c in range(n_cw):
        full[c * n_q:(c + 1) * n_q, c * l_i:(c + 1) * l_i] = disp
    basis = full[:, offset:offset + slots]
    basis = basis[np.any(basis != 0, axis=(1, 2))]
    _WINDOW_CACHE[key] = basis
    return basis


def _exact_sinr(net, geom, h_o, chans, offsets, gains, weights):
    """Codeword-level post-combiner SINR of the first symbol.

    Combiner ``sum_n w_n G_o(h_{o,n})^T r_n`` in the real representation; the
    interference is averaged over the real and imaginary parts of the symbol.
    """
    serv = net.tiers[geom.serving_tier]
    code_o = serv.code
    disp_o = code_o.real_dispersion()
    slots = code_o.codeword_len
    ro = _real_stack(np.einsum("qlm,nm->nlq", disp_o, h_o))
    h2 = np.sum(np.abs(h_o) ** 2, axis=1)
    gain_sum = float(weights @ h2)
    interf = 0.0
    for k, t in enumerate(net.tiers):
        sel = np.flatnonzero(geom.interferer_tier == k)
        if sel.size == 0:
            continue
        g_k = gains[sel]
        for off in np.unique(offsets[k]):
            pick = offsets[k] == off
            basis = _window_basis(t.code, int(off), slots)
            ri = _real_stack(np.einsum("qlm,inm->inlq", basis, chans[k][pick]))
            kmat = np.einsum("n,nlp,inlq->ipq", weights, ro[:, :, :2], ri)
            interf += float(g_k[pick] @ np.sum(kmat ** 2, axis=2).mean(axis=1))
    noise = net.noise_power * float(weights ** 2 @ h2)
    sig = serv.power / (code_o.s_active * geom.serving_distance ** serv.path_loss_exp)
    den = interf + noise
    return math.inf if den == 0 else sig * gain_sum ** 2 / den


def _estimate_interference(net, geom, chans, offsets, gains, n_res, rng):
    """Average squared interference envelope over ``n_res`` resources."""
    n_rx = next(iter(chans.values())).shape[1]
    acc = np.zeros((n_res, n_rx), dtype=complex)
    for k, t in enumerate(net.tiers):
        sel = np.flatnonzero(geom.interferer_tier == k)
        if sel.size == 0:
            continue
        q = t.code.n_symbols
        amp = np.sqrt(gains[sel])
        rows = []
        for i in range(sel.size):
            sym = _cgauss(rng, (n_res, q))
            cw = np.stack([t.code.codeword(s) for s in sym])
            rows.append(cw[:, offsets[k][i], :])
        x = np.stack(rows, axis=1)
        acc += np.einsum("i,rim,inm->rn", amp, x, chans[k])
    return np.mean(np.abs(acc) ** 2, axis=0)


def simulate_iteration(net, rng, schemes, mean_bs_per_tier=100, disc_scale=1.0,
                       noisy_estimation=False, resources_per_frame=80, moments=False):
    """Draw one realization and evaluate the requested receivers."""
    schemes = {SimScheme.parse(s) for s in schemes}
    n_rx = net.rx_antennas
    geom = sample_geometry(net, rng, mean_bs_per_tier, disc_scale)
    serv = net.tiers[geom.serving_tier]
    gains = _interferer_gains(net, geom)
    chans, offsets = _draw_channels(net, geom, n_rx, rng)
    i_n = _per_antenna_power(net, geom, chans, offsets, gains)
    h_o = _cgauss(rng, (n_rx, serv.code.m_tx))
    shapes = np.array([t.code.s_active for t in net.tiers])[geom.interferer_tier]
    eqv = rng.standard_gamma(shapes) if shapes.size else np.zeros(0)
    sample = IterationSample(geom.serving_tier, geom.serving_distance, i_n, h_o,
                             interferer_gain=gains, interferer_shape=shapes,
                             eqv_fading=eqv, resamples=geom.resamples)
    radii = [disc_scale * math.sqrt(mean_bs_per_tier / (t.density * math.pi)) for t in net.tiers]
    mean_count = mean_bs_per_tier * disc_scale ** 2

    i_est = i_n
    if noisy_estimation and schemes & {SimScheme.IA_MRC_EXACT, SimScheme.IA_MRC_SIMPLIFIED}:
        i_est = _estimate_interference(net, geom, chans, offsets, gains,
                                       resources_per_frame, rng)
    out = sample.sinr_by_scheme
    if SimScheme.IB_MRC in schemes:
        out[SimScheme.IB_MRC] = combine_ib(sample, net)
    if SimScheme.IA_MRC_SIMPLIFIED in schemes:
        out[SimScheme.IA_MRC_SIMPLIFIED] = combine_ia(sample, net, interference=i_est)
    if SimScheme.SC in schemes:
        out[SimScheme.SC] = combine_sc(sample, net)
    if SimScheme.IB_MRC_EXACT in schemes:
        out[SimScheme.IB_MRC_EXACT] = _exact_sinr(net, geom, h_o, chans, offsets, gains,
                                                  np.ones(n_rx))
    if SimScheme.IA_MRC_EXACT in schemes:
        den = i_est + net.noise_power
        w = 1.0 / np.where(den > 0, den, 1.0)
        out[SimScheme.IA_MRC_EXACT] = _exact_sinr(net, geom, h_o, chans, offsets, gains, w)
    if SimScheme.IA_FC in schemes:
        shared = np.full(n_rx, i_n[0])
        out[SimScheme.IA_FC] = combine_ia(sample, net, interference=shared)
    if SimScheme.IA_NC in schemes:
        # antenna 1 keeps the dropped field, the others see independent redraws
        indep = np.array([i_n[0]] + [
            _annulus_field(net, geom.serving_tier, geom.serving_distance, rng, radii,
                           mean_count, 1)[0] for _ in range(n_rx - 1)])
        out[SimScheme.IA_NC] = combine_ia(sample, net, interference=indep)
    if moments:
        sample.resampled_interference = _annulus_field(
            net, geom.serving_tier, geom.serving_distance, rng, radii, mean_count, n_rx)
    return sample


# ---------------------------------------------------------------- statistics

def wilson_interval(successes, trials, confidence=0.6826894921370859):
    """Wilson score interval; the default level gives a one-sigma band."""
    res = stats.binomtest(int(successes), int(trials)).proportion_ci(
        confidence_level=confidence, method="wilson")
    return res.low, res.high


@dataclass(frozen=True)
class SimCurve:
    """Empirical coverage with Wilson bands (one-sigma ``se`` as half width)."""

    scheme: SimScheme
    thresholds: np.ndarray
    p_cov: np.ndarray
    wilson_low: np.ndarray
    wilson_high: np.ndarray
    iterations: int

    @property
    def se(self):
        return 0.5 * (self.wilson_high - self.wilson_low)


@dataclass
class SimResult:
    """Output of :func:`run`."""

    config: SimConfig
    curves: dict
    moments: dict
    resample_events: int
    serving_tier: np.ndarray
    serving_distance: np.ndarray
    interference: np.ndarray
    sinr: dict


def _normalizer(net, ell, y):
    serv = net.tiers[ell]
    return y ** serv.path_loss_exp / serv.power


def _moment_report(net, ell, y, ia, ib):
    """Paired conditional estimator of variance and cross-antenna correlation."""
    norm = np.array([_normalizer(net, e, d) for e, d in zip(ell, y)])[:, None]
    diff = (ia - ib) * norm
    var_terms = 0.5 * diff ** 2
    report = {"samples": int(diff.shape[0]),
              "variance": float(var_terms.mean()),
              "variance_se": float(var_terms.mean(axis=1).std(ddof=1) / math.sqrt(diff.shape[0]))
              if diff.shape[0] > 1 else math.nan}
    if diff.shape[1] >= 2:
        cov_terms = 0.5 * diff[:, 0] * diff[:, 1]
        report["covariance"] = float(cov_terms.mean())
        report["correlation"] = report["covariance"] / report["variance"]
    return report


def run(cfg: SimConfig, workers=1):
    """Run all iterations and aggregate coverage curves and moments.

    Output is identical for any ``workers`` value: iteration ``i`` always uses
    stream ``i`` and writes into slot ``i`` of pre-allocated arrays.
    """
    net = cfg.net
    n_it = cfg.iterations
    schemes = sorted(cfg.combining, key=lambda s: s.value)
    sinr = {s: np.empty(n_it) for s in schemes}
    ell = np.empty(n_it, dtype=int)
    y = np.empty(n_it)
    i_n = np.empty((n_it, net.rx_antennas))
    i_b = np.empty((n_it, net.rx_antennas))
    resamples = np.zeros(n_it, dtype=int)

    def work(idx_range):
        for i in idx_range:
            smp = simulate_iteration(net, iteration_rng(cfg.rng_seed, i), schemes,
                                     cfg.mean_bs_per_tier, cfg.disc_scale,
                                     cfg.noisy_estimation, cfg.resources_per_frame,
                                     cfg.moments)
            for s in schemes:
                sinr[s][i] = smp.sinr_by_scheme[s]
            ell[i] = smp.serving_tier
            y[i] = smp.serving_distance
            i_n[i] = smp.per_antenna_interference
            if cfg.moments:
                i_b[i] = smp.resampled_interference
            resamples[i] = smp.resamples

    if workers > 1:
        step = -(-n_it // (4 * workers))
        chunks = [range(a, min(a + step, n_it)) for a in range(0, n_it, step)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, chunks))
    else:
        work(range(n_it))

    th = np.asarray(cfg.thresholds)
    if cfg.rate_loss:
        per_tier = np.array([[rate_adjusted_threshold(t, tk.code) for t in th]
                             for tk in net.tiers])
    else:
        per_tier = np.broadcast_to(th, (net.n_tiers, th.size))
    th_it = per_tier[ell]
    curves = {}
    for s in schemes:
        hits = (sinr[s][:, None] >= th_it).sum(axis=0)
        lo, hi = zip(*(wilson_interval(h, n_it) for h in hits)) if th.size else ((), ())
        curves[s] = SimCurve(s, th, hits / n_it, np.array(lo), np.array(hi), n_it)
    mom = _moment_report(net, ell, y, i_n, i_b) if cfg.moments else {}
    return SimResult(cfg, curves, mom, int(resamples.sum()), ell, y, i_n,
                     sinr if cfg.keep_samples else {})


# ---------------------------------------------------------------- moments

def interference_moments(net, samples, seed=0, mean_bs_per_tier=100, chunk=20000, n_rx=2):
    """Vectorised paired estimator of normalized interference moments.

    For each sample the full network is dropped, the user associates, and a
    second independent field is drawn outside the exclusion radii.  With
    normalized per-antenna interference ``A`` (dropped) and ``B`` (redrawn),
    ``E[(A - B)^2] / 2`` estimates the distance-averaged conditional variance
    and ``E[(A_1 - B_1)(A_2 - B_2)] / 2`` the conditional covariance.

    Returns
    -------
    dict
        ``variance``, ``variance_se``, ``covariance``, ``correlation``,
        ``correlation_se`` and ``samples``.
    """
    tiers = net.tiers
    k_t = len(tiers)
    radii = np.array([math.sqrt(mean_bs_per_tier / (t.density * math.pi)) for t in tiers])
    pw = np.array([t.power for t in tiers])
    al = np.array([t.path_loss_exp for t in tiers])
    sk = np.array([t.code.s_active for t in tiers])

    def fades(rng, k, size):
        if sk[k] == 1:
            return rng.standard_exponential((size, n_rx), dtype=np.float32)
        return rng.standard_gamma(sk[k], (size, n_rx), dtype=np.float32)

    def field_power(rows, g, fade, n):
        # per-antenna sum of g * fade grouped by sample row
        return np.stack([np.bincount(rows, g * fade[:, j], minlength=n) for j in range(n_rx)],
                        axis=1)

    v_terms, c_terms = [], []
    n_chunks = -(-samples // chunk)
    for ci in range(n_chunks):
        rng = iteration_rng(seed, ci)
        n = min(chunk, samples - ci * chunk)
        rows = np.arange(n)
        # full drop as flat per-tier arrays; rows are sorted within a tier
        best = np.full((k_t, n), -np.inf)
        drop = []
        for k in range(k_t):
            cnt = rng.poisson(mean_bs_per_tier, size=n)
            own = np.repeat(rows, cnt)
            r = radii[k] * np.sqrt(rng.random(own.size))
            score = math.log(pw[k]) - al[k] * np.log(r)
            starts = np.concatenate([[0], np.cumsum(cnt)[:-1]])
            hit = cnt > 0
            best[k, hit] = np.maximum.reduceat(score, starts[hit])
            drop.append((own, r, score))
        ell = np.argmax(best, axis=0)
        top = best[ell, rows]
        valid = np.isfinite(top)
        a = np.zeros((n, n_rx))
        y = np.ones(n)
        for k, (own, r, score) in enumerate(drop):
            g = pw[k] / sk[k] * r ** (-al[k])
            f = fades(rng, k, own.size)
            a += field_power(own, g, f, n)
            srv = (ell[own] == k) & (score == top[own])
            a[own[srv]] -= g[srv, None] * f[srv]
            y[own[srv]] = r[srv]
        a = np.maximum(a, 0.0)
        norm = y ** al[ell] / pw[ell]
        a *= norm[:, None]
        # independent redraw outside the exclusion radii
        b = np.zeros((n, n_rx))
        for k in range(k_t):
            d = (pw[k] / pw[ell]) ** (1.0 / al[k]) * y ** (al[ell] / al[k])
            frac = np.clip(1.0 - (d / radii[k]) ** 2, 0.0, 1.0)
            cnt = rng.poisson(mean_bs_per_tier * frac)
            flat = np.repeat(rows, cnt)
            d2 = np.minimum(d, radii[k])[flat] ** 2
            rr = np.sqrt(d2 + rng.random(flat.size) * (radii[k] ** 2 - d2))
            b += field_power(flat, pw[k] / sk[k] * rr ** (-al[k]), fades(rng, k, flat.size), n)
        b *= norm[:, None]
        diff = (a - b)[valid]
        v_terms.append(0.5 * np.mean(diff ** 2, axis=1))
        if n_rx >= 2:
            c_terms.append(0.5 * diff[:, 0] * diff[:, 1])
    v = np.concatenate(v_terms)
    out = {"samples": int(v.size), "variance": float(v.mean()),
           "variance_se": float(v.std(ddof=1) / math.sqrt(v.size))}
    if c_terms:
        c = np.concatenate(c_terms)
        out["covariance"] = float(c.mean())
        out["correlation"] = out["covariance"] / out["variance"]
        # delta method for the ratio of means
        rho = out["correlation"]
        resid = c - rho * v
        out["correlation_se"] = float(resid.std(ddof=1) / math.sqrt(v.size) / out["variance"])
    return out


def write_samples_csv(result: SimResult, path):
    """Dump per-iteration samples: one row per (iteration, scheme)."""
    import csv

    if not result.sinr:
        raise DomainError("run with keep_samples=True to dump raw samples")
    n_rx = result.interference.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "serving_tier", "y"] + [f"I_{n + 1}" for n in range(n_rx)]
                   + ["scheme", "sinr"])
        for i in range(result.serving_tier.size):
            head = [i, int(result.serving_tier[i]), format(result.serving_distance[i], ".17g")]
            head += [format(v, ".17g") for v in result.interference[i]]
            for s, vals in result.sinr.items():
                w.writerow(head + [s.value, format(vals[i], ".17g")])
