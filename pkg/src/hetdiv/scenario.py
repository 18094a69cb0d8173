"""Strict key-value scenario files.

Layout::

    # comment
    rx_antennas = 2
    noise_dbm = -104          # or "none" for an interference-limited network
    grid = -10:20:13          # dB start:stop:count
    schemes = IB_MRC, SISO
    rate_loss = false

    [tier]
    density_per_km2 = 4
    power_dbm = 46
    path_loss_exp = 3.76
    code = 4,4,3/4

    [sim]
    iterations = 20000
    seed = 1

Unknown keys, duplicate keys and missing required keys are errors.  Units
are converted to SI at parse time.
"""

from dataclasses import dataclass, field, replace
import hashlib
from importlib import resources

import numpy as np

from .errors import ConfigError, HetdivError
from .hetnet import NetworkConfig, OstbcCode, TierConfig, dbm_to_watt, per_km2_to_per_m2

__all__ = ["Scenario", "SimSettings", "parse_scenario", "load_scenario", "parse_grid",
           "bundled_scenario"]

_TOP = {"rx_antennas", "noise_dbm", "grid", "schemes", "rate_loss"}
_TIER = {"density_per_km2", "power_dbm", "path_loss_exp", "code"}
_SIM = {"iterations", "seed", "mean_bs_per_tier", "resources_per_frame", "noisy_estimation",
        "combining"}


@dataclass(frozen=True)
class SimSettings:
    iterations: int = 20000
    seed: int = 0
    mean_bs_per_tier: int = 100
    resources_per_frame: int = 80
    noisy_estimation: bool = False
    combining: tuple = ()


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario in SI units plus the original dB/dBm figures."""

    tiers_raw: tuple
    rx_antennas: int
    noise_dbm: object
    grid: tuple
    schemes: tuple
    rate_loss: bool = False
    sim: SimSettings = field(default_factory=SimSettings)

    @property
    def thresholds_db(self):
        start, stop, count = self.grid
        return np.linspace(start, stop, count)

    @property
    def thresholds(self):
        return 10.0 ** (self.thresholds_db / 10.0)

    @property
    def network(self):
        tiers = tuple(TierConfig(per_km2_to_per_m2(d), dbm_to_watt(p), a, OstbcCode.from_name(c))
                      for d, p, a, c in self.tiers_raw)
        noise = 0.0 if self.noise_dbm is None else dbm_to_watt(self.noise_dbm)
        return NetworkConfig(tiers, self.rx_antennas, noise)

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        sim_kw = {k: kw.pop(k) for k in list(kw) if k in SimSettings.__dataclass_fields__}
        out = replace(self, **kw)
        if sim_kw:
            out = replace(out, sim=replace(out.sim, **sim_kw))
        return out

    def canonical(self):
        """Order-stable text form of every semantic field."""
        lines = [f"rx_antennas={self.rx_antennas}",
                 f"noise_dbm={'none' if self.noise_dbm is None else repr(float(self.noise_dbm))}",
                 "grid=" + ":".join(repr(float(g)) for g in self.grid[:2]) + f":{self.grid[2]}",
                 "schemes=" + ",".join(self.schemes),
                 f"rate_loss={self.rate_loss}"]
        for d, p, a, c in self.tiers_raw:
            lines.append(f"tier={float(d)!r},{float(p)!r},{float(a)!r},{OstbcCode.from_name(c).name}")
        s = self.sim
        lines.append(f"sim={s.iterations},{s.seed},{s.mean_bs_per_tier},{s.resources_per_frame},"
                     f"{s.noisy_estimation}," + "|".join(s.combining))
        return "\n".join(lines) + "\n"

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def parse_grid(text, line=None, key="grid"):
    """``START:STOP:COUNT`` in dB."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError("grid must be START:STOP:COUNT", line, key)
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"malformed grid {text!r}", line, key) from None
    if count < 1 or (count > 1 and not stop > start) or not np.isfinite([start, stop]).all():
        raise ConfigError("grid needs count >= 1 and stop > start", line, key)
    return (start, stop, count)


def _bool(v, line, key):
    low = v.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {v!r}", line, key)


def _num(v, line, key, kind=float, lo=None):
    try:
        x = kind(v)
    except ValueError:
        raise ConfigError(f"expected a number, got {v!r}", line, key) from None
    if kind is float and not np.isfinite(x):
        raise ConfigError("value must be finite", line, key)
    if lo is not None and not x >= lo:
        raise ConfigError(f"value must be >= {lo}", line, key)
    return x


def parse_scenario(text):
    """Parse scenario text.

    Raises
    ------
    ConfigError
        With the 1-based line number and key of the first problem.
    """
    top, tiers, sim = {}, [], {}
    section, current, tier_line = "top", None, {}
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            name = body.strip("[]").strip().lower()
            if body[-1] != "]" or name not in ("tier", "sim"):
                raise ConfigError(f"unknown section {body!r}", no)
            if name == "sim" and sim:
                raise ConfigError("duplicate [sim] section", no)
            section = name
            if name == "tier":
                current = {}
                tiers.append(current)
                tier_line[id(current)] = no
            continue
        if "=" not in body:
            raise ConfigError("expected key = value", no)
        key, val = (s.strip() for s in body.split("=", 1))
        allowed, store = {"top": (_TOP, top), "tier": (_TIER, current), "sim": (_SIM, sim)}[section]
        if key not in allowed:
            raise ConfigError("unknown key", no, key)
        if key in store:
            raise ConfigError("duplicate key", no, key)
        store[key] = (val, no)

    def need(store, key, where):
        if key not in store:
            raise ConfigError(f"missing required key in {where}", None, key)
        return store[key]

    if not tiers:
        raise ConfigError("at least one [tier] section is required")
    tiers_raw = []
    for t in tiers:
        if not t:
            raise ConfigError("empty [tier] section", tier_line[id(t)])
        d, ln = need(t, "density_per_km2", "[tier]")
        dens = _num(d, ln, "density_per_km2")
        p, ln = need(t, "power_dbm", "[tier]")
        pw = _num(p, ln, "power_dbm")
        a, ln = need(t, "path_loss_exp", "[tier]")
        alpha = _num(a, ln, "path_loss_exp")
        if dens <= 0:
            raise ConfigError("density must be positive", t["density_per_km2"][1], "density_per_km2")
        if alpha <= 2:
            raise ConfigError("path-loss exponent must exceed 2", ln, "path_loss_exp")
        code = "siso"
        if "code" in t:
            code, ln = t["code"]
            try:
                code = OstbcCode.from_name(code).name
            except HetdivError as exc:
                raise ConfigError(str(exc), ln, "code") from None
        tiers_raw.append((dens, pw, alpha, code))

    v, ln = need(top, "rx_antennas", "top level")
    n_rx = _num(v, ln, "rx_antennas", int, 1)
    noise = None
    if "noise_dbm" in top:
        v, ln = top["noise_dbm"]
        noise = None if v.lower() == "none" else _num(v, ln, "noise_dbm")
    grid = (-10.0, 20.0, 13)
    if "grid" in top:
        grid = parse_grid(*top["grid"])
    schemes = ("IB_MRC",)
    if "schemes" in top:
        v, ln = top["schemes"]
        schemes = _schemes(v, ln)
    rate_loss = _bool(*top["rate_loss"], "rate_loss") if "rate_loss" in top else False

    kw = {}
    for key, kind, lo in (("iterations", int, 1), ("seed", int, 0),
                          ("mean_bs_per_tier", int, 1), ("resources_per_frame", int, 1)):
        if key in sim:
            v, ln = sim[key]
            kw[key] = _num(v, ln, key, kind, lo)
    if "seed" in kw and kw["seed"] >= 2 ** 64:
        raise ConfigError("seed must fit in 64 bits", sim["seed"][1], "seed")
    if "noisy_estimation" in sim:
        kw["noisy_estimation"] = _bool(*sim["noisy_estimation"], "noisy_estimation")
    if "combining" in sim:
        v, ln = sim["combining"]
        kw["combining"] = tuple(s.strip().upper() for s in v.split(",") if s.strip())
    scen = Scenario(tuple(tiers_raw), n_rx, noise, grid, schemes, rate_loss, SimSettings(**kw))
    try:
        scen.network
    except HetdivError as exc:
        raise ConfigError(str(exc)) from None
    return scen


def _schemes(text, line=None):
    from .analytic import Scheme

    out = []
    for s in str(text).split(","):
        if not s.strip():
            continue
        try:
            out.append(Scheme.parse(s).value)
        except HetdivError:
            raise ConfigError(f"unknown scheme {s.strip()!r}", line, "schemes") from None
    if not out:
        raise ConfigError("no schemes given", line, "schemes")
    return tuple(out)


def load_scenario(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}") from None
    return parse_scenario(text)


def bundled_scenario(name="table2"):
    """Scenario shipped in ``hetdiv/data``."""
    text = resources.files("hetdiv").joinpath("data").joinpath(f"{name}.scenario").read_text(encoding="utf-8")
    return parse_scenario(text)
