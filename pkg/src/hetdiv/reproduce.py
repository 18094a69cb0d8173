"""Figure recipes: parameterized curve sets with machine-checked features.

Every recipe computes its curves, checks the expected qualitative features
and only then writes ``<id>_<curve>.csv`` files plus a ``<id>.txt`` sidecar
listing each feature with its outcome.
"""

import math
import os

import numpy as np

from . import analytic as an
from . import montecarlo as mc
from .errors import DomainError, NumericalError
from .hetnet import NetworkConfig, OstbcCode, TierConfig, table2_network
from .results import write_csv
from .specfun import erlang_ccdf

__all__ = ["FIGURES", "reproduce"]


def _db(lo, hi, step=1.0):
    return np.arange(lo, hi + 0.5 * step, step)


def _lin(db):
    return 10.0 ** (np.asarray(db) / 10.0)


def equal_alpha_network(n_rx, code="siso", alpha=3.7):
    """Table II densities and powers, common exponent, no noise."""
    base = table2_network(noise_dbm=None)
    c = OstbcCode.from_name(code)
    return NetworkConfig(tuple(TierConfig(t.density, t.power, alpha, c) for t in base.tiers),
                         n_rx, 0.0)


def _curve(net, scheme, db, rate_loss=False):
    q = an.CoverageQuery(net, tuple(_lin(db)), scheme, rate_loss)
    c = an.evaluate_curve(q)
    return c.probabilities, np.asarray(c.est_abs_error)


def _nonincreasing(p, tol=1e-9):
    return bool(np.all(np.diff(p) <= tol))


class _Fig:
    def __init__(self, fig_id):
        self.id = fig_id
        self.tables = {}
        self.checks = []
        self.notes = []

    def table(self, name, header, columns):
        self.tables[name] = (header, list(zip(*columns)))

    def check(self, text, ok):
        self.checks.append((text, bool(ok)))

    def write(self, out_dir):
        failed = [t for t, ok in self.checks if not ok]
        if failed:
            raise NumericalError(f"{self.id}: expected features not met", {"failed": failed})
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        for name, (header, rows) in self.tables.items():
            p = os.path.join(out_dir, f"{self.id}_{name}.csv")
            write_csv(p, header, rows)
            paths.append(p)
        side = os.path.join(out_dir, f"{self.id}.txt")
        with open(side, "w", encoding="utf-8", newline="\n") as fh:
            for n in self.notes:
                fh.write(n + "\n")
            fh.write("\nExpected features (checked before writing):\n")
            for t, ok in self.checks:
                fh.write(f"  [{'ok' if ok else 'FAILED'}] {t}\n")
        paths.append(side)
        return paths


def fig2a(**_):
    f = _Fig("fig2a")
    f.notes.append("IB-MRC coverage, three-tier reference network, noise -104 dBm, "
                   "tier-1 code (4,4,3/4).")
    db = _db(-10, 20)
    curves = {}
    for n in (1, 2, 4):
        p, e = _curve(table2_network(rx_antennas=n), "IB_MRC", db)
        curves[n] = p
        f.table(f"N{n}", ["threshold_db", "p_cov", "est_error"], [db, p, e])
        f.check(f"N={n} curve nonincreasing in T", _nonincreasing(p))
    f.check("N=4 >= N=2 >= N=1 at every T",
            np.all(curves[4] >= curves[2] - 1e-12) and np.all(curves[2] >= curves[1] - 1e-12))
    return f


def fig2b(**_):
    f = _Fig("fig2b")
    f.notes.append("IA-MRC coverage, common exponent 3.7, no noise, Alamouti in all tiers; "
                   "N=1 is the single-antenna receiver.")
    db = _db(-10, 20)
    p1, e1 = _curve(equal_alpha_network(1, "alamouti"), "IB_MRC", db)
    p2, e2 = _curve(equal_alpha_network(2, "alamouti"), "IA_MRC", db)
    b2, _ = _curve(equal_alpha_network(2, "alamouti"), "IB_MRC", db)
    f.table("N1", ["threshold_db", "p_cov", "est_error"], [db, p1, e1])
    f.table("N2", ["threshold_db", "p_cov", "est_error"], [db, p2, e2])
    f.check("curves nonincreasing in T", _nonincreasing(p1) and _nonincreasing(p2))
    f.check("N=2 above N=1 at every T", np.all(p2 >= p1 - 1e-12))
    f.check("IA-MRC not below IB-MRC at N=2", np.all(p2 >= b2 - 1e-9))
    return f


def fig3a(**_):
    f = _Fig("fig3a")
    f.notes.append("Relative gain of IA-MRC over IB-MRC, N=2, exponent 3.7, no noise.")
    db = _db(-10, 20)
    gains = {}
    for m, code in ((1, "siso"), (2, "alamouti")):
        net = equal_alpha_network(2, code)
        ia, _ = _curve(net, "IA_MRC", db)
        ib, _ = _curve(net, "IB_MRC", db)
        gains[m] = ia / ib - 1.0
        f.table(f"M{m}", ["threshold_db", "delta"], [db, gains[m]])
        f.check(f"M={m}: gain in [0, 0.02)", np.all(gains[m] > -1e-9) and np.all(gains[m] < 0.02))
    sel = db >= 0
    f.check("M=2 gain below M=1 gain for T >= 0 dB", np.all(gains[2][sel] < gains[1][sel]))
    return f


def fig3b(**_):
    f = _Fig("fig3b")
    f.notes.append("MISO (N=1) IB coverage with rate-loss thresholds, noise -104 dBm, "
                   "same code in every tier.")
    db = _db(-10, 20)
    p = {}
    for code in ("siso", "alamouti", "4,4,3/4", "4,4,1/2"):
        net = table2_network(rx_antennas=1).with_codes(OstbcCode.from_name(code))
        p[code], e = _curve(net, "IB_MRC", db, rate_loss=True)
        f.table(code.replace(",", "-").replace("/", "_"),
                ["threshold_db", "p_cov", "est_error"], [db, p[code], e])
    lo, hi = db <= -10, db >= 10
    f.check("low T: Alamouti and (4,4,3/4) above single antenna",
            np.all(p["alamouti"][lo] > p["siso"][lo]) and np.all(p["4,4,3/4"][lo] > p["siso"][lo]))
    f.check("T >= 10 dB: rate-3/4 and rate-1/2 codes below single antenna",
            np.all(p["4,4,3/4"][hi] < p["siso"][hi]) and np.all(p["4,4,1/2"][hi] < p["siso"][hi]))
    return f


_ALPHAS = (3.0, 3.5, 4.0, 4.5, 5.0)


def fig4a(**_):
    f = _Fig("fig4a")
    f.notes.append("Relative gain of IB-MRC over SISO, M=1, N=2, no noise.")
    db = _db(-10, 30)
    rows = {}
    for a in _ALPHAS:
        g = np.array([an.relative_gain_ib(a, t) for t in _lin(db)])
        rows[a] = g
        f.table(f"alpha{a:g}", ["threshold_db", "delta"], [db, g])
        f.check(f"alpha={a:g}: increasing in T", np.all(np.diff(g) > 0))
        f.check(f"alpha={a:g}: saturates (change over last 5 dB < 0.005)",
                abs(g[-1] - g[-6]) < 0.005)
    f.check("decreasing in alpha at every T",
            all(np.all(rows[b] < rows[a]) for a, b in zip(_ALPHAS, _ALPHAS[1:])))
    return f


def fig4b(**_):
    f = _Fig("fig4b")
    f.notes.append("Additional gain of IA-MRC over IB-MRC relative to SISO, M=1, N=2, no noise.")
    db = _db(-10, 20)
    for a in _ALPHAS:
        g = np.array([an.relative_gain_ia(a, t) - an.relative_gain_ib(a, t) for t in _lin(db)])
        f.table(f"alpha{a:g}", ["threshold_db", "delta_extra"], [db, g])
        f.check(f"alpha={a:g}: additional gain in [0, 0.03]",
                np.all(g >= -1e-9) and np.all(g <= 0.03))
        if a == 4.0:
            peak = db[int(np.argmax(g))]
            f.check("alpha=4: peak inside -5..10 dB", -5 <= peak <= 10)
    return f


def fig5a(**_):
    f = _Fig("fig5a")
    f.notes.append("Surface of SISO-relative gains over (alpha, T), M=1, N=2, no noise.")
    alphas = np.round(np.arange(3.0, 5.0001, 0.1), 10)
    db = _db(-10, 20)
    aa, tt, gib, gex = [], [], [], []
    for a in alphas:
        for d, t in zip(db, _lin(db)):
            ib = an.relative_gain_ib(a, t)
            aa.append(a)
            tt.append(d)
            gib.append(ib)
            gex.append(an.relative_gain_ia(a, t) - ib)
    aa, tt, gib, gex = map(np.array, (aa, tt, gib, gex))
    f.table("surface", ["alpha", "threshold_db", "delta_ib", "delta_ia_extra"], [aa, tt, gib, gex])
    dom = (aa >= 3.2 - 1e-9) & (aa <= 4.8 + 1e-9) & (tt >= -6) & (tt <= 12)
    f.check("IB gain in (0.12, 0.66) for 3.2 <= alpha <= 4.8, -6 <= T <= 12 dB",
            np.all((gib[dom] > 0.12) & (gib[dom] < 0.66)))
    f.check("IA additional gain in [0, 0.03] on the whole surface",
            np.all((gex >= -1e-9) & (gex <= 0.03)))
    return f


def fig6a(**_):
    f = _Fig("fig6a")
    f.notes.append("Deviation of the no- and full-correlation models from the exact IA-MRC "
                   "coverage, N=2, exponent 3.7, no noise.")
    db = _db(-10, 20)
    nc = {}
    for m, code in ((1, "siso"), (2, "alamouti")):
        net = equal_alpha_network(2, code)
        ex, _ = _curve(net, "IA_MRC", db)
        p_nc, _ = _curve(net, "IA_NC", db)
        p_fc, _ = _curve(net, "IA_FC", db)
        nc[m] = p_nc / ex - 1.0
        fc = p_fc / ex - 1.0
        f.table(f"M{m}", ["threshold_db", "delta_nc", "delta_fc"], [db, nc[m], fc])
        f.check(f"M={m}: NC optimistic, FC pessimistic", np.all(nc[m] > 0) and np.all(fc < 0))
        f.check(f"M={m}: |delta_fc| < 0.02", np.all(np.abs(fc) < 0.02))
        f.check(f"M={m}: both within 0.005 at -10 dB", abs(nc[m][0]) < 0.005 and abs(fc[0]) < 0.005)
    i10 = int(np.flatnonzero(db == 10)[0])
    f.check("delta_nc at 10 dB in (0.03, 0.08) for M=1 and M=2",
            all(0.03 < nc[m][i10] < 0.08 for m in (1, 2)))
    f.check("delta_nc larger for M=2 at T >= 0 dB", np.all(nc[2][db >= 0] > nc[1][db >= 0]))
    return f


def fig6b(**_):
    f = _Fig("fig6b")
    f.notes.append("IA-MRC outage at small T for the exact, no- and full-correlation models, "
                   "N=2, exponent 3.7, no noise.")
    db = _db(-40, 0, 2.0)
    for m, code in ((1, "siso"), (2, "alamouti")):
        net = equal_alpha_network(2, code)
        cols = {
            "exact": [an.outage_ia_mrc(net, t) for t in _lin(db)],
            "nc": [an.outage_ia_mrc(net, t, model="nocorr") for t in _lin(db)],
            "fc": [an.outage_ib_mrc(net, t) for t in _lin(db)],
        }
        f.table(f"M{m}", ["threshold_db", "outage_exact", "outage_nc", "outage_fc"],
                [db] + [np.array(v) for v in cols.values()])
        for name, v in cols.items():
            v = np.array(v)
            slope = math.log(v[1] / v[0]) / math.log(_lin(db[1]) / _lin(db[0]))
            f.check(f"M={m} {name}: small-T slope {slope:.3f} within 10% of {2 * m}",
                    abs(slope - 2 * m) <= 0.2 * m)
    return f


def fig8(iterations=20000, seed=1, workers=None, **_):
    f = _Fig("fig8")
    f.notes.append("Relative gain of MRC over SC, M=1, exponent 3.7, no noise. IA-MRC at N=4 "
                   f"is simulated ({iterations} iterations, seed {seed}); the interference-free "
                   "reference uses average SNR 5 dB.")
    db = _db(-10, 20)
    th = _lin(db)
    gains = {}
    for n in (2, 4):
        net = equal_alpha_network(n)
        sc, _ = _curve(net, "SC", db)
        ib, _ = _curve(net, "IB_MRC", db)
        gains[("IB", n)] = ib / sc - 1.0
        if n == 2:
            ia, _ = _curve(net, "IA_MRC", db)
            gains[("IA", 2)] = ia / sc - 1.0
        else:
            cfg = mc.SimConfig(net, iterations, tuple(th), {"IA_MRC_SIMPLIFIED"}, rng_seed=seed,
                               moments=False)
            res = mc.run(cfg, workers=workers or 1)
            gains[("IA", 4)] = res.curves[mc.SimScheme.IA_MRC_SIMPLIFIED].p_cov / sc - 1.0
        x = th / 10.0 ** 0.5
        gains[("free", n)] = erlang_ccdf(n, x) / (-np.expm1(n * np.log(-np.expm1(-x)))) - 1.0
    for (kind, n), g in gains.items():
        f.table(f"{kind}_N{n}", ["threshold_db", "delta"], [db, g])
    for kind in ("IB", "IA"):
        f.check(f"{kind}: gain positive for T >= -5 dB", np.all(gains[(kind, 2)][db >= -5] > 0))
        f.check(f"{kind}: N=4 gain above N=2 for T >= 0 dB",
                np.all(gains[(kind, 4)][db >= 0] > gains[(kind, 2)][db >= 0]))
    for n in (2, 4):
        g = gains[("IB", n)]
        free = gains[("free", n)]
        f.check(f"IB N={n}: saturates (change over last 5 dB < 0.01) while the "
                f"interference-free gain grows by > 1",
                abs(g[-1] - g[-6]) < 0.01 and free[-1] - free[-6] > 1.0)
    return f


FIGURES = {
    "fig2a": fig2a, "fig2b": fig2b, "fig3a": fig3a, "fig3b": fig3b, "fig4a": fig4a,
    "fig4b": fig4b, "fig5a": fig5a, "fig6a": fig6a, "fig6b": fig6b, "fig8": fig8,
}


def reproduce(fig_id, out_dir, **kw):
    """Compute, check and write one figure; returns the written paths."""
    try:
        recipe = FIGURES[fig_id.lower()]
    except KeyError:
        raise DomainError(f"unknown figure id {fig_id!r}; choose from {', '.join(FIGURES)}") from None
    return recipe(**kw).write(out_dir)
