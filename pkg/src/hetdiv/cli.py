"""Command-line front end.

Verbs: ``coverage``, ``simulate``, ``reproduce``, ``moments``.  Exit status is
0 on success, 2 for configuration errors and 3 for numerical failures.
"""

import argparse
import math
import sys

from . import __version__
from . import analytic as an
from . import montecarlo as mc
from .errors import (ConfigError, DomainError, HetdivError, NumericalError,
                     UnsupportedConfigurationError)
from .hetnet import OstbcCode, interference_correlation, interference_variance
from .reproduce import FIGURES, reproduce
from .results import ResultTable
from .scenario import bundled_scenario, load_scenario, parse_grid

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# simulated receiver -> analytic counterpart
_SIM_TO_ANALYTIC = {
    "IB_MRC": "IB_MRC", "IB_MRC_EXACT": "IB_MRC", "IA_MRC_SIMPLIFIED": "IA_MRC",
    "IA_MRC_EXACT": "IA_MRC", "SC": "SC", "IA_NC": "IA_NC", "IA_FC": "IA_FC", "SISO": "SISO",
}


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="hetdiv", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, sim=False):
        sp.add_argument("--scenario", help="scenario file (default: bundled table2)")
        sp.add_argument("--out", help="output CSV path (default: standard output)")
        sp.add_argument("--scheme", help="comma-separated scheme names")
        sp.add_argument("--grid", help="threshold grid START:STOP:COUNT in dB")
        sp.add_argument("--rate-loss", action="store_true", help="use rate-adjusted thresholds")
        sp.add_argument("--workers", type=_positive, default=1)
        if sim:
            sp.add_argument("--seed", type=_u64)
            sp.add_argument("--iterations", type=_positive)
            sp.add_argument("--compare", action="store_true",
                            help="join with analytic curves and report z-scores")
            sp.add_argument("--noisy-estimation", action="store_true")
            sp.add_argument("--samples-out", help="raw per-iteration CSV dump")

    common(sub.add_parser("coverage", help="analytic coverage curves"))
    common(sub.add_parser("simulate", help="Monte Carlo coverage curves"), sim=True)
    rp = sub.add_parser("reproduce", help="write figure data")
    rp.add_argument("figure", choices=sorted(FIGURES))
    rp.add_argument("--out", default=".", help="output directory")
    rp.add_argument("--seed", type=_u64, default=1)
    rp.add_argument("--iterations", type=_positive, default=20000)
    rp.add_argument("--workers", type=_positive, default=1)
    mp = sub.add_parser("moments", help="Monte Carlo interference moments")
    mp.add_argument("--scenario")
    mp.add_argument("--out")
    mp.add_argument("--seed", type=_u64, default=0)
    mp.add_argument("--iterations", type=_positive, default=10 ** 6)
    return p


def _scenario(args):
    scen = load_scenario(args.scenario) if args.scenario else bundled_scenario()
    over = {}
    if getattr(args, "grid", None):
        over["grid"] = parse_grid(args.grid, key="--grid")
    if getattr(args, "rate_loss", False):
        over["rate_loss"] = True
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "iterations", None) is not None:
        over["iterations"] = args.iterations
    if getattr(args, "noisy_estimation", False):
        over["noisy_estimation"] = True
    return scen.with_overrides(**over)


def _schemes(args, default):
    if not args.scheme:
        return default
    return tuple(s.strip().upper() for s in args.scheme.split(",") if s.strip())


def _meta(scen, seed=None):
    return {"scenario_hash": scen.digest(), "seed": -1 if seed is None else seed,
            "version": __version__}


def _emit(table, path):
    table.validate()
    if path:
        table.to_csv(path)
    else:
        table.to_csv(sys.stdout)


def _analytic_curves(scen, schemes, workers):
    net = scen.network
    out = {}
    for name in schemes:
        try:
            scheme = an.Scheme.parse(name)
        except DomainError:
            raise ConfigError(f"unknown analytic scheme {name!r}", key="--scheme") from None
        q = an.CoverageQuery(net, tuple(scen.thresholds), scheme, scen.rate_loss)
        try:
            out[scheme.value] = an.evaluate_curve(q, workers=workers)
        except NumericalError as exc:
            raise NumericalError(f"scheme {scheme.value} failed", exc.context) from None
    return out


def cmd_coverage(args):
    scen = _scenario(args)
    curves = _analytic_curves(scen, _schemes(args, scen.schemes), args.workers)
    table = ResultTable(("scheme", "threshold_db", "p_cov", "est_error", "method"),
                        metadata=_meta(scen))
    for name, c in curves.items():
        for d, p, e in zip(scen.thresholds_db, c.probabilities, c.est_abs_error):
            table.add(name, float(d), float(p), float(e), c.method)
    _emit(table, args.out)
    return table


def _sim_names(names):
    out = []
    for n in names:
        if n.upper() == "SISO":
            out.append("SISO")
            continue
        try:
            out.append(mc.SimScheme.parse(n).value)
        except DomainError:
            raise ConfigError(f"unknown simulation scheme {n!r}", key="--scheme") from None
    return out


def cmd_simulate(args):
    scen = _scenario(args)
    names = _sim_names(_schemes(args, scen.sim.combining or scen.schemes))
    net = scen.network
    s = scen.sim
    th = tuple(scen.thresholds)
    plain = [n for n in names if n != "SISO"]
    curves, moments, result = {}, {}, None
    if plain:
        cfg = mc.SimConfig(net, s.iterations, th, frozenset(plain), s.mean_bs_per_tier,
                           s.resources_per_frame, s.seed, s.noisy_estimation,
                           rate_loss=scen.rate_loss, keep_samples=bool(args.samples_out))
        result = mc.run(cfg, workers=args.workers)
        curves.update({k.value: v for k, v in result.curves.items()})
        moments = result.moments
    if "SISO" in names:
        siso = net.with_codes(OstbcCode(1, 1, 1)).replace(rx_antennas=1)
        cfg = mc.SimConfig(siso, s.iterations, th, frozenset({"IB_MRC"}), s.mean_bs_per_tier,
                           s.resources_per_frame, s.seed, moments=False)
        curves["SISO"] = mc.run(cfg, workers=args.workers).curves[mc.SimScheme.IB_MRC]
    if args.samples_out and result is not None:
        mc.write_samples_csv(result, args.samples_out)

    meta = _meta(scen, s.seed)
    meta["iterations"] = s.iterations
    if args.compare:
        need = sorted({_SIM_TO_ANALYTIC[n] for n in names})
        ana = _analytic_curves(scen, need, args.workers)
        table = ResultTable(("scheme", "threshold_db", "p_analytic", "est_error", "p_sim",
                             "wilson_low", "wilson_high", "se", "z"), metadata=meta)
        for n in names:
            c = curves[n]
            a = ana[_SIM_TO_ANALYTIC[n]]
            for i, d in enumerate(scen.thresholds_db):
                pa = float(a.probabilities[i])
                se = float(c.se[i])
                z = (float(c.p_cov[i]) - pa) / se if se > 0 else math.nan
                table.add(n, float(d), pa, float(a.est_abs_error[i]), float(c.p_cov[i]),
                          float(c.wilson_low[i]), float(c.wilson_high[i]), se, z)
    else:
        table = ResultTable(("scheme", "threshold_db", "p_cov", "est_error", "method",
                             "wilson_low", "wilson_high"), metadata=meta)
        for n in names:
            c = curves[n]
            for i, d in enumerate(scen.thresholds_db):
                table.add(n, float(d), float(c.p_cov[i]), float(c.se[i]), "monte_carlo",
                          float(c.wilson_low[i]), float(c.wilson_high[i]))
    _emit(table, args.out)
    if moments:
        print(_moment_text(moments, net), file=sys.stderr)
    return table


def _moment_text(m, net):
    parts = [f"interference moments ({m['samples']} samples): "
             f"variance {m['variance']:.4f} +/- {m['variance_se']:.4f}"]
    if "correlation" in m:
        parts.append(f"correlation {m['correlation']:.4f}")
    codes = {t.code.s_active for t in net.tiers}
    if net.equal_alpha and len(codes) == 1:
        s_act = codes.pop()
        parts.append(f"reference variance {interference_variance(net.tiers[0].path_loss_exp, s_act):.4f}"
                     f" correlation {interference_correlation(s_act):.4f}")
    return "; ".join(parts)


def cmd_moments(args):
    scen = load_scenario(args.scenario) if args.scenario else bundled_scenario()
    net = scen.network
    m = mc.interference_moments(net, args.iterations, seed=args.seed,
                                mean_bs_per_tier=scen.sim.mean_bs_per_tier,
                                n_rx=max(net.rx_antennas, 2))
    table = ResultTable(("quantity", "estimate", "std_error", "reference"), metadata=_meta(scen, args.seed))
    codes = {t.code.s_active for t in net.tiers}
    ref_v = ref_c = math.nan
    if net.equal_alpha and len(codes) == 1:
        s_act = next(iter(codes))
        ref_v = interference_variance(net.tiers[0].path_loss_exp, s_act)
        ref_c = interference_correlation(s_act)
    table.add("variance", m["variance"], m["variance_se"], ref_v)
    table.add("correlation", m["correlation"], m["correlation_se"], ref_c)
    _emit(table, args.out)
    return table


def cmd_reproduce(args):
    paths = reproduce(args.figure, args.out, iterations=args.iterations, seed=args.seed,
                      workers=args.workers)
    for p in paths:
        print(p)
    return paths


_COMMANDS = {"coverage": cmd_coverage, "simulate": cmd_simulate, "moments": cmd_moments,
             "reproduce": cmd_reproduce}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.verb](args)
    except NumericalError as exc:
        print(f"hetdiv: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DomainError, UnsupportedConfigurationError) as exc:
        print(f"hetdiv: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HetdivError as exc:
        print(f"hetdiv: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"hetdiv: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
