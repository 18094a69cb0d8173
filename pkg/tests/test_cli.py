import io
import math
import subprocess
import sys

import numpy as np
import pytest

from hetdiv import analytic as an
from hetdiv import cli
from hetdiv import hetnet as hn
from hetdiv.errors import ConfigError, NumericalError
from hetdiv.results import ResultTable
from hetdiv.scenario import bundled_scenario, parse_grid, parse_scenario

SMALL = """\
rx_antennas = 2
noise_dbm = none
grid = -5:10:4
schemes = IB_MRC, IA_FC, IA_MRC

[tier]
density_per_km2 = 4
power_dbm = 46
path_loss_exp = 3.7
code = alamouti

[tier]
density_per_km2 = 16
power_dbm = 30
path_loss_exp = 3.7
code = alamouti

[sim]
iterations = 400
seed = 3
mean_bs_per_tier = 30
"""


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.scenario"
    p.write_text(SMALL)
    return str(p)


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    return ResultTable.from_csv(io.StringIO(text))


def test_bundled_scenario_matches_table2():
    scen = bundled_scenario()
    net, ref = scen.network, hn.table2_network()
    assert net.rx_antennas == ref.rx_antennas
    assert net.noise_power == pytest.approx(ref.noise_power)
    for a, b in zip(net.tiers, ref.tiers):
        assert (a.density, a.path_loss_exp, a.code.name) == pytest.approx(
            (b.density, b.path_loss_exp, b.code.name))
        assert a.power == pytest.approx(b.power)
    assert scen.thresholds_db.tolist() == np.linspace(-10, 20, 13).tolist()


def test_scenario_hash_tracks_semantic_fields():
    base = parse_scenario(SMALL)
    same = parse_scenario("# a comment\n" + SMALL.replace("= 4\n", "= 4.0   # macro\n", 1))
    assert base.digest() == same.digest()
    assert base.digest() != base.with_overrides(seed=4).digest()
    assert base.digest() != parse_scenario(SMALL.replace("power_dbm = 30", "power_dbm = 31")).digest()
    assert base.digest() != base.with_overrides(grid=(-5.0, 10.0, 5)).digest()


@pytest.mark.parametrize("text,line,key", [
    (SMALL + "bogus = 1\n", 22, "bogus"),
    (SMALL.replace("path_loss_exp = 3.7", "path_loss_exp = 1.9", 1), 9, "path_loss_exp"),
    (SMALL.replace("code = alamouti", "code = golden", 1), 10, "code"),
    (SMALL.replace("grid = -5:10:4", "grid = 5:1:3"), 3, "grid"),
    (SMALL.replace("iterations = 400", "iterations = x"), 19, "iterations"),
    (SMALL.replace("power_dbm = 46", "power_dbm = 46\npower_dbm = 40"), 9, "power_dbm"),
    (SMALL.replace("rx_antennas = 2\n", ""), None, "rx_antennas"),
], ids=["unknown", "alpha", "code", "grid", "int", "duplicate", "missing"])
def test_parser_errors_report_line_and_key(text, line, key):
    with pytest.raises(ConfigError) as exc:
        parse_scenario(text)
    assert exc.value.line == line and exc.value.key == key
    assert f"key '{key}'" in str(exc.value)
    if line is not None:
        assert f"line {line}" in str(exc.value)


def test_parse_grid():
    assert parse_grid("-10:20:13") == (-10.0, 20.0, 13)
    with pytest.raises(ConfigError):
        parse_grid("1:2")


def test_coverage_csv_round_trip(small, tmp_path, capsys):
    out = tmp_path / "cov.csv"
    code, _, _ = run(["coverage", "--scenario", small, "--out", str(out)], capsys)
    assert code == 0
    raw = out.read_bytes()
    assert b"\r\n" not in raw
    t = ResultTable.from_csv(str(out))
    assert t.columns == ("scheme", "threshold_db", "p_cov", "est_error", "method")
    assert set(t.metadata) == {"scenario_hash", "seed", "version"}
    assert t.metadata["scenario_hash"] == parse_scenario(SMALL).digest()
    net = parse_scenario(SMALL).network
    for s, d, p in zip(t.column("scheme"), t.column("threshold_db"), t.column("p_cov")):
        if s == "IB_MRC":
            # 17 significant digits survive the text round trip
            assert p == an.coverage_ib_mrc(net, 10 ** (d / 10))
    t2 = ResultTable(t.columns, t.rows, t.metadata)
    assert t2.to_text() == raw.decode()


def test_full_correlation_identity_in_cli(small, capsys):
    code, out, _ = run(["coverage", "--scenario", small], capsys)
    assert code == 0
    t = table(out)
    p = dict()
    for s, d, v in zip(t.column("scheme"), t.column("threshold_db"), t.column("p_cov")):
        p[(s, d)] = v
    for (s, d), v in p.items():
        if s == "IA_FC":
            assert v == p[("IB_MRC", d)]
        if s == "IA_MRC":
            assert v >= p[("IB_MRC", d)]


def test_simulate_is_seed_deterministic(small, capsys):
    argv = ["simulate", "--scenario", small, "--scheme", "IB_MRC,IA_MRC"]
    a = run(argv, capsys)[1]
    b = run(argv + ["--workers", "3"], capsys)[1]
    c = run(argv + ["--seed", "99"], capsys)[1]
    assert a == b
    assert a != c
    t = table(a)
    assert t.metadata["seed"] == 3 and t.metadata["iterations"] == 400


def test_simulate_compare_columns(small, capsys):
    code, out, err = run(["simulate", "--scenario", small, "--compare", "--scheme", "IB_MRC"],
                         capsys)
    assert code == 0
    t = table(out)
    assert t.columns == ("scheme", "threshold_db", "p_analytic", "est_error", "p_sim",
                         "wilson_low", "wilson_high", "se", "z")
    for lo, p, hi, z in zip(t.column("wilson_low"), t.column("p_sim"), t.column("wilson_high"),
                            t.column("z")):
        assert lo <= p <= hi
        assert math.isfinite(z)
    assert "interference moments" in err


def test_simulate_samples_dump(small, tmp_path, capsys):
    dump = tmp_path / "raw.csv"
    code, _, _ = run(["simulate", "--scenario", small, "--iterations", "20", "--scheme",
                      "IB_MRC", "--samples-out", str(dump)], capsys)
    assert code == 0
    assert len(dump.read_text().splitlines()) == 21


def test_negative_grid_override(small, capsys):
    code, out, _ = run(["coverage", "--scenario", small, "--grid=-10:0:3"], capsys)
    assert code == 0
    assert sorted(set(table(out).column("threshold_db"))) == [-10.0, -5.0, 0.0]


@pytest.mark.parametrize("argv", [
    ["coverage", "--scheme", "IA_MRC"],
    ["coverage", "--scheme", "NOPE"],
    ["simulate", "--scheme", "SC"],
    ["coverage", "--grid", "1:2"],
    ["coverage", "--scenario", "/nonexistent/x.scenario"],
])
def test_configuration_errors_exit_2(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 2
    assert out == ""
    assert "configuration error" in err


def test_numerical_failure_exits_3(small, tmp_path, capsys, monkeypatch):
    def boom(q, workers=1):
        raise NumericalError("did not converge", {"t": 1.0})

    monkeypatch.setattr(an, "evaluate_curve", boom)
    out = tmp_path / "x.csv"
    code, _, err = run(["coverage", "--scenario", small, "--out", str(out)], capsys)
    assert code == 3
    assert "numerical error" in err
    assert not out.exists()


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--seed", "-1"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_moments_command(tmp_path, capsys):
    scen = tmp_path / "one.scenario"
    scen.write_text(SMALL.replace("alamouti", "siso"))
    code, out, _ = run(["moments", "--scenario", str(scen), "--iterations", "4000"], capsys)
    assert code == 0
    t = table(out)
    assert t.column("quantity") == ["variance", "correlation"]
    ref = dict(zip(t.column("quantity"), t.column("reference")))
    assert float(ref["variance"]) == pytest.approx(hn.interference_variance(3.7, 1))
    assert float(ref["correlation"]) == 0.5


def test_console_script_version():
    r = subprocess.run([sys.executable, "-m", "hetdiv.cli", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and "hetdiv" in r.stdout
