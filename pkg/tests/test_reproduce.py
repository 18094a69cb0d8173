import os

import numpy as np
import pytest

from hetdiv import analytic as an
from hetdiv import hetnet as hn
from hetdiv import reproduce as rp
from hetdiv.errors import DomainError, NumericalError
from hetdiv.results import ResultTable


@pytest.mark.parametrize("fig", ["fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b"])
def test_fast_figures_write_checked_outputs(fig, tmp_path):
    paths = rp.reproduce(fig, str(tmp_path))
    assert all(os.path.exists(p) for p in paths)
    side = [p for p in paths if p.endswith(".txt")]
    assert len(side) == 1
    text = open(side[0]).read()
    assert "[ok]" in text and "FAILED" not in text
    for p in paths:
        if p.endswith(".csv"):
            t = ResultTable.from_csv(p)
            assert len(t.rows) > 3


def test_fig2a_values_match_direct_evaluation(tmp_path):
    rp.reproduce("fig2a", str(tmp_path))
    t = ResultTable.from_csv(str(tmp_path / "fig2a_N2.csv"))
    net = hn.table2_network(rx_antennas=2)
    for d, p in list(zip(t.column("threshold_db"), t.column("p_cov")))[::7]:
        assert p == pytest.approx(an.coverage_ib_mrc(net, 10 ** (d / 10)), abs=1e-12)


def test_unknown_figure():
    with pytest.raises(DomainError):
        rp.reproduce("fig99", ".")


def test_failed_check_blocks_writing(tmp_path):
    f = rp._Fig("figx")
    f.table("a", ["x"], [np.arange(3.0)])
    f.check("impossible", False)
    with pytest.raises(NumericalError):
        f.write(str(tmp_path))
    assert os.listdir(tmp_path) == []
