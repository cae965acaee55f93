import numpy as np
import pytest

from iesched.devices import (Bess, ChpUnit, Eb, Hst, ThermalUnit, bess_step,
                             chp_condensing_power, eb_heat_output, hst_step)

CHP = ChpUnit("CHP1", 100, 200, 250, 0.15, 50, 50, 0.0044, 13.29, 39, 16.2)
BESS = Bess(32, 160, 40, 0.9, 0.9, 150, 100, 20)
HST = Hst(40, 240, 50)


def test_condensing_power():
    u = ChpUnit("x", 0, 300, 300, 0.15, 1, 1, 0, 1, 0, 0)
    assert chp_condensing_power(u, 100, 200) == pytest.approx(130)
    assert chp_condensing_power(u, 100, 0) == 100
    assert chp_condensing_power(CHP, 200, 250) == pytest.approx(237.5)


def test_eb():
    assert eb_heat_output(Eb(30, 0.95), 30) == pytest.approx(28.5)
    assert eb_heat_output(Eb(30, 0.95), 0) == 0
    assert eb_heat_output(Eb(30, 1.0), 12.5) == 12.5
    with pytest.raises(ValueError):
        eb_heat_output(Eb(30, 0.95), 31)


def test_bess_step():
    assert bess_step(BESS, 100, 10, 0, 1) == pytest.approx(109)
    assert bess_step(BESS, 100, 0, 9, 1) == pytest.approx(90)
    assert bess_step(BESS, 100, 0, 0, 1) == 100


def test_bess_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(100):
        s0, x = rng.uniform(40, 120), rng.uniform(0, 40)
        s1 = bess_step(BESS, s0, x, 0, 1.0)
        back = bess_step(BESS, s1, 0, BESS.eff_ch * BESS.eff_dc * x, 1.0)
        assert back == pytest.approx(s0, abs=1e-12)


def test_hst_step():
    assert hst_step(HST, 100, 50, 1) == 50
    assert hst_step(HST, 100, -50, 1) == 150
    assert hst_step(HST, 100, 0, 1) == 100
    with pytest.raises(ValueError):
        hst_step(HST, 100, 60, 1)


def test_hst_lossless():
    rng = np.random.default_rng(1)
    p = rng.uniform(-20, 20, 10)
    p = np.append(p, -p.sum())
    c = 100.0
    for x in p:
        c = hst_step(HST, c, float(x), 1.0)
    assert c == pytest.approx(100.0, abs=1e-12)


def test_release_only_drains():
    c, seq = 200.0, []
    for x in np.random.default_rng(2).uniform(0, 10, 12):
        c = hst_step(HST, c, float(x), 1.0)
        seq.append(c)
    assert np.all(np.diff(seq) <= 0)


@pytest.mark.parametrize("ctor", [
    lambda: ThermalUnit("g", 30, 20, 1, 1, 0, 1, 0, 0),
    lambda: ThermalUnit("g", 0, 20, 1, 1, -0.1, 1, 0, 0),
    lambda: ChpUnit("c", 0, 100, 0, 0.1, 1, 1, 0, 1, 0, 0),
    lambda: Bess(50, 40, 10, 0.9, 0.9, 0, 0, 0),
    lambda: Bess(0, 40, 10, 1.2, 0.9, 0, 0, 0),
    lambda: Hst(10, 5, 1),
    lambda: Eb(0, 0.9),
])
def test_invariants(ctor):
    with pytest.raises(ValueError):
        ctor()


def test_error_names_unit():
    with pytest.raises(ValueError, match="G7"):
        ThermalUnit("G7", 30, 20, 1, 1, 0, 1, 0, 0)
