import numpy as np
import pytest

from iesched.building import (BuildingParams, ComfortBand, comfort_membership,
                              demand_coefficients, heating_demand, indoor_temp_step)

B = BuildingParams(0.5, 2.3e7, 5e7, 1.007, 1.2)


def test_derived_constants():
    assert B.kf_mw == pytest.approx(11.5)
    assert B.capacity_mwh == pytest.approx(1.007e3 * 1.2 * 5e7 / 3.6e9)
    assert 0 < B.tau_h < 10


@pytest.mark.parametrize("field", ["k_transfer", "surface_f", "volume_v", "c_air", "rho_air"])
def test_rejects_nonpositive(field):
    kw = dict(k_transfer=0.5, surface_f=2.3e7, volume_v=5e7, c_air=1.007, rho_air=1.2)
    kw[field] = 0.0
    with pytest.raises(ValueError):
        BuildingParams(**kw)


def test_equilibrium():
    assert indoor_temp_step(B, -5.0, -5.0, 0.0, 1.0) == pytest.approx(-5.0)


def test_steady_state_fixed_point():
    p = B.kf_mw * (20 - (-10))
    assert indoor_temp_step(B, 20.0, -10.0, p, 1.0) == pytest.approx(20.0, abs=1e-12)


def test_cooling_toward_outdoor():
    t1 = indoor_temp_step(B, 20.0, -10.0, 0.0, 1.0)
    t2 = indoor_temp_step(B, 20.0, -10.0, 0.0, 2.0)
    assert -10 < t2 < t1 < 20


def test_steady_demand_is_345():
    assert heating_demand(B, 20.0, 20.0, -10.0, 1.0) == pytest.approx(345.0, abs=1e-9)


def test_zero_demand_at_outdoor_temp():
    assert heating_demand(B, 3.0, 3.0, 3.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_inverse_pair():
    rng = np.random.default_rng(0)
    for _ in range(500):
        now, prev, od = rng.uniform(10, 26), rng.uniform(10, 26), rng.uniform(-25, 5)
        dt = rng.uniform(0.1, 3)
        p = heating_demand(B, now, prev, od, dt)
        assert abs(indoor_temp_step(B, prev, od, p, dt) - now) < 1e-9


def test_fixed_point_over_a_day():
    t = 20.0
    for _ in range(24):
        t = indoor_temp_step(B, t, -12.0, B.kf_mw * 32.0, 1.0)
    assert abs(t - 20.0) < 1e-9


def test_monotone():
    base = heating_demand(B, 21.0, 20.0, -10.0, 1.0)
    assert heating_demand(B, 21.5, 20.0, -10.0, 1.0) > base
    assert heating_demand(B, 21.0, 20.0, -8.0, 1.0) < base


def test_affine():
    rng = np.random.default_rng(1)
    a_now, a_prev, a_od = demand_coefficients(B, 1.0)
    for _ in range(100):
        x, y = rng.uniform(-20, 25, 3), rng.uniform(-20, 25, 3)
        lam = rng.uniform(-2, 2)
        z = lam * x + (1 - lam) * y
        f = lambda v: heating_demand(B, v[0], v[1], v[2], 1.0)  # noqa: E731
        assert f(z) == pytest.approx(lam * f(x) + (1 - lam) * f(y), abs=1e-8)
        assert f(x) == pytest.approx(a_now * x[0] + a_prev * x[1] + a_od * x[2], abs=1e-8)


def test_membership():
    band = ComfortBand()
    assert comfort_membership(band, 21.0) == 1.0
    assert comfort_membership(band, band.t_a) == 0.0
    assert comfort_membership(band, 19.0) == pytest.approx(0.5)
    assert comfort_membership(band, 23.0) == pytest.approx(0.5)
    assert comfort_membership(band, 30.0) == 0.0


def test_band_order():
    with pytest.raises(ValueError):
        ComfortBand(20, 18, 22, 24)
