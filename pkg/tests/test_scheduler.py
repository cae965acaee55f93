import numpy as np
import pytest

from conftest import toy_scenario, window
from iesched.milp import MilpModel, SolveOptions, Status, solve
from iesched.probseq import ProbSeq, quantile_reserve
from iesched.scenario import apply_mode
from iesched.scheduler import (build_model, census, chance_constraint_rows, pwl_gap_bound,
                               pwl_segments, pwl_value, schedule)

EXACT = SolveOptions(mip_gap=1e-9)


class TestPwl:
    def test_example(self):
        segs = pwl_segments(0.01, 10, 0, 0, 100, 2)
        assert segs == [pytest.approx((10.5, 0.0)), pytest.approx((11.5, -50.0))]
        assert [s * 100 + i for s, i in segs] == pytest.approx([1050.0, 1100.0])
        assert pwl_value(segs, 100) == pytest.approx(1100.0)

    def test_linear(self):
        assert pwl_segments(0.0, 7.0, 3.0, 0, 10, 5) == [(7.0, 3.0)]

    def test_rejects_concave(self):
        with pytest.raises(ValueError):
            pwl_segments(-0.1, 1, 0, 0, 10, 3)

    def test_error_bound(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a, b, c = rng.uniform(0, 0.05), rng.uniform(5, 30), rng.uniform(0, 100)
            lo = rng.uniform(0, 50)
            hi = lo + rng.uniform(10, 200)
            k = int(rng.integers(1, 12))
            segs = pwl_segments(a, b, c, lo, hi, k)
            xs = rng.uniform(lo, hi, 1000)
            err = np.array([pwl_value(segs, x) for x in xs]) - (a * xs * xs + b * xs + c)
            assert err.min() >= -1e-9
            assert err.max() <= a * ((hi - lo) / k) ** 2 / 4 + 1e-9
            for x in np.linspace(lo, hi, k + 1):
                assert pwl_value(segs, x) == pytest.approx(a * x * x + b * x + c, abs=1e-9)


def min_admitted_reserve(seq, e, alpha):
    m = MilpModel()
    r = m.add_var("R", 0.0, 1e4)
    chance_constraint_rows(m, r, seq, e, alpha, big_l=e + 500 + seq.step_q)
    m.add_objective({r: 1.0})
    res = solve(m, EXACT)
    assert res.status == Status.OPTIMAL
    return res.objective


class TestChanceRows:
    def test_deterministic_zero(self):
        m = MilpModel()
        r = m.add_var("R")
        zs = chance_constraint_rows(m, r, ProbSeq(1.0, [1.0]), 0.0, 0.9, 10.0)
        m.add_objective({r: 1.0})
        res = solve(m)
        assert res.objective == 0.0 and res.values[zs[0]] == 1.0

    def test_full_coverage(self):
        seq = ProbSeq(5.0, [0.1, 0.2, 0.3, 0.4])
        assert min_admitted_reserve(seq, 12.5, 1.0) == pytest.approx(12.5)

    def test_matches_quantile(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            n = int(rng.integers(2, 25))
            seq = ProbSeq(float(rng.uniform(0.5, 5)), rng.dirichlet(np.ones(n) * 0.7))
            e = float(np.dot(np.arange(n) * seq.step_q, seq.probs))
            alpha = float(rng.uniform(0.5, 1.0))
            got = min_admitted_reserve(seq, e, alpha)
            want = quantile_reserve(seq, alpha, e)
            assert abs(got - want) <= seq.step_q + 1e-9

    def test_rejects_bad_args(self):
        m = MilpModel()
        r = m.add_var("R")
        with pytest.raises(ValueError):
            chance_constraint_rows(m, r, ProbSeq(1.0, [1.0]), 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            chance_constraint_rows(m, r, ProbSeq(1.0, [1.0]), 0.0, 0.5, 0.0)


class TestToy:
    def test_single_period(self):
        s = toy_scenario(load=30.0)
        sched, res = schedule(s, EXACT)
        assert res.status == Status.OPTIMAL
        assert sched.thermal_p[0, 0] == pytest.approx(30.0)
        u = s.thermal_units[0]
        segs = pwl_segments(u.a, u.b, u.c, u.p_min, u.p_max, s.pwl_segments)
        assert sched.objective == pytest.approx(pwl_value(segs, 30.0))
        assert sched.bess_s is None and sched.eb_p is None
        assert np.isnan(sched.hst_c).all()

    def test_off_breakpoint(self):
        s = toy_scenario(load=31.0)
        sched, _ = schedule(s, EXACT)
        assert 0 <= sched.cost_pwl["total"] - sched.cost_true["total"] <= pwl_gap_bound(s) + 1e-9

    def test_infeasible_load(self):
        with pytest.raises(RuntimeError):
            schedule(toy_scenario(load=80.0))


class TestModel:
    def test_census_mode_3(self, paper):
        s = apply_mode(paper, 3)
        m = build_model(s)
        c = census(s)
        assert c["total"] == m.num_vars
        n, N, T = 4, 2, 24
        expected = T * (3 * n + 4 * N + 2 * 2 + 5 + 1 + 4) + sum(len(x.probs) for x in s.dg_sequences)
        assert m.num_vars == expected
        assert m.num_integer == T + c["chance"]

    def test_census_quantile(self, paper):
        s = apply_mode(paper, 3).replace(chance_formulation="quantile")
        assert census(s)["chance"] == 0 and build_model(s).num_vars == census(s)["total"]

    def test_mode_1_has_no_devices(self, paper):
        m = build_model(apply_mode(paper, 1))
        assert not any(n.startswith(("Bch", "Bdc", "S_", "Rb", "Bu", "Hc_", "C_chp", "Peb"))
                       for n in m.var_names)

    def test_pure(self, paper):
        s = apply_mode(paper, 2)
        a, b = build_model(s), build_model(s)
        assert a.var_names == b.var_names
        assert (a.to_arrays().A != b.to_arrays().A).nnz == 0


@pytest.fixture(scope="module")
def reduced(paper):
    return window(apply_mode(paper, 3), 6, 6)


class TestReduced:
    def test_binary_equals_quantile(self, reduced):
        a, _ = schedule(reduced, EXACT)
        b, _ = schedule(reduced.replace(chance_formulation="quantile"), EXACT)
        assert a.objective == pytest.approx(b.objective, rel=1e-6)
        assert np.all(a.reserve_total >= a.reserve_required - 1e-6)

    def test_decomposition(self, reduced):
        sched, _ = schedule(reduced, EXACT)
        assert sched.cost_pwl["total"] == pytest.approx(sched.objective, rel=1e-9)
        excess = sched.cost_pwl["total"] - sched.cost_true["total"]
        assert -1e-6 <= excess <= pwl_gap_bound(reduced) + 1e-6
        assert sched.bess_s[-1] == pytest.approx(reduced.bess.s_min, abs=1e-9)
        for i, u in enumerate(reduced.chp_units):
            assert sched.hst_c[i, -1] == pytest.approx(u.hst.c_min, abs=1e-9)
        assert np.all(sched.curtailment >= 0)

    def test_alpha_monotone(self, reduced):
        objs = [schedule(reduced.replace(alpha=a, chance_formulation="quantile"), EXACT)[0].objective
                for a in (0.8, 0.9, 0.99)]
        assert objs[0] <= objs[1] * (1 + 1e-9) and objs[1] <= objs[2] * (1 + 1e-9)

    def test_implied_fixings_keep_optimum(self, reduced):
        from iesched.scheduler import build_model
        m = build_model(reduced)
        fixed = solve(m, EXACT)
        for j, n in enumerate(m.var_names):
            if n.startswith("z_"):
                m.lb[j] = 0.0
        free = solve(m, EXACT)
        assert free.status == Status.OPTIMAL
        assert free.objective == pytest.approx(fixed.objective, rel=1e-9)


def test_inertia_absorbs_night_wind_without_storage(paper):
    from iesched.scenario import Features
    s = apply_mode(paper, 1).replace(chance_formulation="quantile")
    with_inertia, _ = schedule(s, EXACT)
    frozen, _ = schedule(s.replace(features=Features(False, False, False, True, False)), EXACT)
    assert with_inertia.objective < frozen.objective
    assert with_inertia.curtailment[:7].sum() < frozen.curtailment[:7].sum() - 1.0
    assert with_inertia.indoor_temp.max() > s.setpoint
