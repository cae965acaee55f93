import copy

import numpy as np
import pytest

from conftest import window
from iesched.harness import (ValidationReport, audit_discretization, monte_carlo_reserve_check,
                             period_rng, sample_dg, validate_schedule)
from iesched.milp import SolveOptions
from iesched.probseq import PvParams, WindParams
from iesched.scenario import apply_mode
from iesched.scheduler import schedule


@pytest.fixture(scope="module")
def solved(paper):
    s = window(apply_mode(paper, 3), 6, 6)
    sched, _ = schedule(s, SolveOptions(mip_gap=1e-9))
    return s, sched


def with_reserve(sched, r):
    out = copy.deepcopy(sched)
    out.reserve_total = np.asarray(r, dtype=float)
    return out


class TestMonteCarlo:
    def test_full_reserve(self, solved):
        s, sched = solved
        cov = monte_carlo_reserve_check(s, with_reserve(sched, s.expected_dg), 10_000, seed=1)
        assert np.all(cov == 1.0)

    def test_no_reserve(self, solved):
        s, sched = solved
        cov = monte_carlo_reserve_check(s, with_reserve(sched, np.zeros(s.horizon)), 10_000, seed=1)
        assert np.all(cov < 1.0)

    def test_solved_schedule(self, solved):
        s, sched = solved
        cov = monte_carlo_reserve_check(s, sched, 100_000, seed=3)
        assert np.all(cov >= s.alpha - 0.015)

    def test_quantile_formulation_also_passes(self, solved):
        s, _ = solved
        q = s.replace(chance_formulation="quantile")
        sched, _ = schedule(q, SolveOptions(mip_gap=1e-9))
        assert np.all(monte_carlo_reserve_check(q, sched, 100_000, seed=3) >= s.alpha - 0.015)

    def test_sample_floor(self, solved):
        with pytest.raises(ValueError):
            monte_carlo_reserve_check(*solved, n=100)

    def test_seeded(self, solved):
        s, sched = solved
        a = monte_carlo_reserve_check(s, sched, 10_000, seed=5)
        b = monte_carlo_reserve_check(s, sched, 10_000, seed=5)
        assert np.array_equal(a, b)

    def test_period_streams_independent_of_order(self, solved):
        s, _ = solved
        fwd = [sample_dg(s, t, 100, 9) for t in range(s.horizon)]
        bwd = [sample_dg(s, t, 100, 9) for t in reversed(range(s.horizon))][::-1]
        assert all(np.array_equal(a, b) for a, b in zip(fwd, bwd))
        assert not np.array_equal(period_rng(9, 0).random(4), period_rng(9, 1).random(4))


class TestReplay:
    def test_clean(self, solved):
        s, sched = solved
        rep = validate_schedule(s, sched)
        assert rep.passed, rep.residuals
        assert max(rep.residuals.values()) <= 1e-6

    def test_extra_megawatt(self, solved):
        s, sched = solved
        bad = copy.deepcopy(sched)
        bad.thermal_p[1, 2] += 1.0
        rep = validate_schedule(s, bad)
        assert rep.residuals["electric_balance"] == pytest.approx(1.0, abs=1e-6)
        assert "electric_balance" in rep.failures

    def test_terminal_fault(self, solved):
        s, sched = solved
        bad = copy.deepcopy(sched)
        bad.bess_s[-1] += 5.0
        rep = validate_schedule(s, bad)
        assert not rep.verdicts["terminal_state"]

    def test_dimension_mismatch(self, solved, paper):
        _, sched = solved
        with pytest.raises(ValueError):
            validate_schedule(apply_mode(paper, 3), sched)

    def test_report_consistent(self, solved):
        s, sched = solved
        rep = validate_schedule(s, sched, mc_samples=10_000, seed=2)
        again = ValidationReport(dict(rep.residuals), rep.tol, rep.seed, rep.alpha,
                                 rep.coverage, rep.coverage_allowance, rep.mc_samples)
        assert again.verdicts == rep.verdicts
        d = rep.to_dict()
        assert d["seed"] == 2 and len(d["coverage"]) == s.horizon
        assert rep.to_dict() == validate_schedule(s, sched, mc_samples=10_000, seed=2).to_dict()


class TestAudit:
    def test_zero_output(self):
        assert audit_discretization(None, 1.0, 10_000) == 0.0

    def test_fine_wind(self):
        w = WindParams(3, 15, 25, 60, 2.0, 10.0)
        assert audit_discretization(w, 1.0, 100_000, seed=4) < 0.01

    def test_fine_pv(self):
        assert audit_discretization(PvParams(2, 5, 120), 1.0, 100_000, seed=4) < 0.01

    def test_rated_atom_off_grid(self):
        # 60 / 7 has fractional part below one half, so the rated-power atom
        # sits closer to bin 8 but is folded into bin 9
        w = WindParams(3, 15, 25, 60, 2.0, 10.0)
        assert audit_discretization(w, 7.0, 100_000, seed=4) < 0.01

    def test_coarse_is_bounded(self):
        w = WindParams(3, 15, 25, 60, 2.0, 10.0)
        assert audit_discretization(w, 60.0, 10_000) <= 1.0
