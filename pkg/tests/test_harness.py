import csv
import math

import numpy as np
import pytest

from micma import benchmarks, harness
from micma.errors import ConfigError
from micma.harness import (
    TrialConfig,
    alpha_grid,
    init_mean,
    make_optimizer,
    median_iqr,
    run_batch,
    run_trial,
    summarize,
)
from micma.numerics import Rng


class TestConfig:
    def test_validate(self):
        TrialConfig("sphere-int", 20).validate()
        with pytest.raises(ConfigError):
            TrialConfig("sphere-int", 20, method="bogus").validate()
        with pytest.raises(ConfigError):
            TrialConfig("sphere-int", 20, target=0).validate()
        with pytest.raises(ConfigError):
            TrialConfig("sphere-int", 20, alpha="big").validate()


class TestInit:
    def test_mean(self):
        b = benchmarks.make("sphere-one-max", 20)
        m = init_mean(b, Rng(0))
        assert np.all(m[10:] == 0.5)
        assert np.all((m[:10] >= 1) & (m[:10] <= 3))
        b = benchmarks.make("sphere-int", 20)
        m = init_mean(b, Rng(0))
        assert np.all((m >= 1) & (m <= 3))

    @pytest.mark.parametrize("method", harness.METHODS)
    def test_optimizer_start(self, method):
        opt = make_optimizer(TrialConfig("sphere-one-max", 6, method), Rng(0))
        assert opt.state.sigma == 1.0
        assert np.array_equal(opt.state.C, np.eye(6))
        assert not opt.state.p_sigma.any() and not opt.state.p_c.any()

    def test_auto_alpha(self):
        opt = make_optimizer(TrialConfig("sphere-int", 20, "margin"), Rng(0))
        assert opt.alpha == 1 / 240
        assert np.array_equal(opt.margin.A, np.ones(20))


class TestRunTrial:
    def test_margin_success(self):
        r = run_trial(TrialConfig("sphere-int", 10, "margin", seed=1))
        assert r.success and r.reason == "target"
        assert r.best_f < 1e-10
        assert r.evaluations % 10 == 0
        b = benchmarks.make("sphere-int", 10)
        assert b(r.best_x) == r.best_f

    def test_budget_zero(self):
        r = run_trial(TrialConfig("sphere-int", 10, max_evals=0))
        assert not r.success and r.reason == "budget" and r.evaluations == 0

    def test_budget_respected(self):
        r = run_trial(TrialConfig("sphere-int", 10, max_evals=105))
        assert r.reason == "budget" and r.evaluations == 100

    def test_deterministic(self):
        cfg = TrialConfig("sphere-one-max", 10, "cmaes-im", seed=4, log_trajectory=True)
        a, b = run_trial(cfg), run_trial(cfg)
        assert a.to_json() == b.to_json()
        assert a.trajectory == b.trajectory

    def test_eig_collapse(self):
        r = run_trial(TrialConfig("sphere-int", 10, "cmaes", seed=0, target=1e-300))
        assert r.reason in ("eig-collapse", "condition")
        assert not r.success

    def test_trajectory(self):
        r = run_trial(TrialConfig("sphere-int", 6, "margin", seed=2, log_trajectory=True))
        assert r.columns[:4] == ["t", "evals", "best_f", "sigma"]
        assert len(r.columns) == 4 + 3 * 6
        assert all(len(row) == len(r.columns) for row in r.trajectory)
        best = [row[2] for row in r.trajectory]
        assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
        lam = 4 + int(3 * math.log(6))
        assert all(row[1] == (i + 1) * lam for i, row in enumerate(r.trajectory))

    def test_trajectory_without_a(self):
        r = run_trial(TrialConfig("sphere-int", 6, "cmaes-im", seed=2, log_trajectory=True, max_evals=200))
        assert len(r.columns) == 4 + 2 * 6


class TestStats:
    def test_median_iqr(self):
        assert median_iqr([1, 2, 3, 4]) == (2.5, 2.0)
        assert median_iqr([1, 2, 3, 4, 5]) == (3, 3.0)
        assert median_iqr([7]) == (7, 0.0)
        assert median_iqr([]) == (None, None)

    def test_summary_no_successes(self):
        cfg = TrialConfig("sphere-int", 10)
        fail = harness.TrialResult(False, 100, 1.0, "budget")
        row = summarize(cfg, [fail, fail])
        assert row.successes == 0 and row.median_evals is None and row.iqr_evals is None


class TestBatch:
    def test_seeds_and_parallelism(self):
        cfg = TrialConfig("sphere-int", 6, "margin")
        one = run_batch([cfg], 4, jobs=1, seed_base=10)[0]
        two = run_batch([cfg], 4, jobs=2, seed_base=10)[0]
        assert [r.to_json() for r in one.results] == [r.to_json() for r in two.results]
        assert (one.successes, one.median_evals, one.iqr_evals) == (two.successes, two.median_evals, two.iqr_evals)
        direct = run_trial(TrialConfig("sphere-int", 6, "margin", seed=12))
        assert one.results[2].to_json() == direct.to_json()

    def test_trials_positive(self):
        with pytest.raises(ConfigError):
            run_batch([TrialConfig("sphere-int", 6)], 0)


class TestAlphaGrid:
    def test_cells(self):
        cells = alpha_grid("sphere-int", [4], m_grid=[0, 1], n_grid=[0, 1], trials=2)
        assert [(c.m, c.n) for c in cells] == [(0, 1), (1, 0), (1, 1)]
        assert cells[2].alpha == pytest.approx(1 / (4 * 8))

    def test_invalid_alpha_cell(self):
        cells = alpha_grid("sphere-int", [4], m_grid=[0], n_grid=[0.1], trials=1)
        assert cells[0].alpha >= 0.5 and cells[0].success_rate is None

    def test_default_grid_size(self):
        assert len(harness.DEFAULT_GRID) ** 2 - 1 == 48


class TestCsv:
    def test_summary(self, tmp_path):
        rows = run_batch([TrialConfig("sphere-int", 6, "margin")], 2)
        path = tmp_path / "s.csv"
        harness.write_summary_csv(path, rows)
        with open(path) as fh:
            data = list(csv.reader(fh))
        assert data[0] == harness.SUMMARY_COLUMNS
        assert data[1][:5] == ["sphere-int", "6", "margin", "2", "2"]

    def test_trajectory_requires_log(self, tmp_path):
        r = run_trial(TrialConfig("sphere-int", 6, max_evals=50))
        with pytest.raises(ValueError):
            harness.write_trajectory_csv(tmp_path / "t.csv", r)
