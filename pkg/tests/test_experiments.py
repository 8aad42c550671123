import math
from dataclasses import replace

import numpy as np
import pytest

from itkmlab.cli import main
from itkmlab.errors import InvalidInputError, NumericalError
from itkmlab.experiments import (
    ExperimentConfig,
    aggregate,
    default_config,
    derive_seed,
    flatness_ratio,
    grid_points,
    loglog_slope,
    run_experiment,
    run_trial,
    select_curve,
    spearman,
)
from itkmlab.output import HEADER, csv_text, emit_csv, emit_svg, read_csv, svg_text

EXACT_HEADER = (
    "experiment,dims,K,S,T,b,rho,N,t,trial,seed,dist_raw,dist_sign,dist_matched,"
    "objective,safeguard_events,wall_ms"
)


def tiny(experiment="fig2a", **kw):
    base = dict(dims=[4], S=[1], b=[0.0, 0.05], N=[256], trials=3, iterations=5, seed=1)
    base.update(kw)
    return ExperimentConfig(experiment, **base)


@pytest.fixture(scope="module")
def results():
    return run_experiment(tiny())


class TestConfig:
    @pytest.mark.parametrize("exp", ["fig1a", "fig1b", "fig2a", "fig2b"])
    @pytest.mark.parametrize("profile", ["full", "ci"])
    def test_defaults(self, exp, profile):
        cfg = default_config(exp, profile)
        assert cfg.iterations == (1000 if profile == "full" else 100)
        assert len(grid_points(cfg)) > 0

    def test_published_grids(self):
        assert default_config("fig1b").N == [2**k for k in range(7, 15)]
        assert default_config("fig2a").b == [round(0.01 * i, 10) for i in range(11)]
        f2b = default_config("fig2b")
        assert f2b.trials == 20 and f2b.T_extra == 0
        np.testing.assert_allclose([r * r for r in f2b.rho], np.arange(11) * 0.01, atol=1e-15)

    def test_fig1a_runs_both_algorithms(self):
        tags = {p.experiment for p in grid_points(default_config("fig1a"))}
        assert tags == {"fig1a_itkm", "fig1a_ksvd"}

    @pytest.mark.parametrize("kw", [dict(trials=0), dict(iterations=0), dict(b=[]), dict(pairs=[(4,)])])
    def test_invalid(self, kw):
        with pytest.raises(InvalidInputError):
            tiny(**kw)

    def test_T_beyond_K(self):
        with pytest.raises(InvalidInputError):
            grid_points(tiny(S=[6], T_extra=1))

    def test_unknown(self):
        with pytest.raises(InvalidInputError):
            default_config("fig9")
        with pytest.raises(InvalidInputError):
            default_config("fig1a", "huge")


class TestSeeds:
    def test_stable_and_distinct(self):
        pts = grid_points(default_config("fig2b"))
        seeds = {derive_seed(0, p.experiment, p, k) for p in pts for k in range(20)}
        assert len(seeds) == len(pts) * 20
        assert derive_seed(0, "fig2a", (1, 2), 3) == derive_seed(0, "fig2a", (1, 2), 3)
        assert derive_seed(0, "fig2a", (1, 2), 3) != derive_seed(1, "fig2a", (1, 2), 3)

    def test_adding_grid_points_keeps_seeds(self, results):
        bigger = run_experiment(tiny(b=[0.0, 0.05, 0.1]))
        common = [r for r in bigger if r.b in (0.0, 0.05)]
        assert common == results

    def test_trial_rederivable(self, results):
        r = results[4]
        again = run_trial(r.point, r.trial, r.seed, 5)
        assert again == r


class TestRun:
    def test_sorted_and_complete(self, results):
        assert len(results) == 6
        assert [(r.b, r.trial) for r in results] == [(0.0, 0), (0.0, 1), (0.0, 2), (0.05, 0), (0.05, 1), (0.05, 2)]

    def test_exactly_one_sparse_is_recovered(self, results):
        assert all(r.dist_sign <= 1e-12 for r in results if r.b == 0.0)

    def test_jobs_equivalent(self, results):
        assert run_experiment(replace(tiny(), jobs=2)) == results

    def test_aggregate(self, results):
        rows = aggregate(results)
        assert len(rows) == 2
        ds = np.array([r.dist_sign for r in results if r.b == 0.05])
        row = [a for a in rows if a.point.b == 0.05][0]
        assert row.mean_dist_sign == pytest.approx(ds.mean(), abs=1e-12)
        assert row.stderr_dist_sign == pytest.approx(ds.std(ddof=1) / math.sqrt(3), abs=1e-12)

    def test_select_curve(self, results):
        x, y, se = select_curve(aggregate(results), "b", dims=4, S=1)
        np.testing.assert_array_equal(x, [0.0, 0.05])
        with pytest.raises(InvalidInputError):
            select_curve(aggregate(results), "b", dims=99)


class TestStatistics:
    def test_slope(self):
        N = 2.0 ** np.arange(7, 15)
        assert loglog_slope(N, 3 * N**-0.5) == pytest.approx(-0.5)
        with pytest.raises(InvalidInputError):
            loglog_slope([1, 2], [0, 1])

    def test_spearman_and_flatness(self):
        assert spearman([1, 2, 3, 4], [0.1, 0.3, 0.2, 0.9]) == pytest.approx(0.8)
        assert flatness_ratio([1, 2, 3]) == 3.0
        assert flatness_ratio([0, 1]) == math.inf


class TestCsv:
    def test_exact_header(self):
        assert csv_text([]).splitlines() == [",".join(HEADER)]
        assert ",".join(HEADER).startswith(EXACT_HEADER + ",")

    def test_round_trip(self, results, tmp_path):
        path = tmp_path / "r.csv"
        emit_csv(results, path)
        trials, aggs = read_csv(path)
        assert trials == results
        for a, row in zip(aggregate(results), aggs):
            assert row["trial"] == -1
            assert abs(row["mean_dist_sign"] - a.mean_dist_sign) <= 1e-12
            assert abs(row["stderr_dist_sign"] - a.stderr_dist_sign) <= 1e-12

    def test_byte_identical_reruns(self, results, tmp_path):
        emit_csv(results, tmp_path / "a.csv")
        emit_csv(run_experiment(tiny()), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_unwritable(self, results, tmp_path):
        with pytest.raises(OSError):
            emit_csv(results, tmp_path / "missing" / "r.csv")


class TestSvg:
    def test_deterministic_and_labelled(self, results, tmp_path):
        emit_svg(results, tmp_path / "a.svg", "b", log_y=False, title="t")
        emit_svg(results, tmp_path / "b.svg", "b", log_y=False, title="t")
        text = (tmp_path / "a.svg").read_text()
        assert text == (tmp_path / "b.svg").read_text()
        assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
        assert "<polyline" in text and "fig2a" in text

    def test_log_axes_drop_nonpositive(self, results):
        text = svg_text(results, "b", log_x=True, log_y=True)
        assert text.count("<circle") == 1  # b = 0 (with zero distance) is not drawable on log axes

    def test_empty(self):
        assert svg_text([], "b").count("<polyline") == 0


class TestCli:
    def test_experiment(self, tmp_path, capsys):
        code = main(["fig2a", "--dims", "4", "--S", "1", "--b", "0,0.05", "--N", "128",
                     "--trials", "2", "--iterations", "3", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "fig2a.csv").exists() and (tmp_path / "fig2a.svg").exists()
        assert "fig2a" in capsys.readouterr().out

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# tiny run\nprofile = ci\ndims = 4\nS = 1\nb = 0.05\nN = 128\ntrials = 4\n")
        assert main(["fig2a", "--config", str(cfg), "--trials", "2", "--iterations", "2", "--out", str(tmp_path)]) == 0
        trials, aggs = read_csv(tmp_path / "fig2a.csv")
        assert len(trials) == 2 and aggs[0]["N"] == 128

    def test_rho2_and_pairs(self, tmp_path):
        assert main(["fig2b", "--pairs", "4:1", "--rho2", "0,0.04", "--N", "128", "--trials", "1",
                     "--iterations", "2", "--out", str(tmp_path)]) == 0
        trials, _ = read_csv(tmp_path / "fig2b.csv")
        assert sorted({t.rho for t in trials}) == [0.0, 0.2]

    @pytest.mark.parametrize(
        "argv",
        [
            ["fig2a", "--trials", "0"],
            ["fig2a", "--b", "x"],
            ["fig2a", "--pairs", "4-1"],
            ["fig2a", "--config", "/nonexistent/file"],
            ["bounds", "--d", "4", "--S", "7"],
        ],
    )
    def test_config_errors(self, argv, tmp_path):
        assert main(argv + ["--out", str(tmp_path)]) == 2

    def test_bad_config_line(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("dims 4\n")
        assert main(["fig2a", "--config", str(cfg)]) == 2
        cfg.write_text("colour = red\n")
        assert main(["fig2a", "--config", str(cfg)]) == 2

    def test_numerical_failure(self, tmp_path, monkeypatch):
        import itkmlab.cli as cli

        def fail(*args, **kwargs):
            raise NumericalError("power iteration did not converge")

        monkeypatch.setattr(cli, "run_experiment", fail)
        assert main(["fig2a", "--profile", "ci", "--out", str(tmp_path)]) == 3

    def test_bounds(self, tmp_path):
        assert main(["bounds", "--d", "4", "--S", "1", "--M", "500", "--N", "1000", "--out", str(tmp_path)]) == 0
        text = (tmp_path / "bounds.csv").read_text()
        assert text.startswith("quantity,value\n") and "thm3_failure_prob_N1000" in text

    def test_probe(self, tmp_path, capsys):
        assert main(["probe", "--d", "4", "--directions", "5", "--out", str(tmp_path)]) == 0
        assert "consistent with local maximum" in capsys.readouterr().out
        assert main(["probe", "--d", "3", "--example1", "--out", str(tmp_path)]) == 0
        assert "ascent direction found" in capsys.readouterr().out
