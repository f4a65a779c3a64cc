import json

import numpy as np
import pytest
from click.testing import CliRunner

from heislab.config import RunConfig
from heislab.errors import ConfigError
from heislab.operators import regions
from heislab.operators.spectral import ProfileSum
from heislab.runner import corpus as corpus_module
from heislab.runner import suites
from heislab.runner.cli import EXIT_CONFIG, EXIT_OK, main
from heislab.runner.reports import SuiteReport
from heislab.runner.suites import SuiteOptions, run_suite


def test_report_files(tmp_path):
    report = SuiteReport("demo", {"n": 1}, str(tmp_path), echo=False)
    assert report.check("fine", True, value=np.float64(0.5))
    assert not report.check("broken", False, instance={"k": np.int64(3)}, err=np.inf)
    report.table("rows", [{"a": 1, "b": 0.25}])
    report.record("cubes", [{"alpha": np.int64(0)}])
    report.note("a note")
    report.write()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"] is False
    assert [a["name"] for a in summary["assertions"]] == ["fine", "broken"]
    assert summary["assertions"][1]["measured"]["err"] == "inf"
    assert summary["tables"] == ["cubes.json", "rows.csv"]
    failures = json.loads((tmp_path / "failures.json").read_text())
    assert failures[0]["instance"] == {"k": 3}
    assert (tmp_path / "rows.csv").read_text().splitlines()[0] == "a,b"


def test_passing_rewrite_clears_old_failures(tmp_path):
    (tmp_path / "failures.json").write_text("[]")
    report = SuiteReport("demo", {}, str(tmp_path), echo=False)
    report.check("fine", True)
    report.write()
    assert not (tmp_path / "failures.json").exists()


def test_corpus_profiles(corpus):
    profiles = corpus_module.gaussian_corpus(1, corpus)
    names = [p.name for p in profiles]
    assert "g-unit" in names
    assert all(p.n == 1 for p in profiles)
    assert len(set(names)) == len(names)
    with pytest.raises(ConfigError):
        corpus_module.gaussian_corpus(3, corpus)


def test_corpus_sums_must_name_known_profiles():
    broken = {"gaussians": [{"name": "g", "a": 1.0, "b": 1.0}],
              "sums": [{"name": "s", "terms": ["g", "missing"]}]}
    with pytest.raises(ConfigError):
        corpus_module.gaussian_corpus(1, broken)
    fine = {"gaussians": broken["gaussians"], "sums": [{"name": "s", "terms": ["g", "g"]}]}
    assert isinstance(corpus_module.gaussian_corpus(1, fine)[-1], ProfileSum)


@pytest.mark.parametrize("content", ["", "{not json"])
def test_corpus_file_errors(tmp_path, content):
    path = tmp_path / "corpus.json"
    path.write_text(content)
    with pytest.raises(ConfigError):
        corpus_module.load_corpus(str(path))


def test_missing_corpus_file(tmp_path):
    with pytest.raises(ConfigError):
        corpus_module.load_corpus(str(tmp_path / "absent.json"))


def test_corpus_round_trip(tmp_path, corpus):
    path = tmp_path / "copy.json"
    corpus_module.save_corpus(corpus, str(path))
    assert corpus_module.load_corpus(str(path)) == corpus


def test_sample_points_start_at_the_origin():
    z, t = corpus_module.sample_points(2, 5, seed=4, z_half=0.5, t_half=0.25)
    assert z.shape == (5, 4) and t.shape == (5,)
    assert not z[0].any() and t[0] == 0.0
    assert np.all(np.abs(z) <= 0.5) and np.all(np.abs(t) <= 0.25)


def test_sparse_pairs(small_grid):
    pairs = corpus_module.sparse_pairs(small_grid, seed=0)
    assert len(pairs) >= 8
    assert pairs[-1][0] == "constant"
    for _, f, g in pairs:
        assert f.shape == g.shape == (small_grid.size,)
        assert np.all(f >= 0) and np.all(g >= 0)
        assert f.any() and g.any()
    again = corpus_module.sparse_pairs(small_grid, seed=0)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(pairs, again))


def test_sparse_pairs_sample_the_same_functions_on_a_finer_grid(small_grid):
    fine = small_grid.refine(3)
    # every coarse centre is the centre of a middle child
    index = fine.locate(*small_grid.centers())
    coarse_pairs = corpus_module.sparse_pairs(small_grid, seed=0)
    fine_pairs = corpus_module.sparse_pairs(fine, seed=0)
    assert [p[0] for p in coarse_pairs] == [p[0] for p in fine_pairs]
    for (name, f, g), (_, f_fine, g_fine) in zip(coarse_pairs, fine_pairs):
        if name.startswith("two-bump") or name == "constant":
            assert f_fine[index] == pytest.approx(f, rel=1e-9, abs=1e-12)
            assert g_fine[index] == pytest.approx(g, rel=1e-9, abs=1e-12)


def test_run_suite_rejects_unknown_names(tmp_path):
    with pytest.raises(ConfigError):
        run_suite(RunConfig(out=str(tmp_path)), "no-such-suite", echo=False)


def test_regions_suite_writes_its_tables(tmp_path):
    status = run_suite(RunConfig(out=str(tmp_path)), SuiteOptions.REGIONS, echo=False)
    assert status == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"] is True
    assert "region_vertices.csv" in summary["tables"]


def test_cli_runs_a_suite(tmp_path):
    result = CliRunner().invoke(main, ["regions", "--out", str(tmp_path), "--seed", "3"])
    assert result.exit_code == EXIT_OK, result.output
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"]["seed"] == 3


@pytest.mark.parametrize("text", ["N=3\n", "NOT_A_KEY=1\n"])
def test_cli_rejects_bad_configuration(tmp_path, text):
    path = tmp_path / "run.env"
    path.write_text(text)
    result = CliRunner().invoke(main, ["regions", "--config", str(path), "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_CONFIG


def test_cli_rejects_unknown_suites():
    result = CliRunner().invoke(main, ["no-such-suite"])
    assert result.exit_code == 2


@pytest.mark.slow
def test_refinement_drift_in_two_dimensions(tmp_path):
    config = RunConfig(out=str(tmp_path), sparse_dims="2")
    report = SuiteReport("sparse-verify", {}, str(tmp_path), echo=False)
    points = suites._interior_points(regions.lacunary_sparse(2))[:1]
    corpus = {"sparse": {"indicators": 1, "bumps": 1, "random_fields": 0}}
    rows = []
    suites._refinement_check(config, report, 2, False, points, {}, rows, corpus)
    check = report.assertions[-1]
    assert check["name"] == "n2-ratio-refinement-stable"
    assert check["measured"]["compared"] >= 2
    assert np.isfinite(check["measured"]["max_change"])
    assert {row["grid"] for row in rows} == {"coarse", "coarse-refined"}
    assert all(row["n"] == 2 and np.isfinite(row["ratio"]) for row in rows)
