import csv
import json

import pytest
from click.testing import CliRunner

from notimind.cli import main
from notimind.learn.persistence import load_model
from notimind.synth import read_ground_truth


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)


@pytest.fixture(scope="module")
def features_dir(small_cohort_files, tmp_path_factory):
    out = tmp_path_factory.mktemp("features")
    result = run("features", "--events", small_cohort_files / "events.jsonl",
                 "--panas", small_cohort_files / "panas.jsonl", "--out", out)
    assert result.exit_code == 0, result.output
    return out


def rows(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


class TestExitCodes:
    def test_usage_error(self):
        assert run("features").exit_code == 2
        assert run("nonsense").exit_code == 2

    def test_bad_choice(self, features_dir):
        result = run("correlate", "--features", features_dir / "features.csv", "--method", "bogus")
        assert result.exit_code == 2

    def test_help(self):
        result = run("--help")
        assert result.exit_code == 0
        assert all(cmd in result.output for cmd in ("ingest", "features", "correlate", "train", "synth"))


class TestIngest:
    def test_clean(self, small_cohort_files, tmp_path):
        result = run("ingest", "--events", small_cohort_files / "events.jsonl",
                     "--panas", small_cohort_files / "panas.jsonl", "--out", tmp_path)
        assert result.exit_code == 0
        assert (tmp_path / "parse_errors.txt").read_text() == ""
        assert (tmp_path / "events.jsonl").read_bytes() == (small_cohort_files / "events.jsonl").read_bytes()

    def test_errors_exit_one_unless_lenient(self, small_cohort_files, tmp_path):
        events = tmp_path / "events.jsonl"
        events.write_text((small_cohort_files / "events.jsonl").read_text() + "{not json\n")
        args = ("ingest", "--events", events, "--panas", small_cohort_files / "panas.jsonl",
                "--out", tmp_path / "o")
        strict = run(*args)
        assert strict.exit_code == 1
        assert "1 lines failed" in strict.output
        assert run(*args, "--lenient").exit_code == 0
        errors = (tmp_path / "o" / "parse_errors.txt").read_text().splitlines()
        assert len(errors) == 1 and errors[0].startswith("events ")


class TestFeatures:
    def test_rows_match_ground_truth(self, features_dir, small_cohort):
        table = rows(features_dir / "features.csv")
        assert len(table) == len(small_cohort.ground_truth)
        assert {r["class"] for r in table} <= {"-1", "0", "1"}
        summary = (features_dir / "summary.txt").read_text()
        assert f"segments {len(table)}" in summary
        assert (features_dir / "discretization.txt").read_text().startswith("[global]")

    def test_rerun_identical(self, features_dir, small_cohort_files, tmp_path):
        run("features", "--events", small_cohort_files / "events.jsonl",
            "--panas", small_cohort_files / "panas.jsonl", "--out", tmp_path)
        for name in ("features.csv", "discretization.txt", "summary.txt"):
            assert (tmp_path / name).read_bytes() == (features_dir / name).read_bytes()

    def test_long_gaps_logged(self, tmp_path):
        spec = tmp_path / "spec.txt"
        # the overnight gap between the last and first report exceeds ten hours
        spec.write_text("n_users = 2\ndays = 3\n")
        assert run("synth", "--spec", spec, "--out", tmp_path / "c").exit_code == 0
        result = run("features", "--events", tmp_path / "c" / "events.jsonl",
                     "--panas", tmp_path / "c" / "panas.jsonl", "--out", tmp_path / "f")
        assert result.exit_code == 0
        summary = (tmp_path / "f" / "summary.txt").read_text()
        dismissed = summary.split("[dismissed pairs]\n")[1].splitlines()
        assert len(dismissed) > 0
        with open(tmp_path / "c" / "ground_truth.csv", encoding="utf-8") as fh:
            assert len(rows(tmp_path / "f" / "features.csv")) == len(read_ground_truth(fh))

    def test_config_file_and_flag_precedence(self, small_cohort_files, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("max-gap = 1\nstrategy = recursive\n")
        base = ("features", "--events", small_cohort_files / "events.jsonl",
                "--panas", small_cohort_files / "panas.jsonl", "--config", config)
        # a one-hour gap dismisses every pair
        assert run(*base, "--out", tmp_path / "a").exit_code == 1
        assert run(*base, "--max-gap", 10, "--out", tmp_path / "b").exit_code == 0

    def test_unknown_config_key(self, small_cohort_files, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("colour = red\n")
        result = run("features", "--config", config, "--events", small_cohort_files / "events.jsonl",
                     "--panas", small_cohort_files / "panas.jsonl")
        assert result.exit_code == 2

    def test_per_user_cuts(self, small_cohort_files, tmp_path):
        result = run("features", "--events", small_cohort_files / "events.jsonl",
                     "--panas", small_cohort_files / "panas.jsonl", "--discretization", "per-user",
                     "--out", tmp_path)
        assert result.exit_code == 0
        assert "[u01]" in (tmp_path / "discretization.txt").read_text()


class TestCorrelate:
    def test_table(self, features_dir, tmp_path):
        result = run("correlate", "--features", features_dir / "features.csv", "--out", tmp_path)
        assert result.exit_code == 0
        table = rows(tmp_path / "correlation.csv")
        assert len(table) == 11
        assert all(-1.0 <= float(r["r"]) <= 1.0 for r in table)

    def test_single_segment_fails(self, features_dir, tmp_path):
        lines = (features_dir / "features.csv").read_text().splitlines(keepends=True)
        one = tmp_path / "one.csv"
        one.write_text("".join(lines[:2]))
        result = run("correlate", "--features", one, "--out", tmp_path / "o")
        assert result.exit_code == 1


class TestTrain:
    def test_single_classifier(self, features_dir, tmp_path):
        result = run("train", "--features", features_dir / "features.csv", "--classifiers", "lr",
                     "--folds", 3, "--out", tmp_path)
        assert result.exit_code == 0, result.output
        assert rows(tmp_path / "pairwise.csv") == []
        summary = rows(tmp_path / "summary.csv")
        assert [(r["classifier"], r["regime"]) for r in summary] == [("lr", "within_subject_15fold"), ("lr", "global_louo")]
        model, normalizer, columns = load_model(tmp_path / "models" / "lr.model")
        assert len(columns) == 9

    def test_all_classifiers(self, features_dir, tmp_path):
        result = run("train", "--features", features_dir / "features.csv", "--regime", "global",
                     "--out", tmp_path)
        assert result.exit_code == 0, result.output
        assert len(rows(tmp_path / "summary.csv")) == 3
        assert len(rows(tmp_path / "pairwise.csv")) == 3
        assert sorted(p.name for p in (tmp_path / "models").iterdir()) == ["ann.model", "lr.model", "svm.model"]

    def test_unknown_classifier(self, features_dir):
        result = run("train", "--features", features_dir / "features.csv", "--classifiers", "knn")
        assert result.exit_code == 2

    def test_threshold_selection_empty(self, features_dir, tmp_path):
        with pytest.warns(UserWarning, match="no feature reaches"):
            result = run("train", "--features", features_dir / "features.csv", "--select", "threshold",
                         "--threshold", 0.99, "--out", tmp_path)
        assert result.exit_code == 1


class TestSynth:
    def test_writes_and_verifies(self, tmp_path):
        result = run("synth", "--n-users", 2, "--days", 3, "--seed", 4, "--verify", "--out", tmp_path)
        assert result.exit_code == 0, result.output
        assert sorted(p.name for p in tmp_path.iterdir()) == ["events.jsonl", "ground_truth.csv", "panas.jsonl"]
        users = {json.loads(line)["user"] for line in (tmp_path / "panas.jsonl").read_text().splitlines()}
        assert users == {"u01", "u02"}

    def test_infeasible_coupling(self, tmp_path):
        spec = tmp_path / "spec.txt"
        spec.write_text("couplings = k_a:0.99\nlabel_noise = 0.5\n")
        result = run("synth", "--spec", spec, "--out", tmp_path / "o")
        assert result.exit_code == 1
        assert "InfeasibleCoupling" in result.output

    def test_bad_spec(self, tmp_path):
        spec = tmp_path / "spec.txt"
        spec.write_text("n_users = many\n")
        assert run("synth", "--spec", spec, "--out", tmp_path / "o").exit_code == 1
