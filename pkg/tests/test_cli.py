import csv
import hashlib
import json
from pathlib import Path

import pytest

from conftest import straight_route
from walktime.cli import main
from walktime.geo import Crossing, CrossingKind, write_route_csv

SMALL = "n_users = 8\nn_male = 4\nn_routes = 6\nrepeats_per_route = 2\n"


def digests(root: Path) -> dict:
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


def eta_rows(path):
    return {r["estimator"]: r for r in csv.DictReader(open(path))}


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    cfg = root / "small.cfg"
    cfg.write_text(SMALL)
    assert main(["synth", "--config", str(cfg), "--out", str(root / "data")]) == 0
    return root


def route_files(tmp_path, length, crossings=()):
    r = straight_route(length, crossings=tuple(Crossing(c, CrossingKind.parse(k)) for c, k in crossings))
    rp, cp = tmp_path / f"r{int(length)}.csv", tmp_path / f"r{int(length)}.crossings.csv"
    write_route_csv(r, rp, cp)
    return str(rp), str(cp)


def test_synth_outputs_and_manifest(synth_dir):
    data = synth_dir / "data"
    assert (data / "dataset.csv").exists() and (data / "dataset.schema.json").exists()
    assert len(list((data / "routes").glob("*.crossings.csv"))) == 6
    man = json.loads((data / "manifest.json").read_text())
    assert man["command"] == "synth" and man["seed"] == 42
    for rel, digest in man["outputs"].items():
        assert hashlib.sha256((data / rel).read_bytes()).hexdigest() == digest


def test_synth_deterministic_across_workers(synth_dir, tmp_path):
    cfg = str(synth_dir / "small.cfg")
    assert main(["synth", "--config", cfg, "--out", str(tmp_path / "a"), "--n-jobs", "3"]) == 0
    assert digests(tmp_path / "a") == digests(synth_dir / "data")
    assert main(["synth", "--config", cfg, "--seed", "9", "--out", str(tmp_path / "b")]) == 0
    assert digests(tmp_path / "b") != digests(synth_dir / "data")


def test_train_importance_deterministic(synth_dir, tmp_path):
    data = str(synth_dir / "data" / "dataset.csv")
    grid = tmp_path / "g.json"
    grid.write_text('[{"n_trees": 8, "max_features": "third", "min_leaf": 5}]')
    outs = []
    for run, jobs in (("a", "1"), ("b", "2")):
        d = tmp_path / run
        assert main(["train", "--data", data, "--family", "rf", "--seed", "1", "--folds", "4", "--grid", str(grid),
                     "--out-model", str(d / "m.json"), "--out-report", str(d / "cv.csv"), "--n-jobs", jobs,
                     "--gnuplot"]) == 0
        assert main(["importance", "--model", str(d / "m.json"), "--out", str(d / "imp.csv")]) == 0
        outs.append(digests(d))
    assert outs[0] == outs[1]
    assert {"m.json", "cv.csv", "cv.dat", "cv.manifest.json", "imp.csv", "imp.manifest.json"} <= set(outs[0])
    rows = list(csv.DictReader(open(tmp_path / "a" / "imp.csv")))
    assert rows[0]["method"] == "mdi"
    assert abs(sum(float(r["importance"]) for r in rows) - 1) < 1e-9


def test_compare_and_error(synth_dir, tmp_path):
    data = str(synth_dir / "data" / "dataset.csv")
    for run, jobs in (("a", "1"), ("b", "3")):
        assert main(["compare", "--data", data, "--families", "ols,cart", "--seed", "0",
                     "--out", str(tmp_path / run / "cmp.csv"), "--n-jobs", jobs]) == 0
        assert main(["error", "--data", data, "--out", str(tmp_path / run / "err.csv")]) == 0
    assert digests(tmp_path / "a") == digests(tmp_path / "b")
    rows = list(csv.DictReader(open(tmp_path / "a" / "cmp.csv")))
    assert len(rows) == 2 * 3 + 3 and rows[-1]["family"] == "average"
    summary = json.loads((tmp_path / "a" / "err.summary.json").read_text())
    assert summary["n"] == 8 * 6 * 2 and summary["pearson_length_error"] is not None


@pytest.mark.parametrize("length,crossings,flags,estimator,minutes", [
    (146.0, (), ["--naive"], "naive", 2),
    (482.0, ((200.0, "Zebra"),), ["--crossing-aware"], "crossing_aware_expected", 6),
    (482.0, ((200.0, "Puffin"),), ["--crossing-aware", "--bound", "worst-case"], "crossing_aware_worst_case", 8),
])
def test_eta_crossing_case(tmp_path, length, crossings, flags, estimator, minutes):
    rp, cp = route_files(tmp_path, length, crossings)
    out = tmp_path / "eta.csv"
    assert main(["eta", "--route", rp, "--crossings", cp, *flags, "--out", str(out)]) == 0
    assert int(eta_rows(out)[estimator]["display_minutes"]) == minutes
    first = digests(tmp_path)
    assert main(["eta", "--route", rp, "--crossings", cp, *flags, "--out", str(out)]) == 0
    assert digests(tmp_path) == first


def test_eta_crossing_behind_walker_ignored(tmp_path):
    rp, cp = route_files(tmp_path, 482.0, ((100.0, "Puffin"),))
    out = tmp_path / "eta.csv"
    assert main(["eta", "--route", rp, "--crossings", cp, "--naive", "--crossing-aware", "--bound", "worst-case",
                 "--remaining-m", "300", "--out", str(out)]) == 0
    rows = eta_rows(out)
    assert rows["naive"]["seconds"] == rows["crossing_aware_worst_case"]["seconds"]


def test_eta_personalized(synth_dir, tmp_path):
    data = str(synth_dir / "data" / "dataset.csv")
    assert main(["train", "--data", data, "--family", "ols", "--mode", "no-demographics", "--seed", "0",
                 "--out-model", str(tmp_path / "m.json.gz"), "--out-report", str(tmp_path / "cv.csv")]) == 0
    ctx = tmp_path / "ctx.json"
    ctx.write_text(json.dumps({"total_steps": 3000, "time_of_day_min": 600, "weekday": "Tuesday",
                               "weather": "rain", "direction": "forward"}))
    rp, _ = route_files(tmp_path, 482.0)
    out = tmp_path / "eta.csv"
    assert main(["eta", "--route", rp, "--naive", "--personalized", "--model", str(tmp_path / "m.json.gz"),
                 "--context", str(ctx), "--out", str(out)]) == 0
    assert set(eta_rows(out)) == {"naive", "personalized"}


def test_exit_codes(synth_dir, tmp_path, capsys):
    data = str(synth_dir / "data" / "dataset.csv")
    common = ["--out-model", str(tmp_path / "m.json"), "--out-report", str(tmp_path / "r.csv")]
    assert main(["synth", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path / "x")]) == 2
    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("n_users = -1\n")
    assert main(["synth", "--config", str(bad_cfg), "--out", str(tmp_path / "x")]) == 2
    assert main(["train", "--data", data, "--family", "nope", "--seed", "0", *common]) == 2
    assert main(["train", "--data", data, "--family", "ols", "--mode", "sideways", "--seed", "0", *common]) == 3
    assert main(["train", "--data", data, "--family", "ols", "--folds", "20", "--seed", "0", *common]) == 2
    grid = tmp_path / "g.json"
    grid.write_text('[{"alpha": 1}]')
    assert main(["train", "--data", data, "--family", "ridge", "--grid", str(grid), "--seed", "0", *common]) == 2
    assert main(["train", "--data", data, "--family", "ols", "--seed", "0", *common]) == 0
    assert main(["importance", "--model", str(tmp_path / "m.json"), "--out", str(tmp_path / "i.csv")]) == 4
    assert main(["importance", "--model", str(tmp_path / "m.json"), "--out", str(tmp_path / "i.csv"),
                 "--coefficient-share"]) == 0
    ctx = tmp_path / "ctx.json"
    ctx.write_text('{"total_steps": 1, "time_of_day_min": 600, "weekday": "Tuesday", "weather": "rain", '
                   '"direction": "forward"}')
    rp, _ = route_files(tmp_path, 300.0)
    assert main(["eta", "--route", rp, "--personalized", "--model", str(tmp_path / "m.json"),
                 "--context", str(ctx)]) == 3
    assert main(["eta", "--route", rp]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["train", "--data", data])
    assert exc.value.code == 2
    assert "error" in capsys.readouterr().err
