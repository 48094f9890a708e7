import json

import numpy as np
import pytest

from drcpd import cli, datasets
from drcpd.detector import ScoreSeries
from drcpd.plotting import build_figure
from drcpd.series import TimeSeries


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def small_series(tmp_path, rng):
    # two segments with a mean jump, short enough for quick detection runs
    x = np.concatenate([rng.normal(0, 1, 300), rng.normal(4, 1, 300)])
    path = tmp_path / "s.csv"
    datasets.save_csv(TimeSeries(x), path)
    labels = tmp_path / "l.txt"
    datasets.save_labels([300], labels)
    return path, labels


def test_generate_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert run("generate", "--dataset", 1, "--seed", 7, "--out-series",
                   tmp_path / f"{name}.csv", "--out-labels", tmp_path / f"{name}.txt") == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    series = datasets.load_csv(tmp_path / "a.csv")
    assert series.values.shape == (20000, 2)
    assert len(datasets.load_labels(tmp_path / "a.txt")) == 9
    manifest = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert manifest["command"] == "generate" and manifest["args"]["seed"] == 7


def test_generate_rejects_unknown_dataset(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        run("generate", "--dataset", 4, "--out-series", tmp_path / "a", "--out-labels",
            tmp_path / "b")
    assert err.value.code == cli.EXIT_USAGE


def test_detect_evaluate_and_replay(tmp_path, small_series):
    series, labels = small_series
    out = tmp_path / "d.csv"
    assert run("detect", series, "--estimator", "gbdt-classifier", "--score", "kl", "--k", 5,
               "--n", 60, "--dt", 10, "--seed", 3, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,D"
    assert int(lines[1].split(",")[0]) == 5 - 1 + 120
    first = out.read_bytes()
    assert run("--from-manifest", str(out) + ".manifest.json") == 0
    assert out.read_bytes() == first
    report = tmp_path / "e.csv"
    assert run("evaluate", out, labels, "--out", report) == 0
    head, row = report.read_text().splitlines()
    values = dict(zip(head.split(","), row.split(",")))
    assert values["dt"] == "10" and values["seed"] == "3" and values["n"] == "60"
    assert float(values["auc"]) > 0.8


def test_detect_kernel_and_short_gap_preset(tmp_path, small_series):
    series, _ = small_series
    out = tmp_path / "d.csv"
    assert run("detect", series, "--estimator", "kernel-rulsif", "--short-gap", "--k", 2,
               "--dt", 50, "--out", out) == 0
    manifest = json.loads((tmp_path / "d.csv.manifest.json").read_text())
    assert manifest["config"]["n"] == cli.SHORT_GAP_N
    assert manifest["config"]["score"] == "pe"


def test_detect_errors(tmp_path, small_series):
    series, _ = small_series
    assert run("detect", tmp_path / "nope.csv", "--out", tmp_path / "d.csv") == cli.EXIT_DATA
    assert run("detect", series, "--n", 500, "--out", tmp_path / "d.csv") == cli.EXIT_DATA
    assert run("detect", series, "--n", 1, "--out", tmp_path / "d.csv") == cli.EXIT_USAGE
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert run("detect", bad, "--out", tmp_path / "d.csv") == cli.EXIT_DATA


def test_evaluate_perfect_peak_and_missing_labels(tmp_path):
    scores = tmp_path / "p.csv"
    t = np.arange(50, 100)
    D = np.where((t >= 70) & (t < 80), 5.0, 0.0)
    scores.write_text(cli.format_scores(ScoreSeries(t, D)))
    labels = tmp_path / "l.txt"
    labels.write_text("70\n")
    report = tmp_path / "r.csv"
    assert run("evaluate", scores, labels, "--n", 5, "--out", report) == 0
    assert report.read_text().splitlines()[1].split(",")[0] == "1.0"
    assert run("evaluate", scores, tmp_path / "missing.txt", "--out", report) == cli.EXIT_DATA


def test_benchmark_table_shape_and_determinism(tmp_path):
    argv = ["benchmark", "--datasets", 1, "--estimators", "gbdt-classifier", "nn-classifier",
            "--runs", 1, "--n", 50, "--k", 3, "--dt", 130, "--seed", 2]
    assert run(*argv, "--out", tmp_path / "a.csv") == 0
    assert run(*argv, "--out", tmp_path / "b.csv") == 0
    text = (tmp_path / "a.csv").read_text()
    assert text == (tmp_path / "b.csv").read_text()
    lines = text.splitlines()
    assert lines[0] == "algorithm,dataset,mean_auc,std,stderr,runs,dt,seed"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["GBDT", "NN"]


def test_benchmark_parallel_matches_serial(tmp_path):
    argv = ["benchmark", "--datasets", 3, "--estimators", "nn-classifier", "--runs", 2,
            "--n", 50, "--k", 3, "--dt", 130]
    assert run(*argv, "--jobs", 1, "--out", tmp_path / "a.csv") == 0
    assert run(*argv, "--jobs", 2, "--out", tmp_path / "b.csv") == 0
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()


def test_plot_svg(tmp_path, small_series):
    series, labels = small_series
    scores = tmp_path / "d.csv"
    t = np.arange(200, 600, 10)
    scores.write_text(cli.format_scores(ScoreSeries(t, np.sin(t / 30.0))))
    svg = tmp_path / "p.svg"
    assert run("plot", scores, series, "--labels", labels, "--n", 60, "--out", svg) == 0
    text = svg.read_text()
    assert text.startswith("<?xml") and text.rstrip().endswith("</svg>")
    assert text.count('id="axes_') == 2
    first = svg.read_bytes()
    assert run("plot", scores, series, "--labels", labels, "--n", 60, "--out", svg) == 0
    assert svg.read_bytes() == first


def test_plot_axes_cover_data(rng):
    x = TimeSeries(rng.normal(size=(400, 2)) * 3)
    s = ScoreSeries(np.arange(100, 400, 5), rng.normal(size=60))
    fig = build_figure(x, s)
    top, bottom = fig.axes
    assert top.get_xlim()[0] <= 0 and top.get_xlim()[1] >= 399
    assert top.get_ylim()[0] <= x.values.min() and top.get_ylim()[1] >= x.values.max()
    assert bottom.get_ylim()[0] <= s.D.min() and bottom.get_ylim()[1] >= s.D.max()


def test_plot_rejects_empty_scores(tmp_path, small_series):
    series, _ = small_series
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert run("plot", empty, series, "--out", tmp_path / "p.svg") == cli.EXIT_DATA
    empty.write_text("t,D\n")
    assert run("plot", empty, series, "--out", tmp_path / "p.svg") == cli.EXIT_DATA


def test_bad_manifest(tmp_path):
    m = tmp_path / "m.json"
    m.write_text("{}")
    assert run("--from-manifest", m) == cli.EXIT_DATA
    assert run("--from-manifest", tmp_path / "none.json") == cli.EXIT_DATA


def test_no_command_is_usage_error():
    assert run() == cli.EXIT_USAGE
