import csv
import json
from statistics import fmean

import pytest

from hqnn_bench import bench, cli
from hqnn_bench.bench import ConfigError, SweepConfig
from hqnn_bench.flops import percent_increase


def tiny_config(out, **kw):
    base = dict(feature_sizes=(10, 30), kinds=("classical", "hybrid-SEL"), repetitions=2,
                runs_per_model=1, epochs=1, threshold=0.0, output_dir=str(out))
    base.update(kw)
    return SweepConfig(**base)


@pytest.fixture(scope="module")
def swept(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    bench.run_sweep(tiny_config(out))
    return out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --- config ---------------------------------------------------------------------

def test_parse_config_text():
    text = """
    # desk run
    feature_sizes = 10, 20,30
    kinds = classical,hybrid-SEL   # two kinds
    repetitions = 2
    learning_rate = 0.01
    """
    values = bench.parse_config_text(text)
    assert values == {"feature_sizes": (10, 20, 30), "kinds": ("classical", "hybrid-SEL"),
                      "repetitions": 2, "learning_rate": 0.01}


@pytest.mark.parametrize("text", ["repetitions 3", "colour = red", "runs_per_model = many"])
def test_bad_config_text(text):
    with pytest.raises(ConfigError):
        bench.parse_config_text(text)


def test_precedence_flags_over_quick_over_file():
    file_values = {"repetitions": 4, "master_seed": 9, "runs_per_model": 1}
    cfg = bench.build_sweep_config(file_values, quick=True, overrides={"runs_per_model": 2, "kinds": None})
    assert cfg.repetitions == 2  # quick beats the file
    assert cfg.runs_per_model == 2  # flag beats quick
    assert cfg.master_seed == 9
    assert cfg.feature_sizes == (10, 40, 80, 110)


@pytest.mark.parametrize("kw", [
    {"feature_sizes": (20, 10)}, {"feature_sizes": ()}, {"kinds": ("quantum",)},
    {"repetitions": 0}, {"runs_per_model": 0}, {"workers": 0},
])
def test_invalid_sweep_config(kw):
    with pytest.raises(ConfigError):
        SweepConfig(**kw)


# --- sweep ------------------------------------------------------------------------

def test_sweep_writes_every_unit(swept):
    cfg = tiny_config(swept)
    for unit in cfg.units():
        assert bench.result_path(swept, *unit).exists()
    rows = read_csv(swept / "summary.csv")
    assert tuple(rows[0]) == bench.SUMMARY_COLUMNS
    assert len(rows) == 1 + len(cfg.units())
    assert [r[0] for r in rows[1:]] == ["classical"] * 4 + ["hybrid-SEL"] * 4


def test_summary_matches_result_files(swept):
    rows = read_csv(swept / "summary.csv")[1:]
    for row in rows:
        doc = json.loads(bench.result_path(swept, row[0], int(row[1]), int(row[2])).read_text())
        assert row[3] == doc["winner"]
        assert int(row[7]) == doc["cost"]["total_flops"]
        assert float(row[9]) == doc["mean_best_train_acc"]


def test_sweep_resumes_without_rerunning(swept):
    before = {p: p.read_bytes() for p in (swept / "results").glob("*.json")}
    assert bench.run_sweep(tiny_config(swept)) == []
    assert {p: p.read_bytes() for p in (swept / "results").glob("*.json")} == before


def test_resume_fills_only_missing_unit(tmp_path):
    cfg = tiny_config(tmp_path, kinds=("classical",))
    bench.run_sweep(cfg)
    victim = bench.result_path(tmp_path, "classical", 30, 2)
    original = victim.read_bytes()
    victim.unlink()
    assert bench.run_sweep(cfg) == [victim]
    assert victim.read_bytes() == original


def test_generate_matches_search_data(tmp_path):
    cfg = tiny_config(tmp_path, feature_sizes=(10,), repetitions=1)
    paths = bench.generate_datasets(cfg)
    assert [p.name for p in paths] == ["spiral_F010_rep1.csv"]
    meta = json.loads(paths[0].with_suffix(".json").read_text())
    assert meta["config"]["seed"] == bench.data_config_for(cfg, 10, 1).seed


# --- report ---------------------------------------------------------------------------

def test_percent_increase_recomputed_from_raw_files(swept):
    report = bench.write_report(swept)
    assert not report.incomplete
    for kind in ("classical", "hybrid-SEL"):
        means = {}
        for f in (10, 30):
            docs = [json.loads(bench.result_path(swept, kind, f, r).read_text()) for r in (1, 2)]
            means[f] = fmean(d["cost"]["total_flops"] for d in docs)
        pi = report.kinds[kind]["percent_increase"]
        assert pi["flops"] == 100 * (means[30] - means[10]) / means[30]
        assert pi["flops"] == percent_increase(means[10], means[30])


def test_report_is_idempotent(swept):
    bench.write_report(swept, paper_reference=True)
    first = {p.name: p.read_bytes() for p in (swept / "report").iterdir()}
    bench.write_report(swept, paper_reference=True)
    assert {p.name: p.read_bytes() for p in (swept / "report").iterdir()} == first


def test_paper_reference_rows(swept):
    bench.write_report(swept, paper_reference=True)
    rows = read_csv(swept / "report" / "paper_comparison.csv")
    sel = [r for r in rows if r[:2] == ["Hybrid (SEL)", "110/(3,2)"]]
    assert sel and sel[0][2:7] == ["3389", "2549", "2083", "466", "840"]


def test_ablation_mirrors_reference_columns(swept):
    bench.write_report(swept)
    rows = read_csv(swept / "report" / "ablation.csv")
    assert rows[0] == ["Model", "FS/BC", "TF", "Enc+CL", "CL", "Enc", "QL"]
    for r in rows[1:]:
        assert int(r[2]) == int(r[3]) + int(r[6])
        assert int(r[3]) == int(r[4]) + int(r[5])


def test_incomplete_sweep_reported(tmp_path):
    cfg = tiny_config(tmp_path, kinds=("classical",), feature_sizes=(10,), repetitions=2)
    bench.run_sweep(cfg)
    bench.result_path(tmp_path, "classical", 10, 2).unlink()
    report = bench.write_report(tmp_path)
    assert report.incomplete == ["classical_F010_rep2"]
    assert cli.main(["report", "--out", str(tmp_path)]) == cli.EXIT_INCOMPLETE


def test_report_without_results(tmp_path):
    with pytest.raises(FileNotFoundError):
        bench.write_report(tmp_path)


# --- CLI ----------------------------------------------------------------------------------

def test_cli_bad_config_exit_code(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("repetitions = zero\n")
    assert cli.main(["search", "--config", str(conf), "--out", str(tmp_path)]) == cli.EXIT_BAD_CONFIG
    assert "bad config" in capsys.readouterr().err


def test_cli_rejects_unknown_kind(tmp_path):
    assert cli.main(["generate", "--kind", "quantum", "--out", str(tmp_path)]) == cli.EXIT_BAD_CONFIG


def test_cli_missing_results_exit_code(tmp_path):
    assert cli.main(["report", "--out", str(tmp_path / "nothing")]) == cli.EXIT_INCOMPLETE


def test_cli_end_to_end(tmp_path, capsys):
    conf = tmp_path / "sweep.conf"
    conf.write_text("threshold = 0\nepochs = 1\nruns_per_model = 1\n")
    out = tmp_path / "run"
    args = ["--config", str(conf), "--features", "10,20", "--kind", "classical", "--reps", "1",
            "--out", str(out)]
    assert cli.main(["generate", *args]) == 0
    assert len(list((out / "data").glob("*.csv"))) == 2
    assert cli.main(["search", *args]) == 0
    assert cli.main(["report", "--out", str(out), "--paper-reference"]) == 0
    printed = json.loads(capsys.readouterr().out.split("\n", 2)[-1])
    assert set(printed) == {"classical"}
    assert (out / "report" / "paper_comparison.csv").exists()
