"""Sweep orchestration, on-disk result layout and comparison reports.

Layout under the output directory::

    sweep.json                          sweep configuration of the last search
    data/spiral_F{F:03d}_rep{r}.csv     datasets (+ .json sidecars) from ``generate``
    results/{kind}_F{F:03d}_rep{r}.json one SearchResult per work unit
    summary.csv                         one row per stored result
    report/                             written by ``write_report``
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean

from .flops import (PAPER_COLUMNS, PAPER_PERCENT_INCREASE, cost_hybrid, load_paper_reference,
                    percent_increase)
from .hybrid import HybridArch
from .nn import TrainConfig
from .qsim import QuantumLayerSpec
from .search import KINDS, SearchResult, SearchSpace, repetition_seed, run_repetition, derive_seed
from .spiral import FEATURE_SIZES, SpiralConfig, generate, save_dataset

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("kind", "F", "repetition", "winner", "qubits", "depth", "hidden",
                   "flops", "params", "train_acc", "val_acc", "models_trained")
QUICK_PRESET = {"feature_sizes": (10, 40, 80, 110), "repetitions": 2, "runs_per_model": 3}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    feature_sizes: tuple[int, ...] = FEATURE_SIZES
    kinds: tuple[str, ...] = KINDS
    repetitions: int = 5
    runs_per_model: int = 5
    master_seed: int = 0
    output_dir: str = "bench_out"
    epochs: int = 100
    batch_size: int = 8
    learning_rate: float = 0.001
    threshold: float = 0.90
    workers: int = 1

    def __post_init__(self):
        fs = tuple(int(f) for f in self.feature_sizes)
        object.__setattr__(self, "feature_sizes", fs)
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if not fs or any(b <= a for a, b in zip(fs, fs[1:])):
            raise ConfigError(f"feature sizes must be non-empty and strictly increasing: {fs}")
        if fs[0] < 2:
            raise ConfigError("feature sizes must be >= 2")
        bad = [k for k in self.kinds if k not in KINDS]
        if bad or not self.kinds:
            raise ConfigError(f"unknown kinds {bad}; choose from {KINDS}")
        if self.repetitions < 1 or self.runs_per_model < 1:
            raise ConfigError("repetitions and runs_per_model must be >= 1")
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0 or self.workers < 1:
            raise ConfigError("epochs >= 0, batch_size >= 1, learning_rate > 0, workers >= 1 required")

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate)

    def units(self):
        return [(k, f, r) for k in self.kinds for f in self.feature_sizes
                for r in range(1, self.repetitions + 1)]


_LIST_KEYS = {"feature_sizes": int, "kinds": str}
_SCALAR_KEYS = {"repetitions": int, "runs_per_model": int, "master_seed": int, "output_dir": str,
                "epochs": int, "batch_size": int, "learning_rate": float, "threshold": float,
                "workers": int}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments, comma-separated lists)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in _LIST_KEYS:
                values[key] = tuple(_LIST_KEYS[key](v.strip()) for v in value.split(",") if v.strip())
            elif key in _SCALAR_KEYS:
                values[key] = _SCALAR_KEYS[key](value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return values


def build_sweep_config(file_values: dict | None = None, quick: bool = False,
                       overrides: dict | None = None) -> SweepConfig:
    """defaults < config file < ``--quick`` preset < explicit flags."""
    values = {}
    values.update(file_values or {})
    if quick:
        values.update(QUICK_PRESET)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return SweepConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# --- file helpers ----------------------------------------------------------

def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def result_path(out: Path, kind: str, n_features: int, repetition: int) -> Path:
    return out / "results" / f"{kind}_F{n_features:03d}_rep{repetition}.json"


def data_config_for(cfg: SweepConfig, n_features: int, repetition: int) -> SpiralConfig:
    rep_seed = repetition_seed(cfg.master_seed, n_features, repetition)
    return SpiralConfig(n_features=n_features, seed=derive_seed(rep_seed, "data"))


# --- subcommand bodies -----------------------------------------------------

def generate_datasets(cfg: SweepConfig) -> list[Path]:
    """Write the exact datasets ``run_sweep`` will train on."""
    out = Path(cfg.output_dir) / "data"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for f in cfg.feature_sizes:
        for r in range(1, cfg.repetitions + 1):
            path = out / f"spiral_F{f:03d}_rep{r}.csv"
            save_dataset(generate(data_config_for(cfg, f, r)), path)
            written.append(path)
    return written


def _run_unit(args) -> tuple[str, int, int, dict]:
    cfg, kind, n_features, rep = args
    rep_seed = repetition_seed(cfg.master_seed, n_features, rep)
    res = run_repetition(SearchSpace(kind), SpiralConfig(n_features=n_features), cfg.train_config(),
                         rep_seed, rep, cfg.threshold, cfg.runs_per_model)
    return kind, n_features, rep, res.to_dict()


def run_sweep(cfg: SweepConfig) -> list[Path]:
    """Run every missing (kind, F, repetition) unit; existing result files are kept."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "sweep.json", _dumps(asdict(cfg) | {"output_dir": None}))
    todo = [u for u in cfg.units() if not result_path(out, *u).exists()]
    log.info("%d of %d units to run", len(todo), len(cfg.units()))
    written = []

    def store(kind, f, rep, doc):
        path = result_path(out, kind, f, rep)
        atomic_write_text(path, _dumps(doc))
        written.append(path)
        log.info("wrote %s (winner %s)", path.name, doc["winner"])

    jobs = [(cfg, *u) for u in todo]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            for res in pool.map(_run_unit, jobs):
                store(*res)
    else:
        for job in jobs:
            store(*_run_unit(job))
    write_summary(out)
    return written


def load_results(out: Path) -> list[SearchResult]:
    paths = sorted((Path(out) / "results").glob("*.json"))
    results = [SearchResult.from_dict(json.loads(p.read_text())) for p in paths]
    order = {k: i for i, k in enumerate(KINDS)}
    return sorted(results, key=lambda r: (order[r.kind], r.n_features, r.repetition))


def summary_rows(results) -> list[list]:
    rows = []
    for r in results:
        rows.append([
            r.kind, r.n_features, r.repetition, r.winner,
            "" if r.qubits is None else r.qubits,
            "" if r.depth is None else r.depth,
            "" if r.hidden is None else "-".join(map(str, r.hidden)),
            r.cost.total_flops, r.cost.param_count,
            repr(r.mean_best_train_acc), repr(r.mean_best_val_acc), r.models_trained,
        ])
    return rows


def write_summary(out: Path) -> Path:
    path = Path(out) / "summary.csv"
    atomic_write_text(path, _csv_text(SUMMARY_COLUMNS, summary_rows(load_results(out))))
    return path


# --- comparison report -----------------------------------------------------

@dataclass
class ComparisonReport:
    kinds: dict = field(default_factory=dict)
    ablation: list = field(default_factory=list)
    incomplete: list = field(default_factory=list)
    paper_reference: list | None = None

    def to_dict(self) -> dict:
        d = {"kinds": self.kinds, "ablation": self.ablation, "incomplete": self.incomplete,
             "complete": not self.incomplete}
        if self.paper_reference is not None:
            d["paper_reference"] = self.paper_reference
        return d


def _modal_winner(results):
    """Most frequent winner among threshold-meeting results; ties go to the cheaper one."""
    winners = [r for r in results if not r.below_threshold]
    if not winners:
        return None
    counts = Counter(r.winner for r in winners)
    return min(winners, key=lambda r: (-counts[r.winner], r.cost.total_flops, r.winner))


def ablation_row(kind: str, n_features: int, qubits: int, depth: int) -> dict:
    spec = QuantumLayerSpec(qubits, depth, kind.split("-")[1])
    cost = cost_hybrid(HybridArch(n_features, spec))
    b = cost.breakdown
    return {
        "kind": kind,
        "F": n_features,
        "best_combination": f"{n_features}/({qubits},{depth})",
        "total": cost.total_flops,
        "enc_cl": b["encoding"] + b["classical_layers"],
        "cl": b["classical_layers"],
        "enc": b["encoding"],
        "ql": b["quantum_layer"],
    }


def build_report(results, expected: SweepConfig | None = None, paper_reference: bool = False) -> ComparisonReport:
    report = ComparisonReport()
    by_unit = {(r.kind, r.n_features): [] for r in results}
    for r in results:
        by_unit[(r.kind, r.n_features)].append(r)

    if expected is not None:
        present = {(r.kind, r.n_features, r.repetition) for r in results}
        report.incomplete = [f"{k}_F{f:03d}_rep{rep}" for k, f, rep in expected.units()
                             if (k, f, rep) not in present]

    for kind in KINDS:
        fs = sorted(f for k, f in by_unit if k == kind)
        if not fs:
            continue
        per_f = []
        for f in fs:
            group = by_unit[(kind, f)]
            winners = [r for r in group if not r.below_threshold]
            per_f.append({
                "F": f,
                "repetitions": len(group),
                "n_winners": len(winners),
                "mean_flops": fmean(r.cost.total_flops for r in winners) if winners else None,
                "mean_params": fmean(r.cost.param_count for r in winners) if winners else None,
                "winners": [r.winner for r in group],
            })
            if kind != "classical":
                modal = _modal_winner(group)
                if modal is not None:
                    report.ablation.append(ablation_row(kind, f, modal.qubits, modal.depth))
        entry = {"per_F": per_f, "percent_increase": None}
        lo, hi = per_f[0], per_f[-1]
        if len(per_f) > 1 and lo["mean_flops"] is not None and hi["mean_flops"] is not None:
            entry["percent_increase"] = {
                "low_F": lo["F"],
                "high_F": hi["F"],
                "flops": percent_increase(lo["mean_flops"], hi["mean_flops"]),
                "params": percent_increase(lo["mean_params"], hi["mean_params"]),
            }
        report.kinds[kind] = entry

    if paper_reference:
        report.paper_reference = paper_comparison_rows()
    return report


def paper_comparison_rows() -> list[dict]:
    """Published breakdown next to this cost model's numbers for the same architecture."""
    rows = []
    for p in load_paper_reference():
        ours = ablation_row(f"hybrid-{p.model}", p.feature_size, p.qubits, p.depth)
        rows.append({
            "model": p.model, "FS/BC": p.best_combination,
            "paper": {"TF": p.total, "Enc+CL": p.enc_cl, "CL": p.cl, "Enc": p.enc, "QL": p.ql},
            "ours": {"TF": ours["total"], "Enc+CL": ours["enc_cl"], "CL": ours["cl"],
                     "Enc": ours["enc"], "QL": ours["ql"]},
        })
    return rows


def write_report(out: Path, paper_reference: bool = False) -> ComparisonReport:
    out = Path(out)
    results = load_results(out)
    if not results:
        raise FileNotFoundError(f"no search results under {out / 'results'}")
    expected = None
    sweep_file = out / "sweep.json"
    if sweep_file.exists():
        doc = json.loads(sweep_file.read_text())
        doc["output_dir"] = str(out)
        expected = SweepConfig(**doc)
    report = build_report(results, expected, paper_reference)
    rdir = out / "report"
    atomic_write_text(rdir / "report.json", _dumps(report.to_dict()))

    for metric in ("flops", "params"):
        rows = [[kind, e["F"], e["mean_" + metric], e["n_winners"], e["repetitions"]]
                for kind, entry in report.kinds.items() for e in entry["per_F"]]
        atomic_write_text(rdir / f"{metric}_vs_F.csv",
                          _csv_text(("kind", "F", f"mean_{metric}", "n_winners", "repetitions"), rows))

    ab_rows = [[f"Hybrid ({a['kind'].split('-')[1]})", a["best_combination"], a["total"],
                a["enc_cl"], a["cl"], a["enc"], a["ql"]] for a in report.ablation]
    atomic_write_text(rdir / "ablation.csv", _csv_text(PAPER_COLUMNS, ab_rows))

    pct_rows = []
    for kind, entry in report.kinds.items():
        pi = entry["percent_increase"]
        paper = PAPER_PERCENT_INCREASE.get(kind, {})
        pct_rows.append([kind,
                         "" if pi is None else repr(pi["flops"]),
                         "" if pi is None else repr(pi["params"]),
                         paper.get("flops", "") if paper_reference else "",
                         paper.get("params", "") if paper_reference else ""])
    atomic_write_text(rdir / "percent_increase.csv",
                      _csv_text(("kind", "flops", "params", "paper_flops", "paper_params"), pct_rows))

    if paper_reference:
        rows = []
        for row in report.paper_reference:
            p, o = row["paper"], row["ours"]
            rows.append([f"Hybrid ({row['model']})", row["FS/BC"]]
                        + [p[c] for c in PAPER_COLUMNS[2:]] + [o[c] for c in PAPER_COLUMNS[2:]])
        header = PAPER_COLUMNS + tuple(f"ours_{c}" for c in PAPER_COLUMNS[2:])
        atomic_write_text(rdir / "paper_comparison.csv", _csv_text(header, rows))
    return report
