"""FLOPs-ordered architecture search with an accuracy stopping rule.

Candidates are trained cheapest-first; the first one whose mean best train
and mean best validation accuracy (over ``runs`` seeds) both reach the
threshold wins and the search stops there.

Seeds are derived, never drawn: ``derive_seed`` hashes its parts through
``numpy.random.SeedSequence``, and each run's seed depends only on the
repetition seed, the candidate's descriptor and the run index. Adding or
removing candidates therefore never changes the runs of the others.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace
from itertools import product
from statistics import fmean

import numpy as np

from .flops import CostReport, cost_of
from .hybrid import HybridArch, HybridModel
from .nn import MLP, NEURON_OPTIONS, ClassicalArch, TrainConfig, train
from .qsim import QuantumLayerSpec
from .spiral import SpiralConfig, generate, standardize

log = logging.getLogger(__name__)

KINDS = ("classical", "hybrid-BEL", "hybrid-SEL")
QUBIT_OPTIONS = (3, 4, 5)
DEPTH_OPTIONS = tuple(range(1, 11))


@dataclass(frozen=True)
class SearchSpace:
    kind: str = "classical"
    neuron_options: tuple[int, ...] = NEURON_OPTIONS
    max_layers: int = 3
    qubit_options: tuple[int, ...] = QUBIT_OPTIONS
    depth_options: tuple[int, ...] = DEPTH_OPTIONS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "classical":
            if not self.neuron_options or self.max_layers < 1:
                raise ValueError("classical space needs neuron options and max_layers >= 1")
        elif not self.qubit_options or not self.depth_options:
            raise ValueError("hybrid space needs qubit and depth options")

    @property
    def layer_kind(self) -> str:
        return self.kind.split("-")[1]

    @property
    def size(self) -> int:
        """m(m^n - 1)/(m - 1) for classical spaces, |qubits| * |depths| for hybrid ones."""
        if self.kind == "classical":
            m, n = len(self.neuron_options), self.max_layers
            return n if m == 1 else m * (m ** n - 1) // (m - 1)
        return len(self.qubit_options) * len(self.depth_options)


def enumerate_space(space: SearchSpace) -> list:
    """Every candidate once: hidden-width tuples, or ``QuantumLayerSpec``s."""
    if space.kind == "classical":
        return [combo for n in range(1, space.max_layers + 1)
                for combo in product(space.neuron_options, repeat=n)]
    return [QuantumLayerSpec(q, d, space.layer_kind)
            for q in space.qubit_options for d in space.depth_options]


def build_arch(candidate, n_features: int, n_classes: int = 3):
    if isinstance(candidate, QuantumLayerSpec):
        return HybridArch(n_features, candidate, n_classes)
    return ClassicalArch(n_features, tuple(candidate), n_classes)


def build_model(arch):
    return HybridModel(arch) if isinstance(arch, HybridArch) else MLP(arch)


def candidate_key(candidate) -> tuple:
    if isinstance(candidate, QuantumLayerSpec):
        return (candidate.qubits, candidate.depth)
    return tuple(candidate)


def candidate_label(candidate) -> str:
    if isinstance(candidate, QuantumLayerSpec):
        return candidate.label()
    return "[" + ",".join(map(str, candidate)) + "]"


def sort_by_flops(candidates, n_features: int) -> list:
    """Ascending total FLOPs; ties go to fewer parameters, then the smaller descriptor."""
    def key(c):
        cost = cost_of(build_arch(c, n_features))
        return cost.total_flops, cost.param_count, candidate_key(c)
    return sorted(candidates, key=key)


def _stable_int(part) -> int:
    if isinstance(part, (int, np.integer)) and part >= 0:
        return int(part)
    digest = hashlib.sha256(repr(part).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(*parts) -> int:
    """64-bit seed from any mix of non-negative ints and hashable descriptors."""
    seq = np.random.SeedSequence([_stable_int(p) for p in parts])
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass
class ArchEvaluation:
    label: str
    total_flops: int
    param_count: int
    mean_best_train_acc: float
    mean_best_val_acc: float
    runs: list = field(default_factory=list)  # [best_train, best_val, diverged] per run

    def meets(self, threshold: float) -> bool:
        return self.mean_best_train_acc >= threshold and self.mean_best_val_acc >= threshold


@dataclass
class SearchResult:
    kind: str
    n_features: int
    repetition: int
    winner: str
    hidden: list | None
    qubits: int | None
    depth: int | None
    below_threshold: bool
    mean_best_train_acc: float
    mean_best_val_acc: float
    cost: CostReport
    runs: list
    models_trained: int
    threshold: float
    evaluated: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "repetition": self.repetition,
            "winner": self.winner,
            "hidden": self.hidden,
            "qubits": self.qubits,
            "depth": self.depth,
            "below_threshold": self.below_threshold,
            "mean_best_train_acc": self.mean_best_train_acc,
            "mean_best_val_acc": self.mean_best_val_acc,
            "cost": self.cost.to_dict(),
            "runs": self.runs,
            "models_trained": self.models_trained,
            "threshold": self.threshold,
            "evaluated": [vars(e) for e in self.evaluated],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchResult":
        d = dict(d)
        d["cost"] = CostReport.from_dict(d["cost"])
        d["evaluated"] = [ArchEvaluation(**e) for e in d.get("evaluated", [])]
        return cls(**d)


def evaluate_candidate(candidate, dataset, train_config: TrainConfig, runs: int) -> ArchEvaluation:
    arch = build_arch(candidate, dataset.n_features, len(np.unique(dataset.labels)))
    cost = cost_of(arch)
    key = candidate_key(candidate)
    run_rows = []
    for run in range(runs):
        cfg = replace(train_config, seed=derive_seed(train_config.seed, key, run))
        out = train(build_model(arch), dataset, cfg)
        if out.diverged:
            log.warning("%s run %d diverged; scored as accuracy 0", candidate_label(candidate), run)
            run_rows.append([0.0, 0.0, True])
        else:
            run_rows.append([out.best_train_acc, out.best_val_acc, False])
    return ArchEvaluation(
        label=candidate_label(candidate),
        total_flops=cost.total_flops,
        param_count=cost.param_count,
        mean_best_train_acc=fmean(r[0] for r in run_rows),
        mean_best_val_acc=fmean(r[1] for r in run_rows),
        runs=run_rows,
    )


def run_search(space: SearchSpace, data_config: SpiralConfig, train_config: TrainConfig,
               threshold: float = 0.90, runs: int = 5, repetition: int = 1) -> SearchResult:
    """Train candidates in FLOPs order until one meets ``threshold``.

    If none does, the result carries the best achiever (highest
    ``min(mean train, mean val)``) with ``below_threshold=True``.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    dataset = standardize(generate(data_config))
    n_features = data_config.n_features
    ordered = sort_by_flops(enumerate_space(space), n_features)
    evaluated = []
    chosen = None
    for cand in ordered:
        ev = evaluate_candidate(cand, dataset, train_config, runs)
        evaluated.append(ev)
        log.info("%s F=%d rep=%d %s flops=%d train=%.3f val=%.3f", space.kind, n_features,
                 repetition, ev.label, ev.total_flops, ev.mean_best_train_acc, ev.mean_best_val_acc)
        if ev.meets(threshold):
            chosen = (cand, ev)
            break
    below = chosen is None
    if below:
        # max() keeps the first (cheapest) of equal scores
        best = max(range(len(evaluated)),
                   key=lambda i: min(evaluated[i].mean_best_train_acc, evaluated[i].mean_best_val_acc))
        chosen = (ordered[best], evaluated[best])
    cand, ev = chosen
    is_q = isinstance(cand, QuantumLayerSpec)
    return SearchResult(
        kind=space.kind,
        n_features=n_features,
        repetition=repetition,
        winner=ev.label,
        hidden=None if is_q else list(cand),
        qubits=cand.qubits if is_q else None,
        depth=cand.depth if is_q else None,
        below_threshold=below,
        mean_best_train_acc=ev.mean_best_train_acc,
        mean_best_val_acc=ev.mean_best_val_acc,
        cost=cost_of(build_arch(cand, n_features, data_config.n_classes)),
        runs=ev.runs,
        models_trained=len(evaluated),
        threshold=threshold,
        evaluated=evaluated,
    )


def repetition_seed(master_seed: int, n_features: int, repetition: int) -> int:
    return derive_seed(master_seed, "rep", n_features, repetition)


def run_repetition(space: SearchSpace, data_config: SpiralConfig, train_config: TrainConfig,
                   rep_seed: int, repetition: int, threshold: float = 0.90, runs: int = 5) -> SearchResult:
    """One repetition: data and run seeds both come from ``rep_seed``.

    The data seed does not depend on the space, so every kind searched at the
    same (F, repetition) sees the same dataset.
    """
    data_cfg = replace(data_config, seed=derive_seed(rep_seed, "data"))
    train_cfg = replace(train_config, seed=derive_seed(rep_seed, "train"))
    return run_search(space, data_cfg, train_cfg, threshold, runs, repetition)


def aggregate(results) -> dict:
    """Plain means of winner FLOPs and parameters (below-threshold results excluded)."""
    winners = [r for r in results if not r.below_threshold]
    if not winners:
        return {"mean_flops": None, "mean_params": None, "n_winners": 0}
    return {
        "mean_flops": fmean(r.cost.total_flops for r in winners),
        "mean_params": fmean(r.cost.param_count for r in winners),
        "n_winners": len(winners),
    }


def repeat_search(space: SearchSpace, data_config: SpiralConfig, train_config: TrainConfig,
                  threshold: float = 0.90, runs: int = 5, repetitions: int = 5,
                  master_seed: int = 0, repetition_seeds=None):
    """Run ``repetitions`` independent searches; returns ``(results, aggregate)``."""
    if repetition_seeds is None:
        repetition_seeds = [repetition_seed(master_seed, data_config.n_features, r)
                            for r in range(1, repetitions + 1)]
    elif len(repetition_seeds) != repetitions:
        raise ValueError("need one seed per repetition")
    results = [run_repetition(space, data_config, train_config, s, r, threshold, runs)
               for r, s in enumerate(repetition_seeds, start=1)]
    return results, aggregate(results)
