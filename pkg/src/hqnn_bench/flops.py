"""Analytic per-sample FLOPs and parameter accounting.

Dense layer ``in -> out``:
    forward  = 2*in*out + out (matmul + bias) + out (activation)
    backward = 4*in*out + out

Quantum part on ``q`` qubits, with ``G = 28 * 2**(q-1)`` real FLOPs per
single-qubit gate (a complex 2x2 matvec on each of the ``2**(q-1)`` amplitude
pairs) and CNOTs free (pure permutations):
    encoding          = q * G                       (forward only)
    layer forward     = rotations * G + q * 2 * 2**q  (gates + <Z> readout)
    layer backward    = (2 * P + 2 * q) * layer forward
where ``P`` is the number of quantum angles and every SEL ``Rot`` counts as
three rotations. The backward term is the parameter-shift cost: two shifted
evaluations per angle and per encoded input.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .hybrid import HybridArch
from .nn import ClassicalArch
from .qsim import MAX_QUBITS

GATE_FLOPS_PER_PAIR = 28


@dataclass(frozen=True)
class CostReport:
    forward_flops: int
    backward_flops: int
    param_count: int
    breakdown: dict = field(default_factory=dict)

    @property
    def total_flops(self) -> int:
        return self.forward_flops + self.backward_flops

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total_flops"] = self.total_flops
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CostReport":
        return cls(d["forward_flops"], d["backward_flops"], d["param_count"], dict(d["breakdown"]))


def dense_cost(n_in: int, n_out: int) -> tuple[int, int]:
    """(forward, backward) FLOPs of one dense layer for one sample."""
    return 2 * n_in * n_out + 2 * n_out, 4 * n_in * n_out + n_out


def _dense_stack(sizes) -> tuple[int, int]:
    fwd = bwd = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        f, b = dense_cost(n_in, n_out)
        fwd += f
        bwd += b
    return fwd, bwd


def cost_classical(arch: ClassicalArch) -> CostReport:
    fwd, bwd = _dense_stack(arch.layer_sizes)
    breakdown = {"classical_layers": fwd + bwd, "encoding": 0, "quantum_layer": 0}
    return CostReport(fwd, bwd, arch.param_count, breakdown)


def gate_flops(qubits: int) -> int:
    return GATE_FLOPS_PER_PAIR * 2 ** (qubits - 1)


def cost_hybrid(arch: HybridArch) -> CostReport:
    spec = arch.layer_spec
    q = spec.qubits
    if q > MAX_QUBITS:
        raise ValueError(f"{q} qubits exceeds the simulation cap of {MAX_QUBITS}")
    cl_fwd, cl_bwd = _dense_stack((arch.input_dim, q))
    f, b = dense_cost(q, arch.output_dim)
    cl_fwd, cl_bwd = cl_fwd + f, cl_bwd + b

    g = gate_flops(q)
    encoding = q * g
    ql_fwd = spec.rotation_count * g + q * 2 * 2 ** q
    ql_bwd = (2 * spec.param_count + 2 * q) * ql_fwd
    breakdown = {
        "classical_layers": cl_fwd + cl_bwd,
        "encoding": encoding,
        "quantum_layer": ql_fwd + ql_bwd,
    }
    return CostReport(cl_fwd + encoding + ql_fwd, cl_bwd + ql_bwd, arch.param_count, breakdown)


def cost_of(arch) -> CostReport:
    if isinstance(arch, HybridArch):
        return cost_hybrid(arch)
    return cost_classical(arch)


def percent_increase(v_low: float, v_high: float) -> float:
    """Growth from ``v_low`` to ``v_high`` as a percentage of ``v_high``."""
    if v_high <= 0:
        raise ValueError(f"v_high must be positive, got {v_high}")
    return 100.0 * (v_high - v_low) / v_high


# --- published reference breakdown -----------------------------------------

@dataclass(frozen=True)
class PaperRow:
    model: str
    feature_size: int
    qubits: int
    depth: int
    total: int
    enc_cl: int
    cl: int
    enc: int
    ql: int

    @property
    def best_combination(self) -> str:
        return f"{self.feature_size}/({self.qubits},{self.depth})"


PAPER_TABLE = (
    PaperRow("BEL", 10, 3, 2, 977, 749, 283, 466, 228),
    PaperRow("BEL", 40, 3, 2, 1517, 1289, 823, 466, 228),
    PaperRow("BEL", 80, 3, 4, 2537, 2009, 1543, 466, 528),
    PaperRow("BEL", 110, 4, 4, 4797, 3901, 2769, 1132, 896),
    PaperRow("SEL", 10, 3, 2, 1589, 749, 283, 466, 840),
    PaperRow("SEL", 40, 3, 2, 2129, 1289, 823, 466, 840),
    PaperRow("SEL", 80, 3, 2, 2849, 2009, 1543, 466, 840),
    PaperRow("SEL", 110, 3, 2, 3389, 2549, 2083, 466, 840),
)

# growth rates quoted alongside the table (low = 10 features, high = 110)
PAPER_PERCENT_INCREASE = {
    "classical": {"flops": 88.5, "params": 88.5},
    "hybrid-BEL": {"flops": 80.13, "params": 89.6},
    "hybrid-SEL": {"flops": 53.1, "params": 81.4},
}

PAPER_COLUMNS = ("Model", "FS/BC", "TF", "Enc+CL", "CL", "Enc", "QL")


def load_paper_reference() -> tuple[PaperRow, ...]:
    return PAPER_TABLE


def write_paper_reference_csv(path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PAPER_COLUMNS)
        for r in PAPER_TABLE:
            w.writerow([f"Hybrid ({r.model})", r.best_combination, r.total, r.enc_cl, r.cl, r.enc, r.ql])
