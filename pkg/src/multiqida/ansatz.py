"""Circuit composition for the three ansatz flavours.

``QIDA_CX`` and ``QIDA_SO4`` are built from a :class:`LayerPlan`; ``LADDER<d>``
is the hardware-efficient baseline of depth ``d``. Every QIDA layer after the
first is the identity at zero parameters, so a freshly appended layer does not
disturb an already optimised state.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .layers import LayerPlan
from .statevector import AnsatzCircuit, Gate

_LADDER_RE = re.compile(r"^LADDER[_ ]?(\d+)$")


@dataclass(frozen=True)
class AnsatzKind:
    name: str
    depth: int = 0

    def __post_init__(self):
        if self.name not in ("QIDA_CX", "QIDA_SO4", "LADDER"):
            raise ValueError(f"unknown ansatz {self.name!r}")
        if self.name == "LADDER" and self.depth < 1:
            raise ValueError("ladder depth must be at least 1")

    @classmethod
    def parse(cls, text: str) -> AnsatzKind:
        t = text.strip().upper().replace("-", "_")
        if t in ("QIDA_CX", "QIDA_SO4"):
            return cls(t)
        m = _LADDER_RE.match(t)
        if m:
            return cls("LADDER", int(m.group(1)))
        raise ValueError(f"cannot parse ansatz name {text!r}; use QIDA_CX, QIDA_SO4 or LADDER<d>")

    @property
    def is_qida(self) -> bool:
        return self.name != "LADDER"

    def __str__(self) -> str:
        return f"LADDER{self.depth}" if self.name == "LADDER" else self.name


class _Builder:
    def __init__(self, n: int):
        self.n = n
        self.gates: list[Gate] = []
        self.boundaries: list[int] = []
        self.slices: list[tuple[int, int]] = []
        self.n_params = 0

    def start_layer(self):
        self.boundaries.append(len(self.gates))
        self._layer_start = self.n_params

    def end_layer(self):
        self.slices.append((self._layer_start, self.n_params))

    def ry_column(self):
        for q in range(self.n):
            self.gates.append(Gate("RY", (q,), (self.n_params,)))
            self.n_params += 1

    def cnots(self, pairs):
        for i, j in pairs:
            c, t = min(i, j), max(i, j)
            self.gates.append(Gate("CNOT", (c, t)))

    def so4(self, pairs):
        for i, j in pairs:
            slots = tuple(range(self.n_params, self.n_params + 6))
            self.gates.append(Gate("SO4", (min(i, j), max(i, j)), slots))
            self.n_params += 6

    def build(self, kind: str) -> AnsatzCircuit:
        return AnsatzCircuit(self.n, self.gates, self.boundaries, self.slices, self.n_params, kind)


def compose_ladder(n: int, d: int) -> AnsatzCircuit:
    """``d`` repetitions of (Ry column, CNOT chain) closed by a final Ry column.

    Each repetition is one layer in the bookkeeping; the closing column is
    folded into the last layer.
    """
    if n < 2 or d < 1:
        raise ValueError(f"ladder needs n >= 2 and d >= 1, got n={n}, d={d}")
    b = _Builder(n)
    chain = [(q, q + 1) for q in range(n - 1)]
    for k in range(d):
        b.start_layer()
        b.ry_column()
        b.cnots(chain)
        if k == d - 1:
            b.ry_column()
        b.end_layer()
    return b.build(f"LADDER{d}")


def _check_plan(plan: LayerPlan):
    if not plan.layers or not any(plan.layers):
        raise ValueError("cannot compose a circuit from an empty layer plan")


def compose_qida_cx(plan: LayerPlan) -> AnsatzCircuit:
    _check_plan(plan)
    b = _Builder(plan.n_qubits)
    for k, layer in enumerate(plan.layers):
        b.start_layer()
        if k == 0:
            b.ry_column()
            b.cnots(layer)
        else:
            # V-shape: the two Ry columns around the mirrored CNOT block cancel at zero
            b.ry_column()
            b.cnots(layer)
            b.ry_column()
            b.cnots(reversed(layer))
            b.ry_column()
        b.end_layer()
    return b.build("QIDA_CX")


def compose_qida_so4(plan: LayerPlan) -> AnsatzCircuit:
    _check_plan(plan)
    b = _Builder(plan.n_qubits)
    for layer in plan.layers:
        b.start_layer()
        b.so4(layer)
        b.end_layer()
    return b.build("QIDA_SO4")


def compose(kind, plan: LayerPlan | None = None, n: int | None = None) -> AnsatzCircuit:
    kind = AnsatzKind.parse(kind) if isinstance(kind, str) else kind
    if kind.name == "LADDER":
        if n is None:
            if plan is None:
                raise ValueError("ladder ansatz needs n or a plan")
            n = plan.n_qubits
        return compose_ladder(n, kind.depth)
    if plan is None:
        raise ValueError(f"{kind} needs a layer plan")
    return compose_qida_cx(plan) if kind.name == "QIDA_CX" else compose_qida_so4(plan)


def cnot_count(circuit: AnsatzCircuit) -> int:
    """CNOTs count one, SO(4) blocks two, rotations nothing."""
    return sum({"CNOT": 1, "SO4": 2}.get(g.kind, 0) for g in circuit.gates)


def circuit_summary(circuit: AnsatzCircuit) -> dict:
    counts: dict[str, int] = {}
    for g in circuit.gates:
        counts[g.kind] = counts.get(g.kind, 0) + 1
    return {
        "kind": circuit.kind,
        "n_qubits": circuit.n_qubits,
        "n_params": circuit.n_params,
        "n_layers": circuit.n_layers,
        "cnot_count": cnot_count(circuit),
        "gate_counts": counts,
        "layer_boundaries": list(circuit.layer_boundaries),
        "param_slices": [list(s) for s in circuit.param_slices],
        "gates": [{"kind": g.kind, "qubits": list(g.qubits), "slots": list(g.slots)} for g in circuit.gates],
    }


def circuit_summary_json(circuit: AnsatzCircuit, indent: int | None = 2) -> str:
    return json.dumps(circuit_summary(circuit), indent=indent)
