"""Partition qubit pairs into entangling layers by descending QMI bands."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

Pair = tuple[int, int]


class LayerBuildError(RuntimeError):
    pass


@dataclass(frozen=True)
class FinesseRatio:
    """Strictly decreasing thresholds in (0, 1] splitting the normalised QMI range."""

    thresholds: tuple[float, ...]

    def __post_init__(self):
        t = tuple(float(x) for x in self.thresholds)
        if not t:
            raise ValueError("need at least one threshold")
        if any(not 0 < x <= 1 for x in t):
            raise ValueError(f"thresholds must lie in (0, 1]: {t}")
        if any(a <= b for a, b in zip(t, t[1:])):
            raise ValueError(f"thresholds must be strictly decreasing: {t}")
        object.__setattr__(self, "thresholds", t)

    @classmethod
    def uniform(cls, start: float = 0.9, step: float = 0.1) -> FinesseRatio:
        count = int(np.floor(start / step + 1e-9))
        return cls(tuple(round(start - k * step, 12) for k in range(count)))

    def bands(self):
        """(low, high) pairs; the first band is closed above (high is None)."""
        high = None
        for low in self.thresholds:
            yield low, high
            high = low


@dataclass
class LayerPlan:
    n_qubits: int
    qida_layers: list[list[Pair]] = field(default_factory=list)
    closure_layers: list[list[Pair]] = field(default_factory=list)
    bands: list[tuple[float, float | None]] = field(default_factory=list)

    @property
    def layers(self) -> list[list[Pair]]:
        return self.qida_layers + self.closure_layers

    @property
    def n_pairs(self) -> int:
        return sum(len(layer) for layer in self.qida_layers)

    def validate(self) -> None:
        seen = set()
        for layer in self.qida_layers:
            for i, j in layer:
                if not (0 <= i < j < self.n_qubits):
                    raise ValueError(f"bad pair ({i}, {j})")
                if (i, j) in seen:
                    raise ValueError(f"pair ({i}, {j}) appears in more than one layer")
                seen.add((i, j))
        ds = DisjointSet(range(self.n_qubits))
        for layer in self.layers:
            for i, j in layer:
                ds.merge(i, j)
        if ds.n_subsets != 1:
            raise ValueError(f"plan leaves {ds.n_subsets} disconnected groups")

    def pair_sets(self) -> list[frozenset[Pair]]:
        return [frozenset(layer) for layer in self.qida_layers]

    # text format: one layer per line, pairs as ``i-j``; closure layers after a marker line
    def to_text(self, canonical: bool = True) -> str:
        def fmt(layer):
            pairs = sorted(layer) if canonical else layer
            return " ".join(f"{i}-{j}" for i, j in pairs)

        lines = [f"# n_qubits {self.n_qubits}"]
        lines += [fmt(layer) for layer in self.qida_layers]
        if self.closure_layers:
            lines.append("# closure")
            lines += [fmt(layer) for layer in self.closure_layers]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> LayerPlan:
        n = None
        qida, closure = [], []
        target = qida
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                words = line[1:].split()
                if words[:1] == ["n_qubits"]:
                    n = int(words[1])
                elif words[:1] == ["closure"]:
                    target = closure
                continue
            layer = []
            for tok in line.split():
                a, b = tok.split("-")
                layer.append((int(a), int(b)))
            target.append(layer)
        if n is None:
            n = 1 + max(max(p) for layer in qida + closure for p in layer)
        return cls(n, qida, closure)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> LayerPlan:
        return cls.from_text(Path(path).read_text())


def ladder_layer(n: int) -> list[Pair]:
    return [(q, q + 1) for q in range(n - 1)]


def _candidates(norm: np.ndarray, low: float, high: float | None) -> list[Pair]:
    n = norm.shape[0]
    pairs = [
        (i, j)
        for i, j in combinations(range(n), 2)
        if norm[i, j] >= low and (high is None or norm[i, j] < high)
    ]
    # descending QMI, ties broken by (i, j)
    return sorted(pairs, key=lambda p: (-norm[p], p[0], p[1]))


def build_layers(
    qmi,
    finesse: FinesseRatio | None = None,
    n: int | None = None,
    closure_count: int = 1,
    commit: str = "snapshot",
) -> LayerPlan:
    """Multi-threshold layer construction.

    ``qmi`` is a :class:`~multiqida.qmi.QmiMatrix` or a square array; either
    way it is max-normalised before banding. Within a band, a pair is taken
    when its endpoints sit in different connected components of the graph as
    it stood at the start of the layer (``commit="snapshot"``); accepted edges
    join the graph once the layer is closed. ``commit="immediate"`` adds each
    edge as soon as it is accepted instead. Bands are consumed until every
    qubit has been touched and the graph is connected, then ``closure_count``
    ladder layers are appended.
    """
    values = np.asarray(getattr(qmi, "values", qmi), dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("QMI matrix must be square")
    if not np.allclose(values, values.T, atol=1e-12):
        raise ValueError("QMI matrix must be symmetric")
    n = values.shape[0] if n is None else n
    if n < 2 or values.shape[0] != n:
        raise ValueError(f"need n >= 2 matching the matrix size, got n={n}")
    if commit not in ("snapshot", "immediate"):
        raise ValueError(f"unknown commit mode {commit!r}")
    finesse = finesse or FinesseRatio.uniform()
    top = values.max()
    if top <= 0:
        raise LayerBuildError("QMI matrix has no positive entries; nothing to select")
    norm = values / top

    ds = DisjointSet(range(n))
    free = set(range(n))
    plan = LayerPlan(n)
    for low, high in finesse.bands():
        if not free and ds.n_subsets == 1:
            break
        layer = []
        if commit == "snapshot":
            roots = [ds[q] for q in range(n)]
            for i, j in _candidates(norm, low, high):
                if roots[i] != roots[j]:
                    layer.append((i, j))
            for i, j in layer:
                ds.merge(i, j)
        else:
            for i, j in _candidates(norm, low, high):
                if not ds.connected(i, j):
                    layer.append((i, j))
                    ds.merge(i, j)
        if layer:
            free -= {q for p in layer for q in p}
            plan.qida_layers.append(layer)
            plan.bands.append((low, high))
    if free or ds.n_subsets != 1:
        groups = [sorted(g) for g in ds.subsets()]
        raise LayerBuildError(
            f"thresholds exhausted: uncovered qubits {sorted(free)}, components {groups}"
        )
    plan.closure_layers = [ladder_layer(n) for _ in range(closure_count)]
    plan.validate()
    return plan


def single_threshold_qida(qmi, mu: float, normalize: bool = True) -> list[Pair]:
    """All pairs with QMI >= ``mu`` (no connectivity filtering).

    ``mu = 0`` selects the strictly positive entries only.
    """
    if not 0 <= mu < 1:
        raise ValueError("mu must lie in [0, 1)")
    values = np.asarray(getattr(qmi, "values", qmi), dtype=float)
    if normalize and values.max() > 0:
        values = values / values.max()
    n = values.shape[0]
    return [
        (i, j)
        for i, j in combinations(range(n), 2)
        if values[i, j] >= mu and values[i, j] > 0
    ]


def merge_layers(plan: LayerPlan, groups: list[list[int]], allow_overlap: bool = False) -> LayerPlan:
    """Concatenate the listed QIDA layers into one, keeping the other layers in order.

    Each merged layer takes the position of the first layer of its group.
    """
    seen = set()
    for g in groups:
        if not g:
            raise ValueError("empty merge group")
        for k in g:
            if not 0 <= k < len(plan.qida_layers):
                raise IndexError(f"layer index {k} out of range")
            if k in seen:
                raise ValueError(f"layer {k} listed in more than one merge group")
            seen.add(k)
    lead = {min(g): sorted(g) for g in groups}
    absorbed = seen - set(lead)
    new_layers = []
    for k, layer in enumerate(plan.qida_layers):
        if k in absorbed:
            continue
        if k in lead:
            merged = []
            used = set()
            for m in lead[k]:
                qubits = {q for p in plan.qida_layers[m] for q in p}
                if used & qubits and not allow_overlap:
                    raise ValueError(f"layers {lead[k]} share qubits {sorted(used & qubits)}")
                used |= qubits
                merged.extend(plan.qida_layers[m])
            new_layers.append(merged)
        else:
            new_layers.append(list(layer))
    return LayerPlan(plan.n_qubits, new_layers, [list(x) for x in plan.closure_layers])
