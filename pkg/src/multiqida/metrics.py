"""Accuracy metrics for VQE batches."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

TABLE_COLUMNS = ["Lattice", "Ansatz", "E_avg", "E_best", "AQE_avg", "RQE_avg", "AQE_best", "RQE_best",
                 "MED", "MAED", "MRED"]
EXTRA_COLUMNS = ["E_std", "CNOT", "n_runs", "n_failed"]


def aqe(e, e_exact):
    """Absolute quantum efficiency: percentage of the exact energy recovered."""
    if e_exact == 0:
        raise ZeroDivisionError("AQE is undefined for a zero exact energy")
    return np.asarray(e, dtype=float) / e_exact * 100 if np.ndim(e) else e / e_exact * 100


def rqe(e, e_exact, e_neel):
    """Relative quantum efficiency, measured from the Neel energy towards the exact one."""
    denom = abs(e_exact - e_neel)
    if denom == 0:
        raise ZeroDivisionError("RQE is undefined when the exact and Neel energies coincide")
    return np.abs(np.asarray(e, dtype=float) - e_neel) / denom * 100 if np.ndim(e) else abs(e - e_neel) / denom * 100


def deviation_metrics(values, best) -> float:
    """Mean absolute deviation of ``values`` from ``best``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot compute deviations of an empty batch")
    return float(np.mean(np.abs(v - best)))


@dataclass
class MetricSummary:
    lattice: str
    ansatz: str
    E_avg: float
    E_std: float
    E_best: float
    AQE_avg: float
    AQE_best: float
    RQE_avg: float
    RQE_best: float
    MED: float
    MAED: float
    MRED: float
    cnots: int = 0
    n_runs: int = 0
    n_failed: int = 0

    def row(self) -> list:
        vals = [self.lattice, self.ansatz, self.E_avg, self.E_best, self.AQE_avg, self.RQE_avg, self.AQE_best,
                self.RQE_best, self.MED, self.MAED, self.MRED, self.E_std, self.cnots, self.n_runs, self.n_failed]
        return [repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in vals]


def summarize(energies, e_exact: float, e_neel: float, lattice: str = "", ansatz: str = "",
              cnots: int = 0, n_failed: int = 0) -> MetricSummary:
    e = np.asarray(energies, dtype=float)
    if e.size == 0:
        raise ValueError("no energies to summarise")
    a = aqe(e, e_exact)
    r = rqe(e, e_exact, e_neel)
    ib = int(np.argmin(e))
    return MetricSummary(
        lattice, ansatz,
        float(e.mean()), float(e.std()), float(e[ib]),
        float(a.mean()), float(a[ib]),
        float(r.mean()), float(r[ib]),
        deviation_metrics(e, e[ib]), deviation_metrics(a, a[ib]), deviation_metrics(r, r[ib]),
        cnots, int(e.size), n_failed,
    )


def summarize_records(records) -> list[MetricSummary]:
    """One summary per (lattice, ansatz), in first-appearance order; failed runs are counted, not averaged."""
    groups: dict[tuple[str, str], list] = {}
    for rec in records:
        groups.setdefault((rec.lattice, rec.ansatz), []).append(rec)
    out = []
    for (lattice, ansatz), recs in groups.items():
        ok = [r for r in recs if r.ok]
        if not ok:
            raise ValueError(f"every run failed for {lattice} / {ansatz}")
        ref = ok[0]
        if ref.e_exact is None or ref.e_neel is None:
            raise ValueError(f"records for {lattice} / {ansatz} lack reference energies")
        out.append(summarize([r.energy for r in ok], ref.e_exact, ref.e_neel, lattice, ansatz, ref.cnots,
                             len(recs) - len(ok)))
    return out


def summary_csv(summaries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS + EXTRA_COLUMNS)
    for s in summaries:
        w.writerow(s.row())
    return buf.getvalue()


def format_table(summaries) -> str:
    """Human-readable table with two-decimal percentages."""
    lines = [f"{'Lattice':<14}{'Ansatz':<10}{'E_avg':>11}{'E_best':>11}{'AQE_avg':>9}{'RQE_avg':>9}"
             f"{'AQE_best':>10}{'RQE_best':>10}{'MED':>10}{'MAED':>8}{'MRED':>8}{'CNOT':>6}"]
    for s in summaries:
        lines.append(f"{s.lattice:<14}{s.ansatz:<10}{s.E_avg:>11.6f}{s.E_best:>11.6f}{s.AQE_avg:>9.2f}"
                     f"{s.RQE_avg:>9.2f}{s.AQE_best:>10.2f}{s.RQE_best:>10.2f}{s.MED:>10.3g}{s.MAED:>8.2f}"
                     f"{s.MRED:>8.2f}{s.cnots:>6}")
    return "\n".join(lines)
