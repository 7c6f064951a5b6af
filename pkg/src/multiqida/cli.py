"""Command-line front end: ``multiqida {ham,qmi,layers,run,report}``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 a ``--self-check`` comparison failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import exact
from .ansatz import AnsatzKind, circuit_summary
from .config import ConfigError, ExperimentConfig, load_config, preset_names
from .lattice import build_heisenberg, lattice_edges, neel_bits, neel_energy
from .layers import LayerBuildError, LayerPlan, build_layers, merge_layers
from .metrics import summarize_records, summary_csv, format_table
from .qmi import QmiMatrix, qmi_matrix
from .reference import cached_reference
from .vqe import NumericalFailure, VqeRunRecord, batch_runs, make_job

log = logging.getLogger("multiqida")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_SELF_CHECK = 0, 1, 2, 3


class SelfCheck:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.failures: list[str] = []

    def check(self, ok: bool, what: str):
        if not self.enabled:
            return
        print(f"[self-check] {'PASS' if ok else 'FAIL'} {what}")
        if not ok:
            self.failures.append(what)

    @property
    def code(self) -> int:
        return EXIT_SELF_CHECK if self.failures else EXIT_OK


# ---------------------------------------------------------------------------
# pipeline stages shared by the subcommands


class Pipeline:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.spec = cfg.lattice
        self.h = build_heisenberg(cfg.lattice)
        self.out = Path(cfg.out)
        self._ref = None
        self._qmi = None
        self._plan = None
        self._e_exact = None

    @property
    def e_neel(self) -> float:
        return neel_energy(self.spec)

    @property
    def e_exact(self) -> float:
        if self._e_exact is None:
            if self.h.n_qubits <= exact.MAX_EXACT_QUBITS:
                self._e_exact = exact.exact_ground_state(self.h)[0]
            else:
                self._e_exact = self.reference().energy
        return self._e_exact

    def reference(self):
        if self._ref is None:
            r = self.cfg.reference
            t = time.perf_counter()
            self._ref = cached_reference(self.spec, self.h, self.out / "cache", backend=r.backend, chi=r.chi,
                                         sweeps=r.sweeps, tol=r.tol, seed=r.seed, degeneracy_tol=r.degeneracy_tol)
            log.info("reference (%s) E=%.10f in %.1fs", self._ref.backend, self._ref.energy, time.perf_counter() - t)
        return self._ref

    def qmi(self) -> QmiMatrix:
        if self._qmi is None:
            self._qmi = qmi_matrix(self.reference().state)
        return self._qmi

    def plan(self) -> LayerPlan:
        if self._plan is None:
            lc = self.cfg.layers
            plan = build_layers(self.qmi(), lc.finesse(), closure_count=lc.closure)
            if lc.merge:
                plan = merge_layers(plan, [list(g) for g in lc.merge])
            self._plan = plan
        return self._plan

    def write_qmi(self):
        self.out.mkdir(parents=True, exist_ok=True)
        q = self.qmi()
        q.to_csv(self.out / "qmi.csv")
        q.to_csv(self.out / "qmi_normalized.csv", normalized=True)
        return q

    def write_layers(self):
        self.out.mkdir(parents=True, exist_ok=True)
        plan = self.plan()
        plan.save(self.out / "layers.txt")
        return plan


def _check_qmi(q: QmiMatrix, sc: SelfCheck):
    v = q.values
    s = q.single_entropies
    bound = 2 * np.minimum.outer(s, s) + 1e-9
    off = ~np.eye(q.n, dtype=bool)
    sc.check(bool(np.allclose(v, v.T, atol=1e-12)), "QMI matrix symmetric")
    sc.check(bool(np.all(np.diag(v) == 0)), "QMI diagonal is zero")
    sc.check(bool(np.all(v[off] >= -1e-9) and np.all(v[off] <= bound[off])), "QMI entries within [0, 2 min(S_i, S_j)]")


def _check_layers(plan: LayerPlan, cfg: ExperimentConfig, sc: SelfCheck):
    golden = cfg.expected.layers
    if golden is None:
        return
    got = plan.pair_sets()
    want = [frozenset(tuple(p) for p in layer) for layer in golden]
    sc.check(got == want, f"layer plan matches the {len(want)} expected layers")


# ---------------------------------------------------------------------------
# subcommands


def cmd_ham(cfg: ExperimentConfig, sc: SelfCheck) -> int:
    p = Pipeline(cfg)
    edges = lattice_edges(cfg.lattice)
    report = {
        "lattice": cfg.lattice.label,
        "n_qubits": p.h.n_qubits,
        "n_terms": len(p.h),
        "n_edges": len(edges),
        "edges": [list(e) for e in edges],
        "e_neel": p.e_neel,
    }
    if cfg.reference.backend == "dmrg":
        report["e_dmrg"] = p.reference().energy
    if p.h.n_qubits <= exact.MAX_EXACT_QUBITS:
        report["e_exact"] = p.e_exact
    print(f"lattice {report['lattice']}: {report['n_qubits']} qubits, {report['n_edges']} edges, "
          f"{report['n_terms']} Pauli terms")
    print(f"E_neel  = {report['e_neel']:.6f}")
    for key, label in (("e_exact", "E_exact"), ("e_dmrg", "E_dmrg")):
        if key in report:
            print(f"{label:<7} = {report[key]:.6f}")
    p.out.mkdir(parents=True, exist_ok=True)
    (p.out / "ham.json").write_text(json.dumps(report, indent=2) + "\n")
    ex = cfg.expected
    if ex.e_neel is not None:
        sc.check(report["e_neel"] == ex.e_neel, f"Neel energy {report['e_neel']} == {ex.e_neel}")
    if ex.e_exact is not None:
        e = report.get("e_exact", report.get("e_dmrg"))
        sc.check(e is not None and abs(e - ex.e_exact) <= ex.energy_tol,
                 f"ground energy {e:.8f} within {ex.energy_tol:g} of {ex.e_exact}")
    return sc.code


def cmd_qmi(cfg: ExperimentConfig, sc: SelfCheck) -> int:
    p = Pipeline(cfg)
    q = p.write_qmi()
    norm = q.normalized()
    iu = np.triu_indices(q.n, 1)
    order = np.argsort(-norm[iu], kind="stable")[:6]
    print(f"QMI written to {p.out / 'qmi.csv'}; strongest pairs:")
    for k in order:
        i, j = iu[0][k], iu[1][k]
        print(f"  [{i},{j}]  I={q.values[i, j]:.6f}  normalised={norm[i, j]:.4f}")
    _check_qmi(q, sc)
    return sc.code


def cmd_layers(cfg: ExperimentConfig, sc: SelfCheck) -> int:
    p = Pipeline(cfg)
    p.write_qmi()
    plan = p.write_layers()
    sys.stdout.write(plan.to_text())
    _check_layers(plan, cfg, sc)
    return sc.code


def _write_records(out: Path, records):
    with open(out / "runs.jsonl", "w") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")
    with open(out / "trajectories.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_id", "iteration", "energy", "phase"])
        for r in records:
            for run_id, it, e, phase in r.trajectory_rows():
                w.writerow([f"{r.ansatz}:{run_id}", it, repr(float(e)), phase])


def cmd_run(cfg: ExperimentConfig, sc: SelfCheck) -> int:
    p = Pipeline(cfg)
    p.write_qmi()
    plan = p.write_layers()
    _check_layers(plan, cfg, sc)
    e_exact, e_neel = p.e_exact, p.e_neel
    bits = neel_bits(cfg.lattice)
    (p.out / "circuits").mkdir(exist_ok=True)
    records = []
    for name in cfg.ansatze:
        kind = AnsatzKind.parse(name)
        job = make_job(p.h, kind, plan, cfg.optimizer, bits, cfg.lattice.label, e_exact, e_neel)
        (p.out / "circuits" / f"{kind}.json").write_text(json.dumps(circuit_summary(job.circuit), indent=1) + "\n")
        t = time.perf_counter()
        batch = batch_runs(job, cfg.n_runs, cfg.seed, cfg.threads)
        log.info("%s: %d runs in %.1fs", kind, len(batch), time.perf_counter() - t)
        records.extend(batch)
        want = cfg.expected.cnots.get(str(kind))
        if want is not None:
            sc.check(batch[0].cnots == want, f"{kind} CNOT count {batch[0].cnots} == {want}")
    _write_records(p.out, records)
    failed = [r for r in records if not r.ok]
    if len(failed) == len(records):
        log.error("every run failed")
        return EXIT_NUMERICAL
    summaries = summarize_records(records)
    (p.out / "summary.csv").write_text(summary_csv(summaries))
    print(format_table(summaries))
    lowest = min(min(r.energies) for r in records if r.ok)
    sc.check(lowest >= e_exact - 1e-9, f"variational bound: lowest recorded energy {lowest:.10f} >= E_exact - 1e-9")
    ex = cfg.expected
    for s in summaries:
        a = s.ansatz
        if a in ex.aqe_avg_min:
            sc.check(s.AQE_avg >= ex.aqe_avg_min[a], f"{a} mean AQE {s.AQE_avg:.3f} >= {ex.aqe_avg_min[a]}")
        if a in ex.aqe_best_min:
            sc.check(s.AQE_best >= ex.aqe_best_min[a], f"{a} best AQE {s.AQE_best:.3f} >= {ex.aqe_best_min[a]}")
        if a in ex.aqe_avg_max:
            sc.check(s.AQE_avg <= ex.aqe_avg_max[a], f"{a} mean AQE {s.AQE_avg:.3f} <= {ex.aqe_avg_max[a]}")
        if a in ex.med_max:
            sc.check(s.MED <= ex.med_max[a], f"{a} MED {s.MED:.3g} <= {ex.med_max[a]}")
    if failed:
        log.warning("%d of %d runs failed numerically", len(failed), len(records))
        return sc.code or EXIT_NUMERICAL
    return sc.code


def load_records(paths) -> list[VqeRunRecord]:
    records = []
    for path in paths:
        path = Path(path)
        if path.is_dir():
            path = path / "runs.jsonl"
        with open(path) as fh:
            for k, line in enumerate(fh, 1):
                if line.strip():
                    try:
                        records.append(VqeRunRecord.from_json(line))
                    except (ValueError, TypeError) as exc:
                        raise ConfigError(f"{path}:{k}: malformed record ({exc})") from exc
    if not records:
        raise ConfigError("no run records found")
    return records


def cmd_report(paths, out: str | None) -> int:
    summaries = summarize_records(load_records(paths))
    text = summary_csv(summaries)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "summary.csv").write_text(text)
        print(format_table(summaries))
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multiqida", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help=f"TOML file or preset name ({', '.join(preset_names())})")
    common.add_argument("--seed", type=int)
    common.add_argument("--runs", type=int)
    common.add_argument("--out")
    common.add_argument("--backend", choices=["exact", "dmrg"])
    common.add_argument("--threads", type=int)
    common.add_argument("--self-check", action="store_true")
    for name, help_ in [("ham", "Hamiltonian summary and reference energies"),
                        ("qmi", "write the QMI matrix of the reference state"),
                        ("layers", "build the layer plan"),
                        ("run", "full pipeline with batched VQE runs")]:
        sub.add_parser(name, parents=[common], help=help_)
    rep = sub.add_parser("report", help="recompute the summary from stored run records")
    rep.add_argument("records", nargs="+", help="runs.jsonl files or experiment directories")
    rep.add_argument("--out")
    return parser


_COMMANDS = {"ham": cmd_ham, "qmi": cmd_qmi, "layers": cmd_layers, "run": cmd_run}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args.records, args.out)
        cfg = load_config(args.config).with_overrides(args.seed, args.runs, args.out, args.backend, args.threads)
        return _COMMANDS[args.command](cfg, SelfCheck(args.self_check))
    except (ConfigError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, LayerBuildError, exact.DimensionError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # summarize_records and friends raise ValueError on unusable input
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
