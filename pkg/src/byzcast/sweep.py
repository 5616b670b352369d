"""Scenario matrices: expansion, execution and aggregation.

A matrix document lists cells.  Each cell names one graph and fault bound
plus the faulty sets, adversaries and input assignments to cross; every
combination becomes one :class:`~byzcast.trace.Scenario`.  Results are keyed
by scenario hash, so rerunning a matrix into the same directory only runs
the scenarios that have no verdict on disk yet.
"""

from __future__ import annotations

import itertools
import json
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .adversary import AdversaryStrategy
from .errors import ScenarioError
from .graph_core import Graph, enumerate_candidate_sets
from .simulator import run
from .trace import Scenario, dumps, graph_from_doc
from .verifier import Verdict, verify

MATRIX_SCHEMA = "byzcast-matrix/1"
AGGREGATE_SCHEMA = "byzcast-aggregate/1"

EXHAUSTIVE_MAX_NODES = 6
DEFAULT_SAMPLES = 64
TRACE_MODES = ("all", "failures", "none")


def input_assignments(n: int, spec=None, seed: int = 0) -> list[tuple]:
    """Bit tuples for a cell.

    ``spec`` is ``"exhaustive"``, ``{"sample": k}`` (optionally with its own
    ``seed``), an explicit list of bit strings, or None for the default:
    exhaustive up to 6 nodes, 64 seeded samples beyond.
    """
    if spec is None:
        spec = "exhaustive" if n <= EXHAUSTIVE_MAX_NODES else {"sample": DEFAULT_SAMPLES}
    if spec == "exhaustive":
        values = range(2 ** n)
    elif isinstance(spec, dict):
        k = int(spec["sample"])
        rng = random.Random(f"inputs:{spec.get('seed', seed)}:{n}")
        values = sorted(rng.sample(range(2 ** n), min(k, 2 ** n)))
    elif isinstance(spec, list):
        out = []
        for s in spec:
            if len(s) != n or set(s) - {"0", "1"}:
                raise ScenarioError(f"input {s!r} is not a {n}-bit string")
            out.append(tuple(int(c) for c in s))
        return out
    else:
        raise ScenarioError(f"unrecognised inputs spec {spec!r}")
    return [tuple((x >> (n - 1 - v)) & 1 for v in range(n)) for x in values]


@dataclass
class Cell:
    """One (graph, f, faulty set, adversary) combination crossed with its inputs."""

    name: str
    graph: Graph
    f: int
    faulty: frozenset
    adversary: AdversaryStrategy
    inputs: list
    seed: int = 0

    @property
    def key(self) -> str:
        adv = self.adversary.kind if self.adversary.seed is None else \
            f"{self.adversary.kind}:{self.adversary.seed}"
        faulty = ",".join(map(str, sorted(self.faulty))) or "-"
        return f"{self.name}|f={self.f}|faulty={faulty}|{adv}"

    def scenarios(self) -> list[Scenario]:
        return [Scenario(self.graph, self.f, bits, self.faulty, self.adversary, self.seed)
                for bits in self.inputs]


def _graph_name(doc: dict, g: Graph) -> str:
    if "family" in doc:
        return "-".join([doc["family"], *map(str, doc.get("params", ()))])
    return f"n{g.n}-m{len(g.edges)}"


def expand_matrix(doc: dict) -> list[Cell]:
    if doc.get("schema", MATRIX_SCHEMA) != MATRIX_SCHEMA:
        raise ScenarioError(f"unsupported matrix schema {doc.get('schema')!r}")
    extra = set(doc) - {"schema", "cells", "seed"}
    if extra:
        raise ScenarioError(f"unknown matrix keys: {sorted(extra)}")
    seed = int(doc.get("seed", 0))
    cells = []
    for c in doc.get("cells", ()):
        bad = set(c) - {"graph", "f", "faulty", "adversaries", "inputs", "seed"}
        if bad:
            raise ScenarioError(f"unknown cell keys: {sorted(bad)}")
        gdoc = dict(c["graph"])
        name = gdoc.pop("name", None)
        g = graph_from_doc(gdoc)
        name = name or _graph_name(gdoc, g)
        f = int(c["f"])
        faulty = c.get("faulty", "all")
        if faulty == "all":
            faulty_sets = [cs.members for cs in enumerate_candidate_sets(g.n, f)]
        else:
            faulty_sets = [frozenset(int(w) for w in s) for s in faulty]
        advs = [AdversaryStrategy.from_doc(a) for a in c.get("adversaries", ["conforming"])]
        cell_seed = int(c.get("seed", seed))
        inputs = input_assignments(g.n, c.get("inputs"), cell_seed)
        for fs, adv in itertools.product(faulty_sets, advs):
            cells.append(Cell(name, g, f, fs, adv, inputs, cell_seed))
    return cells


@dataclass
class CellResult:
    key: str
    runs: int = 0
    passes: int = 0
    hypothesis_satisfied: bool = True
    seconds: float = 0.0
    failures: list = field(default_factory=list)  # scenarios breaking a guaranteed property


def _run_cell(cell: Cell, out_dir: str | None, traces: str, allow_large: bool) -> CellResult:
    res = CellResult(cell.key)
    start = time.perf_counter()
    root = Path(out_dir) if out_dir else None
    for sc in cell.scenarios():
        sc.check_size(allow_large)
        key = sc.key()
        vpath = root / "verdicts" / f"{key}.json" if root else None
        if vpath is not None and vpath.exists():
            verdict = Verdict.from_doc(json.loads(vpath.read_text()))
            trace = None
        else:
            trace = run(sc)
            verdict = verify(trace)
            trace.verdict = verdict
            if vpath is not None:
                vpath.write_text(verdict.to_json())
        res.runs += 1
        res.hypothesis_satisfied = res.hypothesis_satisfied and verdict.hypothesis_satisfied
        res.passes += verdict.ok
        if not verdict.guaranteed_ok:
            res.failures.append(sc.to_doc())
        if root is not None and trace is not None and (
                traces == "all" or (traces == "failures" and not verdict.ok)):
            (root / "traces" / f"{key}.json").write_text(trace.to_json())
    res.seconds = time.perf_counter() - start
    return res


@dataclass
class SweepReport:
    cells: list  # CellResult, sorted by key

    @property
    def runs(self) -> int:
        return sum(c.runs for c in self.cells)

    @property
    def passes(self) -> int:
        return sum(c.passes for c in self.cells)

    @property
    def failures(self) -> list:
        return [doc for c in self.cells for doc in c.failures]

    def aggregate_doc(self) -> dict:
        return {
            "schema": AGGREGATE_SCHEMA,
            "runs": self.runs,
            "passes": self.passes,
            "cells": {c.key: {"runs": c.runs, "passes": c.passes,
                              "hypothesis_satisfied": c.hypothesis_satisfied}
                      for c in self.cells},
        }

    def timing_doc(self) -> dict:
        return {c.key: round(c.seconds, 3) for c in self.cells}


def run_matrix(cells: list[Cell], out_dir: str | Path | None = None, workers: int = 1,
               traces: str = "failures", allow_large: bool = False) -> SweepReport:
    """Run every cell and, with ``out_dir``, persist verdicts, traces and the aggregate.

    ``traces`` picks which traces reach disk: ``all``, ``failures`` (the
    default; a full sweep of traces runs to gigabytes) or ``none``.
    """
    if traces not in TRACE_MODES:
        raise ValueError(f"traces must be one of {TRACE_MODES}")
    root = Path(out_dir) if out_dir is not None else None
    if root is not None:
        for sub in ("verdicts", "traces", "failures"):
            (root / sub).mkdir(parents=True, exist_ok=True)
    arg = str(root) if root is not None else None
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_cell, c, arg, traces, allow_large) for c in cells]
            results = [fu.result() for fu in futures]
    else:
        results = [_run_cell(c, arg, traces, allow_large) for c in cells]
    report = SweepReport(sorted(results, key=lambda r: r.key))
    if root is not None:
        (root / "aggregate.json").write_text(dumps(report.aggregate_doc()))
        (root / "timing.json").write_text(dumps(report.timing_doc()))
        for doc in report.failures:
            sc = Scenario.from_doc(doc)
            (root / "failures" / f"{sc.key()}.json").write_text(dumps(doc))
    return report


def acceptance_matrix(seed: int = 0) -> dict:
    """The end-to-end sweep: six graphs, every faulty set, eight adversaries."""
    adversaries = ["conforming", "crash_silent", "flip_body", "equivocate_attempt", "path_forger"]
    adversaries += [{"kind": "random_seeded", "seed": s} for s in (1, 2, 3)]
    graphs = [("cycle", (4,), 1), ("cycle", (5,), 1), ("cycle", (6,), 1),
              ("complete", (5,), 2), ("complete", (6,), 2), ("harary", (4, 8), 2)]
    return {
        "schema": MATRIX_SCHEMA,
        "seed": seed,
        "cells": [{"graph": {"family": fam, "params": list(p)}, "f": f,
                   "faulty": "all", "adversaries": adversaries} for fam, p, f in graphs],
    }

