"""Scenario and trace records plus their JSON documents.

Documents are emitted with sorted keys and compact separators so that equal
runs give byte-identical files.

Flood tables are stored per iteration as two strings indexed by slot (see
``protocol.FloodLayout``): ``bodies`` holds the bit carried by each slot and
``sources`` says who produced it: ``s`` a non-faulty sender, ``a`` a faulty
sender's accepted message, ``d`` the default body substituted for a faulty
sender's silence.  Each faulty sender's raw emissions are kept under
``broadcasts`` so rejected and duplicate messages stay auditable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .adversary import AdversaryStrategy, Message, RoundPlan
from .errors import GuardrailExceeded, ScenarioError
from .graph_core import Graph, generate
from .protocol import flood_layout

TRACE_SCHEMA = "byzcast-trace/1"
SCENARIO_SCHEMA = "byzcast-scenario/1"

MAX_NODES = 10
MAX_FAULTS = 3

SOURCE_SENT, SOURCE_ADVERSARY, SOURCE_DEFAULT = 0, 1, 2
_SOURCE_CHARS = "sad"


def dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def bits_to_str(arr: np.ndarray) -> str:
    return (np.asarray(arr, dtype=np.uint8) + ord("0")).tobytes().decode("ascii")


def str_to_bits(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("ascii"), dtype=np.uint8).astype(np.int8) - ord("0")


def graph_to_doc(g: Graph) -> dict:
    return {"n": g.n, "edges": [list(e) for e in g.sorted_edges()]}


def graph_from_doc(doc) -> Graph:
    if not isinstance(doc, dict):
        raise ScenarioError("graph must be an object")
    keys = set(doc)
    if keys == {"n", "edges"}:
        return Graph(int(doc["n"]), doc["edges"])
    if keys <= {"family", "params"} and "family" in keys:
        return generate(doc["family"], *doc.get("params", ()))
    if keys == {"edge_list"}:
        return generate("edge_list_file", doc["edge_list"])
    raise ScenarioError(f"unrecognised graph keys {sorted(keys)}")


@dataclass(frozen=True)
class Scenario:
    graph: Graph
    f: int
    inputs: tuple
    faulty: frozenset = frozenset()
    adversary: AdversaryStrategy = AdversaryStrategy()
    seed: int = 0

    def __post_init__(self) -> None:
        n = self.graph.n
        if not 0 <= self.f < n:
            raise ScenarioError(f"f={self.f} must satisfy 0 <= f < n={n}")
        if len(self.inputs) != n or any(b not in (0, 1) for b in self.inputs):
            raise ScenarioError(f"inputs must be {n} bits")
        if len(self.faulty) > self.f:
            raise ScenarioError(f"{len(self.faulty)} faulty nodes exceed f={self.f}")
        if any(not 0 <= w < n for w in self.faulty):
            raise ScenarioError("faulty node id out of range")

    def check_size(self, allow_large: bool = False) -> None:
        if not allow_large and (self.graph.n > MAX_NODES or self.f > MAX_FAULTS):
            raise GuardrailExceeded(
                f"n={self.graph.n}, f={self.f} exceeds n<={MAX_NODES}, f<={MAX_FAULTS}; "
                "pass --allow-large to run anyway")

    def adversary_seed(self) -> AdversaryStrategy:
        if self.adversary.seed is None and self.adversary.kind == "random_seeded":
            return AdversaryStrategy(self.adversary.kind, self.seed, self.adversary.script)
        return self.adversary

    def to_doc(self) -> dict:
        return {
            "schema": SCENARIO_SCHEMA,
            "graph": graph_to_doc(self.graph),
            "f": self.f,
            "inputs": "".join(str(b) for b in self.inputs),
            "faulty": sorted(self.faulty),
            "adversary": self.adversary.to_doc(),
            "seed": self.seed,
        }

    def key(self) -> str:
        return hashlib.sha256(dumps(self.to_doc()).encode()).hexdigest()[:20]

    @classmethod
    def from_doc(cls, doc: dict) -> "Scenario":
        allowed = {"schema", "graph", "f", "inputs", "faulty", "adversary", "seed"}
        extra = set(doc) - allowed
        if extra:
            raise ScenarioError(f"unknown scenario keys: {sorted(extra)}")
        if doc.get("schema", SCENARIO_SCHEMA) != SCENARIO_SCHEMA:
            raise ScenarioError(f"unsupported scenario schema {doc.get('schema')!r}")
        for k in ("graph", "f", "inputs"):
            if k not in doc:
                raise ScenarioError(f"scenario missing {k!r}")
        graph = graph_from_doc(doc["graph"])
        inputs = doc["inputs"]
        if isinstance(inputs, str):
            if set(inputs) - {"0", "1"}:
                raise ScenarioError("inputs must be a bit string")
            inputs = tuple(int(c) for c in inputs)
        else:
            inputs = tuple(int(b) for b in inputs)
        try:
            adversary = AdversaryStrategy.from_doc(doc.get("adversary", {"kind": "conforming"}))
        except (ValueError, KeyError, TypeError) as e:
            raise ScenarioError(str(e)) from e
        return cls(graph, int(doc["f"]), inputs, frozenset(int(w) for w in doc.get("faulty", ())),
                   adversary, int(doc.get("seed", 0)))


@dataclass
class NodeRecord:
    node: int
    Z: frozenset
    N: frozenset
    A: frozenset
    B: frozenset
    case: int
    gamma_start: int
    gamma_end: int

    def to_doc(self) -> dict:
        return {
            "node": self.node,
            "Z": sorted(self.Z), "N": sorted(self.N),
            "A": sorted(self.A), "B": sorted(self.B),
            "case": self.case,
            "gamma_start": self.gamma_start, "gamma_end": self.gamma_end,
        }

    @classmethod
    def from_doc(cls, d: dict) -> "NodeRecord":
        return cls(d["node"], frozenset(d["Z"]), frozenset(d["N"]), frozenset(d["A"]),
                   frozenset(d["B"]), d["case"], d["gamma_start"], d["gamma_end"])


@dataclass
class Broadcast:
    round: int
    sender: int
    explicit: list
    passes: list  # int8 arrays over the sender's expected slots, -1 = omitted

    def to_doc(self) -> dict:
        return {
            "round": self.round,
            "sender": self.sender,
            "explicit": [[m.label, m.body, list(m.path)] for m in self.explicit],
            "passes": ["".join("-" if b < 0 else str(int(b)) for b in p) for p in self.passes],
        }

    @classmethod
    def from_doc(cls, d: dict) -> "Broadcast":
        explicit = [Message(m[0], m[1], tuple(m[2])) for m in d["explicit"]]
        passes = [np.array([-1 if c == "-" else int(c) for c in p], dtype=np.int8) for p in d["passes"]]
        return cls(d["round"], d["sender"], explicit, passes)


@dataclass
class IterationRecord:
    label: int
    candidate: frozenset
    rounds: int
    bodies: np.ndarray
    sources: np.ndarray
    broadcasts: list = field(default_factory=list)
    nodes: dict = field(default_factory=dict)  # non-faulty id -> NodeRecord

    def flooded(self, n: int) -> list:
        """The bit each node's origination carried (single-node slots 0..n-1)."""
        return [int(b) for b in self.bodies[:n]]

    def to_doc(self) -> dict:
        return {
            "label": self.label,
            "candidate": sorted(self.candidate),
            "rounds": self.rounds,
            "bodies": bits_to_str(self.bodies),
            "sources": "".join(_SOURCE_CHARS[s] for s in self.sources),
            "broadcasts": [b.to_doc() for b in self.broadcasts],
            "nodes": [self.nodes[v].to_doc() for v in sorted(self.nodes)],
        }

    @classmethod
    def from_doc(cls, d: dict) -> "IterationRecord":
        return cls(
            d["label"], frozenset(d["candidate"]), d["rounds"],
            str_to_bits(d["bodies"]),
            np.array([_SOURCE_CHARS.index(c) for c in d["sources"]], dtype=np.uint8),
            [Broadcast.from_doc(b) for b in d["broadcasts"]],
            {r["node"]: NodeRecord.from_doc(r) for r in d["nodes"]},
        )


@dataclass
class Trace:
    scenario: Scenario
    hypothesis_satisfied: bool
    iterations: list = field(default_factory=list)
    decisions: dict = field(default_factory=dict)  # non-faulty id -> bit
    verdict: Any = None  # verifier.Verdict once checked

    def to_doc(self) -> dict:
        doc = {
            "schema": TRACE_SCHEMA,
            "scenario": self.scenario.to_doc(),
            "hypothesis_satisfied": self.hypothesis_satisfied,
            "iterations": [it.to_doc() for it in self.iterations],
            "decisions": [[v, self.decisions[v]] for v in sorted(self.decisions)],
        }
        if self.verdict is not None:
            doc["verdict"] = self.verdict.to_doc()
        return doc

    def to_json(self) -> str:
        return dumps(self.to_doc())

    @classmethod
    def from_doc(cls, doc: dict) -> "Trace":
        from .verifier import Verdict

        if doc.get("schema") != TRACE_SCHEMA:
            raise ScenarioError(f"not a {TRACE_SCHEMA} document")
        tr = cls(
            Scenario.from_doc(doc["scenario"]),
            doc["hypothesis_satisfied"],
            [IterationRecord.from_doc(it) for it in doc["iterations"]],
            {v: b for v, b in doc["decisions"]},
        )
        if "verdict" in doc:
            tr.verdict = Verdict.from_doc(doc["verdict"])
        return tr

    @classmethod
    def from_json(cls, text: str) -> "Trace":
        return cls.from_doc(json.loads(text))

    def transmissions(self, index: int):
        """Expand iteration ``index`` into ``(round, sender, Message, delivered_to)`` tuples.

        Non-faulty transmissions are read off the flood table; faulty ones are
        replayed from the recorded broadcasts in emission order.
        """
        it = self.iterations[index]
        g = self.scenario.graph
        layout = flood_layout(g)
        faulty = self.scenario.faulty
        plans = {(b.round, b.sender): b for b in it.broadcasts}
        for rnd in range(1, it.rounds + 1):
            for s in g.nodes:
                if s in faulty:
                    b = plans.get((rnd, s))
                    if b is None:
                        continue
                    msgs = RoundPlan(b.explicit, b.passes).messages(layout, s, rnd, it.label)
                else:
                    msgs = [Message(it.label, int(it.bodies[slot]), layout.paths[slot][:-1])
                            for slot in layout.expected(s, rnd)]
                for m in msgs:
                    yield rnd, s, m, g.adj[s]
