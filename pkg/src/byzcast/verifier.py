"""Consensus verdicts, per-iteration invariant checks and brute-force graph oracles.

Every check reads a :class:`~byzcast.trace.Trace` (usually one loaded back
from disk) and returns either a boolean or a list of violation dicts.  An
empty list means the property held throughout the run.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .graph_core import Graph, is_connected, iter_simple_paths
from .protocol import flood_layout
from .trace import Trace, dumps

VERDICT_SCHEMA = "byzcast-verdict/1"


@dataclass
class Verdict:
    agreement: bool
    validity: bool
    termination: bool
    lemma_validity_violations: list = field(default_factory=list)
    lemma_agreement_violations: list = field(default_factory=list)
    observation_violations: list = field(default_factory=list)
    non_equivocation_violations: list = field(default_factory=list)
    hypothesis_satisfied: bool = True
    scenario_key: str = ""

    @property
    def ok(self) -> bool:
        return (self.agreement and self.validity and self.termination
                and not self.lemma_validity_violations
                and not self.lemma_agreement_violations
                and not self.observation_violations
                and not self.non_equivocation_violations)

    @property
    def guaranteed_ok(self) -> bool:
        """False only when a property the theorem promises has failed."""
        return self.ok or not self.hypothesis_satisfied

    def to_doc(self) -> dict:
        return {
            "schema": VERDICT_SCHEMA,
            "scenario_key": self.scenario_key,
            "hypothesis_satisfied": self.hypothesis_satisfied,
            "agreement": self.agreement,
            "validity": self.validity,
            "termination": self.termination,
            "lemma_validity_violations": self.lemma_validity_violations,
            "lemma_agreement_violations": self.lemma_agreement_violations,
            "observation_violations": self.observation_violations,
            "non_equivocation_violations": self.non_equivocation_violations,
        }

    def to_json(self) -> str:
        return dumps(self.to_doc())

    @classmethod
    def from_doc(cls, d: dict) -> "Verdict":
        return cls(d["agreement"], d["validity"], d["termination"],
                   d["lemma_validity_violations"], d["lemma_agreement_violations"],
                   d["observation_violations"], d.get("non_equivocation_violations", []),
                   d["hypothesis_satisfied"], d.get("scenario_key", ""))


# -- consensus properties ---------------------------------------------------------


def check_agreement(decisions: dict, faulty) -> bool:
    return len({b for v, b in decisions.items() if v not in faulty}) <= 1


def check_validity(inputs, decisions: dict, faulty) -> bool:
    allowed = {inputs[v] for v in range(len(inputs)) if v not in faulty}
    return all(b in allowed for v, b in decisions.items() if v not in faulty)


def check_termination(trace: Trace, n: int, f: int) -> bool:
    expected = sum(comb(n, k) for k in range(f + 1))
    if len(trace.iterations) != expected:
        return False
    if any(it.rounds != n for it in trace.iterations):
        return False
    honest = [v for v in range(n) if v not in trace.scenario.faulty]
    return all(v in trace.decisions and trace.decisions[v] in (0, 1) for v in honest)


# -- lemma instrumentation ----------------------------------------------------------


def check_lemma_validity(trace: Trace) -> list:
    """Each non-faulty end state must equal some non-faulty start state."""
    out = []
    for it in trace.iterations:
        starts = {r.gamma_start for r in it.nodes.values()}
        for v, r in sorted(it.nodes.items()):
            if r.gamma_end not in starts:
                out.append({"label": it.label, "node": v, "gamma_end": r.gamma_end,
                            "nonfaulty_starts": sorted(starts)})
    return out


def flooded_bits(trace: Trace, index: int) -> list:
    """What every node flooded in an iteration, recomputed from the raw record.

    Non-faulty nodes flood their start state.  A faulty node's value is the
    first well-formed origination it broadcast, or the default 0 if it sent
    none; that is the value its neighbours lock in.
    """
    it = trace.iterations[index]
    g = trace.scenario.graph
    bits = [0] * g.n
    for v, r in it.nodes.items():
        bits[v] = r.gamma_start
    for b in it.broadcasts:
        if b.round != 1:
            continue
        bodies = [m.body for m in b.explicit if _valid_emission(flood_layout(g), b.sender, m.path, m.body, 1)]
        for p in b.passes:
            bodies += [int(x) for x in p if x >= 0]
        bits[b.sender] = bodies[0] if bodies else 0
    return bits


def check_lemma_agreement(trace: Trace, faulty=None) -> list:
    """Iterations whose candidate set covers every faulty node must end unanimous,
    with each non-faulty node's zero-set equal to the true set of 0-flooders.
    Unanimity must then persist through every later iteration."""
    if faulty is None:
        faulty = trace.scenario.faulty
    faulty = frozenset(faulty)
    out = []
    unanimous_from = None
    for idx, it in enumerate(trace.iterations):
        ends = {r.gamma_end for r in it.nodes.values()}
        if faulty <= it.candidate:
            zeros = frozenset(u for u, b in enumerate(flooded_bits(trace, idx)) if b == 0)
            for v, r in sorted(it.nodes.items()):
                if r.Z != zeros:
                    out.append({"label": it.label, "node": v, "kind": "partition",
                                "Z_v": sorted(r.Z), "Z": sorted(zeros)})
            if len(ends) > 1:
                out.append({"label": it.label, "kind": "disagreement", "gamma_end": sorted(ends)})
            elif unanimous_from is None:
                unanimous_from = idx
        elif unanimous_from is not None and len(ends) > 1:
            out.append({"label": it.label, "kind": "persistence", "gamma_end": sorted(ends)})
    return out


def check_observation_reliable(trace: Trace) -> list:
    """Values received along fault-free paths equal what the origin flooded."""
    g = trace.scenario.graph
    layout = flood_layout(g)
    faulty_mask = sum(1 << w for w in trace.scenario.faulty)
    honest_mask = ((1 << g.n) - 1) & ~faulty_mask
    fault_free = (layout.internal & faulty_mask) == 0
    held = (layout.receivers & honest_mask) != 0
    checked = np.flatnonzero(fault_free & held)
    out = []
    for idx, it in enumerate(trace.iterations):
        flooded = np.array(flooded_bits(trace, idx), dtype=np.int8)
        bad = checked[it.bodies[checked] != flooded[layout.origin[checked]]]
        for slot in bad[:20]:
            out.append({"label": it.label, "path": list(layout.paths[slot]),
                        "body": int(it.bodies[slot]), "flooded": int(flooded[layout.origin[slot]])})
    return out


def _valid_emission(layout, sender: int, path, body, rnd: int) -> bool:
    if not isinstance(path, (tuple, list)) or len(path) != rnd - 1 or body not in (0, 1):
        return False
    # the slot index holds every simple path short enough to have a receiver;
    # the type test keeps 1.0 from passing for node 1
    return tuple(path) + (sender,) in layout.index and all(type(x) is int for x in path)


def check_non_equivocation(trace: Trace) -> list:
    """A faulty sender that emits two bodies for one path must have only the
    first one stored, and no non-faulty relay may carry the other onward."""
    g = trace.scenario.graph
    layout = flood_layout(g)
    faulty = trace.scenario.faulty
    honest_last = ~np.isin(layout.last, sorted(faulty))
    out = []
    for it in trace.iterations:
        if all(not b.explicit and len(b.passes) <= 1 for b in it.broadcasts):
            continue  # one body per slot at most: nothing to equivocate with
        first = np.full(len(layout), -1, dtype=np.int8)
        seen = np.zeros((2, len(layout)), dtype=bool)
        passes: list = []
        for b in it.broadcasts:
            index, tail, want = layout.index, (b.sender,), b.round - 1
            hits = [(index.get(tuple(m.path) + tail), m) for m in b.explicit
                    if isinstance(m.path, (tuple, list)) and len(m.path) == want and m.body in (0, 1)]
            for slot, m in hits:
                if slot is None or not all(type(x) is int for x in m.path):
                    continue
                if first[slot] < 0:
                    first[slot] = m.body
                seen[int(m.body), slot] = True
            slots = layout.expected(b.sender, b.round)
            for j, p in enumerate(b.passes):
                if j == len(passes):
                    passes.append(([], []))
                passes[j][0].append(slots)
                passes[j][1].append(p)
        # explicit messages precede every pass, and pass j precedes pass j+1
        for slot_parts, body_parts in passes:
            slots = np.concatenate(slot_parts)
            p = np.concatenate(body_parts)
            fresh = (first[slots] < 0) & (p >= 0)
            first[slots[fresh]] = p[fresh]
            seen[0, slots[p == 0]] = True
            seen[1, slots[p == 1]] = True
        twice = seen[0] & seen[1]
        first_of = np.where(twice, first, -1).astype(np.int8)
        if not (first_of >= 0).any():
            continue
        # carry each equivocated slot's first body down every all-honest extension
        want = first_of.copy()
        for rnd in range(2, g.n):
            lvl = layout.levels[rnd]
            inherit = lvl[(want[lvl] < 0) & honest_last[lvl]]
            want[inherit] = want[layout.parent[inherit]]
        bad = np.flatnonzero((want >= 0) & (it.bodies != want))
        for slot in bad[:20]:
            out.append({"label": it.label, "path": list(layout.paths[slot]),
                        "kind": "stored_second" if first_of[slot] >= 0 else "forwarded_second",
                        "first": int(want[slot]), "stored": int(it.bodies[slot])})
    return out


def verify(trace: Trace) -> Verdict:
    sc = trace.scenario
    n, f = sc.graph.n, sc.f
    return Verdict(
        agreement=check_agreement(trace.decisions, sc.faulty),
        validity=check_validity(sc.inputs, trace.decisions, sc.faulty),
        termination=check_termination(trace, n, f),
        lemma_validity_violations=check_lemma_validity(trace),
        lemma_agreement_violations=check_lemma_agreement(trace, sc.faulty),
        observation_violations=check_observation_reliable(trace),
        non_equivocation_violations=check_non_equivocation(trace),
        hypothesis_satisfied=trace.hypothesis_satisfied,
        scenario_key=sc.key(),
    )


# -- brute-force oracles ------------------------------------------------------------


def oracle_disjoint_paths(g: Graph, sources, v: int, forbidden, k: int) -> bool:
    """Exhaustive search for k source->v paths sharing no source or internal node,
    none with an internal node in ``forbidden``."""
    srcs = sorted(set(sources) - {v})
    forbidden = frozenset(forbidden)
    if k <= 0:
        return True
    if len(srcs) < k:
        return False

    def search(i: int, need: int, used: frozenset) -> bool:
        if need == 0:
            return True
        if len(srcs) - i < need:
            return False
        s = srcs[i]
        if s not in used:
            for p in iter_simple_paths(g, s, v, avoid_internal=forbidden, avoid=used):
                if search(i + 1, need - 1, used | frozenset(p[:-1])):
                    return True
        return search(i + 1, need, used)

    return search(0, k, frozenset())


def oracle_vertex_connectivity(g: Graph) -> int:
    """Smallest vertex cut by enumeration; n-1 for complete graphs."""
    n = g.n
    if g.is_complete():
        return n - 1
    for size in range(n - 1):
        for cut in itertools.combinations(range(n), size):
            if not is_connected(g, cut):
                return size
    return n - 1


def oracle_min_separator(g: Graph, u: int, v: int) -> int:
    """Smallest node set (excluding u and v) whose removal separates non-adjacent u and v."""
    others = [x for x in g.nodes if x not in (u, v)]
    for size in range(len(others) + 1):
        for cut in itertools.combinations(others, size):
            gone = set(cut)
            seen, todo = {u}, [u]
            while todo:
                x = todo.pop()
                for y in g.adj[x]:
                    if y not in gone and y not in seen:
                        seen.add(y)
                        todo.append(y)
            if v not in seen:
                return size
    raise ValueError("u and v are adjacent")
