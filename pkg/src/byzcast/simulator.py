"""Synchronous-round execution of the consensus algorithm.

Two engines produce the same :class:`~byzcast.trace.Trace`:

``run`` (the default) keeps one body per transmission slot.  Under local
broadcast every neighbour of a sender receives the same messages, and a
receiver's acceptance test depends on its own id only through "receiver not
on the path", so a single table describes every node's store at once:
node v holds ``bodies[slot(Q)]`` under the key ``Q + (v,)``.

``run_reference`` delivers each message to each neighbour separately and
drives the per-node :mod:`byzcast.protocol` functions.  It is slow and is
kept as the independent check on the table engine.
"""

from __future__ import annotations

import numpy as np

from . import protocol
from .adversary import OMIT, RoundPlan, RunView, plan_broadcast
from .errors import PathConstructionFailed
from .graph_core import CandidateSet, check_theorem_condition, enumerate_candidate_sets
from .protocol import DEFAULT_BODY, FloodLayout, Message, NodeState, TableStore, flood_layout
from .trace import SOURCE_ADVERSARY, SOURCE_DEFAULT, SOURCE_SENT, Broadcast, IterationRecord, NodeRecord, Scenario, Trace


def _resolve_broadcast(layout: FloodLayout, w: int, rnd: int, plan: RoundPlan,
                       bodies: np.ndarray, sources: np.ndarray) -> None:
    """Write what neighbours accept from faulty ``w`` this round into the table."""
    slots = layout.expected(w, rnd)
    if not len(slots):
        return  # nothing this sender emits can reach a receiver
    got = None
    if plan.explicit:
        got = np.full(len(slots), OMIT, dtype=np.int8)
        index = layout.index
        hits = [(index.get(m.path + (w,)), m) for m in plan.explicit
                if type(m.path) is tuple and len(m.path) == rnd - 1 and m.body in (0, 1)]
        for slot, m in hits:
            # a miss is not a path of g, or too long for any neighbour to take
            if slot is None or not all(type(x) is int for x in m.path):
                continue
            i = int(np.searchsorted(slots, slot))
            if got[i] == OMIT:
                got[i] = m.body
    for p in plan.passes:
        if got is None:
            got = p.astype(np.int8)
        else:
            fill = got == OMIT
            got[fill] = p[fill]
    if got is None:
        got = np.full(len(slots), OMIT, dtype=np.int8)
    silent = got == OMIT
    bodies[slots] = np.where(silent, DEFAULT_BODY, got)
    sources[slots] = np.where(silent, SOURCE_DEFAULT, SOURCE_ADVERSARY)


def _decide_iteration(layout: FloodLayout, F: CandidateSet, f: int, states: list,
                      faulty: frozenset, stores) -> dict:
    g = layout.graph
    records = {}
    for v in g.nodes:
        st = states[v]
        st.store = stores(v)
        start = st.gamma
        if v in faulty:
            # a faulty node's protocol state only feeds strategies that imitate it
            try:
                Z, N = protocol.compute_partition(st, F)
                A, B, case = protocol.select_AB(Z, N, F, f)
                protocol.update_state(st, A, B, F, f, case)
            except (PathConstructionFailed, LookupError):
                st.gamma = start
            continue
        Z, N = protocol.compute_partition(st, F)
        A, B, case = protocol.select_AB(Z, N, F, f)
        end = protocol.update_state(st, A, B, F, f, case)
        records[v] = NodeRecord(v, Z, N, A, B, case, start, end)
    return records


def run_iteration(scenario: Scenario, F: CandidateSet, states: list) -> IterationRecord:
    """Flood for n rounds under label F, then apply steps (b) and (c) at every node."""
    g = scenario.graph
    n = g.n
    layout = flood_layout(g)
    faulty = scenario.faulty
    strategy = scenario.adversary_seed()
    gammas = [st.gamma for st in states]
    bodies = np.zeros(len(layout), dtype=np.int8)
    sources = np.zeros(len(layout), dtype=np.uint8)
    view = RunView(layout, scenario.f, faulty, scenario.inputs, F.label, F.members, bodies, gammas)
    broadcasts = []
    gamma_arr = np.array(gammas, dtype=np.int8)
    for rnd in range(1, n + 1):
        lvl = layout.levels[rnd]
        if rnd == 1:
            bodies[lvl] = gamma_arr[layout.last[lvl]]
        else:
            bodies[lvl] = bodies[layout.parent[lvl]]
        for w in sorted(faulty):
            plan = plan_broadcast(strategy, view, w, rnd, F.label)
            broadcasts.append(Broadcast(rnd, w, plan.explicit, plan.passes))
            _resolve_broadcast(layout, w, rnd, plan, bodies, sources)
    records = _decide_iteration(layout, F, scenario.f, states, faulty,
                                lambda v: TableStore(layout, bodies, v, F.label))
    return IterationRecord(F.label, F.members, n, bodies, sources, broadcasts, records)


def _initial_states(scenario: Scenario) -> list:
    return [NodeState(v, scenario.inputs[v], scenario.graph, is_faulty=v in scenario.faulty)
            for v in scenario.graph.nodes]


def _finish(scenario: Scenario, states: list, iterations: list) -> Trace:
    decisions = {v: protocol.decide(states[v]) for v in scenario.graph.nodes if v not in scenario.faulty}
    return Trace(scenario, check_theorem_condition(scenario.graph, scenario.f), iterations, decisions)


def run(scenario: Scenario) -> Trace:
    """Execute every iteration in canonical candidate-set order and collect decisions.

    Graphs failing the theorem condition still run (the trace records
    ``hypothesis_satisfied = False``); a failed path construction aborts.
    """
    states = _initial_states(scenario)
    iterations = [run_iteration(scenario, F, states)
                  for F in enumerate_candidate_sets(scenario.graph.n, scenario.f)]
    return _finish(scenario, states, iterations)


# -- per-node reference engine ---------------------------------------------------


def reference_iteration(scenario: Scenario, F: CandidateSet, states: list,
                        conflicts: list | None = None) -> IterationRecord:
    g = scenario.graph
    n = g.n
    layout = flood_layout(g)
    faulty = scenario.faulty
    strategy = scenario.adversary_seed()
    label = F.label
    gammas = [st.gamma for st in states]
    for st in states:
        st.begin_iteration(label)
    credited = np.zeros(len(layout), dtype=np.int8)
    sources = np.zeros(len(layout), dtype=np.uint8)
    view = RunView(layout, scenario.f, faulty, scenario.inputs, label, F.members, credited, gammas)
    broadcasts = []
    outbox = {v: [protocol.originate(states[v], label)] for v in g.nodes if v not in faulty}
    for rnd in range(1, n + 1):
        sent = []
        for s in g.nodes:
            if s in faulty:
                plan = plan_broadcast(strategy, view, s, rnd, label)
                broadcasts.append(Broadcast(rnd, s, plan.explicit, plan.passes))
                msgs = plan.messages(layout, s, rnd, label)
            else:
                msgs = outbox[s]
            sent += [(s, m) for m in msgs]
        outbox = {v: [] for v in g.nodes if v not in faulty}
        substituted = set()
        for s, m in sent:
            for r in g.adj[s]:
                _, fwd = protocol.on_receive(states[r], s, m, rnd)
                if r in outbox:
                    outbox[r] += fwd
        for r in g.nodes:
            for nb in g.adj[r]:
                rec, fwd = protocol.substitute_silence(states[r], nb, rnd, label)
                substituted.update(key[1][:-1] for key, _ in rec)
                if r in outbox:
                    outbox[r] += fwd
        for slot in layout.levels[rnd]:
            q = layout.paths[slot]
            held = {states[r].store[(label, q + (r,))] for r in g.adj[q[-1]] if r not in q}
            if len(held) > 1 and conflicts is not None:
                conflicts.append((label, q))
            if held:
                credited[slot] = min(held)
            else:
                credited[slot] = _unheard_body(sent, q, rnd)
            if q[-1] in faulty:
                sources[slot] = SOURCE_DEFAULT if q in substituted or (
                    not held and not _was_sent(sent, q, rnd)) else SOURCE_ADVERSARY
            else:
                sources[slot] = SOURCE_SENT
    records = _decide_iteration(layout, F, scenario.f, states, faulty, lambda v: states[v].store)
    return IterationRecord(label, F.members, n, credited, sources, broadcasts, records)


def _accepts(m: Message, sender: int, q: tuple, rnd: int) -> bool:
    return isinstance(m.path, tuple) and len(m.path) == rnd - 1 and m.path + (sender,) == q \
        and m.body in (0, 1)


def _was_sent(sent: list, q: tuple, rnd: int) -> bool:
    return any(s == q[-1] and _accepts(m, s, q, rnd) for s, m in sent)


def _unheard_body(sent: list, q: tuple, rnd: int) -> int:
    # every neighbour of q[-1] already lies on q: fall back to the first valid emission
    for s, m in sent:
        if s == q[-1] and _accepts(m, s, q, rnd):
            return m.body
    return DEFAULT_BODY


def run_reference(scenario: Scenario, conflicts: list | None = None) -> Trace:
    """Same contract as :func:`run`, with explicit per-node message delivery.

    Any ``(label, path)`` on which two receivers stored different bodies is
    appended to ``conflicts``; local broadcast should keep it empty.
    """
    states = _initial_states(scenario)
    iterations = [reference_iteration(scenario, F, states, conflicts)
                  for F in enumerate_candidate_sets(scenario.graph.n, scenario.f)]
    return _finish(scenario, states, iterations)
