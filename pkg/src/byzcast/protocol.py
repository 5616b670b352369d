"""Per-node logic of the local-broadcast consensus algorithm.

One iteration per candidate faulty set F:

(a) every node floods its state; receivers append the transmitter to the
    path and relay, substituting a default body for anything a neighbour
    failed to send;
(b) node v reads every node u's value along one F-excluding u->v path,
    splitting V into Z_v (read 0) and N_v (read 1);
(c) the four-case rule picks a keep set A_v and a switch set B_v; a node in
    B_v adopts a value only if f+1 disjoint F-excluding paths from A_v all
    delivered it.

Flood schedule: a message sent in round r carries a path field of r-1 nodes
(the origin through the previous transmitter).  The receiver stores the body
under ``(label, field + sender + receiver)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InsufficientPaths, PathConstructionFailed
from .graph_core import CandidateSet, Graph, disjoint_paths_excluding, enumerate_simple_paths, path_excluding

DEFAULT_BODY = 0

_NO_SLOTS = np.empty(0, dtype=np.int64)


class Message(NamedTuple):
    label: int
    body: int
    path: tuple


@dataclass
class NodeState:
    id: int
    input: int
    graph: Graph
    gamma: int | None = None
    store: dict = field(default_factory=dict)
    is_faulty: bool = False
    label: int = 0

    def __post_init__(self) -> None:
        if self.gamma is None:
            self.gamma = self.input

    def begin_iteration(self, label: int) -> None:
        self.label = label
        self.store = {}


class FloodLayout:
    """Canonical numbering of every transmission a flood can carry.

    Slot ``i`` is the simple path ``Q = field + sender`` with 1..n-1 nodes;
    slots are ordered by length then lexicographically.  Every receiver
    ``v`` adjacent to ``Q[-1]`` with ``v`` not in ``Q`` stores the slot's body
    under the key ``Q + (v,)``.
    """

    def __init__(self, g: Graph) -> None:
        n = g.n
        self.graph = g
        self.paths = enumerate_simple_paths(g, n - 1)
        self.index = {p: i for i, p in enumerate(self.paths)}
        size = len(self.paths)
        self.parent = np.full(size, -1, dtype=np.int64)
        self.last = np.empty(size, dtype=np.int64)
        self.origin = np.empty(size, dtype=np.int64)
        self.length = np.empty(size, dtype=np.int64)
        # node bitmasks; n is bounded well below 63
        self.receivers = np.zeros(size, dtype=np.int64)
        self.internal = np.zeros(size, dtype=np.int64)
        for i, p in enumerate(self.paths):
            if len(p) > 1:
                self.parent[i] = self.index[p[:-1]]
            self.last[i] = p[-1]
            self.origin[i] = p[0]
            self.length[i] = len(p)
            members = 0
            for x in p:
                members |= 1 << x
            rec = 0
            for z in g.adj[p[-1]]:
                if not members >> z & 1:
                    rec |= 1 << z
            self.receivers[i] = rec
            inner = 0
            for x in p[1:]:
                inner |= 1 << x
            self.internal[i] = inner
        self.levels: dict[int, np.ndarray] = {}
        self.sent_by: dict[tuple, np.ndarray] = {}
        for r in range(1, n + 1):
            lvl = np.flatnonzero(self.length == r)
            self.levels[r] = lvl
            for w in g.nodes:
                self.sent_by[(w, r)] = lvl[self.last[lvl] == w]

    def __len__(self) -> int:
        return len(self.paths)

    def expected(self, w: int, rnd: int) -> np.ndarray:
        """Slots node ``w`` is scheduled to transmit in round ``rnd``."""
        return self.sent_by.get((w, rnd), _NO_SLOTS)

    def slot_of_key(self, key_path: tuple) -> int:
        return self.index[key_path[:-1]]


@functools.lru_cache(maxsize=64)
def flood_layout(g: Graph) -> FloodLayout:
    return FloodLayout(g)


class TableStore:
    """Read-only store of node ``owner`` backed by a flood's slot-body table."""

    __slots__ = ("layout", "bodies", "owner", "label")

    def __init__(self, layout: FloodLayout, bodies: np.ndarray, owner: int, label: int) -> None:
        self.layout = layout
        self.bodies = bodies
        self.owner = owner
        self.label = label

    def __getitem__(self, key) -> int:
        label, path = key
        if label != self.label or len(path) < 2 or path[-1] != self.owner or self.owner in path[:-1]:
            raise KeyError(key)
        return int(self.bodies[self.layout.index[path[:-1]]])

    def __contains__(self, key) -> bool:
        try:
            self[key]
        except KeyError:
            return False
        return True


# -- step (a) ------------------------------------------------------------------


def originate(state: NodeState, label: int) -> Message:
    return Message(label, state.gamma, ())


def on_receive(state: NodeState, sender: int, m: Message, rnd: int):
    """Apply the acceptance and relay rules to one delivered message.

    Returns ``(recorded, forwards)``: the new ``(key, body)`` store entries and
    the messages to broadcast next round.  Rejections return two empty lists.
    """
    g = state.graph
    label = state.label  # foreign labels are rewritten to the current one
    path = m.path
    if not isinstance(path, tuple):
        return [], []
    q = path + (sender,)
    if len(path) != rnd - 1 or m.body not in (0, 1):
        return [], []
    if state.id in q or not g.is_path(q):
        return [], []
    key = (label, q + (state.id,))
    if key in state.store:
        return [], []
    state.store[key] = m.body
    forwards = [Message(label, m.body, q)] if len(q) < g.n - 1 else []
    return [(key, m.body)], forwards


def substitute_silence(state: NodeState, neighbor: int, rnd: int, label: int | None = None):
    """Fill in the default body for every round-``rnd`` message ``neighbor`` owed us."""
    if label is None:
        label = state.label
    g = state.graph
    layout = flood_layout(g)
    recorded, forwards = [], []
    for slot in layout.expected(neighbor, rnd):
        q = layout.paths[slot]
        if state.id in q:
            continue
        key = (label, q + (state.id,))
        if key in state.store:
            continue
        state.store[key] = DEFAULT_BODY
        recorded.append((key, DEFAULT_BODY))
        if len(q) < g.n - 1:
            forwards.append(Message(label, DEFAULT_BODY, q))
    return recorded, forwards


# -- step (b) ------------------------------------------------------------------


@functools.lru_cache(maxsize=1 << 14)
def _reading_paths(g: Graph, members: frozenset, v: int) -> tuple:
    """(u, P_uv) for every u != v, plus the flood slots those keys read."""
    pairs = tuple((u, path_excluding(g, u, v, members)) for u in g.nodes if u != v)
    index = flood_layout(g).index
    return pairs, np.array([index[p[:-1]] for _, p in pairs], dtype=np.int64)


def compute_partition(state: NodeState, F: CandidateSet):
    """Split V by the value read along one F-excluding path from each node."""
    g = state.graph
    v = state.id
    pairs, slots = _reading_paths(g, F.members, v)
    store = state.store
    if isinstance(store, TableStore) and store.label == F.label and store.owner == v:
        bits = store.bodies[slots].tolist()
    else:
        bits = [store[(F.label, p)] for _, p in pairs]
    zeros = [u for (u, _), b in zip(pairs, bits) if b == 0]
    ones = [u for (u, _), b in zip(pairs, bits) if b != 0]
    (zeros if state.gamma == 0 else ones).append(v)
    return frozenset(zeros), frozenset(ones)


# -- step (c) ------------------------------------------------------------------


def select_AB(Z: frozenset, N: frozenset, F: CandidateSet, f: int):
    """Four-case choice of (keep set, switch set, case number)."""
    half = f // 2
    z_in_f = len(Z & F.members)
    if z_in_f <= half:
        if len(N) > f:
            return N, Z, 1
        return Z, N, 2
    assert len(N & F.members) <= half, "N_v holds more than floor(f/2) of F"
    if len(Z) > f:
        return Z, N, 3
    return N, Z, 4


def switch_paths(g: Graph, v: int, A: frozenset, B: frozenset, F: CandidateSet,
                 f: int, case: int) -> tuple:
    """The f+1 disjoint A->v paths excluding F that a switching node reads."""
    need = f + 1
    if case in (2, 4):
        nbrs = [a for a in g.adj[v] if a in A]
        if len(nbrs) < need:
            raise PathConstructionFailed(
                f"node {v}: {len(nbrs)} neighbours in keep set, need {need} (case {case})")
        return tuple((a, v) for a in nbrs[:need])
    in_f = sorted(A & F.members)
    rest = sorted(A - F.members)
    if len(in_f) + len(rest) < need:
        raise PathConstructionFailed(f"node {v}: keep set smaller than {need} (case {case})")
    chosen = in_f + rest[: need - len(in_f)]
    blocked = B & (F.members - {v})
    try:
        return disjoint_paths_excluding(g, chosen, v, blocked, need)
    except InsufficientPaths as e:
        raise PathConstructionFailed(
            f"node {v}: {e.found} disjoint paths from {chosen} avoiding {sorted(blocked)}, "
            f"need {need} (case {case})") from e


def update_state(state: NodeState, A: frozenset, B: frozenset, F: CandidateSet,
                 f: int, case: int) -> int:
    v = state.id
    if v in A:
        return state.gamma
    paths = switch_paths(state.graph, v, A, B, F, f, case)
    bodies = {state.store[(F.label, p)] for p in paths}
    if len(bodies) == 1:
        state.gamma = bodies.pop()
    return state.gamma


def decide(state: NodeState) -> int:
    return state.gamma
