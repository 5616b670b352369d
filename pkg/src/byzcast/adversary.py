"""Byzantine strategies for faulty nodes.

A strategy sees the whole run at the last round boundary and returns what a
faulty node broadcasts in the next round.  The simulator hands every message
to all of the node's neighbours unchanged, so a strategy can lie but cannot
tell different neighbours different things.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .protocol import FloodLayout, Message

KINDS = (
    "conforming",
    "crash_silent",
    "flip_body",
    "equivocate_attempt",
    "path_forger",
    "random_seeded",
    "scripted",
)

OMIT = -1


@dataclass(frozen=True)
class ScriptEntry:
    node: int
    round: int
    messages: tuple  # of (label | None, body, path)
    iteration: int | None = None


@dataclass(frozen=True)
class AdversaryStrategy:
    kind: str = "conforming"
    seed: int | None = None
    script: tuple = field(default=())

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}; expected one of {', '.join(KINDS)}")

    def to_doc(self) -> dict:
        doc = {"kind": self.kind}
        if self.seed is not None:
            doc["seed"] = self.seed
        if self.script:
            doc["script"] = [
                {
                    "node": e.node,
                    "round": e.round,
                    "iteration": e.iteration,
                    "messages": [[lab, body, list(path)] for lab, body, path in e.messages],
                }
                for e in self.script
            ]
        return doc

    @classmethod
    def from_doc(cls, doc) -> "AdversaryStrategy":
        if isinstance(doc, str):
            return cls(doc)
        extra = set(doc) - {"kind", "seed", "script"}
        if extra:
            raise ValueError(f"unknown adversary keys: {sorted(extra)}")
        script = []
        for e in doc.get("script", ()):
            bad = set(e) - {"node", "round", "iteration", "messages"}
            if bad:
                raise ValueError(f"unknown script entry keys: {sorted(bad)}")
            msgs = []
            for m in e["messages"]:
                lab, body, path = m
                if any(type(x) is not int for x in path):
                    raise ValueError(f"script path entries must be integers: {path!r}")
                msgs.append((lab, body, tuple(path)))
            msgs = tuple(msgs)
            script.append(ScriptEntry(int(e["node"]), int(e["round"]), msgs, e.get("iteration")))
        return cls(doc.get("kind", "conforming"), doc.get("seed"), tuple(script))


@dataclass
class RoundPlan:
    """One faulty node's broadcasts for one round.

    ``explicit`` messages go out first, in order.  Each array in ``passes``
    then emits one message per expected slot (in slot order) whose entry is
    not ``OMIT``; a second pass models sending a second body for the same
    path.
    """

    explicit: list = field(default_factory=list)
    passes: list = field(default_factory=list)

    def messages(self, layout: FloodLayout, w: int, rnd: int, label: int) -> list[Message]:
        out = list(self.explicit)
        fields = [layout.paths[s][:-1] for s in layout.expected(w, rnd)]
        for bodies in self.passes:
            out.extend(Message(label, int(b), p) for p, b in zip(fields, bodies) if b != OMIT)
        return out


class RunView:
    """What the adversary knows when planning round ``rnd``.

    ``bodies`` is the slot-body table of the current flood.  Only slots with
    fewer than ``rnd`` nodes are meaningful; later levels are still being
    written.
    """

    def __init__(self, layout: FloodLayout, f: int, faulty: frozenset, inputs: tuple,
                 label: int, candidate: frozenset, bodies: np.ndarray, gamma: list) -> None:
        self.layout = layout
        self.graph = layout.graph
        self.f = f
        self.faulty = faulty
        self.inputs = inputs
        self.label = label
        self.candidate = candidate
        self.bodies = bodies
        self.gamma = gamma  # every node's state at the start of the iteration

    def received(self, w: int, rnd: int) -> np.ndarray:
        """Bodies ``w`` heard for the paths it is now expected to extend."""
        slots = self.layout.expected(w, rnd)
        if rnd == 1:
            return np.array([self.gamma[w]] * len(slots), dtype=np.int8)
        return self.bodies[self.layout.parent[slots]].astype(np.int8)


_MASK64 = (1 << 64) - 1


def _mix(x: int) -> int:
    # splitmix64 finaliser
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def keyed_draws(seed: int, label: int, w: int, rnd: int, count: int) -> np.ndarray:
    """``count`` pseudo-random uint64 values, the i-th a pure function of
    (seed, label, node, round, i)."""
    key = _mix(_mix(_mix(_mix(seed & _MASK64) ^ label) ^ w) ^ rnd)
    x = np.arange(count, dtype=np.uint64) + np.uint64(key)
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


_FAKES: dict = {}


def _fake_messages(layout: FloodLayout, w: int, rnd: int, label: int) -> tuple:
    """For every odd-position expected slot, a same-length field that is not a
    path into w, as a pair of message lists (body 0, body 1)."""
    key = (layout.graph, w, rnd, label)
    if key not in _FAKES:
        g = layout.graph
        fields = []
        slots = layout.expected(w, rnd)
        for i in range(1, len(slots), 2):
            head = layout.paths[slots[i]][:-2]
            # swap the last hop for a node that cannot precede w
            y = next(y for y in g.nodes if (y == w or not g.has_edge(y, w)) and y not in head)
            fields.append(head + (y,))
        _FAKES[key] = tuple([Message(label, b, p) for p in fields] for b in (0, 1))
    return _FAKES[key]


# random_seeded actions, indexed [action, heard body]:
# 0 relay honestly, 1 flip, 2 stay silent, 3 send 0 then 1, 4 send 1 then 0
_RANDOM_FIRST = np.array([[0, 1], [1, 0], [OMIT, OMIT], [0, 0], [1, 1]], dtype=np.int8)
_RANDOM_SECOND = np.array([[OMIT, OMIT]] * 3 + [[1, 1], [0, 0]], dtype=np.int8)


def plan_broadcast(strategy: AdversaryStrategy, view: RunView, w: int, rnd: int, label: int) -> RoundPlan:
    kind = strategy.kind
    layout = view.layout
    if kind == "crash_silent":
        return RoundPlan()
    if kind == "scripted":
        explicit = []
        for e in strategy.script:
            if e.node == w and e.round == rnd and e.iteration in (None, label):
                explicit += [Message(label if lab is None else lab, body, tuple(path))
                             for lab, body, path in e.messages]
        return RoundPlan(explicit)

    heard = view.received(w, rnd)
    if kind == "conforming":
        return RoundPlan(passes=[heard])
    if kind == "flip_body":
        if rnd == 1:
            return RoundPlan(passes=[np.array([1 - view.inputs[w]] * len(heard), dtype=np.int8)])
        return RoundPlan(passes=[1 - heard])
    if kind == "equivocate_attempt":
        if rnd == 1:
            return RoundPlan(passes=[np.zeros_like(heard), np.ones_like(heard)])
        return RoundPlan(passes=[1 - heard, heard])
    if kind == "path_forger":
        if rnd == 1:
            return RoundPlan(passes=[heard])
        forged = (1 - heard).astype(np.int8)
        by_body = _fake_messages(layout, w, rnd, label)
        fakes = [by_body[b][i] for i, b in enumerate(forged[1::2].tolist())]
        forged[1::2] = OMIT
        return RoundPlan(fakes, [forged])
    if kind == "random_seeded":
        seed = 0 if strategy.seed is None else strategy.seed
        m = len(heard)
        draws = keyed_draws(seed, label, w, rnd, m + rnd + 1)
        action = (draws[:m] % np.uint64(5)).astype(np.intp)
        first = _RANDOM_FIRST[action, heard]
        second = _RANDOM_SECOND[action, heard]
        tail = [int(d) for d in draws[m:]]
        junk = Message(tail[0] % 1000, tail[1] % 2, tuple(d % view.graph.n for d in tail[2:]))
        return RoundPlan([junk], [first, second])
    raise ValueError(f"no planner for {kind!r}")


def plan_round(strategy: AdversaryStrategy, view: RunView, w: int, rnd: int, label: int) -> list[Message]:
    """The ordered messages faulty node ``w`` broadcasts in round ``rnd``."""
    return plan_broadcast(strategy, view, w, rnd, label).messages(view.layout, w, rnd, label)
