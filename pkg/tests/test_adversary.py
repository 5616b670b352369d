from __future__ import annotations

import numpy as np
import pytest

from byzcast.adversary import (
    OMIT,
    AdversaryStrategy,
    RoundPlan,
    RunView,
    keyed_draws,
    plan_round,
)
from byzcast.graph_core import generate
from byzcast.protocol import Message, flood_layout

G = generate("complete", 5)
LAYOUT = flood_layout(G)


def view(bodies=None, gamma=(0, 1, 0, 1, 1), faulty=frozenset({3, 4})):
    if bodies is None:
        bodies = np.zeros(len(LAYOUT), dtype=np.int8)
    return RunView(LAYOUT, 2, faulty, gamma, 0, faulty, bodies, list(gamma))


class TestStrategies:
    def test_conforming_round_one(self):
        assert plan_round(AdversaryStrategy("conforming"), view(), 3, 1, 0) == [Message(0, 1, ())]

    def test_conforming_relays_what_it_heard(self):
        bodies = np.zeros(len(LAYOUT), dtype=np.int8)
        bodies[LAYOUT.index[(1,)]] = 1
        msgs = plan_round(AdversaryStrategy("conforming"), view(bodies), 3, 2, 0)
        assert Message(0, 1, (1,)) in msgs and Message(0, 0, (0,)) in msgs
        assert len(msgs) == len(LAYOUT.expected(3, 2))

    def test_crash_silent(self):
        for rnd in range(1, 6):
            assert plan_round(AdversaryStrategy("crash_silent"), view(), 3, rnd, 0) == []

    def test_equivocate_round_one(self):
        msgs = plan_round(AdversaryStrategy("equivocate_attempt"), view(), 3, 1, 0)
        assert msgs == [Message(0, 0, ()), Message(0, 1, ())]

    def test_flip_body(self):
        assert plan_round(AdversaryStrategy("flip_body"), view(), 3, 1, 0) == [Message(0, 0, ())]
        msgs = plan_round(AdversaryStrategy("flip_body"), view(), 3, 2, 0)
        assert all(m.body == 1 for m in msgs)

    def test_path_forger_mixes_real_and_fake(self):
        msgs = plan_round(AdversaryStrategy("path_forger"), view(), 3, 3, 0)
        real = [m for m in msgs if G.is_path(m.path + (3,))]
        fake = [m for m in msgs if not G.is_path(m.path + (3,))]
        assert real and fake
        assert all(len(m.path) == 2 for m in msgs)

    def test_random_seeded_replayable(self):
        s = AdversaryStrategy("random_seeded", 11)
        a = plan_round(s, view(), 4, 3, 2)
        b = plan_round(s, view(), 4, 3, 2)
        c = plan_round(AdversaryStrategy("random_seeded", 12), view(), 4, 3, 2)
        assert a == b and a != c

    def test_scripted(self):
        s = AdversaryStrategy.from_doc({"kind": "scripted", "script": [
            {"node": 3, "round": 1, "messages": [[None, 1, []], [5, 0, [9]]]},
            {"node": 3, "round": 2, "iteration": 4, "messages": [[None, 1, [0]]]},
        ]})
        assert plan_round(s, view(), 3, 1, 0) == [Message(0, 1, ()), Message(5, 0, (9,))]
        assert plan_round(s, view(), 3, 2, 0) == []
        assert plan_round(s, view(), 3, 2, 4) == [Message(4, 1, (0,))]

    def test_script_rejects_non_integer_path(self):
        with pytest.raises(ValueError):
            AdversaryStrategy.from_doc({"kind": "scripted", "script": [
                {"node": 3, "round": 2, "messages": [[None, 1, [0.0]]]}]})

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            AdversaryStrategy("byzantine_general")

    def test_doc_round_trip(self):
        s = AdversaryStrategy.from_doc({"kind": "scripted", "script": [
            {"node": 1, "round": 2, "iteration": None, "messages": [[None, 1, [0]]]}]})
        assert AdversaryStrategy.from_doc(s.to_doc()) == s


def test_round_plan_order():
    fields = [LAYOUT.paths[s][:-1] for s in LAYOUT.expected(0, 2)]
    first = np.array([0, OMIT, 1, OMIT], dtype=np.int8)
    second = np.array([1, 1, OMIT, OMIT], dtype=np.int8)
    out = RoundPlan([Message(0, 1, (9,))], [first, second]).messages(LAYOUT, 0, 2, 0)
    assert out == [Message(0, 1, (9,)),
                   Message(0, 0, fields[0]), Message(0, 1, fields[2]),
                   Message(0, 1, fields[0]), Message(0, 1, fields[1])]


def test_keyed_draws_independent_of_count():
    a = keyed_draws(3, 1, 2, 4, 10)
    b = keyed_draws(3, 1, 2, 4, 4)
    assert (a[:4] == b).all()
    assert not (keyed_draws(3, 1, 2, 5, 4) == b).all()
