"""End-to-end acceptance criteria.

Each test appends one ``[criterion N] PASS|FAIL ...`` line, echoed in the
pytest terminal summary.  Criteria 1, 2, 4, 5 and 6 share a single run of the
full sweep.
"""

from __future__ import annotations

import itertools
import json
import os
import random
import time
from math import comb

import pytest

from byzcast.adversary import AdversaryStrategy
from byzcast.cli import main
from byzcast.graph_core import (
    Graph,
    enumerate_candidate_sets,
    generate,
    local_connectivity,
    max_disjoint_paths,
    vertex_connectivity,
)
from byzcast.protocol import flood_layout
from byzcast.simulator import run, run_reference
from byzcast.sweep import acceptance_matrix, expand_matrix, run_matrix
from byzcast.trace import Scenario, Trace
from byzcast.verifier import (
    Verdict,
    check_agreement,
    check_lemma_agreement,
    check_lemma_validity,
    check_non_equivocation,
    check_observation_reliable,
    check_termination,
    check_validity,
    oracle_disjoint_paths,
    oracle_min_separator,
    oracle_vertex_connectivity,
)

from conftest import ACCEPTANCE_LINES

SWEEP_BUDGET_S = 600.0
CELL_BUDGET_S = 60.0
MENGER_GRAPHS = 500


def report(n: int, ok: bool, detail: str) -> None:
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    cells = expand_matrix(acceptance_matrix())
    start = time.perf_counter()
    rep = run_matrix(cells, out, workers=os.cpu_count() or 1, traces="failures")
    elapsed = time.perf_counter() - start
    verdicts = [Verdict.from_doc(json.loads(p.read_text())) for p in (out / "verdicts").iterdir()]
    return rep, verdicts, elapsed


def test_criterion_1_theorem_sweep(sweep):
    rep, verdicts, elapsed = sweep
    n8 = [c for c in rep.cells if c.key.startswith("harary-4-8|")]
    slowest = max(c.seconds for c in n8)
    all_pass = rep.passes == rep.runs and not rep.failures
    hyp = all(c.hypothesis_satisfied for c in rep.cells)
    consensus = all(v.agreement and v.validity and v.termination for v in verdicts)
    ok = all_pass and hyp and consensus and elapsed < SWEEP_BUDGET_S and slowest < CELL_BUDGET_S
    report(1, ok, f"{rep.passes}/{rep.runs} runs pass in {len(rep.cells)} cells; "
                  f"sweep {elapsed:.0f}s (< {SWEEP_BUDGET_S:.0f}s), slowest n=8 cell {slowest:.1f}s "
                  f"(< {CELL_BUDGET_S:.0f}s)")
    assert all_pass and hyp and consensus
    assert len(verdicts) == rep.runs
    assert elapsed < SWEEP_BUDGET_S
    assert slowest < CELL_BUDGET_S


def test_criterion_2_termination_closed_form(sweep):
    _, verdicts, _ = sweep
    counts = []
    for g, f in [(generate("cycle", 4), 1), (generate("complete", 5), 2), (generate("harary", 4, 8), 2)]:
        tr = run(Scenario(g, f, tuple(v % 2 for v in g.nodes)))
        want = sum(comb(g.n, k) for k in range(f + 1))
        counts.append((len(tr.iterations) == want, all(it.rounds == g.n for it in tr.iterations),
                       sum(it.rounds for it in tr.iterations) == want * g.n, check_termination(tr, g.n, f)))
    k5 = run(Scenario(generate("complete", 5), 2, (0, 1, 1, 0, 1)))
    k5_ok = len(k5.iterations) == 16 and sum(it.rounds for it in k5.iterations) == 80
    ok = all(all(c) for c in counts) and k5_ok and all(v.termination for v in verdicts)
    report(2, ok, f"iterations = sum C(n,k), n rounds each, exact on {len(verdicts)} sweep traces; "
                  f"K_5 f=2: {len(k5.iterations)} iterations, {sum(it.rounds for it in k5.iterations)} rounds")
    assert ok


def test_criterion_3_menger_oracles():
    rng = random.Random(20240601)
    mismatches = 0
    pairs = 0
    for _ in range(MENGER_GRAPHS):
        n = rng.randint(2, 8)
        p = rng.random()
        g = Graph(n, [e for e in itertools.combinations(range(n), 2) if rng.random() < p])
        if vertex_connectivity(g) != oracle_vertex_connectivity(g):
            mismatches += 1
        v = rng.randrange(n)
        rest = [x for x in g.nodes if x != v]
        srcs = set(rng.sample(rest, rng.randint(1, len(rest))))
        forbidden = {x for x in rest if x not in srcs and rng.random() < 0.3}
        k = max_disjoint_paths(g, srcs, v, forbidden)
        if not oracle_disjoint_paths(g, srcs, v, forbidden, k) or \
                oracle_disjoint_paths(g, srcs, v, forbidden, k + 1):
            mismatches += 1
        for a, b in itertools.combinations(g.nodes, 2):
            if not g.has_edge(a, b):
                pairs += 1
                if local_connectivity(g, a, b) != oracle_min_separator(g, a, b):
                    mismatches += 1
    report(3, mismatches == 0, f"{MENGER_GRAPHS} seeded graphs (n <= 8), {pairs} non-adjacent pairs, "
                               f"{mismatches} mismatches against brute-force oracles")
    assert mismatches == 0


def test_criterion_4_lemma_instrumentation(sweep):
    _, verdicts, _ = sweep
    validity = sum(len(v.lemma_validity_violations) for v in verdicts)
    agreement = sum(len(v.lemma_agreement_violations) for v in verdicts)
    partition = sum(1 for v in verdicts for x in v.lemma_agreement_violations if x["kind"] == "partition")
    observation = sum(len(v.observation_violations) for v in verdicts)
    ok = validity == agreement == observation == 0
    report(4, ok, f"across {len(verdicts)} sweep traces: lemma-validity {validity}, lemma-agreement "
                  f"{agreement} (Z_v mismatches {partition}), observation {observation} violations")
    assert ok


def test_criterion_5_non_equivocation(sweep):
    _, verdicts, _ = sweep
    # the sweep checks the stored and relayed bodies of every equivocate_attempt trace
    flagged = sum(len(v.non_equivocation_violations) for v in verdicts)
    conflicts: list = []
    first_kept = True
    runs = 0
    adv = AdversaryStrategy("equivocate_attempt")
    for g, f in [(generate("cycle", 4), 1), (generate("cycle", 5), 1), (generate("complete", 5), 2)]:
        layout = flood_layout(g)
        for cs in enumerate_candidate_sets(g.n, f):
            if not cs.members:
                continue
            for bits in [(1,) * g.n, tuple(v % 2 for v in g.nodes)]:
                sc = Scenario(g, f, bits, cs.members, adv)
                # per-receiver delivery: every holder of a key must store the same body
                tr = run_reference(sc, conflicts)
                runs += 1
                flagged += len(check_non_equivocation(tr))
                for it in tr.iterations:
                    first_kept &= all(it.bodies[layout.index[(w,)]] == 0 for w in cs.members)
    ok = flagged == 0 and not conflicts and first_kept
    report(5, ok, f"{runs} per-receiver runs: {len(conflicts)} divergent keys, {flagged} second bodies "
                  f"stored or forwarded, first origination kept: {first_kept}")
    assert ok


def test_criterion_6_beyond_point_to_point(sweep):
    rep, _, _ = sweep
    k5 = [c for c in rep.cells if c.key.startswith("complete-5|")]
    colluding = [c for c in k5 if c.key.split("|")[2].count(",") == 1]
    n, f = 5, 2
    ok = bool(colluding) and all(c.passes == c.runs for c in k5) and n < 3 * f + 1
    report(6, ok, f"K_5 f=2 (n=5 < 3f+1=7): {sum(c.passes for c in k5)}/{sum(c.runs for c in k5)} runs "
                  f"pass in {len(k5)} cells, {len(colluding)} with two colluding faulty nodes")
    assert ok


def _fixture(kind: str) -> dict:
    g = generate("complete", 5)
    faulty = {"equivocate_attempt": {4}, "flip_body": {3}}.get(kind, set())
    inputs = (1, 1, 1, 1, 1) if kind != "flip_body" else (0, 1, 1, 0, 1)
    tr = run(Scenario(g, 2, inputs, frozenset(faulty), AdversaryStrategy(kind)))
    return json.loads(tr.to_json())


def _flip(s: str, i: int) -> str:
    return s[:i] + ("1" if s[i] == "0" else "0") + s[i + 1:]


def test_criterion_7_negative_controls(capsys):
    layout = flood_layout(generate("complete", 5))
    caught = {}

    doc = _fixture("conforming")
    doc["decisions"][0][1] = 0
    tr = Trace.from_doc(doc)
    caught["agreement"] = not check_agreement(tr.decisions, tr.scenario.faulty)
    caught["validity"] = not check_validity(tr.scenario.inputs, tr.decisions, tr.scenario.faulty)

    doc = _fixture("conforming")
    doc["iterations"].pop()
    caught["termination"] = not check_termination(Trace.from_doc(doc), 5, 2)

    doc = _fixture("conforming")
    doc["iterations"][3]["nodes"][2]["gamma_end"] = 0
    caught["lemma_validity"] = bool(check_lemma_validity(Trace.from_doc(doc)))

    doc = _fixture("flip_body")
    idx = next(i for i, it in enumerate(doc["iterations"]) if it["candidate"] == [3])
    doc["iterations"][idx]["nodes"][0]["gamma_end"] ^= 1
    caught["lemma_agreement"] = bool(check_lemma_agreement(Trace.from_doc(doc)))

    doc = _fixture("flip_body")
    doc["iterations"][2]["bodies"] = _flip(doc["iterations"][2]["bodies"], layout.index[(0, 1, 2)])
    caught["observation"] = bool(check_observation_reliable(Trace.from_doc(doc)))

    doc = _fixture("equivocate_attempt")
    doc["iterations"][0]["bodies"] = _flip(doc["iterations"][0]["bodies"], layout.index[(4, 0)])
    caught["non_equivocation"] = bool(check_non_equivocation(Trace.from_doc(doc)))

    tr = Trace.from_doc(_fixture("equivocate_attempt"))
    clean_ok = (check_agreement(tr.decisions, tr.scenario.faulty)
                and check_validity(tr.scenario.inputs, tr.decisions, tr.scenario.faulty)
                and check_termination(tr, 5, 2) and not check_lemma_validity(tr)
                and not check_lemma_agreement(tr) and not check_observation_reliable(tr)
                and not check_non_equivocation(tr))

    c5_fails = main(["check", "--graph", "cycle", "5", "--f", "2"]) != 0
    k5_passes = main(["check", "--graph", "complete", "5", "--f", "2"]) == 0
    capsys.readouterr()
    ok = all(caught.values()) and clean_ok and c5_fails and k5_passes
    missed = sorted(k for k, v in caught.items() if not v)
    report(7, ok, f"{sum(caught.values())}/{len(caught)} checks flag their corrupted fixture"
                  f"{' (missed ' + ', '.join(missed) + ')' if missed else ''}; uncorrupted fixture clean: "
                  f"{clean_ok}; check C_5 f=2 fails: {c5_fails}; check K_5 f=2 passes: {k5_passes}")
    assert ok
