"""Command-line front end: ``byzcast {check,run,sweep,gen,verify}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .adversary import KINDS, AdversaryStrategy
from .errors import ByzcastError, PathConstructionFailed
from .graph_core import (
    Graph,
    check_theorem_condition,
    format_edge_list,
    generate,
    min_degree,
    vertex_connectivity,
)
from .simulator import run
from .sweep import TRACE_MODES, acceptance_matrix, expand_matrix, run_matrix
from .trace import Scenario, Trace, dumps
from .verifier import verify

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


def parse_graph(words: list[str]) -> Graph:
    """``harary 4 8``, ``circulant 8 1,2``, ``complete 5`` or a path to an edge-list file."""
    if len(words) == 1 and Path(words[0]).is_file():
        return generate("edge_list_file", words[0])
    family, *params = words
    if family == "circulant" and len(params) == 2:
        return generate(family, params[0], [int(x) for x in params[1].split(",")])
    return generate(family, *params)


def parse_adversary(text: str) -> AdversaryStrategy:
    kind, _, seed = text.partition(":")
    if kind not in KINDS:
        raise ByzcastError(f"unknown adversary {kind!r}; choose from {', '.join(KINDS)}")
    return AdversaryStrategy(kind, int(seed) if seed else None)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_check(args) -> int:
    g = parse_graph(args.graph)
    f = args.f
    delta, kappa = min_degree(g), vertex_connectivity(g)
    ok = check_theorem_condition(g, f)
    print(f"n={g.n} min_degree={delta} connectivity={kappa}")
    if f == 0:
        print("required: connected")
    else:
        print(f"required: n > {3 * f // 2 + 1}, min_degree >= {2 * f}, connectivity >= {3 * f // 2 + 1}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VIOLATION


def _scenario_from_args(args) -> Scenario:
    if args.scenario:
        return Scenario.from_doc(json.loads(Path(args.scenario).read_text()))
    if not args.graph or args.f is None or args.inputs is None:
        raise ByzcastError("give a scenario file or --graph, --f and --inputs")
    g = parse_graph(args.graph)
    if len(args.inputs) != g.n or set(args.inputs) - {"0", "1"}:
        raise ByzcastError(f"--inputs must be {g.n} bits")
    faulty = frozenset(int(x) for x in args.faulty.split(",")) if args.faulty else frozenset()
    return Scenario(g, args.f, tuple(int(c) for c in args.inputs), faulty,
                    parse_adversary(args.adversary), args.seed)


def cmd_run(args) -> int:
    sc = _scenario_from_args(args)
    sc.check_size(args.allow_large)
    if not check_theorem_condition(sc.graph, sc.f):
        print(f"warning: hypothesis violated: graph does not meet the connectivity "
              f"condition for f={sc.f}; results carry no guarantee", file=sys.stderr)
    try:
        trace = run(sc)
    except PathConstructionFailed as e:
        print(f"run aborted: {e}", file=sys.stderr)
        return EXIT_OK if not check_theorem_condition(sc.graph, sc.f) else EXIT_VIOLATION
    verdict = verify(trace)
    trace.verdict = verdict
    if args.out:
        Path(args.out).write_text(trace.to_json())
    decisions = "".join(str(trace.decisions.get(v, "x")) for v in sc.graph.nodes)
    print(f"scenario {sc.key()} decisions={decisions}")
    print(f"agreement={verdict.agreement} validity={verdict.validity} termination={verdict.termination}")
    print(f"violations: lemma_validity={len(verdict.lemma_validity_violations)} "
          f"lemma_agreement={len(verdict.lemma_agreement_violations)} "
          f"observation={len(verdict.observation_violations)} "
          f"non_equivocation={len(verdict.non_equivocation_violations)}")
    if verdict.ok:
        print("OK")
    else:
        print("FAILED" if trace.hypothesis_satisfied else "FAILED (graph outside the guarantee)")
    return EXIT_OK if verdict.guaranteed_ok else EXIT_VIOLATION


def cmd_sweep(args) -> int:
    if args.acceptance:
        doc = acceptance_matrix(args.seed)
    elif args.matrix:
        doc = json.loads(Path(args.matrix).read_text())
    else:
        raise ByzcastError("give a matrix file or --acceptance")
    cells = expand_matrix(doc)
    report = run_matrix(cells, args.out, workers=args.workers, traces=args.traces,
                        allow_large=args.allow_large)
    if not args.out:
        sys.stdout.write(dumps(report.aggregate_doc()))
    print(f"{report.passes}/{report.runs} runs passed in {len(report.cells)} cells", file=sys.stderr)
    if report.failures:
        for doc in report.failures:
            print("failing scenario: " + dumps(doc), end="", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_gen(args) -> int:
    _emit(format_edge_list(parse_graph(args.family)), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    trace = Trace.from_json(Path(args.trace).read_text())
    verdict = verify(trace)
    _emit(verdict.to_json(), args.out)
    if trace.verdict is not None and trace.verdict.to_doc() != verdict.to_doc():
        print("warning: recorded verdict differs from recomputed one", file=sys.stderr)
    return EXIT_OK if verdict.guaranteed_ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="byzcast",
                                description="Byzantine consensus under local broadcast: simulate and verify.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="test a graph against the connectivity condition")
    c.add_argument("--graph", nargs="+", required=True, metavar="SPEC",
                   help="family and parameters (harary 4 8) or an edge-list file")
    c.add_argument("--f", type=int, required=True)
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("run", help="run one scenario and verify it")
    r.add_argument("scenario", nargs="?", help="scenario JSON file (overrides the flags)")
    r.add_argument("--graph", nargs="+", metavar="SPEC")
    r.add_argument("--f", type=int)
    r.add_argument("--inputs", help="bit string, one bit per node")
    r.add_argument("--faulty", default="", help="comma-separated node ids")
    r.add_argument("--adversary", default="conforming", help="kind, or kind:seed")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", help="write the trace here")
    r.add_argument("--allow-large", action="store_true")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a scenario matrix")
    s.add_argument("matrix", nargs="?", help="matrix JSON file")
    s.add_argument("--acceptance", action="store_true", help="use the built-in end-to-end matrix")
    s.add_argument("--out", help="output directory for verdicts, traces and aggregate.json")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--traces", choices=TRACE_MODES, default="failures")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--allow-large", action="store_true")
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("gen", help="print a generated graph as an edge list")
    g.add_argument("family", nargs="+", metavar="SPEC")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("verify", help="re-run the verifier on a saved trace")
    v.add_argument("trace")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ByzcastError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
