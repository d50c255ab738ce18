"""Command-line front end.

Subcommands: run, normalize, explore, entails, classify, tm. Reports are
printed as human-readable lines by default and as JSON with --json; the JSON
object always carries the keys command/inputs/verdict/steps/atoms (plus
stats, and a delta-list derivation on request). Exit code 0 on success or a
fully passing classification, 1 on classification mismatches, 2 on usage
errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import analysis, normalize, textio, tmgen
from .chase import ChaseVariant, DatalogFirst, FIFO, Phased, Scripted, Strategy, run_chase


def _load_document(path: str) -> textio.SourceDocument:
    return textio.parse_document(Path(path).read_text())


def _strategy(spec: str) -> Strategy:
    if spec == "fifo":
        return FIFO()
    if spec == "datalog-first":
        return DatalogFirst()
    if spec.startswith("phased:"):
        raw = json.loads(Path(spec.split(":", 1)[1]).read_text())
        return Phased([(tuple(ids), mode) for ids, mode in raw])
    if spec.startswith("scripted:"):
        raw = json.loads(Path(spec.split(":", 1)[1]).read_text())
        return Scripted([tuple(s) if isinstance(s, list) else s for s in raw])
    raise argparse.ArgumentTypeError("unknown strategy %r" % spec)


def _emit(report: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report, sort_keys=True, indent=2))
        return
    for key in ("command", "inputs", "verdict", "steps", "atoms"):
        if key in report and report[key] is not None:
            print("%-10s %s" % (key + ":", report[key]))
    for key, value in sorted(report.items()):
        if key in ("command", "inputs", "verdict", "steps", "atoms", "derivation", "rows"):
            continue
        print("%-10s %s" % (key + ":", value))
    if "rows" in report:
        for row in report["rows"]:
            print(
                "%-8s %-6s %-7s expected=%-12s observed=%-12s %s"
                % (
                    row["fixture"],
                    row["variant"],
                    row["mode"],
                    row["expected"],
                    row["observed"],
                    "pass" if row["pass"] else "FAIL",
                )
            )


def _cmd_run(args) -> int:
    doc = _load_document(args.file)
    kb = doc.knowledge_base()
    variant = ChaseVariant.parse(args.variant)
    outcome = run_chase(kb, variant, _strategy(args.strategy), args.max_steps)
    report = {
        "command": "run",
        "inputs": args.file,
        "verdict": outcome.verdict,
        "steps": len(outcome.derivation),
        "atoms": len(outcome.result),
        "stats": outcome.stats,
    }
    if args.derivation:
        report["derivation"] = [
            {
                "rule": t.rule.id,
                "match": {n: str(v) for n, v in t.match},
                "added": [str(a) for a in delta],
            }
            for (t, _), delta in zip(outcome.derivation.steps, outcome.derivation.deltas())
        ]
    _emit(report, args.json)
    if args.output:
        Path(args.output).write_text(textio.serialize_factbase(outcome.result))
    return 0


def _cmd_normalize(args) -> int:
    doc = _load_document(args.file)
    proc = {"sp": normalize.single_piece, "1ad": normalize.one_way, "2ad": normalize.two_way}[
        args.proc
    ]
    if args.proc == "sp":
        report = proc(tuple(doc.rules))
    else:
        report = proc(tuple(doc.rules), skip_atomic=args.skip_atomic)
    erl = textio.serialize_rules(report.output_rules)
    if args.json:
        payload = {
            "command": "normalize",
            "inputs": args.file,
            "proc": args.proc,
            "erl": erl,
        }
        payload.update(normalize.report_sidecar(report))
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        sys.stdout.write(erl)
    if args.output:
        Path(args.output).write_text(erl)
        Path(args.output + ".json").write_text(
            json.dumps(normalize.report_sidecar(report), sort_keys=True, indent=2)
        )
    return 0


def _cmd_explore(args) -> int:
    doc = _load_document(args.file)
    kb = doc.knowledge_base()
    variant = ChaseVariant.parse(args.variant)
    report = analysis.explore_all(kb, variant, args.max_depth, args.max_nodes)
    payload = {
        "command": "explore",
        "inputs": args.file,
        "verdict": report.verdict,
        "steps": report.max_len,
        "atoms": None,
        "nodes": report.nodes,
        "dedup_hits": report.dedup_hits,
    }
    if report.witness is not None:
        payload["witness"] = [[str(a) for a in delta] for delta in report.witness]
        payload["witness_label"] = report.witness_label
    _emit(payload, args.json)
    return 0


def _cmd_entails(args) -> int:
    doc = _load_document(args.file)
    kb = doc.knowledge_base()
    if not doc.queries:
        print("error: no queries in %s" % args.file, file=sys.stderr)
        return 2
    if args.query_index >= len(doc.queries):
        print("error: query index out of range", file=sys.stderr)
        return 2
    query = doc.queries[args.query_index]
    variant = ChaseVariant.parse(args.variant)
    verdict = analysis.entails(kb, query, variant, args.max_steps)
    report = {
        "command": "entails",
        "inputs": args.file,
        "verdict": verdict.kind,
        "steps": args.max_steps,
        "atoms": None,
        "query": textio.serialize_query(query),
    }
    if verdict.witness is not None:
        report["witness"] = {str(k): str(v) for k, v in sorted(verdict.witness.items(), key=str)}
    _emit(report, args.json)
    return 0


def _cmd_classify(args) -> int:
    rows = analysis.classify(Path(args.fixtures))
    ok = all(row["pass"] for row in rows)
    report = {
        "command": "classify",
        "inputs": args.fixtures,
        "verdict": "pass" if ok else "fail",
        "steps": None,
        "atoms": None,
        "rows": rows,
    }
    _emit(report, args.json)
    return 0 if ok else 1


def _cmd_tm(args) -> int:
    machine = tmgen.parse_machine(Path(args.machine).read_text())
    if args.action == "encode":
        encoding = tmgen.encode(machine)
        text = textio.serialize_rules(encoding.rules) + textio.serialize_factbase(encoding.seed)
    else:
        text = textio.serialize_factbase(tmgen.tape_factbase(args.len))
    if args.json:
        print(
            json.dumps(
                {"command": "tm", "inputs": args.machine, "action": args.action, "erl": text},
                sort_keys=True,
                indent=2,
            )
        )
    else:
        sys.stdout.write(text)
    if args.output:
        Path(args.output).write_text(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exchase", description="chase engine and analysis toolkit for existential rules"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a chase variant on a rule/fact file")
    p.add_argument("file")
    p.add_argument("--variant", default="r")
    p.add_argument("--strategy", default="fifo")
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--derivation", action="store_true")
    p.add_argument("--output")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("normalize", help="apply a normalisation procedure")
    p.add_argument("file")
    p.add_argument("--proc", choices=("sp", "1ad", "2ad"), required=True)
    p.add_argument("--skip-atomic", action="store_true")
    p.add_argument("--output")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("explore", help="explore all derivations up to budgets")
    p.add_argument("file")
    p.add_argument("--variant", default="r")
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--max-nodes", type=int, default=5000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_explore)

    p = sub.add_parser("entails", help="budgeted BCQ entailment")
    p.add_argument("file")
    p.add_argument("--query-index", type=int, default=0)
    p.add_argument("--variant", default="r")
    p.add_argument("--max-steps", type=int, default=200)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_entails)

    p = sub.add_parser("classify", help="run a fixture corpus against expectations")
    p.add_argument("--fixtures", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("tm", help="encode a Turing machine or emit a tape")
    p.add_argument("action", choices=("encode", "tape"))
    p.add_argument("--machine", required=True)
    p.add_argument("--len", type=int, default=1)
    p.add_argument("--output")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_tm)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        textio.ParseError,
        textio.ArityError,
        textio.VariableScopeError,
        analysis.FixtureError,
        tmgen.InvalidMachine,
        normalize.FreshNameClashError,
        FileNotFoundError,
    ) as e:
        print(
            json.dumps({"command": args.command, "error": str(e)}, sort_keys=True),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
