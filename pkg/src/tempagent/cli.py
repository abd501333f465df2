"""Command-line interface.

Exit codes: 0 success (or valid up to bounds), 1 countermodel / unsat,
2 syntax or usage error, 3 file or schema error, 4 candidate cap exceeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import Optional, Sequence

from .decide import SearchBounds, Witness, refute_rule_bounded, sat_bounded, theorem_bounded
from .errors import CapExceeded
from .formula import ParseError, metrics, parse, to_text
from .frames import FrameError
from .modelfile import ModelFileError, dumps_model, load_model
from .rules import parse_rule, rule_valid_in_model, to_reduced_normal_form
from .semantics import EvaluationError, HorizonError, Model, evaluate, oracle_eval

EXIT_OK, EXIT_REFUTED, EXIT_SYNTAX, EXIT_IO, EXIT_CAP = 0, 1, 2, 3, 4


class _UsageError(Exception):
    pass


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _bounds(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected T,S,C,L (four integers)")
    try:
        return tuple(int(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not integers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tempagent", description="Temporal multi-agent knowledge logic toolkit.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("text", nargs="?", help="formula or rule; '-' reads stdin")
    common.add_argument("--file", help="read the formula or rule from a file")
    common.add_argument("--format", choices=("human", "json"), default="human")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--bounds", type=_bounds, metavar="T,S,C,L",
                        help="max time clusters, cluster size, chains per gap, chain length")
    search.add_argument("--loop", dest="loop", action="store_true", default=None)
    search.add_argument("--no-loop", dest="loop", action="store_false")
    search.add_argument("--agents", type=int)
    search.add_argument("--jobs", type=int, default=1)
    search.add_argument("--cap", type=int, help="candidate cap (default: $TEMPAGENT_CAP or built-in)")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", metavar="PATH")
    model.add_argument("--horizon", type=int)

    gaps = argparse.ArgumentParser(add_help=False)
    gaps.add_argument("--bridge-gaps", type=_bool, metavar="BOOL")

    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("parse", parents=[common], help="print canonical form and metrics")
    ev = sub.add_parser("eval", parents=[common, model, gaps], help="truth table over a model")
    ev.add_argument("--oracle", action="store_true", help="use the brute-force unrolling evaluator")
    sub.add_parser("valid", parents=[common, model, gaps], help="is the formula valid in a model")
    sub.add_parser("sat", parents=[common, search, gaps], help="bounded satisfiability search")
    sub.add_parser("theorem", parents=[common, search, gaps], help="bounded countermodel search")
    sub.add_parser("nf", parents=[common], help="reduced normal form of a rule")
    rc = sub.add_parser("rule-check", parents=[common, search, model, gaps],
                        help="rule validity in a model, or bounded refutation")
    rc.add_argument("--rnf", action="store_true", help="search on the reduced normal form")
    return p


def _read_text(args) -> str:
    if args.file:
        if args.text:
            raise _UsageError("give the formula either inline or with --file, not both")
        try:
            with open(args.file, encoding="utf-8") as fh:
                return fh.read()
        except OSError as e:
            raise ModelFileError(f"cannot read {args.file}: {e.strerror}") from None
    if args.text is None:
        raise _UsageError("missing formula")
    if args.text == "-":
        return sys.stdin.read()
    return args.text


def _load(args) -> Model:
    if not args.model:
        raise _UsageError("--model is required")
    m = load_model(args.model)
    if args.bridge_gaps is not None and args.bridge_gaps != m.spec.bridge_gaps:
        m = Model(dataclasses.replace(m.spec, bridge_gaps=args.bridge_gaps), m.valuation)
    return m


def _search_bounds(args) -> SearchBounds:
    b = SearchBounds()
    if args.bounds:
        t, s, c, l = args.bounds
        b = dataclasses.replace(b, max_time_clusters=t, max_cluster_size=s,
                                max_chains_per_gap=c, max_chain_length=l)
    if args.loop is not None:
        b = dataclasses.replace(b, allow_loop=args.loop)
    if args.agents is not None:
        b = dataclasses.replace(b, agents=args.agents)
    if args.bridge_gaps is not None:
        b = dataclasses.replace(b, bridge_gaps=args.bridge_gaps)
    return b


def _checked_bounds(args) -> SearchBounds:
    try:
        return _search_bounds(args)
    except ValueError as e:
        raise _UsageError(str(e)) from None


def _emit(args, human: str, data) -> None:
    if args.format == "json":
        print(json.dumps(data, indent=2))
    else:
        print(human)


def cmd_parse(args) -> int:
    f = parse(_read_text(args))
    m = metrics(f)
    data = {"formula": to_text(f), "size": m.size, "variables": sorted(m.variables_used),
            "max_agent": m.max_agent, "dist_weight": m.dist_weight,
            "next_count": m.next_count, "until_count": m.until_count}
    human = "\n".join([data["formula"]] + [f"{k}: {v}" for k, v in data.items() if k != "formula"])
    _emit(args, human, data)
    return EXIT_OK


def cmd_eval(args) -> int:
    f = parse(_read_text(args))
    model = _load(args)
    table = oracle_eval(model, f, args.horizon) if args.oracle else evaluate(model, f, args.horizon)
    width = max(len(s) for s in table)
    human = "\n".join(f"{s.ljust(width)}  {int(v)}" for s, v in table.items())
    _emit(args, human, {"formula": to_text(f), "truth": table})
    return EXIT_OK


def cmd_valid(args) -> int:
    f = parse(_read_text(args))
    model = _load(args)
    table = evaluate(model, f, args.horizon)
    failing = [s for s, v in table.items() if not v]
    human = "valid in model" if not failing else "fails at: " + ", ".join(failing)
    _emit(args, human, {"formula": to_text(f), "valid": not failing, "failing": failing})
    return EXIT_OK if not failing else EXIT_REFUTED


def _report(args, outcome, found_msg: str, none_msg: str) -> None:
    if isinstance(outcome, Witness):
        human = f"{found_msg} at state {outcome.state} ({outcome.frames_checked} frames checked)\n" \
                + dumps_model(outcome.model)
    else:
        human = f"{none_msg} ({outcome.frames_checked} frames checked, bounds {outcome.bounds.to_dict()})"
    _emit(args, human, outcome.to_dict())


def cmd_sat(args) -> int:
    f = parse(_read_text(args))
    out = sat_bounded(f, _checked_bounds(args), cap=args.cap, jobs=args.jobs)
    _report(args, out, "satisfied", "no satisfying model within bounds")
    return EXIT_OK if isinstance(out, Witness) else EXIT_REFUTED


def cmd_theorem(args) -> int:
    f = parse(_read_text(args))
    out = theorem_bounded(f, _checked_bounds(args), cap=args.cap, jobs=args.jobs)
    _report(args, out, "countermodel found", "no countermodel within bounds (theorem up to bounds)")
    return EXIT_REFUTED if isinstance(out, Witness) else EXIT_OK


def cmd_nf(args) -> int:
    rule = parse_rule(_read_text(args))
    rnf = to_reduced_normal_form(rule)
    data = rnf.to_dict()
    if args.format == "json":
        print(json.dumps(data, indent=2))
    else:
        print(f"{len(rnf.disjuncts)} disjuncts over {len(rnf.schema)} atoms")
        for x, g in data["labels"].items():
            print(f"  {x} = {g}")
        print("schema: " + " ".join(data["schema"]))
        for row in data["disjuncts"]:
            print("  " + "".join(map(str, row)))
    return EXIT_OK


def cmd_rule_check(args) -> int:
    rule = parse_rule(_read_text(args))
    if args.model:
        model = _load(args)
        ok = rule_valid_in_model(model, rule)
        _emit(args, "rule valid in model" if ok else "rule refuted in model",
              {"rule": str(rule), "valid": ok})
        return EXIT_OK if ok else EXIT_REFUTED
    target = to_reduced_normal_form(rule) if args.rnf else rule
    out = refute_rule_bounded(target, _checked_bounds(args), cap=args.cap, jobs=args.jobs)
    _report(args, out, "rule refuted", "no refutation within bounds")
    return EXIT_REFUTED if isinstance(out, Witness) else EXIT_OK


COMMANDS = {
    "parse": cmd_parse, "eval": cmd_eval, "valid": cmd_valid, "sat": cmd_sat,
    "theorem": cmd_theorem, "nf": cmd_nf, "rule-check": cmd_rule_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_SYNTAX if e.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ParseError as e:
        print(f"syntax error: {e}", file=sys.stderr)
        return EXIT_SYNTAX
    except (_UsageError, HorizonError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_SYNTAX
    except CapExceeded as e:
        print(f"cap exceeded: {e}", file=sys.stderr)
        return EXIT_CAP
    except (ModelFileError, FrameError, EvaluationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
