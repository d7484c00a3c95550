"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 the chase failed (no
model), 3 a budget ran out and some answer is only partial.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from . import classifier
from .chase import Budget, BudgetExhausted, Failure, Success, chase
from .core import Dtgd
from .dchase import AnswerStatus, Verdict, answers_over, disjunctive_chase, entails
from .errors import DatalogError, ParseError
from .parser import format_atom, format_term, parse_program, serialize_facts, serialize_program

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2
EXIT_BUDGET = 3

DEFAULT_MAX_STEPS = 100_000
DEFAULT_MAX_DEPTH = 64


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple
    command: str
    max_steps: int | None = DEFAULT_MAX_STEPS
    max_depth: int | None = DEFAULT_MAX_DEPTH
    output_format: str = "text"
    deterministic: bool = True
    trace: bool = False
    seed: int | None = None
    extra_queries: tuple = ()

    @property
    def budget(self):
        return Budget(self.max_steps, self.max_depth)


def _budget_value(text):
    if text.lower() in ("unlimited", "none", "inf"):
        return None
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer or 'unlimited', got {text!r}")
    if n < 0:
        raise argparse.ArgumentTypeError("budget must be non-negative")
    return n


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-steps", type=_budget_value, default=DEFAULT_MAX_STEPS, metavar="N")
    common.add_argument("--max-depth", type=_budget_value, default=DEFAULT_MAX_DEPTH, metavar="N")
    common.add_argument("--format", dest="output_format", default="text",
                        choices=["text", "json", "json-like"])
    common.add_argument("--trace", action="store_true", help="print one line per chase step")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--parallel", action="store_true",
                        help="expand sibling branches concurrently (output order not guaranteed)")

    p = _Parser(prog="datalogpm", description="Datalog+/- fragment classifier and chase engine")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [
        ("validate", "parse and check safety"),
        ("classify", "report fragment membership"),
        ("chase", "run the (disjunctive) chase"),
        ("query", "answer the program's queries under certain-answer semantics"),
    ]:
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("inputs", nargs="+", metavar="FILE")
        if name == "query":
            sp.add_argument("-q", "--query", action="append", default=[], metavar="TEXT",
                            help="extra query statement, e.g. '? male(p).'")
    gp = sub.add_parser("generate", parents=[common], help="print a random program")
    gp.add_argument("--rules", type=int, default=4)
    gp.add_argument("--facts", type=int, default=6)
    return p


def _config(ns) -> RunConfig:
    return RunConfig(
        inputs=tuple(getattr(ns, "inputs", ())),
        command=ns.command,
        max_steps=ns.max_steps,
        max_depth=ns.max_depth,
        output_format="json" if ns.output_format == "json-like" else ns.output_format,
        deterministic=not ns.parallel,
        trace=ns.trace,
        seed=ns.seed,
        extra_queries=tuple(getattr(ns, "query", ())),
    )


def _load(cfg: RunConfig):
    chunks = []
    for path in cfg.inputs:
        with open(path, encoding="utf-8") as f:
            chunks.append(f.read())
    chunks.extend(cfg.extra_queries)
    text = "\n".join(chunks)
    try:
        return parse_program(text)
    except ParseError as e:
        where = cfg.inputs[0] if len(cfg.inputs) == 1 else "<input>"
        raise UsageError(f"{where}:{e}") from None


def _interlock(cfg, program):
    if cfg.max_steps is None or cfg.max_depth is None:
        if not classifier.is_weakly_acyclic(program.dependencies):
            raise UsageError(
                "refusing an unlimited budget: the dependencies are not weakly acyclic"
            )


def _emit(cfg, out, doc, text):
    if cfg.output_format == "json":
        out.write(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
    else:
        out.write(text)


def cmd_validate(cfg, program, out):
    doc = {
        "status": "ok",
        "facts": len(program.facts),
        "dependencies": len(program.dependencies),
        "queries": len(program.queries),
    }
    text = f"ok: {doc['facts']} facts, {doc['dependencies']} dependencies, {doc['queries']} queries\n"
    _emit(cfg, out, doc, text)
    return EXIT_OK


def cmd_classify(cfg, program, out):
    report = classifier.classify(program.dependencies)
    doc = report.to_dict()
    lines = [f"{k}: {str(v).lower()}" for k, v in doc.items() if k != "witnesses"]
    w = report.witnesses
    if w["special_cycle"]:
        lines.append("special cycle: " + " ; ".join(f"{u} -{k}-> {v}" for u, v, k in w["special_cycle"]))
    if w["sticky_violation"]:
        k, v = w["sticky_violation"]
        lines.append(f"sticky violation: rule {k + 1}, variable {v}")
    if w["affected_positions"]:
        lines.append("affected positions: " + ", ".join(w["affected_positions"]))
    _emit(cfg, out, doc, "\n".join(lines) + "\n")
    return EXIT_OK


def _is_disjunctive(program):
    return any(isinstance(d, Dtgd) and not d.is_tgd for d in program.dependencies)


def cmd_chase(cfg, program, out):
    _interlock(cfg, program)
    if _is_disjunctive(program):
        return _chase_tree(cfg, program, out)
    outcome = chase(program.facts, program.dependencies, cfg.budget, trace=cfg.trace)
    name = type(outcome).__name__
    instance = outcome.result if isinstance(outcome, Success) else outcome.partial
    steps = outcome.step if isinstance(outcome, Failure) else outcome.steps
    doc = {"outcome": name, "steps": steps}
    text = [f"outcome: {name}", f"steps: {steps}"]
    if isinstance(outcome, Failure):
        k = next(i for i, d in enumerate(program.dependencies) if d is outcome.dependency)
        label = outcome.dependency.label or f"r{k + 1}"
        doc["violated"] = label
        text.append(f"violated: {label}")
    if cfg.trace:
        doc["trace"] = list(outcome.trace)
        text += outcome.trace
    doc["instance"] = [format_atom(a) for a in instance.sorted()] if instance is not None else []
    body = "\n".join(text) + "\n"
    if instance is not None:
        body += serialize_facts(instance)
    _emit(cfg, out, doc, body)
    if isinstance(outcome, Failure):
        return EXIT_FAILURE
    if isinstance(outcome, BudgetExhausted):
        return EXIT_BUDGET
    return EXIT_OK


def _tree(cfg, program):
    return disjunctive_chase(
        program.facts, program.dependencies, cfg.budget, parallel=not cfg.deterministic
    )


def _chase_tree(cfg, program, out):
    tree = _tree(cfg, program)
    doc = tree.to_dict()
    text = tree.to_text()
    for n, leaf in enumerate(tree.leaves(), 1):
        text += f"% leaf {n} [{leaf.status.value}] branch {leaf.branch_tag}\n"
        text += serialize_facts(leaf.instance)
    _emit(cfg, out, doc, text)
    if tree.all_failed:
        return EXIT_FAILURE
    if not tree.complete:
        return EXIT_BUDGET
    return EXIT_OK


def _row(t):
    return "(" + ", ".join(format_term(c) for c in t) + ")"


def cmd_query(cfg, program, out):
    _interlock(cfg, program)
    tree = _tree(cfg, program)
    results, lines = [], []
    partial = False
    for q in program.queries:
        if q.is_boolean:
            v = entails(tree, q)
            partial |= v is Verdict.UNKNOWN
            results.append({"name": q.name, "verdict": v.value})
            lines.append(f"{q.name}: {v.value}")
        else:
            ca = answers_over(tree, q)
            partial |= ca.status is AnswerStatus.LOWER_BOUND_UNKNOWN
            rows = sorted(_row(t) for t in ca.tuples)
            results.append({"name": q.name, "answers": rows, "status": ca.status.value,
                            "inconsistent": ca.inconsistent})
            lines.append(f"{q.name}: {{{', '.join(rows)}}} {ca.status.value}")
    doc = {
        "queries": results,
        "steps": tree.steps,
        "leaves": {
            "saturated": len(tree.saturated()),
            "failed": len(tree.failed_leaves()),
            "open": len(tree.open_leaves()),
        },
    }
    if tree.all_failed:
        lines.append("% no model: every leaf failed")
    _emit(cfg, out, doc, "\n".join(lines) + "\n")
    if partial:
        return EXIT_BUDGET
    if tree.all_failed:
        return EXIT_FAILURE
    return EXIT_OK


def cmd_generate(cfg, ns, out):
    import random

    from .random_programs import random_program

    rng = random.Random(cfg.seed)
    out.write(serialize_program(random_program(rng, n_rules=ns.rules, n_facts=ns.facts)))
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "classify": cmd_classify,
    "chase": cmd_chase,
    "query": cmd_query,
}


def run(args, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        ns = build_parser().parse_args(list(args))
        cfg = _config(ns)
        if cfg.command == "generate":
            return cmd_generate(cfg, ns, out)
        program = _load(cfg)
        return COMMANDS[cfg.command](cfg, program, out)
    except UsageError as e:
        err.write(f"error: {e}\n")
        return EXIT_USAGE
    except (DatalogError, OSError) as e:
        err.write(f"error: {e}\n")
        return EXIT_USAGE


def main(argv=None):
    try:
        code = run(sys.argv[1:] if argv is None else argv)
    except SystemExit as e:  # --help
        code = e.code if isinstance(e.code, int) else 0
    sys.exit(code)
