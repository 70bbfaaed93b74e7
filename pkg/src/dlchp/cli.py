"""Batch front end: parse | analyze | check | eval | render | corpus.

Exit codes: check: 0 proved, 1 failed, 2 I/O or parse error.
            eval:  0 T, 1 F (counterexample), 3 U, 2 I/O or parse error.
            analyze/parse/render: 0 ok, 2 I/O or parse error.
            corpus run: 0 all criteria pass, 1 otherwise.
The environment variable DLCHP_SEED overrides --seed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

from . import __version__
from .analysis import accessed_channels, bound_vars, free_vars, validate
from .core import ChannelSet, RVar, TVar, is_program
from .semantics import Budget, State, EMPTY_STATE, eval_formula, falsify
from .syntax import (
    Parser,
    SyntaxIssue,
    parse,
    print_chanset,
    print_expr,
    print_formula,
    tokenize,
)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _strip_defs(text: str, filename: str):
    """Apply `def NAME := ...` macros of a .dlchp file; returns the item text."""
    from .scripts import _DEF_RE, _expand
    from .analysis import SourceSpan

    defs = {}
    body = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].rstrip()
        m = _DEF_RE.match(line.strip())
        if m:
            defs[m.group(1)] = _expand(
                m.group(2).strip(), defs, SourceSpan(filename, lineno, 1)
            )
            continue
        body.append(line)
    item = "\n".join(body).strip()
    return _expand(item, defs, SourceSpan(filename, 1, 1))


def _fail_diags(exc: SyntaxIssue):
    for d in exc.diagnostics:
        print(
            "%s:%d:%d: %s %s: %s"
            % (d.span.file, d.span.line, d.span.column, d.severity, d.code, d.message),
            file=sys.stderr,
        )
    return 2


def _names(vs) -> list:
    return sorted(v.name for v in vs)


def _report(payload: dict, as_json: bool):
    if as_json:
        print(json.dumps(payload, sort_keys=True, separators=(",", ":")))


# ---------------------------------------------------------------------------
# subcommands


def cmd_parse(args) -> int:
    code = 0
    for path in args.files:
        try:
            item = _strip_defs(_read(path), path)
            e = parse(item, args.kind, filename=path)
            print(print_expr(e))
        except SyntaxIssue as ex:
            code = _fail_diags(ex)
        except OSError as ex:
            print("error: %s" % ex, file=sys.stderr)
            code = 2
    return code


def cmd_analyze(args) -> int:
    out_code = 0
    for path in args.files:
        try:
            item = _strip_defs(_read(path), path)
            kind = args.kind
            if kind == "auto":
                try:
                    e = parse(item, "program", filename=path, check=False)
                    kind = "program"
                except SyntaxIssue:
                    e = parse(item, "formula", filename=path, check=False)
                    kind = "formula"
            else:
                e = parse(item, kind, filename=path, check=False)
            diags = validate(e)
            if kind == "program":
                bn = bound_vars(e)
                payload = {
                    "file": path,
                    "kind": kind,
                    "fv": _names(free_vars(e).vars.members),
                    "bv": _names(bn.vars.members),
                    "cn": print_chanset(bn.chans),
                    "diagnostics": [d.to_dict() for d in diags],
                }
            else:
                payload = {
                    "file": path,
                    "kind": kind,
                    "fv": _names(free_vars(e).vars.members),
                    "bv": None,
                    "cn": print_chanset(accessed_channels(e)),
                    "diagnostics": [d.to_dict() for d in diags],
                }
            print(json.dumps(payload, sort_keys=True, separators=(",", ":")))
        except SyntaxIssue as ex:
            out_code = _fail_diags(ex)
        except OSError as ex:
            print("error: %s" % ex, file=sys.stderr)
            out_code = 2
    return out_code


def cmd_check(args) -> int:
    from .kernel import check_proof
    from .scripts import parse_proof

    worst = 0
    for path in args.files:
        try:
            script = parse_proof(_read(path), filename=path)
        except SyntaxIssue as ex:
            _fail_diags(ex)
            return 2
        except OSError as ex:
            print("error: %s" % ex, file=sys.stderr)
            return 2
        t0 = time.perf_counter()
        verdict = check_proof(script)
        ms = (time.perf_counter() - t0) * 1000.0
        failed_oracle = args.require_no_oracle and verdict.assumptions
        status = verdict.status
        if status == "proved" and failed_oracle:
            status = "failed"
        payload = {
            "command": "check",
            "tool": "dlchp",
            "version": __version__,
            "inputs": [path],
            "proof": script.name,
            "status": status,
            "steps": verdict.steps,
            "assumptions": [print_formula(a) for a in verdict.assumptions],
            "failed_at": verdict.failed_at,
            "message": "oracle assumptions present"
            if (failed_oracle and verdict.status == "proved")
            else verdict.message,
        }
        if args.json:
            print(json.dumps(payload, sort_keys=True, separators=(",", ":")))
        else:
            print(
                "%s: %s (%d steps, %d assumptions, %.1f ms)"
                % (path, status, verdict.steps, len(verdict.assumptions), ms)
            )
            if status == "failed":
                print(
                    "  failed at %s: %s" % (payload["failed_at"], payload["message"]),
                    file=sys.stderr,
                )
            for a in payload["assumptions"]:
                print("  assumes %s" % a)
        if status == "failed":
            worst = max(worst, 1)
    return worst


def _parse_state(text: str) -> State:
    if not text:
        return EMPTY_STATE
    st = EMPTY_STATE
    toks = tokenize(text, "<state>")
    p = Parser(toks, "<state>")
    while True:
        name = p.expect_id().text
        p.expect("=")
        from .syntax import mk_var
        from .semantics import eval_term

        v = mk_var(name)
        val = eval_term(p.term(), EMPTY_STATE)
        st = st.set(v, val)
        if p.at(","):
            p.next()
            continue
        break
    p.done()
    return st


def _parse_budget(text: str) -> Budget:
    kw = {}
    if text:
        for part in text.split(","):
            key, _, val = part.partition("=")
            key = key.strip()
            val = val.strip()
            if key == "loop":
                kw["loop"] = int(val)
            elif key == "ode":
                a, s, b = (Fraction(x) for x in val.split(":"))
                grid = []
                cur = a
                while cur <= b:
                    grid.append(cur)
                    cur += s
                kw["ode_grid"] = tuple(grid)
            elif key == "rand":
                lo, hi = val.split("..")
                kw["candidates"] = tuple(
                    Fraction(n) for n in range(int(lo), int(hi) + 1)
                )
            elif key == "tracelen":
                kw["trace_len"] = int(val)
            elif key == "maxruns":
                kw["max_runs"] = int(val)
            else:
                raise ValueError("unknown budget key %r" % key)
    return Budget(**kw)


def _state_json(st: State) -> dict:
    return {
        "reals": {v.name: str(c) for v, c in st.reals},
        "traces": {
            v.name: [[e.chan.name, str(e.value), str(e.stamp)] for e in tr]
            for v, tr in st.traces
        },
    }


def cmd_eval(args) -> int:
    try:
        item = _strip_defs(_read(args.file), args.file)
        f = parse(item, "formula", filename=args.file)
        st = _parse_state(args.state)
        budget = _parse_budget(args.budget)
    except (SyntaxIssue, ValueError) as ex:
        if isinstance(ex, SyntaxIssue):
            return _fail_diags(ex)
        print("error: %s" % ex, file=sys.stderr)
        return 2
    except OSError as ex:
        print("error: %s" % ex, file=sys.stderr)
        return 2
    seed = int(os.environ.get("DLCHP_SEED", args.seed))
    payload = {
        "command": "eval",
        "tool": "dlchp",
        "version": __version__,
        "inputs": [args.file],
        "seed": seed,
    }
    if args.trials:
        witness = falsify(f, args.trials, budget, seed)
        payload["result"] = "no-counterexample" if witness is None else "counterexample"
        payload["counterexample"] = None if witness is None else _state_json(witness)
        print(json.dumps(payload, sort_keys=True, separators=(",", ":")))
        return 0 if witness is None else 1
    verdict = eval_formula(f, st, budget)
    payload["result"] = verdict
    payload["counterexample"] = _state_json(st) if verdict == "F" else None
    print(json.dumps(payload, sort_keys=True, separators=(",", ":")))
    return {"T": 0, "F": 1, "U": 3}[verdict]


def _parse_chanset(text: str) -> ChannelSet:
    toks = tokenize(text, "<channels>")
    p = Parser(toks, "<channels>")
    cs = p.chanset()
    p.done()
    return cs


def cmd_render(args) -> int:
    from .encoder import (
        render_transition,
        strongest_commitment,
        strongest_postcondition,
        trace_simplify,
    )

    try:
        if args.trace_simplify:
            f = parse(_strip_defs(_read(args.trace_simplify), args.trace_simplify), "formula")
            print(print_formula(trace_simplify(f)))
            return 0
        if args.strongest:
            prog = parse(_strip_defs(_read(args.file), args.file), "program")
            pre = parse(_strip_defs(_read(args.pre), args.pre), "formula")
            assume = (
                parse(_strip_defs(_read(args.assume), args.assume), "formula")
                if args.assume
                else parse("true", "formula")
            )
            cs = _parse_chanset(args.channels) if args.channels else ChannelSet.empty()
            fn = strongest_commitment if args.strongest == "commit" else strongest_postcondition
            print(print_formula(fn(prog, pre, assume, cs)))
            return 0
        prog = parse(_strip_defs(_read(args.file), args.file), "program")
        r = render_transition(prog, fin=args.fin)
        print(print_formula(r.body))
        return 0
    except SyntaxIssue as ex:
        return _fail_diags(ex)
    except OSError as ex:
        print("error: %s" % ex, file=sys.stderr)
        return 2


def cmd_corpus(args) -> int:
    from . import acceptance

    if args.action == "run":
        ok = True
        for name, passed, detail in acceptance.run_all(corpus_dir=args.dir, fast=args.fast):
            print("%s %s%s" % ("PASS" if passed else "FAIL", name, " - " + detail if detail else ""))
            ok = ok and passed
        return 0 if ok else 1
    print("unknown corpus action %r" % args.action, file=sys.stderr)
    return 2


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="dlchp", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("parse", help="parse and reprint items")
    p.add_argument("--kind", choices=["term", "program", "formula"], default="formula")
    p.add_argument("files", nargs="+")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("analyze", help="static analysis as JSON")
    p.add_argument("--kind", choices=["auto", "program", "formula"], default="auto")
    p.add_argument("files", nargs="+")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("check", help="replay proof scripts")
    p.add_argument("--json", action="store_true")
    p.add_argument("--require-no-oracle", action="store_true")
    p.add_argument("files", nargs="+")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("eval", help="evaluate a formula")
    p.add_argument("file")
    p.add_argument("--state", default="")
    p.add_argument("--budget", default="")
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("render", help="transition renditions and encodings")
    p.add_argument("file", nargs="?")
    p.add_argument("--fin", choices=["true", "false", "var"], default="var")
    p.add_argument("--strongest", choices=["commit", "post"])
    p.add_argument("--pre")
    p.add_argument("--assume")
    p.add_argument("--channels")
    p.add_argument("--trace-simplify", dest="trace_simplify")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("corpus", help="corpus meta-commands")
    p.add_argument("action", choices=["run"])
    p.add_argument("--dir", default=None)
    p.add_argument("--fast", action="store_true", help="reduced trial counts")
    p.set_defaults(fn=cmd_corpus)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
