"""Reader and writer for .proof files.

Line format:

    proof <name>
    def <NAME> := <text>              // textual macro, referenced as $NAME
    <label>: <id> [binding: s = v, ...] [from: l1, l2, ...] |- <formula>
    <label>: prop |- <formula>
    <label>: oracle |- <formula>

Binding values are parsed by the slot kinds of the named axiom/rule, so
commas inside values need no escaping.  Exit semantics live in the CLI.
"""
from __future__ import annotations

import re
from typing import Optional

from .analysis import Diagnostic, SourceSpan
from .kernel import AXIOMS, ProofScript, RULES, Step
from .syntax import (
    Parser,
    SyntaxIssue,
    print_chanset,
    print_expr,
    tokenize,
)

RULE_SLOTS = {
    "MP": (),
    "forall": (("v", "var"),),
    "acG": (("alpha", "program"), ("A", "formula"), ("C", "formula"), ("psi", "formula")),
}

_DEF_RE = re.compile(r"^def\s+([A-Za-z_][A-Za-z0-9_]*)\s*:=\s*(.*)$")
_REF_RE = re.compile(r"\$([A-Za-z_][A-Za-z0-9_]*)")


def _expand(text: str, defs: dict, span) -> str:
    for _ in range(16):
        hit = False

        def repl(m):
            nonlocal hit
            name = m.group(1)
            if name not in defs:
                raise SyntaxIssue(
                    [Diagnostic("error", "SYNTAX", "undefined $%s" % name, span)]
                )
            hit = True
            return defs[name]

        text = _REF_RE.sub(repl, text)
        if not hit:
            return text
    raise SyntaxIssue([Diagnostic("error", "SYNTAX", "recursive definitions", span)])


def _parse_value(p: Parser, kind: str):
    from .core import RVar, TVar

    if kind in ("var", "rvar", "tvar"):
        t = p.expect_id()
        from .syntax import mk_var

        v = mk_var(t.text)
        if kind == "rvar" and not isinstance(v, RVar):
            raise SyntaxIssue([Diagnostic("error", "SORT", "expected a real variable", t.span)])
        if kind == "tvar" and not isinstance(v, TVar):
            raise SyntaxIssue([Diagnostic("error", "SORT", "expected a trace variable", t.span)])
        return v
    if kind in ("term", "rterm", "tterm"):
        return p.term()
    if kind == "formula":
        return p.formula()
    if kind == "program":
        return p.program()
    if kind == "chanset":
        return p.chanset()
    if kind == "channel":
        return p.chan_name()
    raise ValueError("unknown slot kind %r" % kind)


def parse_proof(text: str, filename: str = "<proof>") -> ProofScript:
    """Parse a .proof file.  `def NAME := <expr>` introduces a named
    expression; `$NAME` splices its parsed form wherever a term, formula,
    or program atom is expected (all steps share the spliced tree)."""
    name = None
    defs = {}
    defs_cache = {}
    steps = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        span = SourceSpan(filename, lineno, 1, max(1, len(line)))
        if line.startswith("proof "):
            if name is not None:
                raise SyntaxIssue([Diagnostic("error", "SYNTAX", "duplicate proof header", span)])
            name = line[len("proof "):].strip()
            continue
        m = _DEF_RE.match(line)
        if m:
            defs[m.group(1)] = m.group(2).strip()
            continue
        steps.append(_parse_step(line, filename, lineno, defs, defs_cache))
    if name is None:
        raise SyntaxIssue(
            [Diagnostic("error", "SYNTAX", "missing 'proof <name>' header", SourceSpan(filename, 1, 1))]
        )
    return ProofScript(name, tuple(steps))


def _parse_step(line: str, filename: str, lineno: int, defs, defs_cache) -> Step:
    span = SourceSpan(filename, lineno, 1, max(1, len(line)))
    toks = tokenize(line, filename)
    p = Parser(toks, filename, defs=defs, defs_cache=defs_cache)
    label = p.expect_id().text
    p.expect(":")
    idtok = p.peek()
    if idtok.kind != "id":
        raise SyntaxIssue(
            [Diagnostic("error", "SYNTAX", "expected an axiom or rule name", span)]
        )
    p.next()
    rid = idtok.text
    if rid in AXIOMS:
        kind, slots = "axiom", dict(AXIOMS[rid].slots)
    elif rid in RULES:
        kind, slots = "rule", dict(RULE_SLOTS[rid])
    elif rid == "prop":
        kind, slots = "prop", {}
    elif rid == "oracle":
        kind, slots = "oracle", {}
    else:
        raise SyntaxIssue(
            [Diagnostic("error", "SYNTAX", "unknown axiom or rule %r" % rid, span)]
        )
    binding = []
    premises = []
    if p.at_id("binding"):
        p.next()
        p.expect(":")
        while True:
            slot = p.expect_id().text
            if slot not in slots:
                raise SyntaxIssue(
                    [Diagnostic("error", "SYNTAX", "%s has no slot %r" % (rid, slot), span)]
                )
            p.expect("=")
            binding.append((slot, _parse_value(p, slots[slot])))
            if p.at(","):
                p.next()
                continue
            break
    if p.at_id("from"):
        p.next()
        p.expect(":")
        premises.append(p.expect_id().text)
        while p.at(","):
            p.next()
            premises.append(p.expect_id().text)
    p.expect("|-")
    conclusion = p.formula()
    p.done()
    return Step(
        label,
        kind,
        rid if kind in ("axiom", "rule") else None,
        tuple(binding),
        tuple(premises),
        conclusion,
    )


# ---------------------------------------------------------------------------
# writer


def _show_value(v) -> str:
    from .core import Channel, ChannelSet, RVar, TVar

    if isinstance(v, (RVar, TVar)):
        return v.name
    if isinstance(v, ChannelSet):
        return print_chanset(v)
    if isinstance(v, Channel):
        return v.name
    return print_expr(v)


def _node_size(e, memo) -> int:
    key = id(e)
    got = memo.get(key)
    if got is not None:
        return got
    from .core import Channel
    from .core import children as _children

    n = 1
    for c in _children(e):
        if isinstance(c, Channel):
            continue
        n += _node_size(c, memo)
    memo[key] = n
    return n


def auto_defs(script: ProofScript, min_size: int = 40, min_count: int = 2) -> dict:
    """Named definitions for large subtrees recurring across the script."""
    from .core import (
        Channel,
        ChannelSet,
        RVar,
        TVar,
        children,
        is_formula,
        is_program,
        is_real_term,
        is_trace_term,
    )

    counts = {}
    order = {}

    def walk(e):
        if isinstance(e, (RVar, TVar, Channel, ChannelSet)):
            return
        if e not in counts:
            counts[e] = 0
            order[e] = len(order)
        counts[e] += 1
        for c in children(e):
            if not isinstance(c, Channel):
                walk(c)

    for st in script.steps:
        walk(st.conclusion)
        for _, v in st.binding:
            if is_formula(v) or is_program(v) or is_real_term(v) or is_trace_term(v):
                walk(v)
    memo = {}
    picked = [
        e
        for e, cnt in counts.items()
        if cnt >= min_count and _node_size(e, memo) >= min_size
    ]
    picked.sort(key=lambda e: order[e])
    return {"D%d" % (i + 1): e for i, e in enumerate(picked)}


def write_proof(script: ProofScript, defs=None) -> str:
    """Render a script; `defs` maps names to expression trees printed once
    as `def NAME := ...` and referenced as `$NAME` everywhere else."""
    from .syntax import _with_refs

    defs = defs or {}
    memo = {}
    by_size = sorted(defs.items(), key=lambda kv: (_node_size(kv[1], memo), kv[0]))
    refs_all = {node: dname for dname, node in defs.items()}
    lines = ["proof %s" % script.name]
    earlier = {}
    for dname, node in by_size:
        with _with_refs(dict(earlier)):
            lines.append("def %s := %s" % (dname, print_expr(node)))
        earlier[node] = dname
    with _with_refs(refs_all):
        for st in script.steps:
            parts = ["%s: %s" % (st.label, st.rule_id or st.kind)]
            if st.binding:
                parts.append(
                    "binding: "
                    + ", ".join("%s = %s" % (k, _show_value(v)) for k, v in st.binding)
                )
            if st.premises:
                parts.append("from: " + ", ".join(st.premises))
            parts.append("|- " + print_expr(st.conclusion))
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
