"""Capture-avoiding substitution, bound renaming, fresh-name supply.

Quantifier binders are renamed on demand; program binders are never renamed
silently (InadmissibleInModality instead).  Substituting a trace variable
also replaces recorder positions inside programs: the recorder is a rigid
designator of the history, so renaming it renames the world (the send axiom
relies on this).
"""
from __future__ import annotations

import re
from typing import Union

from .core import (
    Add,
    And,
    Assign,
    At,
    AcBox,
    AcDia,
    Box,
    ChanLit,
    ChanOf,
    ChannelSet,
    Choice,
    Concat,
    Const,
    Dia,
    Differential,
    Epsilon,
    EventTerm,
    Forall,
    LenOf,
    MacroAtom,
    Mul,
    Not,
    ODE,
    Parallel,
    Project,
    RRel,
    RVar,
    RandomAssign,
    Receive,
    Seq,
    Send,
    Star,
    TRel,
    TVar,
    Test,
    TimeOf,
    ValOf,
    is_program,
    is_real_term,
    is_trace_term,
)
from .analysis import bv, fv, mbv


class SortMismatch(Exception):
    pass


class InadmissibleInModality(Exception):
    pass


class NameClash(Exception):
    pass


class NotQuantifierBound(Exception):
    pass


# ---------------------------------------------------------------------------
# fresh names

_SUFFIX = re.compile(r"^(.*?)_(\d+)$")


def fresh(kind: str, avoid, base: str = None):
    """Deterministic fresh variable of the given sort ('real' | 'trace').

    `avoid` is a collection of variables or names; the result's name is not
    among them.  Counter-suffix scheme: base, base_1, base_2, ...  For real
    variables a primed base yields a primed result.
    """
    names = set()
    for a in avoid:
        names.add(a.name if hasattr(a, "name") else str(a))
    if base is None:
        base = "h" if kind == "trace" else "x"
    primed = kind == "real" and base.endswith("'")
    if primed:
        base = base[:-1]
    m = _SUFFIX.match(base)
    stem, start = (m.group(1), int(m.group(2))) if m else (base, 0)

    def mk(name):
        return TVar(name) if kind == "trace" else RVar(name, primed)

    i = start
    while True:
        cand = stem if i == 0 else "%s_%d" % (stem, i)
        if (cand + ("'" if primed else "")) not in names:
            return mk(cand)
        i += 1


def fresh_like(v, avoid):
    """Fresh variable of the same sort, derived from v's name."""
    if isinstance(v, TVar):
        return fresh("trace", avoid, v.name)
    return fresh("real", avoid, v.name)


def names_of(e) -> set:
    """All names occurring in e (free, bound, recorders), as strings."""
    from .core import all_names

    rv, tv, _ = all_names(e)
    return {v.name for v in rv} | {v.name for v in tv}


# ---------------------------------------------------------------------------
# substitution


def substitute(e, v, r):
    """Replace every free occurrence of variable v in e by the term r."""
    if isinstance(v, RVar):
        if not is_real_term(r):
            raise SortMismatch("substituting real variable %s by trace term" % v.name)
    elif isinstance(v, TVar):
        if not is_trace_term(r):
            raise SortMismatch("substituting trace variable %s by real term" % v.name)
    else:
        raise SortMismatch("not a variable: %r" % (v,))
    return _subst(e, v, r, fv(r))


def _subst(e, v, r, fvr):
    if isinstance(e, (RVar, TVar)):
        return r if e == v else e
    if isinstance(e, (Const, Epsilon, ChanLit)):
        return e
    if isinstance(e, Add):
        return Add(_subst(e.left, v, r, fvr), _subst(e.right, v, r, fvr))
    if isinstance(e, Mul):
        return Mul(_subst(e.left, v, r, fvr), _subst(e.right, v, r, fvr))
    if isinstance(e, Differential):
        return Differential(_subst(e.poly, v, r, fvr))
    if isinstance(e, ChanOf):
        return ChanOf(_subst(e.trace, v, r, fvr))
    if isinstance(e, ValOf):
        return ValOf(_subst(e.trace, v, r, fvr))
    if isinstance(e, TimeOf):
        return TimeOf(_subst(e.trace, v, r, fvr))
    if isinstance(e, LenOf):
        return LenOf(_subst(e.trace, v, r, fvr))
    if isinstance(e, EventTerm):
        return EventTerm(e.chan, _subst(e.value, v, r, fvr), _subst(e.stamp, v, r, fvr))
    if isinstance(e, Concat):
        return Concat(_subst(e.left, v, r, fvr), _subst(e.right, v, r, fvr))
    if isinstance(e, Project):
        return Project(_subst(e.trace, v, r, fvr), e.chans)
    if isinstance(e, At):
        return At(_subst(e.trace, v, r, fvr), _subst(e.index, v, r, fvr))
    if isinstance(e, (RRel, TRel)):
        cls = type(e)
        return cls(e.op, _subst(e.left, v, r, fvr), _subst(e.right, v, r, fvr))
    if isinstance(e, Not):
        return Not(_subst(e.body, v, r, fvr))
    if isinstance(e, And):
        return And(_subst(e.left, v, r, fvr), _subst(e.right, v, r, fvr))
    if isinstance(e, MacroAtom):
        return MacroAtom(e.name, tuple(_subst(a, v, r, fvr) for a in e.args))
    if isinstance(e, Forall):
        if e.var == v:
            return e
        if v not in fv(e.body):
            return e
        if e.var in fvr:
            nv = fresh_like(e.var, names_of(e) | {x.name for x in fvr} | {v.name})
            body = _subst(e.body, e.var, nv, frozenset({nv}))
            return Forall(nv, _subst(body, v, r, fvr))
        return Forall(e.var, _subst(e.body, v, r, fvr))
    if isinstance(e, (Box, Dia)):
        cls = type(e)
        prog = _subst_prog(e.prog, v, r, fvr)
        return cls(prog, _subst_under(e.post, e.prog, v, r, fvr))
    if isinstance(e, (AcBox, AcDia)):
        cls = type(e)
        prog = _subst_prog(e.prog, v, r, fvr)
        assume = _subst_under(e.assume, e.prog, v, r, fvr, contract=True)
        commit = _subst_under(e.commit, e.prog, v, r, fvr, contract=True)
        post = _subst_under(e.post, e.prog, v, r, fvr)
        return cls(prog, assume, commit, post)
    if is_program(e):
        return _subst_prog(e, v, r, fvr)
    raise TypeError("not an expression: %r" % (e,))


def _subst_under(body, prog, v, r, fvr, contract=False):
    """Substitute inside a formula scoped by a program binder."""
    if v not in fv(body):
        if not isinstance(v, TVar) or v not in bv(prog):
            return body
    captured = fvr & bv(prog)
    occurs = v in fv(body)
    if isinstance(v, TVar):
        # recorder occurrences stay substitutable (Remark-2.1 reading)
        if occurs and captured:
            raise InadmissibleInModality(
                "replacement reads %s bound by the program"
                % sorted(x.name for x in captured)[0]
            )
        return _subst(body, v, r, fvr)
    bound = bv(prog)
    if v in bound:
        if v in frozenset(x for x in mbv(prog) if isinstance(x, RVar)):
            return body
        if occurs:
            raise InadmissibleInModality(
                "variable %s is bound on some but not all paths of the program" % v.name
            )
        return body
    if occurs and captured:
        raise InadmissibleInModality(
            "replacement reads %s bound by the program" % sorted(x.name for x in captured)[0]
        )
    return _subst(body, v, r, fvr)


def _subst_prog(p, v, r, fvr):
    if isinstance(p, Assign):
        return Assign(p.var, _subst(p.term, v, r, fvr))
    if isinstance(p, RandomAssign):
        return p
    if isinstance(p, Test):
        return Test(_subst(p.cond, v, r, fvr))
    if isinstance(p, ODE):
        odebound = bv(p)
        if v in odebound:
            return p
        if fvr & odebound and v in fv(p):
            raise InadmissibleInModality(
                "replacement reads a variable bound by the continuous evolution"
            )
        return ODE(tuple((x, _subst(q, v, r, fvr)) for x, q in p.eqs), _subst(p.domain, v, r, fvr))
    if isinstance(p, Seq):
        left = _subst_prog(p.left, v, r, fvr)
        right = _prog_under(p.right, p.left, v, r, fvr)
        return Seq(left, right)
    if isinstance(p, Choice):
        return Choice(_subst_prog(p.left, v, r, fvr), _subst_prog(p.right, v, r, fvr))
    if isinstance(p, Star):
        if isinstance(v, RVar) and v in bv(p.body):
            if v in fv(p.body):
                raise InadmissibleInModality(
                    "variable %s is read and written across loop iterations" % v.name
                )
            return p
        if fvr & bv(p.body) and v in fv(p.body):
            raise InadmissibleInModality("replacement captured by loop body binder")
        return Star(_subst_prog(p.body, v, r, fvr))
    if isinstance(p, Send):
        rec = p.recorder
        if isinstance(v, TVar) and rec == v:
            rec = _as_recorder(r, v)
        return Send(p.chan, rec, _subst(p.term, v, r, fvr))
    if isinstance(p, Receive):
        rec = p.recorder
        if isinstance(v, TVar) and rec == v:
            rec = _as_recorder(r, v)
        return Receive(p.chan, rec, p.var)
    if isinstance(p, Parallel):
        return Parallel(_subst_prog(p.left, v, r, fvr), _subst_prog(p.right, v, r, fvr))
    raise TypeError("not a program: %r" % (p,))


def _prog_under(b, a, v, r, fvr):
    """Substitute in the continuation b of a sequence a; b."""
    if isinstance(v, RVar) and v in bv(a):
        if v in frozenset(x for x in mbv(a) if isinstance(x, RVar)):
            return b
        if v in fv(b):
            raise InadmissibleInModality(
                "variable %s is bound on some but not all paths before its use" % v.name
            )
        return b
    if fvr & bv(a) and v in fv(b):
        raise InadmissibleInModality(
            "replacement reads %s bound earlier in the sequence"
            % sorted(x.name for x in (fvr & bv(a)))[0]
        )
    return _subst_prog(b, v, r, fvr)


def _as_recorder(r, v):
    if isinstance(r, TVar):
        return r
    raise InadmissibleInModality(
        "recorder %s can only be renamed to a trace variable" % v.name
    )


# ---------------------------------------------------------------------------
# bound renaming


def rename_bound(e, old, new):
    """Alpha-rename a quantifier binder; program binders are rejected."""
    if type(old) is not type(new):
        raise SortMismatch("renaming %r to a different sort" % (old,))
    if new.name in names_of(e):
        raise NameClash(new.name)
    found = _rename(e, old, new)
    if not found[1]:
        raise NotQuantifierBound(old.name)
    return found[0]


def _rename(e, old, new):
    if isinstance(e, Forall) and e.var == old:
        return Forall(new, _subst(e.body, old, new, frozenset({new}))), True
    if isinstance(e, (RVar, TVar, Const, Epsilon, ChanLit)):
        return e, False
    if is_program(e) and isinstance(e, (Assign, RandomAssign, Receive, Send, ODE)):
        if old in bv(e):
            raise NotQuantifierBound(old.name)
        return e, False
    from .core import children

    hit = False
    parts = []
    for c in children(e):
        if isinstance(c, (RVar, TVar)):
            parts.append(c)
            continue
        nc, h = _rename(c, old, new)
        parts.append(nc)
        hit = hit or h
    return _rebuild(e, parts), hit


def _rebuild(e, parts):
    if isinstance(e, Add):
        return Add(*parts)
    if isinstance(e, Mul):
        return Mul(*parts)
    if isinstance(e, Differential):
        return Differential(*parts)
    if isinstance(e, ChanOf):
        return ChanOf(*parts)
    if isinstance(e, ValOf):
        return ValOf(*parts)
    if isinstance(e, TimeOf):
        return TimeOf(*parts)
    if isinstance(e, LenOf):
        return LenOf(*parts)
    if isinstance(e, EventTerm):
        return EventTerm(e.chan, *parts)
    if isinstance(e, Concat):
        return Concat(*parts)
    if isinstance(e, Project):
        return Project(parts[0], e.chans)
    if isinstance(e, At):
        return At(*parts)
    if isinstance(e, (RRel, TRel)):
        return type(e)(e.op, *parts)
    if isinstance(e, Not):
        return Not(*parts)
    if isinstance(e, And):
        return And(*parts)
    if isinstance(e, Forall):
        return Forall(*parts)
    if isinstance(e, (Box, Dia)):
        return type(e)(*parts)
    if isinstance(e, (AcBox, AcDia)):
        return type(e)(*parts)
    if isinstance(e, MacroAtom):
        return MacroAtom(e.name, tuple(parts))
    if isinstance(e, Test):
        return Test(*parts)
    if isinstance(e, ODE):
        n = len(e.eqs)
        eqs = tuple((parts[2 * i], parts[2 * i + 1]) for i in range(n))
        return ODE(eqs, parts[-1])
    if isinstance(e, (Seq, Choice, Parallel)):
        return type(e)(*parts)
    if isinstance(e, Star):
        return Star(*parts)
    if isinstance(e, Assign):
        return Assign(parts[0], parts[1])
    if isinstance(e, Send):
        return Send(e.chan, parts[0], parts[1])
    if isinstance(e, Receive):
        return Receive(e.chan, parts[0], parts[1])
    raise TypeError("cannot rebuild %r" % (e,))
