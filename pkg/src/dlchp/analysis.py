"""Static semantics: computable overapproximations of free/bound names.

All analyses are syntactic overapproximations of the (uncomputable) precise
sets, fixed by the structural recursions below.  The load-bearing choices:

* FV of a modality removes only the *must-bound* real variables of the
  program from the postcondition (may-bound branches keep the variable
  free); trace variables are never removed because a recorder's final
  value extends its initial value.
* Whole-trace-variable occurrences report the cofinite all-channels set;
  projection nodes intersect with the projected set.
* FV(alpha || beta) includes {gt, gt'}: the merge reads them for the
  final-state agreement.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

from .core import (
    GT,
    GTP,
    Add,
    And,
    Assign,
    At,
    AcBox,
    AcDia,
    Box,
    ChanLit,
    ChanOf,
    Channel,
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
    Program,
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
    children,
    is_formula,
    is_program,
    is_polynomial,
)


@dataclass(frozen=True)
class FcSet:
    """Finite or cofinite set over hashable elements."""

    members: frozenset
    cofinite: bool = False

    @staticmethod
    def finite(xs) -> "FcSet":
        return FcSet(frozenset(xs), False)

    @staticmethod
    def all() -> "FcSet":
        return FcSet(frozenset(), True)

    def __contains__(self, x) -> bool:
        return (x in self.members) != self.cofinite

    def union(self, other: "FcSet") -> "FcSet":
        if not self.cofinite and not other.cofinite:
            return FcSet(self.members | other.members, False)
        if self.cofinite and other.cofinite:
            return FcSet(self.members & other.members, True)
        fin, cof = (self, other) if other.cofinite else (other, self)
        return FcSet(cof.members - fin.members, True)

    def remove(self, x) -> "FcSet":
        if self.cofinite:
            return FcSet(self.members | {x}, True)
        return FcSet(self.members - {x}, False)


@dataclass(frozen=True)
class NameSet:
    """Variables plus channels, each finite-or-cofinite."""

    vars: FcSet
    chans: ChannelSet

    @staticmethod
    def of(vars=(), chans: Optional[ChannelSet] = None) -> "NameSet":
        return NameSet(FcSet.finite(vars), chans if chans is not None else ChannelSet.empty())


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    span: SourceSpan

    def to_dict(self):
        return {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
            "span": {
                "file": self.span.file,
                "line": self.span.line,
                "column": self.span.column,
                "length": self.span.length,
            },
        }


_AST_SPAN = SourceSpan("<ast>", 0, 0, 1)


# ---------------------------------------------------------------------------
# bound variables / channels


@lru_cache(maxsize=None)
def bv(prog) -> frozenset:
    if isinstance(prog, (Assign, RandomAssign)):
        return frozenset({prog.var})
    if isinstance(prog, Test):
        return frozenset()
    if isinstance(prog, ODE):
        out = set()
        for x, _ in prog.eqs:
            out.add(x)
            out.add(x.prime())
        return frozenset(out)
    if isinstance(prog, (Seq, Choice, Parallel)):
        return bv(prog.left) | bv(prog.right)
    if isinstance(prog, Star):
        return bv(prog.body)
    if isinstance(prog, Send):
        return frozenset({prog.recorder})
    if isinstance(prog, Receive):
        return frozenset({prog.var, prog.recorder})
    raise TypeError("not a program: %r" % (prog,))


@lru_cache(maxsize=None)
def mbv(prog) -> frozenset:
    """Must-bound variables: written on every terminating path."""
    if isinstance(prog, (Assign, RandomAssign, Send, Receive, ODE)):
        return bv(prog)
    if isinstance(prog, Test):
        return frozenset()
    if isinstance(prog, (Seq, Parallel)):
        return mbv(prog.left) | mbv(prog.right)
    if isinstance(prog, Choice):
        return mbv(prog.left) & mbv(prog.right)
    if isinstance(prog, Star):
        return frozenset()
    raise TypeError("not a program: %r" % (prog,))


@lru_cache(maxsize=None)
def channels(prog) -> ChannelSet:
    """CN: channels written by the program."""
    if isinstance(prog, (Send, Receive)):
        return ChannelSet.finite({prog.chan})
    if isinstance(prog, (Seq, Choice, Parallel)):
        return channels(prog.left).union(channels(prog.right))
    if isinstance(prog, Star):
        return channels(prog.body)
    return ChannelSet.empty()


def bound_vars(prog) -> NameSet:
    return NameSet(FcSet.finite(bv(prog)), channels(prog))


# ---------------------------------------------------------------------------
# free variables


@lru_cache(maxsize=None)
def fv(e) -> frozenset:
    if isinstance(e, (RVar, TVar)):
        return frozenset({e})
    if isinstance(e, (Const, Epsilon, ChanLit)):
        return frozenset()
    if isinstance(e, Differential):
        base = fv(e.poly)
        return base | frozenset(x.prime() for x in base if isinstance(x, RVar) and not x.primed)
    if isinstance(e, Forall):
        return fv(e.body) - {e.var}
    if isinstance(e, (Box, Dia)):
        return fv(e.prog) | _minus_mbv(fv(e.post), e.prog)
    if isinstance(e, (AcBox, AcDia)):
        return (
            fv(e.prog)
            | fv(e.assume)
            | fv(e.commit)
            | _minus_mbv(fv(e.post), e.prog)
        )
    if isinstance(e, Assign):
        return fv(e.term)
    if isinstance(e, RandomAssign):
        return frozenset()
    if isinstance(e, Test):
        return fv(e.cond)
    if isinstance(e, ODE):
        out = set()
        for x, p in e.eqs:
            out.add(x)
            out |= fv(p)
        out |= fv(e.domain)
        return frozenset(out)
    if isinstance(e, Seq):
        return fv(e.left) | _minus_mbv(fv(e.right), e.left)
    if isinstance(e, (Choice,)):
        return fv(e.left) | fv(e.right)
    if isinstance(e, Star):
        return fv(e.body)
    if isinstance(e, Send):
        return fv(e.term) | {GT}
    if isinstance(e, Receive):
        return frozenset({GT})
    if isinstance(e, Parallel):
        return fv(e.left) | fv(e.right) | {GT, GTP}
    out = frozenset()
    for c in children(e):
        out |= fv(c)
    return out


def _minus_mbv(vars_: frozenset, prog) -> frozenset:
    cut = frozenset(x for x in mbv(prog) if isinstance(x, RVar))
    return vars_ - cut


# ---------------------------------------------------------------------------
# accessed channels CN_V


def accessed_channels(e, through=None) -> ChannelSet:
    """Channels that can influence e via the trace variables in `through`
    (None means all trace variables)."""
    if through is not None and not isinstance(through, FcSet):
        through = FcSet.finite(through)
    return _acc(e, through if through is not None else FcSet.all())


def _acc(e, via: FcSet) -> ChannelSet:
    if isinstance(e, TVar):
        return ChannelSet.all() if e in via else ChannelSet.empty()
    if isinstance(e, (RVar, Const, Epsilon, ChanLit)):
        return ChannelSet.empty()
    if isinstance(e, Project):
        return _acc(e.trace, via).intersect(e.chans)
    if isinstance(e, Forall) and isinstance(e.var, TVar):
        return _acc(e.body, via.remove(e.var))
    if is_program(e):
        return ChannelSet.empty()
    out = ChannelSet.empty()
    for c in children(e):
        if isinstance(c, (RVar, TVar)) and is_program(e):
            continue
        out = out.union(_acc_child(c, via))
    return out


def _acc_child(c, via: FcSet) -> ChannelSet:
    if isinstance(c, (RVar, Channel)):
        return ChannelSet.empty()
    return _acc(c, via)


def free_vars(e) -> NameSet:
    """SFV plus the channels accessed through any trace variable."""
    chans = channels(e) if is_program(e) else accessed_channels(e)
    return NameSet(FcSet.finite(fv(e)), chans)


def var_set(prog) -> frozenset:
    """V(prog): all variables occurring, free or bound."""
    out = set(fv(prog)) | set(bv(prog))
    return frozenset(out)


# ---------------------------------------------------------------------------
# well-formedness


def _recorders(prog) -> frozenset:
    return frozenset(v for v in bv(prog) if isinstance(v, TVar))


@lru_cache(maxsize=262144)
def _validate_node(n) -> tuple:
    local = []
    if isinstance(n, Parallel):
        shared = bv(n.left) & bv(n.right)
        bad = {v for v in shared if isinstance(v, RVar) and v not in (GT, GTP)}
        if bad:
            w = sorted(bad, key=lambda v: v.name)[0]
            local.append(
                Diagnostic(
                    "error",
                    "WF-PAR",
                    "parallel subprograms share bound state variable %s" % w.name,
                    _AST_SPAN,
                )
            )
    if is_program(n):
        recs = _recorders(n)
        if len(recs) > 1:
            names = ", ".join(sorted(v.name for v in recs))
            local.append(
                Diagnostic(
                    "error",
                    "WF-REC",
                    "program binds more than one trace variable: %s" % names,
                    _AST_SPAN,
                )
            )
    if isinstance(n, (AcBox, AcDia)):
        free = fv(n.assume) | fv(n.commit)
        bad = {
            v
            for v in free
            if not isinstance(v, TVar) and (v in bv(n.prog) or v in (GT, GTP))
        }
        if bad:
            w = sorted(bad, key=lambda v: v.name)[0]
            local.append(
                Diagnostic(
                    "error",
                    "WF-AC",
                    "assumption/commitment reads state variable %s of the program"
                    % w.name,
                    _AST_SPAN,
                )
            )
    out = tuple(local)
    for c in children(n):
        if isinstance(c, (RVar, TVar, Channel)):
            continue
        out = out + _validate_node(c)
    return out


def validate(e) -> list:
    """Checks parallel state-separation (WF-PAR), recorder uniqueness
    (WF-REC), and communicative well-formedness of ac-modalities (WF-AC)."""
    return list(_validate_node(e))


class MultipleRecorders(Exception):
    pass


def recorder(prog) -> TVar:
    """The unique trace variable the program appends to; the reserved
    canonical recorder if it binds none."""
    recs = _recorders(prog)
    if len(recs) > 1:
        raise MultipleRecorders(sorted(v.name for v in recs))
    if recs:
        return next(iter(recs))
    from .core import BOT_RECORDER

    return BOT_RECORDER


# ---------------------------------------------------------------------------
# noninterference (parallel injection side condition)


def check_noninterference(beta, assume, commit, post, alpha, rec: TVar):
    """True iff beta cannot influence the contract of [alpha || _]_{A,C} psi.

    Returns (ok, witness): witness is an offending variable or channel.
    """
    cn_alpha = channels(alpha)
    cn_beta = channels(beta)
    bv_beta = bv(beta)
    for chi in (assume, commit, post):
        for v in sorted(fv(chi) & bv_beta, key=lambda v: v.name):
            if isinstance(v, RVar) and v not in (GT, GTP):
                return False, v
            if isinstance(v, TVar) and v != rec:
                return False, v
        overlap = accessed_channels(chi, frozenset({rec})).intersect(cn_beta)
        bad = overlap.difference(cn_alpha)
        if not bad.is_empty():
            if bad.is_finite():
                return False, bad.sorted_members()[0]
            return False, bad
    return True, None


# ---------------------------------------------------------------------------
# fragment checks used by the parser and the kernel


def is_folra(f) -> bool:
    """First-order real arithmetic: no trace operators, no modalities."""
    if isinstance(f, RRel):
        return _poly_term(f.left) and _poly_term(f.right)
    if isinstance(f, Not):
        return is_folra(f.body)
    if isinstance(f, And):
        return is_folra(f.left) and is_folra(f.right)
    if isinstance(f, Forall):
        return isinstance(f.var, RVar) and is_folra(f.body)
    return False


def _poly_term(t) -> bool:
    return is_polynomial(t)


def is_com_fod(f) -> bool:
    """Base-logic fragment: first-order over all terms, with modalities only
    over pure continuous evolutions."""
    if isinstance(f, (RRel, TRel, MacroAtom)):
        return True
    if isinstance(f, Not):
        return is_com_fod(f.body)
    if isinstance(f, And):
        return is_com_fod(f.left) and is_com_fod(f.right)
    if isinstance(f, Forall):
        return is_com_fod(f.body)
    if isinstance(f, (Box, Dia)):
        return isinstance(f.prog, ODE) and is_com_fod(f.post)
    return False
