"""Abstract syntax: real/trace terms, communicating hybrid programs, formulas.

Everything here is an immutable tree of frozen dataclasses; structural
equality is the only notion of formula identity the kernel uses.  Derived
connectives are constructor sugar that normalizes into the core
{relations, !, &, forall, box, diamond, ac-box, ac-diamond}.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union


# ---------------------------------------------------------------------------
# variables and channels


@dataclass(frozen=True)
class RVar:
    """Real variable; `primed` marks the differential counterpart x'."""

    base: str
    primed: bool = False

    @property
    def name(self) -> str:
        return self.base + "'" if self.primed else self.base

    def prime(self) -> "RVar":
        if self.primed:
            raise ValueError("no double priming: %s" % self.name)
        return RVar(self.base, True)

    def unprime(self) -> "RVar":
        return RVar(self.base, False)

    def __repr__(self) -> str:
        return "RVar(%s)" % self.name


@dataclass(frozen=True)
class TVar:
    name: str

    def __repr__(self) -> str:
        return "TVar(%s)" % self.name


# the distinguished global-time pair and the reserved canonical recorder
GT = RVar("gt")
GTP = RVar("gt", True)
BOT_RECORDER = TVar("_h")

# id space: all-digit channel names denote their id directly; other names
# are mapped injectively above this offset.
_CHAN_ID_OFFSET = 10**12


@dataclass(frozen=True)
class Channel:
    """Channel name; ids form a countable namespace (naturals)."""

    name: str

    @property
    def ident(self) -> int:
        if self.name.isdigit():
            return int(self.name)
        return _CHAN_ID_OFFSET + int.from_bytes(self.name.encode("utf-8"), "big")

    def __repr__(self) -> str:
        return "Channel(%s)" % self.name


@dataclass(frozen=True)
class ChannelSet:
    """Finite or cofinite set of channels; cofinite stores the complement."""

    members: frozenset
    cofinite: bool = False

    @staticmethod
    def finite(chans) -> "ChannelSet":
        return ChannelSet(frozenset(chans), False)

    @staticmethod
    def cofin(chans) -> "ChannelSet":
        return ChannelSet(frozenset(chans), True)

    @staticmethod
    def empty() -> "ChannelSet":
        return ChannelSet(frozenset(), False)

    @staticmethod
    def all() -> "ChannelSet":
        return ChannelSet(frozenset(), True)

    def __contains__(self, ch: Channel) -> bool:
        return (ch in self.members) != self.cofinite

    def complement(self) -> "ChannelSet":
        return ChannelSet(self.members, not self.cofinite)

    def union(self, other: "ChannelSet") -> "ChannelSet":
        if not self.cofinite and not other.cofinite:
            return ChannelSet(self.members | other.members, False)
        if self.cofinite and other.cofinite:
            return ChannelSet(self.members & other.members, True)
        fin, cof = (self, other) if other.cofinite else (other, self)
        return ChannelSet(cof.members - fin.members, True)

    def intersect(self, other: "ChannelSet") -> "ChannelSet":
        return self.union_dual(other)

    def union_dual(self, other: "ChannelSet") -> "ChannelSet":
        return self.complement().union(other.complement()).complement()

    def difference(self, other: "ChannelSet") -> "ChannelSet":
        return self.intersect(other.complement())

    def is_empty(self) -> bool:
        return not self.cofinite and not self.members

    def is_finite(self) -> bool:
        return not self.cofinite

    def issubset(self, other: "ChannelSet") -> bool:
        return self.difference(other).is_empty()

    def sorted_members(self):
        return sorted(self.members, key=lambda c: c.name)

    def __repr__(self) -> str:
        names = ",".join(c.name for c in self.sorted_members())
        return ("~{%s}" if self.cofinite else "{%s}") % names


# ---------------------------------------------------------------------------
# real terms


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __repr__(self) -> str:
        return "Const(%s)" % self.value


@dataclass(frozen=True)
class Add:
    left: "RealTerm"
    right: "RealTerm"


@dataclass(frozen=True)
class Mul:
    left: "RealTerm"
    right: "RealTerm"


@dataclass(frozen=True)
class Differential:
    """(p)' for a polynomial p over real variables."""

    poly: "RealTerm"


@dataclass(frozen=True)
class ChanOf:
    trace: "TraceTerm"


@dataclass(frozen=True)
class ValOf:
    trace: "TraceTerm"


@dataclass(frozen=True)
class TimeOf:
    trace: "TraceTerm"


@dataclass(frozen=True)
class LenOf:
    trace: "TraceTerm"


@dataclass(frozen=True)
class ChanLit:
    """A channel name used as a real term (its numeric id)."""

    chan: Channel


# ---------------------------------------------------------------------------
# trace terms


@dataclass(frozen=True)
class Epsilon:
    pass


@dataclass(frozen=True)
class EventTerm:
    chan: Channel
    value: "RealTerm"
    stamp: "RealTerm"


@dataclass(frozen=True)
class Concat:
    left: "TraceTerm"
    right: "TraceTerm"


@dataclass(frozen=True)
class Project:
    trace: "TraceTerm"
    chans: ChannelSet


@dataclass(frozen=True)
class At:
    trace: "TraceTerm"
    index: "RealTerm"


RealTerm = Union[RVar, Const, Add, Mul, Differential, ChanOf, ValOf, TimeOf, LenOf, ChanLit]
TraceTerm = Union[TVar, Epsilon, EventTerm, Concat, Project, At]
Term = Union[RealTerm, TraceTerm]

EPS = Epsilon()


def is_trace_term(t) -> bool:
    return isinstance(t, (TVar, Epsilon, EventTerm, Concat, Project, At))


def is_real_term(t) -> bool:
    return isinstance(
        t, (RVar, Const, Add, Mul, Differential, ChanOf, ValOf, TimeOf, LenOf, ChanLit)
    )


def is_polynomial(t) -> bool:
    """Membership in the program subgrammar Q[RVar]."""
    if isinstance(t, (RVar, Const)):
        return True
    if isinstance(t, (Add, Mul)):
        return is_polynomial(t.left) and is_polynomial(t.right)
    return False


# ---------------------------------------------------------------------------
# programs


@dataclass(frozen=True)
class Assign:
    var: RVar
    term: "RealTerm"


@dataclass(frozen=True)
class RandomAssign:
    var: RVar


@dataclass(frozen=True)
class Test:
    cond: "Formula"


@dataclass(frozen=True)
class ODE:
    """{x1'=p1, ..., xn'=pn & domain}; equations pair unprimed vars with rhs."""

    eqs: tuple  # tuple[(RVar, RealTerm), ...]
    domain: "Formula"


@dataclass(frozen=True)
class Seq:
    left: "Program"
    right: "Program"


@dataclass(frozen=True)
class Choice:
    left: "Program"
    right: "Program"


@dataclass(frozen=True)
class Star:
    body: "Program"


@dataclass(frozen=True)
class Send:
    chan: Channel
    recorder: TVar
    term: "RealTerm"


@dataclass(frozen=True)
class Receive:
    chan: Channel
    recorder: TVar
    var: RVar


@dataclass(frozen=True)
class Parallel:
    left: "Program"
    right: "Program"


Program = Union[
    Assign, RandomAssign, Test, ODE, Seq, Choice, Star, Send, Receive, Parallel
]


# ---------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class RRel:
    """Real relation, op in {'=', '>='}."""

    op: str
    left: "RealTerm"
    right: "RealTerm"


@dataclass(frozen=True)
class TRel:
    """Trace relation, op in {'=', '<='} ('<=' is the prefix order)."""

    op: str
    left: "TraceTerm"
    right: "TraceTerm"


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall:
    var: Union[RVar, TVar]
    body: "Formula"


@dataclass(frozen=True)
class Box:
    prog: "Program"
    post: "Formula"


@dataclass(frozen=True)
class Dia:
    prog: "Program"
    post: "Formula"


@dataclass(frozen=True)
class AcBox:
    prog: "Program"
    assume: "Formula"
    commit: "Formula"
    post: "Formula"


@dataclass(frozen=True)
class AcDia:
    prog: "Program"
    assume: "Formula"
    commit: "Formula"
    post: "Formula"


@dataclass(frozen=True)
class MacroAtom:
    """Reserved uninterpreted predicate (#nat, #goedel, #slice)."""

    name: str
    args: tuple


Formula = Union[RRel, TRel, Not, And, Forall, Box, Dia, AcBox, AcDia, MacroAtom]
Expression = Union[Term, Program, Formula]

MACRO_NAMES = {"nat": 1, "goedel": 4, "slice": 3}


def is_formula(e) -> bool:
    return isinstance(e, (RRel, TRel, Not, And, Forall, Box, Dia, AcBox, AcDia, MacroAtom))


def is_program(e) -> bool:
    return isinstance(
        e, (Assign, RandomAssign, Test, ODE, Seq, Choice, Star, Send, Receive, Parallel)
    )


# ---------------------------------------------------------------------------
# constructor sugar (normalizes to the core)


def num(x) -> Const:
    return Const(Fraction(x))


ZERO = num(0)
ONE = num(1)


def neg(t: "RealTerm") -> "RealTerm":
    if isinstance(t, Const):
        return Const(-t.value)
    return Mul(Const(Fraction(-1)), t)


def sub(l: "RealTerm", r: "RealTerm") -> "RealTerm":
    return Add(l, neg(r))


def TT() -> Formula:
    return RRel("=", ZERO, ZERO)


def FF() -> Formula:
    return Not(TT())


def Eq(l, r) -> Formula:
    if is_trace_term(l) or is_trace_term(r):
        return TRel("=", l, r)
    return RRel("=", l, r)


def Neq(l, r) -> Formula:
    return Not(Eq(l, r))


def Ge(l, r) -> Formula:
    return RRel(">=", l, r)


def Le(l, r) -> Formula:
    return RRel(">=", r, l)


def Lt(l, r) -> Formula:
    return Not(RRel(">=", l, r))


def Gt(l, r) -> Formula:
    return Not(RRel(">=", r, l))


def Prefix(l, r) -> Formula:
    return TRel("<=", l, r)


def RevPrefix(l, r) -> Formula:
    """l >= r on traces: r is a prefix of l."""
    return TRel("<=", r, l)


def StrictPrefix(l, r) -> Formula:
    return And(TRel("<=", l, r), Not(TRel("=", l, r)))


def Or(l: Formula, r: Formula) -> Formula:
    return Not(And(Not(l), Not(r)))


def Imp(l: Formula, r: Formula) -> Formula:
    return Not(And(l, Not(r)))


def Iff(l: Formula, r: Formula) -> Formula:
    return And(Imp(l, r), Imp(r, l))


def Exists(v, body: Formula) -> Formula:
    return Not(Forall(v, Not(body)))


def and_all(fs) -> Formula:
    fs = list(fs)
    if not fs:
        return TT()
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def or_all(fs) -> Formula:
    fs = list(fs)
    if not fs:
        return FF()
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


def forall_all(vs, body: Formula) -> Formula:
    for v in reversed(list(vs)):
        body = Forall(v, body)
    return body


def exists_all(vs, body: Formula) -> Formula:
    for v in reversed(list(vs)):
        body = Exists(v, body)
    return body


SKIP = Test(TT())


def if_then(cond: Formula, prog: Program) -> Program:
    """if (cond) prog == ?cond; prog ++ ?!cond."""
    return Choice(Seq(Test(cond), prog), Test(Not(cond)))


# ---------------------------------------------------------------------------
# generic traversal helpers


def children(e):
    """Immediate sub-expressions (terms, formulas, programs) of a node."""
    if isinstance(e, (RVar, TVar, Const, Epsilon, ChanLit)):
        return ()
    if isinstance(e, (Add, Mul, Concat)):
        return (e.left, e.right)
    if isinstance(e, Differential):
        return (e.poly,)
    if isinstance(e, (ChanOf, ValOf, TimeOf, LenOf)):
        return (e.trace,)
    if isinstance(e, EventTerm):
        return (e.value, e.stamp)
    if isinstance(e, Project):
        return (e.trace,)
    if isinstance(e, At):
        return (e.trace, e.index)
    if isinstance(e, Assign):
        return (e.var, e.term)
    if isinstance(e, RandomAssign):
        return (e.var,)
    if isinstance(e, Test):
        return (e.cond,)
    if isinstance(e, ODE):
        out = []
        for x, p in e.eqs:
            out.append(x)
            out.append(p)
        out.append(e.domain)
        return tuple(out)
    if isinstance(e, (Seq, Choice, Parallel)):
        return (e.left, e.right)
    if isinstance(e, Star):
        return (e.body,)
    if isinstance(e, Send):
        return (e.recorder, e.term)
    if isinstance(e, Receive):
        return (e.recorder, e.var)
    if isinstance(e, (RRel, TRel)):
        return (e.left, e.right)
    if isinstance(e, Not):
        return (e.body,)
    if isinstance(e, And):
        return (e.left, e.right)
    if isinstance(e, Forall):
        return (e.var, e.body)
    if isinstance(e, (Box, Dia)):
        return (e.prog, e.post)
    if isinstance(e, (AcBox, AcDia)):
        return (e.prog, e.assume, e.commit, e.post)
    if isinstance(e, MacroAtom):
        return e.args
    raise TypeError("not an expression: %r" % (e,))


def all_names(e):
    """All variable names (free or bound) and channels occurring in e."""
    rvars, tvars, chans = set(), set(), set()

    def walk(n):
        if isinstance(n, RVar):
            rvars.add(n)
        elif isinstance(n, TVar):
            tvars.add(n)
        elif isinstance(n, (Send, Receive)):
            chans.add(n.chan)
        elif isinstance(n, EventTerm):
            chans.add(n.chan)
        elif isinstance(n, ChanLit):
            chans.add(n.chan)
        elif isinstance(n, Project):
            chans.update(n.chans.members)
        for c in children(n):
            walk(c)

    walk(e)
    return rvars, tvars, chans


def program_vars(p: Program):
    """V(p): every variable occurring in p (free or bound, incl. primes)."""
    rvars, tvars, _ = all_names(p)
    return rvars, tvars


def normalize(e):
    """Identity on core nodes; exists so idempotence is a testable property."""
    if isinstance(e, (RVar, TVar, Const, Epsilon, ChanLit)):
        return e
    if isinstance(e, Add):
        return Add(normalize(e.left), normalize(e.right))
    if isinstance(e, Mul):
        return Mul(normalize(e.left), normalize(e.right))
    if isinstance(e, Differential):
        return Differential(normalize(e.poly))
    if isinstance(e, ChanOf):
        return ChanOf(normalize(e.trace))
    if isinstance(e, ValOf):
        return ValOf(normalize(e.trace))
    if isinstance(e, TimeOf):
        return TimeOf(normalize(e.trace))
    if isinstance(e, LenOf):
        return LenOf(normalize(e.trace))
    if isinstance(e, EventTerm):
        return EventTerm(e.chan, normalize(e.value), normalize(e.stamp))
    if isinstance(e, Concat):
        return Concat(normalize(e.left), normalize(e.right))
    if isinstance(e, Project):
        return Project(normalize(e.trace), e.chans)
    if isinstance(e, At):
        return At(normalize(e.trace), normalize(e.index))
    if isinstance(e, Assign):
        return Assign(e.var, normalize(e.term))
    if isinstance(e, RandomAssign):
        return e
    if isinstance(e, Test):
        return Test(normalize(e.cond))
    if isinstance(e, ODE):
        return ODE(tuple((x, normalize(p)) for x, p in e.eqs), normalize(e.domain))
    if isinstance(e, Seq):
        return Seq(normalize(e.left), normalize(e.right))
    if isinstance(e, Choice):
        return Choice(normalize(e.left), normalize(e.right))
    if isinstance(e, Star):
        return Star(normalize(e.body))
    if isinstance(e, (Send, Receive)):
        return e if isinstance(e, Receive) else Send(e.chan, e.recorder, normalize(e.term))
    if isinstance(e, Parallel):
        return Parallel(normalize(e.left), normalize(e.right))
    if isinstance(e, RRel):
        return RRel(e.op, normalize(e.left), normalize(e.right))
    if isinstance(e, TRel):
        return TRel(e.op, normalize(e.left), normalize(e.right))
    if isinstance(e, Not):
        return Not(normalize(e.body))
    if isinstance(e, And):
        return And(normalize(e.left), normalize(e.right))
    if isinstance(e, Forall):
        return Forall(e.var, normalize(e.body))
    if isinstance(e, Box):
        return Box(normalize(e.prog), normalize(e.post))
    if isinstance(e, Dia):
        return Dia(normalize(e.prog), normalize(e.post))
    if isinstance(e, AcBox):
        return AcBox(normalize(e.prog), normalize(e.assume), normalize(e.commit), normalize(e.post))
    if isinstance(e, AcDia):
        return AcDia(normalize(e.prog), normalize(e.assume), normalize(e.commit), normalize(e.post))
    if isinstance(e, MacroAtom):
        return MacroAtom(e.name, tuple(normalize(a) for a in e.args))
    raise TypeError("not an expression: %r" % (e,))


# ---------------------------------------------------------------------------
# hash caching: formula trees get large and are used as dict keys constantly;
# cache each node's hash and use it to short-circuit equality


def _install_node_cache(cls):
    orig_hash = cls.__hash__
    orig_eq = cls.__eq__

    def __hash__(self, _orig=orig_hash):
        try:
            return object.__getattribute__(self, "_hc")
        except AttributeError:
            h = _orig(self)
            object.__setattr__(self, "_hc", h)
            return h

    def __eq__(self, other, _orig=orig_eq, _cls=cls):
        if self is other:
            return True
        if type(other) is not _cls:
            return NotImplemented
        if hash(self) != hash(other):
            return False
        return _orig(self, other)

    cls.__hash__ = __hash__
    cls.__eq__ = __eq__


for _cls in (
    RVar, TVar, Channel, ChannelSet, Const, Add, Mul, Differential, ChanOf,
    ValOf, TimeOf, LenOf, ChanLit, Epsilon, EventTerm, Concat, Project, At,
    Assign, RandomAssign, Test, ODE, Seq, Choice, Star, Send, Receive,
    Parallel, RRel, TRel, Not, And, Forall, Box, Dia, AcBox, AcDia, MacroAtom,
):
    _install_node_cache(_cls)
