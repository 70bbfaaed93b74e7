"""Executable denotational semantics at desk scale.

Runs are (initial state, recorded trace, final state or bottom); run sets
are prefix-closed and total by construction.  Formula evaluation is strong
Kleene three-valued: U absorbs every budget effect, so T/F verdicts are
sound.  Diamonds decide T by witness; boxes decide F by witness; the
definite complements additionally require an untruncated run set.

Budget mode: with finite_domain=True the candidate sets are treated as the
*declared* domains (the decidable shadow used by the rendition and
strongest-promise agreement tests); quantifiers, x:=*, and receive then
range exactly over them.  Otherwise the trace domain never decides by
exhaustion.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional

from .core import (
    BOT_RECORDER,
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
    children,
    is_program,
    is_trace_term,
)
from .analysis import bv, channels, fv


# ---------------------------------------------------------------------------
# values


@dataclass(frozen=True)
class Event:
    chan: Channel
    value: Fraction
    stamp: Fraction


Trace = tuple  # tuple[Event, ...]


@dataclass(frozen=True)
class State:
    """Total valuation: unstored reals are 0, unstored traces are empty."""

    reals: tuple = ()
    traces: tuple = ()

    @staticmethod
    def make(reals=None, traces=None) -> "State":
        rs = tuple(sorted(((v, Fraction(c)) for v, c in (reals or {}).items() if Fraction(c) != 0), key=lambda p: p[0].name))
        ts = tuple(sorted(((v, tuple(tr)) for v, tr in (traces or {}).items() if tuple(tr)), key=lambda p: p[0].name))
        return State(rs, ts)

    def get_r(self, v: RVar) -> Fraction:
        for u, c in self.reals:
            if u == v:
                return c
        return Fraction(0)

    def get_t(self, v: TVar) -> Trace:
        for u, tr in self.traces:
            if u == v:
                return tr
        return ()

    def set(self, v, val) -> "State":
        if isinstance(v, RVar):
            items = [(u, c) for u, c in self.reals if u != v]
            if val != 0:
                items.append((v, val))
            return State(tuple(sorted(items, key=lambda p: p[0].name)), self.traces)
        items = [(u, tr) for u, tr in self.traces if u != v]
        if val:
            items.append((v, tuple(val)))
        return State(self.reals, tuple(sorted(items, key=lambda p: p[0].name)))

    def append(self, rec: Optional[TVar], tr: Trace) -> "State":
        if rec is None or not tr:
            return self
        return self.set(rec, self.get_t(rec) + tuple(tr))


EMPTY_STATE = State()


@dataclass(frozen=True)
class Run:
    init: State
    rec: Optional[TVar]
    trace: Trace
    final: Optional[State]  # None = unfinished


@dataclass(frozen=True)
class RunSet:
    runs: frozenset
    truncated: bool


@dataclass(frozen=True)
class Budget:
    loop: int = 2
    ode_grid: tuple = tuple(Fraction(n, 4) for n in range(0, 9))
    candidates: tuple = (Fraction(-2), Fraction(-1), Fraction(0), Fraction(1), Fraction(2))
    quant: Optional[tuple] = None
    trace_len: int = 3
    max_runs: int = 5000
    finite_domain: bool = False
    trace_candidates: Optional[tuple] = None
    extra_real: tuple = ()  # ((var-name, (values...)), ...)
    extra_trace: tuple = ()  # ((var-name, (traces...)), ...)

    def quant_candidates(self) -> tuple:
        return self.quant if self.quant is not None else self.candidates


# ---------------------------------------------------------------------------
# term evaluation


def eval_term(t, v: State):
    if isinstance(t, RVar):
        return v.get_r(t)
    if isinstance(t, TVar):
        return v.get_t(t)
    if isinstance(t, Const):
        return t.value
    if isinstance(t, ChanLit):
        return Fraction(t.chan.ident)
    if isinstance(t, Add):
        return eval_term(t.left, v) + eval_term(t.right, v)
    if isinstance(t, Mul):
        return eval_term(t.left, v) * eval_term(t.right, v)
    if isinstance(t, Differential):
        out = Fraction(0)
        for x in fv(t.poly):
            if isinstance(x, RVar) and not x.primed:
                out += v.get_r(x.prime()) * _dval(t.poly, x, v)[1]
        return out
    if isinstance(t, ChanOf):
        tr = eval_term(t.trace, v)
        return Fraction(tr[-1].chan.ident) if tr else Fraction(0)
    if isinstance(t, ValOf):
        tr = eval_term(t.trace, v)
        return tr[-1].value if tr else Fraction(0)
    if isinstance(t, TimeOf):
        tr = eval_term(t.trace, v)
        return tr[-1].stamp if tr else Fraction(0)
    if isinstance(t, LenOf):
        return Fraction(len(eval_term(t.trace, v)))
    if isinstance(t, Epsilon):
        return ()
    if isinstance(t, EventTerm):
        return (Event(t.chan, eval_term(t.value, v), eval_term(t.stamp, v)),)
    if isinstance(t, Concat):
        return eval_term(t.left, v) + eval_term(t.right, v)
    if isinstance(t, Project):
        return tuple(e for e in eval_term(t.trace, v) if e.chan in t.chans)
    if isinstance(t, At):
        tr = eval_term(t.trace, v)
        idx = eval_term(t.index, v)
        k = idx.numerator // idx.denominator  # floor
        if 0 <= k < len(tr):
            return (tr[k],)
        return ()
    raise TypeError("not a term: %r" % (t,))


def _dval(t, x: RVar, v: State):
    """(value, d/dx) of a polynomial at v, exactly."""
    if isinstance(t, Const):
        return t.value, Fraction(0)
    if isinstance(t, RVar):
        return v.get_r(t), Fraction(1 if t == x else 0)
    if isinstance(t, Add):
        a, da = _dval(t.left, x, v)
        b, db = _dval(t.right, x, v)
        return a + b, da + db
    if isinstance(t, Mul):
        a, da = _dval(t.left, x, v)
        b, db = _dval(t.right, x, v)
        return a * b, a * db + b * da
    raise TypeError("not a polynomial: %r" % (t,))


# ---------------------------------------------------------------------------
# three-valued helpers

T, F, U = "T", "F", "U"


def knot(a):
    return {T: F, F: T, U: U}[a]


def kand(*xs):
    if any(x == F for x in xs):
        return F
    if all(x == T for x in xs):
        return T
    return U


def kor(*xs):
    if any(x == T for x in xs):
        return T
    if all(x == F for x in xs):
        return F
    return U


class UnsupportedODE(Exception):
    pass


# ---------------------------------------------------------------------------
# evaluator


class Evaluator:
    def __init__(self, budget: Budget, macros: Optional[dict] = None, root=None):
        self.budget = budget
        self.macros = macros or {}
        self._runs_cache = {}
        self._eval_cache = {}
        self._pins = []
        self._quant_state = EMPTY_STATE
        self.candidates = budget.candidates
        if root is not None:
            self.enrich(root)

    def enrich(self, e):
        """Extend the candidate pool with constants occurring in e."""
        self._pins.append(e)
        consts = set(self.candidates)
        for c in _constants(e):
            consts.add(c)
        self.candidates = tuple(sorted(consts))

    # -- runs

    def runs(self, prog, v: State) -> RunSet:
        key = (id(prog), v)
        hit = self._runs_cache.get(key)
        if hit is not None:
            return hit
        self._pins.append(prog)
        out = self._runs(prog, v)
        out = _close(out.runs, v, out.truncated, self.budget.max_runs)
        self._runs_cache[key] = out
        return out

    def _rand_values(self):
        return self.candidates

    def _runs(self, prog, v: State) -> RunSet:
        b = self.budget
        if isinstance(prog, Assign):
            w = v.set(prog.var, eval_term(prog.term, v))
            return RunSet(frozenset({Run(v, None, (), w)}), False)
        if isinstance(prog, RandomAssign):
            runs = {Run(v, None, (), v.set(prog.var, c)) for c in self._rand_values()}
            return RunSet(frozenset(runs), not b.finite_domain)
        if isinstance(prog, Test):
            r = self.eval(prog.cond, v)
            if r == T:
                return RunSet(frozenset({Run(v, None, (), v)}), False)
            if r == F:
                return RunSet(frozenset(), False)
            return RunSet(frozenset(), True)
        if isinstance(prog, ODE):
            return self._runs_ode(prog, v)
        if isinstance(prog, Send):
            c = eval_term(prog.term, v)
            e = Event(prog.chan, c, v.get_r(GT))
            return RunSet(frozenset({Run(v, prog.recorder, (e,), v)}), False)
        if isinstance(prog, Receive):
            runs = set()
            for c in self._rand_values():
                w = v.set(prog.var, c)
                e = Event(prog.chan, c, w.get_r(GT))
                runs.add(Run(v, prog.recorder, (e,), w))
            return RunSet(frozenset(runs), not b.finite_domain)
        if isinstance(prog, Choice):
            l = self.runs(prog.left, v)
            r = self.runs(prog.right, v)
            return RunSet(l.runs | r.runs, l.truncated or r.truncated)
        if isinstance(prog, Seq):
            return self._runs_seq(prog.left, prog.right, v)
        if isinstance(prog, Star):
            return self._runs_star(prog.body, v)
        if isinstance(prog, Parallel):
            return self._runs_par(prog, v)
        raise TypeError("not a program: %r" % (prog,))

    def _runs_seq(self, a, bprog, v: State) -> RunSet:
        A = self.runs(a, v)
        out = set()
        trunc = A.truncated
        for r in A.runs:
            out.add(Run(r.init, r.rec, r.trace, None))
            if r.final is None:
                continue
            B = self.runs(bprog, r.final)
            trunc = trunc or B.truncated
            for s in B.runs:
                rec, tr = _concat(r.rec, r.trace, s.rec, s.trace)
                out.add(Run(r.init, rec, tr, s.final))
        return RunSet(frozenset(out), trunc)

    def _runs_star(self, body, v: State) -> RunSet:
        out = {Run(v, None, (), None), Run(v, None, (), v)}
        term_prev = {Run(v, None, (), v)}
        trunc = False
        for _ in range(self.budget.loop):
            new_term = set()
            added = False
            for r in term_prev:
                B = self.runs(body, r.final)
                trunc = trunc or B.truncated
                for s in B.runs:
                    rec, tr = _concat(r.rec, r.trace, s.rec, s.trace)
                    cand = Run(v, rec, tr, s.final)
                    low = Run(v, rec, tr, None)
                    if low not in out:
                        out.add(low)
                        added = True
                    if s.final is not None and cand not in out:
                        out.add(cand)
                        new_term.add(cand)
                        added = True
            if not added:
                return RunSet(frozenset(out), trunc)
            term_prev = new_term
        # one probe: bound hit while growth remained
        if term_prev:
            trunc = True
        return RunSet(frozenset(out), trunc)

    def _runs_par(self, prog: Parallel, v: State) -> RunSet:
        a, bp = prog.left, prog.right
        A = self.runs(a, v)
        B = self.runs(bp, v)
        ca, cb = channels(a), channels(bp)
        bva = bv(a)
        out = set()
        for ra in A.runs:
            for rb in B.runs:
                for tr in _shuffles(ra.trace, rb.trace, ca, cb):
                    if ra.final is None or rb.final is None:
                        final = None
                    elif ra.final.get_r(GT) != rb.final.get_r(GT) or ra.final.get_r(
                        GTP
                    ) != rb.final.get_r(GTP):
                        # parallel runs must agree on the global time pair
                        final = None
                    else:
                        final = _merge(ra.final, rb.final, bva)
                    out.add(Run(v, _rec_of(prog, ra, rb, tr), tr, final))
        return RunSet(frozenset(out), A.truncated or B.truncated)

    def _runs_ode(self, prog: ODE, v: State) -> RunSet:
        bound = set()
        for x, _ in prog.eqs:
            bound.add(x)
            bound.add(x.prime())
        for _, rhs in prog.eqs:
            if fv(rhs) & bound:
                raise UnsupportedODE(
                    "right-hand side reads a variable bound by the evolution"
                )
        rates = [(x, eval_term(rhs, v)) for x, rhs in prog.eqs]

        def sol(z: Fraction) -> State:
            w = v
            for x, c in rates:
                w = w.set(x, v.get_r(x) + z * c)
                w = w.set(x.prime(), c)
            return w

        grid = sorted(set(self.budget.ode_grid) | {Fraction(0)})
        runs = set()
        for d in grid:
            if d < 0:
                continue
            ok = T
            for z in grid:
                if 0 <= z <= d:
                    ok = kand(ok, self.eval(prog.domain, sol(z)))
                    if ok == F:
                        break
            if ok == T:
                runs.add(Run(v, None, (), sol(d)))
            elif ok == F:
                break
        return RunSet(frozenset(runs), True)

    # -- formulas

    def eval(self, f, v: State) -> str:
        key = (id(f), v)
        hit = self._eval_cache.get(key)
        if hit is not None:
            return hit
        self._pins.append(f)
        out = self._eval(f, v)
        self._eval_cache[key] = out
        return out

    def _eval(self, f, v: State) -> str:
        if isinstance(f, RRel):
            a, b = eval_term(f.left, v), eval_term(f.right, v)
            return T if (a == b if f.op == "=" else a >= b) else F
        if isinstance(f, TRel):
            a, b = eval_term(f.left, v), eval_term(f.right, v)
            if f.op == "=":
                return T if a == b else F
            return T if a == b[: len(a)] else F
        if isinstance(f, Not):
            return knot(self.eval(f.body, v))
        if isinstance(f, And):
            l = self.eval(f.left, v)
            if l == F:
                return F
            return kand(l, self.eval(f.right, v))
        if isinstance(f, Forall):
            return self._eval_forall(f, v)
        if isinstance(f, Box):
            return self._eval_box(f, v)
        if isinstance(f, Dia):
            return self._eval_dia(f, v)
        if isinstance(f, AcBox):
            return self._eval_acbox(f, v)
        if isinstance(f, AcDia):
            return self._eval_acdia(f, v)
        if isinstance(f, MacroAtom):
            hook = self.macros.get(f.name)
            if hook is None:
                return U
            return hook([eval_term(a, v) for a in f.args], v)
        raise TypeError("not a formula: %r" % (f,))

    def _eval_forall(self, f: Forall, v: State) -> str:
        if isinstance(f.var, RVar):
            cands = list(self.budget.quant_candidates())
            cands += [c for c in self.candidates if c not in cands]
            for name, extra in self.budget.extra_real:
                if name == f.var.name:
                    cands += [c for c in extra if c not in cands]
            exhaustive = self.budget.finite_domain
        else:
            cands = self._trace_candidates(f, v)
            for name, extra in self.budget.extra_trace:
                if name == f.var.name:
                    cands += [c for c in extra if c not in cands]
            exhaustive = self.budget.finite_domain and self.budget.trace_candidates is not None
        out = T
        for c in cands:
            r = self.eval(f.body, v.set(f.var, c))
            if r == F:
                return F
            out = kand(out, r)
        if not exhaustive:
            return U if out != F else F
        return out

    def _trace_candidates(self, f: Forall, v: State):
        """Empty trace, declared candidates, plus the values of the body's
        trace subterms (and their contiguous slices) at the current state."""
        cands = [()]
        if self.budget.trace_candidates is not None:
            cands += [t for t in self.budget.trace_candidates if t != ()]
        seen = set(cands)
        for sub in _trace_subterms(f.body, f.var):
            tr = eval_term(sub, v)
            for i in range(len(tr) + 1):
                for j in range(i, len(tr) + 1):
                    piece = tr[i:j]
                    if piece not in seen:
                        seen.add(piece)
                        cands.append(piece)
        return cands

    def _eval_box(self, f: Box, v: State) -> str:
        rs = self.runs(f.prog, v)
        out = T
        for r in rs.runs:
            if r.final is None:
                continue
            res = self.eval(f.post, r.final.append(r.rec, r.trace))
            if res == F:
                return F
            out = kand(out, res)
        if rs.truncated:
            return U if out != F else F
        return out

    def _eval_dia(self, f: Dia, v: State) -> str:
        rs = self.runs(f.prog, v)
        out = F
        for r in rs.runs:
            if r.final is None:
                continue
            res = self.eval(f.post, r.final.append(r.rec, r.trace))
            if res == T:
                return T
            out = kor(out, res)
        if rs.truncated:
            return U if out != T else T
        return out

    def _ac_run(self, f, r: Run, v: State):
        """(commit-clause, post-clause) satisfaction for one run."""
        pre_strict = T
        for k in range(len(r.trace)):
            pre_strict = kand(pre_strict, self.eval(f.assume, v.append(r.rec, r.trace[:k])))
            if pre_strict == F:
                break
        pre_all = kand(pre_strict, self.eval(f.assume, v.append(r.rec, r.trace)))
        commit_val = self.eval(f.commit, v.append(r.rec, r.trace))
        if r.final is None:
            post_val = None
        else:
            post_val = self.eval(f.post, r.final.append(r.rec, r.trace))
        return pre_strict, pre_all, commit_val, post_val

    def _eval_acbox(self, f: AcBox, v: State) -> str:
        rs = self.runs(f.prog, v)
        out = T
        for r in rs.runs:
            pre_strict, pre_all, commit_val, post_val = self._ac_run(f, r, v)
            ok = kor(knot(pre_strict), commit_val)
            if post_val is not None:
                ok = kand(ok, kor(knot(pre_all), post_val))
            if ok == F:
                return F
            out = kand(out, ok)
        if rs.truncated:
            return U if out != F else F
        return out

    def _eval_acdia(self, f: AcDia, v: State) -> str:
        rs = self.runs(f.prog, v)
        out = F
        for r in rs.runs:
            pre_strict, pre_all, commit_val, post_val = self._ac_run(f, r, v)
            ok = kand(pre_strict, commit_val)
            if post_val is not None:
                ok = kor(ok, kand(pre_all, post_val))
            if ok == T:
                return T
            out = kor(out, ok)
        if rs.truncated:
            return U if out != T else T
        return out


# evaluator helpers ---------------------------------------------------------


def _constants(e) -> set:
    out = set()

    def walk(n):
        if isinstance(n, Const):
            out.add(n.value)
            return
        if isinstance(n, (RVar, TVar)):
            return
        for c in children(n):
            if not isinstance(c, (RVar, TVar, Channel)):
                walk(c)

    walk(e)
    return out


def _trace_subterms(f, avoid_var) -> list:
    """Maximal trace subterms of f not containing the quantified variable."""
    out = []

    def ok(t):
        return avoid_var not in fv(t)

    def walk(n):
        if is_trace_term(n):
            if ok(n):
                out.append(n)
                return
        if isinstance(n, (RVar, TVar)):
            return
        for c in children(n):
            if not isinstance(c, Channel):
                walk(c)

    walk(f)
    return out


def _concat(rec1, tr1, rec2, tr2):
    if not tr1:
        return (rec2, tuple(tr2)) if tr2 else (None, ())
    if not tr2:
        return rec1, tuple(tr1)
    if rec1 != rec2:
        raise ValueError("concatenation of traces with different recorders")
    return rec1, tuple(tr1) + tuple(tr2)


def _rec_of(prog, ra: Run, rb: Run, tr) -> Optional[TVar]:
    if not tr:
        return None
    if ra.rec is not None:
        return ra.rec
    if rb.rec is not None:
        return rb.rec
    from .analysis import recorder

    return recorder(prog)


def _merge(wa: State, wb: State, bva) -> State:
    out = wb
    for x in bva:
        if isinstance(x, RVar):
            out = out.set(x, wa.get_r(x))
        else:
            out = out.set(x, wa.get_t(x))
    return out


def _shuffles(ta, tb, ca, cb):
    """Synchronized shuffles: projections onto ca / cb give back ta / tb and
    no alien events appear."""
    if not ta and not tb:
        yield ()
        return
    if ta and ta[0].chan not in cb:
        for rest in _shuffles(ta[1:], tb, ca, cb):
            yield (ta[0],) + rest
    if tb and tb[0].chan not in ca:
        for rest in _shuffles(ta, tb[1:], ca, cb):
            yield (tb[0],) + rest
    if ta and tb and ta[0].chan in cb and tb[0].chan in ca and ta[0] == tb[0]:
        for rest in _shuffles(ta[1:], tb[1:], ca, cb):
            yield (ta[0],) + rest


def _close(runs, v0: State, truncated: bool, max_runs: int) -> RunSet:
    out = set()
    for r in runs:
        out.add(r)
        for k in range(len(r.trace) + 1):
            rec = r.rec if k > 0 else None
            out.add(Run(r.init, rec, r.trace[:k], None))
    out.add(Run(v0, None, (), None))
    if len(out) > max_runs:
        ordered = sorted(out, key=_run_key)[:max_runs]
        out = set()
        for r in ordered:
            out.add(r)
            for k in range(len(r.trace) + 1):
                rec = r.rec if k > 0 else None
                out.add(Run(r.init, rec, r.trace[:k], None))
        out.add(Run(v0, None, (), None))
        truncated = True
    return RunSet(frozenset(out), truncated)


def _run_key(r: Run):
    return (
        len(r.trace),
        _state_key(r.init),
        tuple((e.chan.name, e.value, e.stamp) for e in r.trace),
        r.final is None,
        _state_key(r.final) if r.final is not None else (),
    )


def _state_key(v: State):
    return (
        tuple((u.name, c) for u, c in v.reals),
        tuple(
            (u.name, tuple((e.chan.name, e.value, e.stamp) for e in tr))
            for u, tr in v.traces
        ),
    )


# ---------------------------------------------------------------------------
# public operations


def enumerate_runs(prog, v: State, budget: Budget = Budget()) -> RunSet:
    ev = Evaluator(budget)
    return ev.runs(prog, v)


def eval_formula(f, v: State, budget: Budget = Budget(), macros=None) -> str:
    ev = Evaluator(budget, macros=macros, root=f)
    ev._quant_state = v
    return ev.eval(f, v)


def falsify(f, trials: int, budget: Budget = Budget(), seed: int = 0):
    """First random state where f evaluates to F, or None."""
    from .core import all_names

    rvars, tvars, chans = all_names(f)
    rvars = sorted({x for x in fv(f) if isinstance(x, RVar)}, key=lambda v: v.name)
    tvars = sorted({x for x in fv(f) if isinstance(x, TVar)}, key=lambda v: v.name)
    chans = sorted(chans, key=lambda c: c.name) or [Channel("c")]
    grid = [Fraction(n, d) for d in (1, 2, 4) for n in range(-8, 9)]
    ev = Evaluator(budget, root=f)
    for i in range(trials):
        rng = random.Random("%d:%d" % (seed, i))
        st = EMPTY_STATE
        for x in rvars:
            st = st.set(x, rng.choice(grid))
        for h in tvars:
            n = rng.randrange(0, 4)
            tr = tuple(
                Event(rng.choice(chans), rng.choice(grid), rng.choice(grid))
                for _ in range(n)
            )
            st = st.set(h, tr)
        ev._quant_state = st
        if ev.eval(f, st) == F:
            return st
    return None
